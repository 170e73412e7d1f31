//! JSON document format for models.  One schema covers both state models
//! (nodes carry valuations) and action models (nodes carry preconditions);
//! the `kind` field says which reading is intended.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::action::{ActionModel, EventId};
use crate::formula::{parse, AgentId, PropId};
use crate::kripke::{KripkeModel, WorldId};
use crate::Error;

/// Whether a document describes a state model or an action model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Kripke,
    Action,
}

/// One node: a world (with a valuation) or an event (with a precondition).
///
/// Unknown keys are rejected so that misspelled fields surface as parse
/// errors instead of silently dropping data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    /// Precondition formula, for action models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<String>,
    /// True propositions, for state models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val: Option<Vec<String>>,
}

/// A model as stored on disk.
///
/// Unknown keys are rejected so that misspelled fields surface as parse
/// errors instead of silently dropping data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub kind: ModelKind,
    pub agents: Vec<String>,
    pub nodes: Vec<NodeDocument>,
    /// Directed edges per agent, as pairs of node ids.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, Vec<(String, String)>>,
    /// Designated (actual) node ids.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actual: Vec<String>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    fn check_ids(&self) -> Result<BTreeSet<String>, Error> {
        let mut ids = BTreeSet::new();
        for node in &self.nodes {
            if node.id.is_empty() {
                return Err(Error::InvalidModel("node with empty id".into()));
            }
            if !ids.insert(node.id.clone()) {
                return Err(Error::InvalidModel(format!("duplicate node id {}", node.id)));
            }
        }
        let agents: BTreeSet<&String> = self.agents.iter().collect();
        if agents.len() != self.agents.len() {
            return Err(Error::InvalidModel("duplicate agent".into()));
        }
        for (agent, edges) in &self.relations {
            if !agents.contains(agent) {
                return Err(Error::InvalidModel(format!("undeclared agent {agent}")));
            }
            for (from, to) in edges {
                if !ids.contains(from) || !ids.contains(to) {
                    return Err(Error::InvalidModel(format!(
                        "edge ({from}, {to}) mentions an unknown node"
                    )));
                }
            }
        }
        for id in &self.actual {
            if !ids.contains(id) {
                return Err(Error::InvalidModel(format!("unknown actual node {id}")));
            }
        }
        Ok(ids)
    }

    /// Reads the document as an action model.
    pub fn to_action(&self) -> Result<ActionModel, Error> {
        if self.kind != ModelKind::Action {
            return Err(Error::InvalidModel(
                "document does not describe an action model".into(),
            ));
        }
        self.check_ids()?;
        let mut model = ActionModel {
            agents: BTreeSet::new(),
            events: BTreeSet::new(),
            pre: BTreeMap::new(),
            relations: BTreeMap::new(),
            actual: BTreeSet::new(),
        };
        for a in &self.agents {
            model.agents.insert(AgentId::new(a)?);
        }
        for node in &self.nodes {
            let text = node.pre.as_deref().ok_or_else(|| {
                Error::InvalidModel(format!("event {} lacks a precondition", node.id))
            })?;
            if node.val.is_some() {
                return Err(Error::InvalidModel(format!(
                    "event {} carries a valuation",
                    node.id
                )));
            }
            let id = EventId::new(&node.id);
            model.pre.insert(id.clone(), parse(text)?);
            model.events.insert(id);
        }
        for (agent, edges) in &self.relations {
            let a = AgentId::new(agent)?;
            let set = edges
                .iter()
                .map(|(from, to)| (EventId::new(from), EventId::new(to)))
                .collect();
            model.relations.insert(a, set);
        }
        for id in &self.actual {
            model.actual.insert(EventId::new(id));
        }
        model.validate()?;
        Ok(model)
    }

    /// Reads the document as a state model.
    pub fn to_kripke(&self) -> Result<KripkeModel, Error> {
        if self.kind != ModelKind::Kripke {
            return Err(Error::InvalidModel(
                "document does not describe a state model".into(),
            ));
        }
        self.check_ids()?;
        let mut model = KripkeModel {
            agents: BTreeSet::new(),
            worlds: BTreeSet::new(),
            valuation: BTreeMap::new(),
            relations: BTreeMap::new(),
            actual: BTreeSet::new(),
        };
        for a in &self.agents {
            model.agents.insert(AgentId::new(a)?);
        }
        for node in &self.nodes {
            if node.pre.is_some() {
                return Err(Error::InvalidModel(format!(
                    "world {} carries a precondition",
                    node.id
                )));
            }
            let mut val = BTreeSet::new();
            for p in node.val.as_deref().unwrap_or(&[]) {
                val.insert(PropId::new(p)?);
            }
            let id = WorldId::new(&node.id);
            model.valuation.insert(id.clone(), val);
            model.worlds.insert(id);
        }
        for (agent, edges) in &self.relations {
            let a = AgentId::new(agent)?;
            let set = edges
                .iter()
                .map(|(from, to)| (WorldId::new(from), WorldId::new(to)))
                .collect();
            model.relations.insert(a, set);
        }
        for id in &self.actual {
            model.actual.insert(WorldId::new(id));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn from_action(model: &ActionModel) -> Self {
        ModelDocument {
            kind: ModelKind::Action,
            agents: model.agents.iter().map(|a| a.as_str().to_owned()).collect(),
            nodes: model
                .events
                .iter()
                .map(|e| NodeDocument {
                    id: e.as_str().to_owned(),
                    pre: Some(model.pre[e].render()),
                    val: None,
                })
                .collect(),
            relations: model
                .relations
                .iter()
                .filter(|(_, edges)| !edges.is_empty())
                .map(|(a, edges)| {
                    (
                        a.as_str().to_owned(),
                        edges
                            .iter()
                            .map(|(x, y)| (x.as_str().to_owned(), y.as_str().to_owned()))
                            .collect(),
                    )
                })
                .collect(),
            actual: model.actual.iter().map(|e| e.as_str().to_owned()).collect(),
        }
    }

    pub fn from_kripke(model: &KripkeModel) -> Self {
        ModelDocument {
            kind: ModelKind::Kripke,
            agents: model.agents.iter().map(|a| a.as_str().to_owned()).collect(),
            nodes: model
                .worlds
                .iter()
                .map(|w| NodeDocument {
                    id: w.as_str().to_owned(),
                    pre: None,
                    val: Some(
                        model.valuation[w]
                            .iter()
                            .map(|p| p.as_str().to_owned())
                            .collect(),
                    ),
                })
                .collect(),
            relations: model
                .relations
                .iter()
                .filter(|(_, edges)| !edges.is_empty())
                .map(|(a, edges)| {
                    (
                        a.as_str().to_owned(),
                        edges
                            .iter()
                            .map(|(x, y)| (x.as_str().to_owned(), y.as_str().to_owned()))
                            .collect(),
                    )
                })
                .collect(),
            actual: model.actual.iter().map(|w| w.as_str().to_owned()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::test_support::cex_a;
    use crate::kripke::test_support::model as kmodel;

    #[test]
    fn action_documents_round_trip() {
        let m = cex_a();
        let doc = ModelDocument::from_action(&m);
        let text = doc.to_json().unwrap();
        let back = ModelDocument::from_json(&text).unwrap().to_action().unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn kripke_documents_round_trip() {
        let m = kmodel(
            &["a", "b"],
            &[("w1", &["p"]), ("w2", &[])],
            &[("a", "w1", "w2"), ("b", "w2", "w2")],
            &["w1"],
        );
        let doc = ModelDocument::from_kripke(&m);
        let text = doc.to_json().unwrap();
        let back = ModelDocument::from_json(&text).unwrap().to_kripke().unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parse_errors_are_reported() {
        let text = r#"{
            "kind": "action",
            "agents": ["a"],
            "nodes": [{"id": "e", "pre": "p &"}],
            "actual": ["e"]
        }"#;
        let doc = ModelDocument::from_json(text).unwrap();
        assert!(matches!(doc.to_action(), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = r#"{
            "kind": "action",
            "agents": ["a"],
            "nodes": [{"id": "e", "pre": "p"}, {"id": "e", "pre": "q"}]
        }"#;
        let doc = ModelDocument::from_json(text).unwrap();
        assert!(matches!(doc.to_action(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn undeclared_edges_are_rejected() {
        let text = r#"{
            "kind": "action",
            "agents": ["a"],
            "nodes": [{"id": "e", "pre": "p"}],
            "relations": {"b": [["e", "e"]]}
        }"#;
        let doc = ModelDocument::from_json(text).unwrap();
        assert!(matches!(doc.to_action(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let m = cex_a();
        let doc = ModelDocument::from_action(&m);
        assert!(doc.to_kripke().is_err());
    }

    #[test]
    fn mixed_node_fields_are_rejected() {
        let text = r#"{
            "kind": "action",
            "agents": [],
            "nodes": [{"id": "e", "pre": "p", "val": ["p"]}]
        }"#;
        let doc = ModelDocument::from_json(text).unwrap();
        assert!(matches!(doc.to_action(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn misspelled_keys_are_rejected() {
        // "edges" is not a field; silently ignoring it would load a model
        // with no relations at all.
        let text = r#"{
            "kind": "kripke",
            "agents": ["a"],
            "nodes": [{"id": "w", "val": ["p"]}],
            "edges": {"a": [["w", "w"]]}
        }"#;
        assert!(ModelDocument::from_json(text).is_err());

        // Same for node fields: "valuation" must not pass for "val".
        let text = r#"{
            "kind": "kripke",
            "agents": ["a"],
            "nodes": [{"id": "w", "valuation": ["p"]}]
        }"#;
        assert!(ModelDocument::from_json(text).is_err());
    }
}
