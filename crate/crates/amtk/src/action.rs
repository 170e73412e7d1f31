//! Action models: events with precondition formulas, per-agent relations,
//! and designated actual events.  Besides the data type this module holds
//! the structural operations used by the minimizers: satisfiability-guarded
//! generated submodels, reachability sets, regular versions over a formula
//! family, and partition refinement with its quotient.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::formula::{AgentId, Formula};
use crate::solver::SolverHandle;
use crate::Error;

/// An event name.  Any nonempty string.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(Arc<str>);

impl EventId {
    pub fn new(s: impl AsRef<str>) -> Self {
        EventId(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An action model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionModel {
    pub agents: BTreeSet<AgentId>,
    pub events: BTreeSet<EventId>,
    pub pre: BTreeMap<EventId, Formula>,
    pub relations: BTreeMap<AgentId, BTreeSet<(EventId, EventId)>>,
    pub actual: BTreeSet<EventId>,
}

impl ActionModel {
    /// Structural well-formedness, mirroring [`crate::kripke::KripkeModel::validate`].
    pub fn validate(&self) -> Result<(), Error> {
        for x in &self.events {
            if x.as_str().is_empty() {
                return Err(Error::InvalidModel("empty event id".into()));
            }
            if !self.pre.contains_key(x) {
                return Err(Error::InvalidModel(format!(
                    "event '{x}' has no precondition"
                )));
            }
        }
        for x in self.pre.keys() {
            if !self.events.contains(x) {
                return Err(Error::InvalidModel(format!(
                    "precondition for undeclared event '{x}'"
                )));
            }
        }
        for (a, pairs) in &self.relations {
            if !self.agents.contains(a) {
                return Err(Error::InvalidModel(format!("undeclared agent '{a}'")));
            }
            for (x, y) in pairs {
                if !self.events.contains(x) || !self.events.contains(y) {
                    return Err(Error::InvalidModel(format!(
                        "relation for '{a}' leaves the model: ({x},{y})"
                    )));
                }
            }
        }
        for x in &self.actual {
            if !self.events.contains(x) {
                return Err(Error::InvalidModel(format!("actual event '{x}' undeclared")));
            }
        }
        Ok(())
    }

    /// Successors of `x` under agent `a`, sorted.
    pub fn successors(&self, a: &AgentId, x: &EventId) -> Vec<EventId> {
        match self.relations.get(a) {
            None => Vec::new(),
            Some(pairs) => pairs
                .iter()
                .filter(|(from, _)| from == x)
                .map(|(_, to)| to.clone())
                .collect(),
        }
    }

    /// All distinct preconditions, sorted.
    pub fn precondition_set(&self) -> Vec<Formula> {
        let set: BTreeSet<Formula> = self.pre.values().cloned().collect();
        set.into_iter().collect()
    }

    /// Maximum modal depth over all preconditions (0 for an empty model).
    pub fn precondition_depth(&self) -> usize {
        self.pre.values().map(|f| f.depth()).max().unwrap_or(0)
    }

    /// Restriction to an event subset (relations and designations trimmed).
    fn restrict(&self, keep: &BTreeSet<EventId>) -> ActionModel {
        ActionModel {
            agents: self.agents.clone(),
            events: keep.clone(),
            pre: self
                .pre
                .iter()
                .filter(|(x, _)| keep.contains(*x))
                .map(|(x, f)| (x.clone(), f.clone()))
                .collect(),
            relations: self
                .relations
                .iter()
                .map(|(a, pairs)| {
                    (
                        a.clone(),
                        pairs
                            .iter()
                            .filter(|(x, y)| keep.contains(x) && keep.contains(y))
                            .cloned()
                            .collect(),
                    )
                })
                .collect(),
            actual: self.actual.intersection(keep).cloned().collect(),
        }
    }
}

/// The submodel generated by `seed`: events reachable from `seed` along
/// relation edges whose step `Pre(x) & <a>Pre(y)` is satisfiable.  Edges
/// between kept events survive; actual events are intersected with the kept
/// set.
pub fn generated_submodel(
    model: &ActionModel,
    seed: &BTreeSet<EventId>,
    solver: &mut SolverHandle,
) -> Result<ActionModel, Error> {
    let mut keep: BTreeSet<EventId> = seed
        .iter()
        .filter(|x| model.events.contains(*x))
        .cloned()
        .collect();
    let mut frontier: Vec<EventId> = keep.iter().cloned().collect();
    while let Some(x) = frontier.pop() {
        for a in &model.agents {
            for y in model.successors(a, &x) {
                if keep.contains(&y) {
                    continue;
                }
                let step = Formula::and(
                    model.pre[&x].clone(),
                    Formula::diamond(a.clone(), model.pre[&y].clone()),
                );
                if solver.is_satisfiable(&step)? {
                    keep.insert(y.clone());
                    frontier.push(y);
                }
            }
        }
    }
    Ok(model.restrict(&keep))
}

/// Reachability sets of `x` under agent `a`: the set `R` of all events whose
/// precondition can co-occur one step after `x` (`Pre(x) & <a>Pre(y)`
/// satisfiable), and its restriction `Q` to actual relation successors.
pub fn reach_sets(
    model: &ActionModel,
    x: &EventId,
    a: &AgentId,
    solver: &mut SolverHandle,
) -> Result<(BTreeSet<EventId>, BTreeSet<EventId>), Error> {
    let mut r = BTreeSet::new();
    for y in &model.events {
        let step = Formula::and(
            model.pre[x].clone(),
            Formula::diamond(a.clone(), model.pre[y].clone()),
        );
        if solver.is_satisfiable(&step)? {
            r.insert(y.clone());
        }
    }
    let succ: BTreeSet<EventId> = model.successors(a, x).into_iter().collect();
    let q = r.intersection(&succ).cloned().collect();
    Ok((r, q))
}

/// The regular version of `model` over the formula family `phis`: one event
/// `(x, phi)` per event `x` and member `phi` entailing `Pre(x)`, with
/// `Pre(x,phi) = phi`, edges wherever the underlying events are related and
/// the step `phi & <a>phi'` is satisfiable, and `(x, phi)` actual iff `x` is.
pub fn regular_version(
    model: &ActionModel,
    phis: &[Formula],
    solver: &mut SolverHandle,
) -> Result<ActionModel, Error> {
    let family: Vec<Formula> = {
        let set: BTreeSet<Formula> = phis.iter().cloned().collect();
        set.into_iter().collect()
    };
    // Events (x, i) named "x@i" with i the index into the sorted family.
    let mut events = BTreeSet::new();
    let mut pre = BTreeMap::new();
    let mut actual = BTreeSet::new();
    let mut index: Vec<(EventId, usize, EventId)> = Vec::new();
    for x in &model.events {
        for (i, phi) in family.iter().enumerate() {
            if solver.entails(phi, &model.pre[x])? {
                let id = EventId::new(format!("{x}@{i}"));
                events.insert(id.clone());
                pre.insert(id.clone(), phi.clone());
                if model.actual.contains(x) {
                    actual.insert(id.clone());
                }
                index.push((x.clone(), i, id));
            }
        }
    }
    let mut relations: BTreeMap<AgentId, BTreeSet<(EventId, EventId)>> = BTreeMap::new();
    for a in &model.agents {
        let mut out = BTreeSet::new();
        if let Some(base) = model.relations.get(a) {
            for (x, i, id) in &index {
                for (y, j, id2) in &index {
                    if base.contains(&(x.clone(), y.clone())) {
                        let step = Formula::and(
                            family[*i].clone(),
                            Formula::diamond(a.clone(), family[*j].clone()),
                        );
                        if solver.is_satisfiable(&step)? {
                            out.insert((id.clone(), id2.clone()));
                        }
                    }
                }
            }
        }
        relations.insert(a.clone(), out);
    }
    Ok(ActionModel {
        agents: model.agents.clone(),
        events,
        pre,
        relations,
        actual,
    })
}

/// A partition of an action model's events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPartition {
    /// Nonempty, pairwise disjoint blocks covering all events, sorted by
    /// their least member.
    pub blocks: Vec<BTreeSet<EventId>>,
    /// Number of refinement rounds performed to reach stability.
    pub generation: usize,
}

impl EventPartition {
    /// Index of the block containing `x`.
    pub fn block_of(&self, x: &EventId) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(x))
    }
}

/// Refines the events of `model` into equivalence blocks: start from
/// precondition equivalence, then repeatedly split blocks whose members see
/// different blocks through the satisfiability-guarded successor sets, until
/// stable.  Returns the partition together with its quotient model, whose
/// block representatives (and precondition donors) are the lexicographically
/// least member event ids.
pub fn bisim_refine(
    model: &ActionModel,
    solver: &mut SolverHandle,
) -> Result<(EventPartition, ActionModel), Error> {
    let events: Vec<EventId> = model.events.iter().cloned().collect();

    // Initial partition: precondition equivalence classes.
    let mut class_of: BTreeMap<EventId, usize> = BTreeMap::new();
    let mut reps: Vec<EventId> = Vec::new();
    for x in &events {
        let mut found = None;
        for (c, rep) in reps.iter().enumerate() {
            if solver.equivalent(&model.pre[x], &model.pre[rep])? {
                found = Some(c);
                break;
            }
        }
        match found {
            Some(c) => {
                class_of.insert(x.clone(), c);
            }
            None => {
                class_of.insert(x.clone(), reps.len());
                reps.push(x.clone());
            }
        }
    }

    // Guarded successor sets, fixed for the whole refinement.
    let mut q: BTreeMap<(EventId, AgentId), BTreeSet<EventId>> = BTreeMap::new();
    for x in &events {
        for a in &model.agents {
            let (_, qa) = reach_sets(model, x, a, solver)?;
            q.insert((x.clone(), a.clone()), qa);
        }
    }

    let mut generation = 0usize;
    loop {
        // Signature: current class plus, per agent, the set of classes seen
        // through the guarded successors.
        let mut signatures: BTreeMap<EventId, (usize, Vec<(AgentId, BTreeSet<usize>)>)> =
            BTreeMap::new();
        for x in &events {
            let mut profile = Vec::new();
            for a in &model.agents {
                let seen: BTreeSet<usize> = q[&(x.clone(), a.clone())]
                    .iter()
                    .map(|y| class_of[y])
                    .collect();
                profile.push((a.clone(), seen));
            }
            signatures.insert(x.clone(), (class_of[x], profile));
        }
        let mut sig_class: BTreeMap<&(usize, Vec<(AgentId, BTreeSet<usize>)>), usize> =
            BTreeMap::new();
        let mut next: BTreeMap<EventId, usize> = BTreeMap::new();
        for x in &events {
            let sig = &signatures[x];
            let n = sig_class.len();
            let c = *sig_class.entry(sig).or_insert(n);
            next.insert(x.clone(), c);
        }
        let stable = events
            .iter()
            .all(|x| events.iter().all(|y| (class_of[x] == class_of[y]) == (next[x] == next[y])));
        if stable {
            break;
        }
        class_of = next;
        generation += 1;
    }

    // Assemble blocks sorted by least member.
    let mut by_class: BTreeMap<usize, BTreeSet<EventId>> = BTreeMap::new();
    for x in &events {
        by_class.entry(class_of[x]).or_default().insert(x.clone());
    }
    let mut blocks: Vec<BTreeSet<EventId>> = by_class.into_values().collect();
    blocks.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    let partition = EventPartition {
        blocks: blocks.clone(),
        generation,
    };

    // Quotient: one event per block, named and preconditioned by the least
    // member; edges wherever some member's guarded successors meet the
    // target block; a block is actual when it contains an actual event.
    let block_names: Vec<EventId> = blocks
        .iter()
        .map(|b| b.iter().next().unwrap().clone())
        .collect();
    let mut relations: BTreeMap<AgentId, BTreeSet<(EventId, EventId)>> = BTreeMap::new();
    for a in &model.agents {
        let mut out = BTreeSet::new();
        for (i, src) in blocks.iter().enumerate() {
            for (j, dst) in blocks.iter().enumerate() {
                let hit = src
                    .iter()
                    .any(|x| !q[&(x.clone(), a.clone())].is_disjoint(dst));
                if hit {
                    out.insert((block_names[i].clone(), block_names[j].clone()));
                }
            }
        }
        relations.insert(a.clone(), out);
    }
    let quotient = ActionModel {
        agents: model.agents.clone(),
        events: block_names.iter().cloned().collect(),
        pre: blocks
            .iter()
            .zip(&block_names)
            .map(|(b, name)| (name.clone(), model.pre[b.iter().next().unwrap()].clone()))
            .collect(),
        relations,
        actual: blocks
            .iter()
            .zip(&block_names)
            .filter(|(b, _)| b.iter().any(|x| model.actual.contains(x)))
            .map(|(_, name)| name.clone())
            .collect(),
    };
    Ok((partition, quotient))
}
