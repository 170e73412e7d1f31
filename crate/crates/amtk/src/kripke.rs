//! Pointed multi-agent Kripke models: evaluation, product update with an
//! action model, bisimulation checking, and the canonical model whose worlds
//! are the atoms of a formula set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::action::ActionModel;
use crate::formula::{AgentId, Formula, PropId, RESERVED_PREFIX};
use crate::solver::SolverHandle;
use crate::Error;

/// A world name.  Any nonempty string; uniqueness within a model is enforced
/// by the containing structures.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldId(Arc<str>);

impl WorldId {
    pub fn new(s: impl AsRef<str>) -> Self {
        WorldId(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A Kripke model with a set of designated (actual) worlds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    pub agents: BTreeSet<AgentId>,
    pub worlds: BTreeSet<WorldId>,
    pub valuation: BTreeMap<WorldId, BTreeSet<PropId>>,
    pub relations: BTreeMap<AgentId, BTreeSet<(WorldId, WorldId)>>,
    pub actual: BTreeSet<WorldId>,
}

impl KripkeModel {
    /// Structural well-formedness: valuations cover exactly the worlds,
    /// relations stay inside the model and use declared agents, and the
    /// actual worlds exist.
    pub fn validate(&self) -> Result<(), Error> {
        for w in &self.worlds {
            if w.as_str().is_empty() {
                return Err(Error::InvalidModel("empty world id".into()));
            }
            if !self.valuation.contains_key(w) {
                return Err(Error::InvalidModel(format!("world '{w}' has no valuation")));
            }
        }
        for w in self.valuation.keys() {
            if !self.worlds.contains(w) {
                return Err(Error::InvalidModel(format!(
                    "valuation for undeclared world '{w}'"
                )));
            }
        }
        for (a, pairs) in &self.relations {
            if !self.agents.contains(a) {
                return Err(Error::InvalidModel(format!("undeclared agent '{a}'")));
            }
            for (x, y) in pairs {
                if !self.worlds.contains(x) || !self.worlds.contains(y) {
                    return Err(Error::InvalidModel(format!(
                        "relation for '{a}' leaves the model: ({x},{y})"
                    )));
                }
            }
        }
        for w in &self.actual {
            if !self.worlds.contains(w) {
                return Err(Error::InvalidModel(format!("actual world '{w}' undeclared")));
            }
        }
        Ok(())
    }

    /// Successors of `w` under agent `a`, in sorted order.
    pub fn successors(&self, a: &AgentId, w: &WorldId) -> Vec<WorldId> {
        match self.relations.get(a) {
            None => Vec::new(),
            Some(pairs) => pairs
                .iter()
                .filter(|(x, _)| x == w)
                .map(|(_, y)| y.clone())
                .collect(),
        }
    }
}

/// Truth of `f` at world `w`.  Errors when `w` is not in the model.
pub fn holds(m: &KripkeModel, w: &WorldId, f: &Formula) -> Result<bool, Error> {
    if !m.worlds.contains(w) {
        return Err(Error::InvalidModel(format!("world '{w}' not in model")));
    }
    Ok(eval(m, w, f))
}

fn eval(m: &KripkeModel, w: &WorldId, f: &Formula) -> bool {
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Prop(p) => m.valuation[w].contains(p),
        Formula::Not(g) => !eval(m, w, g),
        Formula::Or(l, r) => eval(m, w, l) || eval(m, w, r),
        Formula::Diamond(a, g) => m.successors(a, w).iter().any(|v| eval(m, v, g)),
    }
}

/// Executes action model `act` on `m`: the result keeps a pair world `(w,x)`
/// for every world `w` satisfying the precondition of event `x`, inherits
/// `w`'s valuation, and relates pairs componentwise.
pub fn product_update(m: &KripkeModel, act: &ActionModel) -> Result<KripkeModel, Error> {
    let mut worlds = BTreeSet::new();
    let mut valuation = BTreeMap::new();
    let mut actual = BTreeSet::new();
    let mut pairs = Vec::new();
    for w in &m.worlds {
        for x in &act.events {
            if holds(m, w, &act.pre[x])? {
                let id = WorldId::new(format!("({w},{x})"));
                worlds.insert(id.clone());
                valuation.insert(id.clone(), m.valuation[w].clone());
                if m.actual.contains(w) && act.actual.contains(x) {
                    actual.insert(id.clone());
                }
                pairs.push((w.clone(), x.clone(), id));
            }
        }
    }
    let agents: BTreeSet<AgentId> = m.agents.union(&act.agents).cloned().collect();
    let mut relations: BTreeMap<AgentId, BTreeSet<(WorldId, WorldId)>> = BTreeMap::new();
    for a in &agents {
        let m_rel = m.relations.get(a);
        let act_rel = act.relations.get(a);
        let (Some(m_rel), Some(act_rel)) = (m_rel, act_rel) else {
            continue;
        };
        let mut out = BTreeSet::new();
        for (w, x, id) in &pairs {
            for (v, y, id2) in &pairs {
                if m_rel.contains(&(w.clone(), v.clone()))
                    && act_rel.contains(&(x.clone(), y.clone()))
                {
                    out.insert((id.clone(), id2.clone()));
                }
            }
        }
        relations.insert(a.clone(), out);
    }
    Ok(KripkeModel {
        agents,
        worlds,
        valuation,
        relations,
        actual,
    })
}

/// Decides whether `m` and `n` are bisimilar as pointed models: true iff a
/// bisimulation relates every actual world of each side to an actual world
/// of the other.  On success the witnessing relation (the greatest
/// bisimulation) is returned.
pub fn kripke_bisimilar(
    m: &KripkeModel,
    n: &KripkeModel,
) -> (bool, Option<BTreeSet<(WorldId, WorldId)>>) {
    let agents: BTreeSet<AgentId> = m.agents.union(&n.agents).cloned().collect();
    // Start from valuation agreement and delete pairs that break the
    // back-and-forth conditions until stable.
    let mut rel: BTreeSet<(WorldId, WorldId)> = m
        .worlds
        .iter()
        .flat_map(|w| n.worlds.iter().map(move |v| (w.clone(), v.clone())))
        .filter(|(w, v)| m.valuation[w] == n.valuation[v])
        .collect();
    loop {
        let mut next = BTreeSet::new();
        'pairs: for (w, v) in &rel {
            for a in &agents {
                for w2 in m.successors(a, w) {
                    if !n
                        .successors(a, v)
                        .iter()
                        .any(|v2| rel.contains(&(w2.clone(), v2.clone())))
                    {
                        continue 'pairs;
                    }
                }
                for v2 in n.successors(a, v) {
                    if !m
                        .successors(a, w)
                        .iter()
                        .any(|w2| rel.contains(&(w2.clone(), v2.clone())))
                    {
                        continue 'pairs;
                    }
                }
            }
            next.insert((w.clone(), v.clone()));
        }
        if next == rel {
            break;
        }
        rel = next;
    }
    let zig0 = m
        .actual
        .iter()
        .all(|w| n.actual.iter().any(|v| rel.contains(&(w.clone(), v.clone()))));
    let zag0 = n
        .actual
        .iter()
        .all(|v| m.actual.iter().any(|w| rel.contains(&(w.clone(), v.clone()))));
    if zig0 && zag0 {
        (true, Some(rel))
    } else {
        (false, None)
    }
}

/// Builds the canonical model of `phis` over the declared `agents`: one world
/// per atom of the closure, an `a`-edge wherever the source atom is
/// consistent with a diamond of the target atom, every world actual, and a
/// fresh marker proposition per world so that worlds are pairwise
/// propositionally distinguishable.
pub fn canonical_kripke(
    solver: &mut SolverHandle,
    phis: &[Formula],
    agents: &BTreeSet<AgentId>,
) -> Result<KripkeModel, Error> {
    for f in phis {
        if f.propositions()
            .iter()
            .any(|p| p.as_str().starts_with(RESERVED_PREFIX))
        {
            return Err(Error::InvalidModel(format!(
                "input formulas use the reserved proposition prefix '{RESERVED_PREFIX}'"
            )));
        }
    }
    let atoms = solver.atoms(phis.iter())?;
    let ids: Vec<WorldId> = (0..atoms.len())
        .map(|i| WorldId::new(format!("{RESERVED_PREFIX}{i}")))
        .collect();
    let mut worlds = BTreeSet::new();
    let mut valuation = BTreeMap::new();
    for (i, atom) in atoms.iter().enumerate() {
        let mut val: BTreeSet<PropId> = atom
            .members
            .iter()
            .filter_map(|f| match f {
                Formula::Prop(p) => Some(p.clone()),
                _ => None,
            })
            .collect();
        val.insert(PropId::new(&format!("{RESERVED_PREFIX}{i}"))?);
        worlds.insert(ids[i].clone());
        valuation.insert(ids[i].clone(), val);
    }
    let mut relations: BTreeMap<AgentId, BTreeSet<(WorldId, WorldId)>> = BTreeMap::new();
    for a in agents {
        let mut pairs = BTreeSet::new();
        for (i, source) in atoms.iter().enumerate() {
            for (j, target) in atoms.iter().enumerate() {
                let step = Formula::and(
                    source.conjunction.clone(),
                    Formula::diamond(a.clone(), target.conjunction.clone()),
                );
                if solver.is_satisfiable(&step)? {
                    pairs.insert((ids[i].clone(), ids[j].clone()));
                }
            }
        }
        relations.insert(a.clone(), pairs);
    }
    Ok(KripkeModel {
        agents: agents.clone(),
        worlds: worlds.clone(),
        valuation,
        relations,
        actual: worlds,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::formula::parse;
    use crate::solver::SolverHandle;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn two_world_chain() -> KripkeModel {
        model(
            &["a"],
            &[("w0", &["p"]), ("w1", &[])],
            &[("a", "w0", "w1")],
            &["w0"],
        )
    }

    #[test]
    fn holds_examples() {
        let m = two_world_chain();
        assert!(holds(&m, &w("w0"), &f("p")).unwrap());
        assert!(holds(&m, &w("w0"), &f("<a>~p")).unwrap());
        assert!(!holds(&m, &w("w0"), &f("<a>p")).unwrap());
        assert!(holds(&m, &w("w0"), &f("[a]~p")).unwrap());
        // A world with no successors satisfies every box.
        assert!(holds(&m, &w("w1"), &f("[a]bot")).unwrap());
        assert!(holds(&m, &w("w1"), &f("[b]bot")).unwrap());
        assert!(holds(&m, &w("w0"), &f("p -> <a>top")).unwrap());
        assert!(holds(&m, &w("w0"), &f("top")).unwrap());
        assert!(!holds(&m, &w("w1"), &f("bot")).unwrap());
        assert!(matches!(
            holds(&m, &w("missing"), &f("p")),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn product_update_public_announcement() {
        use crate::action::test_support::action;
        // Two worlds, p-world actual; announcing p keeps only the p-world.
        let m = model(
            &["a"],
            &[("u", &["p"]), ("v", &[])],
            &[("a", "u", "v"), ("a", "u", "u"), ("a", "v", "v")],
            &["u"],
        );
        let announce = action(&["a"], &[("e", "p")], &[("a", "e", "e")], &["e"]);
        let out = product_update(&m, &announce).unwrap();
        assert_eq!(out.worlds.len(), 1);
        let w0 = out.worlds.iter().next().unwrap().clone();
        assert_eq!(out.valuation[&w0], m.valuation[&w("u")]);
        assert_eq!(out.actual.len(), 1);
        // The a-loop on u survives.
        let a = AgentId::new("a").unwrap();
        assert!(out.relations[&a].contains(&(w0.clone(), w0.clone())));
        out.validate().unwrap();
    }

    #[test]
    fn product_update_splits_on_two_events() {
        use crate::action::test_support::action;
        let m = model(
            &["a"],
            &[("u", &["p", "q"])],
            &[("a", "u", "u")],
            &["u"],
        );
        // Two events with preconditions p and q both fire on u.
        let act = action(
            &["a"],
            &[("x", "p"), ("y", "q")],
            &[("a", "x", "x"), ("a", "x", "y")],
            &["x"],
        );
        let out = product_update(&m, &act).unwrap();
        assert_eq!(out.worlds.len(), 2);
        assert_eq!(out.actual.len(), 1);
        let a = AgentId::new("a").unwrap();
        // (u,x) -> (u,x) and (u,x) -> (u,y); nothing out of (u,y).
        assert_eq!(out.relations[&a].len(), 2);
        out.validate().unwrap();
    }

    #[test]
    fn product_update_empty_when_preconditions_fail() {
        use crate::action::test_support::action;
        let m = two_world_chain();
        let act = action(&["a"], &[("e", "q")], &[], &["e"]);
        let out = product_update(&m, &act).unwrap();
        assert!(out.worlds.is_empty());
        assert!(out.actual.is_empty());
    }

    #[test]
    fn bisimilar_to_itself_and_to_duplicated_world() {
        let m = two_world_chain();
        let (ok, rel) = kripke_bisimilar(&m, &m);
        assert!(ok);
        assert!(rel.unwrap().contains(&(w("w0"), w("w0"))));

        // Duplicating the end of the chain preserves bisimilarity.
        let n = model(
            &["a"],
            &[("u", &["p"]), ("v1", &[]), ("v2", &[])],
            &[("a", "u", "v1"), ("a", "u", "v2")],
            &["u"],
        );
        assert!(kripke_bisimilar(&m, &n).0);
        assert!(kripke_bisimilar(&n, &m).0);
    }

    #[test]
    fn bisimulation_distinguishes_valuations_and_structure() {
        let m = two_world_chain();
        let diff_val = model(
            &["a"],
            &[("w0", &["q"]), ("w1", &[])],
            &[("a", "w0", "w1")],
            &["w0"],
        );
        assert!(!kripke_bisimilar(&m, &diff_val).0);

        // Extra observable step breaks bisimilarity.
        let longer = model(
            &["a"],
            &[("w0", &["p"]), ("w1", &[]), ("w2", &[])],
            &[("a", "w0", "w1"), ("a", "w1", "w2")],
            &["w0"],
        );
        assert!(!kripke_bisimilar(&m, &longer).0);
    }

    #[test]
    fn bisimulation_requires_actual_world_cover() {
        // Same worlds, but the right model designates an extra q-world.
        let m = model(&["a"], &[("u", &["p"])], &[], &["u"]);
        let n = model(
            &["a"],
            &[("u", &["p"]), ("v", &["q"])],
            &[],
            &["u", "v"],
        );
        assert!(!kripke_bisimilar(&m, &n).0);
        assert!(!kripke_bisimilar(&n, &m).0);
        // Dropping the designation restores bisimilarity.
        let n2 = model(&["a"], &[("u", &["p"]), ("v", &["q"])], &[], &["u"]);
        assert!(kripke_bisimilar(&m, &n2).0);
    }

    #[test]
    fn bisimilar_models_agree_on_formulas() {
        let m = two_world_chain();
        let n = model(
            &["a"],
            &[("u", &["p"]), ("v1", &[]), ("v2", &[])],
            &[("a", "u", "v1"), ("a", "u", "v2")],
            &["u"],
        );
        let (ok, rel) = kripke_bisimilar(&m, &n);
        assert!(ok);
        let rel = rel.unwrap();
        for fsrc in ["p", "<a>p", "<a>~p", "[a]~p", "<a><a>p", "[a][a]bot", "p & [a]~p"] {
            let phi = f(fsrc);
            for (x, y) in &rel {
                assert_eq!(
                    holds(&m, x, &phi).unwrap(),
                    holds(&n, y, &phi).unwrap(),
                    "disagree on {fsrc} at ({x},{y})"
                );
            }
        }
    }

    #[test]
    fn canonical_model_of_single_prop() {
        let mut s = SolverHandle::with_defaults();
        let agents: BTreeSet<AgentId> = [AgentId::new("a").unwrap()].into_iter().collect();
        let m = canonical_kripke(&mut s, &[f("p")], &agents).unwrap();
        assert_eq!(m.worlds.len(), 2);
        assert_eq!(m.actual.len(), 2);
        let a = AgentId::new("a").unwrap();
        // Both atoms are consistent with a step to either atom.
        assert_eq!(m.relations[&a].len(), 4);
        // One world carries p plus its marker; the other only a marker.
        let vals: Vec<usize> = m.worlds.iter().map(|w| m.valuation[w].len()).collect();
        assert_eq!(vals.iter().sum::<usize>(), 3);
        // Marker propositions make valuations pairwise distinct.
        let distinct: std::collections::BTreeSet<_> = m.valuation.values().collect();
        assert_eq!(distinct.len(), m.worlds.len());
        m.validate().unwrap();
    }

    #[test]
    fn canonical_model_of_empty_set() {
        let mut s = SolverHandle::with_defaults();
        let agents: BTreeSet<AgentId> = [AgentId::new("a").unwrap()].into_iter().collect();
        let m = canonical_kripke(&mut s, &[], &agents).unwrap();
        assert_eq!(m.worlds.len(), 1);
        let w0 = m.worlds.iter().next().unwrap().clone();
        let a = AgentId::new("a").unwrap();
        assert!(m.relations[&a].contains(&(w0.clone(), w0.clone())));
    }

    #[test]
    fn canonical_model_realizes_every_atom() {
        let mut s = SolverHandle::with_defaults();
        let agents: BTreeSet<AgentId> = [AgentId::new("a").unwrap()].into_iter().collect();
        let phis = [f("<a>p")];
        let m = canonical_kripke(&mut s, &phis, &agents).unwrap();
        // Closure {<a>p, ~<a>p, p, ~p}: four atoms.
        assert_eq!(m.worlds.len(), 4);
        // World i was built from atom i (sorted order), and each world makes
        // every member of its atom true — membership and truth line up.
        let atoms = s.atoms(phis.iter()).unwrap();
        for (i, atom) in atoms.iter().enumerate() {
            let wid = WorldId::new(format!("{RESERVED_PREFIX}{i}"));
            for member in &atom.members {
                assert!(
                    holds(&m, &wid, member).unwrap(),
                    "atom {i} member {member:?} fails at its world"
                );
            }
        }
        m.validate().unwrap();
    }

    #[test]
    fn canonical_model_rejects_reserved_props() {
        let mut s = SolverHandle::with_defaults();
        let agents: BTreeSet<AgentId> = [AgentId::new("a").unwrap()].into_iter().collect();
        let bad = Formula::prop(PropId::new("__atom_7").unwrap());
        assert!(matches!(
            canonical_kripke(&mut s, &[bad], &agents),
            Err(Error::InvalidModel(_))
        ));
    }
}
