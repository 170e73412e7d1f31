//! Canonical formulas of bounded modal depth over a finite proposition set,
//! built from the cover modality.  For each depth k the enumeration yields a
//! family of pairwise inconsistent, jointly exhaustive formulas that any
//! formula of depth at most k can be written over as a disjunction.  The
//! module also provides the depth lift between families and the transform
//! rewriting an action model's preconditions down to a smaller depth.

use std::collections::{BTreeMap, BTreeSet};

use crate::action::ActionModel;
use crate::formula::{AgentId, Formula, PropId};
use crate::solver::SolverHandle;
use crate::Error;

/// Default ceiling on the number of canonical formulas one enumeration may
/// produce; growth in depth is doubly exponential.
pub const DEFAULT_CANONICAL_CAP: u128 = 100_000;

/// The cover modality: "exactly the members of `phis` are seen through `a`"
/// — every successor satisfies some member and every member has a witness.
/// The empty set yields "no successor at all".
pub fn cover_modality(a: &AgentId, phis: &[Formula]) -> Formula {
    let body = Formula::or_all(phis.iter().cloned());
    let mut conjuncts = vec![Formula::boxm(a.clone(), body)];
    conjuncts.extend(
        phis.iter()
            .map(|phi| Formula::diamond(a.clone(), phi.clone())),
    );
    Formula::and_all(conjuncts)
}

/// A canonical formula: either the depth "-1" placeholder (no information),
/// or a complete valuation over the proposition set together with, from
/// depth 1 on, one cover-modality successor set per agent drawn from the
/// previous depth's family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CanonicalFormula {
    Top,
    Node {
        depth: usize,
        pos: BTreeSet<PropId>,
        neg: BTreeSet<PropId>,
        /// One entry per ambient agent; empty map exactly when depth is 0.
        succ: BTreeMap<AgentId, BTreeSet<CanonicalFormula>>,
    },
}

impl CanonicalFormula {
    /// Depth of the formula, with the placeholder counted as -1.
    pub fn depth_index(&self) -> i64 {
        match self {
            CanonicalFormula::Top => -1,
            CanonicalFormula::Node { depth, .. } => *depth as i64,
        }
    }

    /// The modal formula this canonical formula denotes.
    pub fn denote(&self) -> Formula {
        match self {
            CanonicalFormula::Top => Formula::top(),
            CanonicalFormula::Node { pos, neg, succ, .. } => {
                let mut conjuncts: Vec<Formula> =
                    pos.iter().map(|p| Formula::prop(p.clone())).collect();
                conjuncts.extend(neg.iter().map(|p| Formula::not(Formula::prop(p.clone()))));
                for (a, phis) in succ {
                    let members: Vec<Formula> = phis.iter().map(|c| c.denote()).collect();
                    conjuncts.push(cover_modality(a, &members));
                }
                Formula::and_all(conjuncts)
            }
        }
    }
}

/// Number of members the depth-`k` family has before satisfiability pruning:
/// 2^|P| valuations and, per depth level above 0, an independent subset of
/// the previous family per agent.  `None` when the count overflows u128.
pub fn canonical_count(k: i64, props: usize, agents: usize) -> Option<u128> {
    if k <= -1 {
        return Some(1);
    }
    let base = 1u128.checked_shl(u32::try_from(props).ok()?)?;
    let mut count = base;
    for _ in 0..k {
        // Next level: base valuations times one subset of the current family
        // per agent.
        if count >= 128 {
            return None;
        }
        let subsets = 1u128.checked_shl(count as u32)?;
        let mut per_agents = 1u128;
        for _ in 0..agents {
            per_agents = per_agents.checked_mul(subsets)?;
        }
        count = base.checked_mul(per_agents)?;
    }
    Some(count)
}

/// Enumerates the canonical formulas of depth `k` over `props` and `agents`,
/// pruning members whose denoted formula is unsatisfiable (the construction
/// never actually produces one, but the guard is kept).  Errors when the
/// pre-pruning count exceeds `cap`.
pub fn enumerate_canonical(
    k: i64,
    props: &BTreeSet<PropId>,
    agents: &BTreeSet<AgentId>,
    cap: u128,
    solver: &mut SolverHandle,
) -> Result<Vec<CanonicalFormula>, Error> {
    if k < -1 {
        return Err(Error::InvalidArgument(format!(
            "canonical formula depth must be at least -1, got {k}"
        )));
    }
    match canonical_count(k, props.len(), agents.len()) {
        Some(n) if n <= cap => {}
        needed => {
            return Err(Error::CapExceeded {
                what: format!("canonical formula family at depth {k}"),
                needed: needed.unwrap_or(u128::MAX),
                cap,
            })
        }
    }
    if k == -1 {
        return Ok(vec![CanonicalFormula::Top]);
    }

    // Depth 0: all complete valuations.
    let plist: Vec<PropId> = props.iter().cloned().collect();
    let mut level: Vec<CanonicalFormula> = Vec::new();
    for mask in 0u64..(1u64 << plist.len()) {
        let pos: BTreeSet<PropId> = plist
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect();
        let neg: BTreeSet<PropId> = plist
            .iter()
            .filter(|p| !pos.contains(*p))
            .cloned()
            .collect();
        level.push(CanonicalFormula::Node {
            depth: 0,
            pos,
            neg,
            succ: BTreeMap::new(),
        });
    }
    level.sort();

    for depth in 1..=k {
        let prev = level;
        let mut next = Vec::new();
        let alist: Vec<AgentId> = agents.iter().cloned().collect();
        // One subset choice of the previous family per agent, on top of each
        // base valuation.
        let mut subsets: Vec<BTreeSet<CanonicalFormula>> = Vec::new();
        for mask in 0u64..(1u64 << prev.len()) {
            subsets.push(
                prev.iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, c)| c.clone())
                    .collect(),
            );
        }
        for mask in 0u64..(1u64 << plist.len()) {
            let pos: BTreeSet<PropId> = plist
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| p.clone())
                .collect();
            let neg: BTreeSet<PropId> = plist
                .iter()
                .filter(|p| !pos.contains(*p))
                .cloned()
                .collect();
            let mut choice = vec![0usize; alist.len()];
            loop {
                let succ: BTreeMap<AgentId, BTreeSet<CanonicalFormula>> = alist
                    .iter()
                    .zip(&choice)
                    .map(|(a, c)| (a.clone(), subsets[*c].clone()))
                    .collect();
                next.push(CanonicalFormula::Node {
                    depth: depth as usize,
                    pos: pos.clone(),
                    neg: neg.clone(),
                    succ,
                });
                // Advance the per-agent subset choice like a counter.
                let mut carry = true;
                for slot in choice.iter_mut() {
                    *slot += 1;
                    if *slot < subsets.len() {
                        carry = false;
                        break;
                    }
                    *slot = 0;
                }
                if carry || alist.is_empty() {
                    break;
                }
            }
        }
        next.sort();
        level = next;
    }

    let mut kept = Vec::new();
    for c in level {
        if solver.is_satisfiable(&c.denote())? {
            kept.push(c);
        }
    }
    Ok(kept)
}

fn lift_with(
    xi: &CanonicalFormula,
    l: usize,
    target_prev: &[CanonicalFormula],
    agents: &BTreeSet<AgentId>,
    solver: &mut SolverHandle,
) -> Result<CanonicalFormula, Error> {
    let CanonicalFormula::Node {
        depth, pos, neg, succ,
    } = xi
    else {
        return Err(Error::InvalidArgument(
            "the depth lift is defined for depth 0 and above".into(),
        ));
    };
    if *depth > l {
        return Err(Error::DepthOrder(format!(
            "cannot lift a depth-{depth} canonical formula to depth {l}"
        )));
    }
    if *depth == l {
        return Ok(xi.clone());
    }
    let mut out_succ = BTreeMap::new();
    for a in agents {
        let members: BTreeSet<CanonicalFormula> = if *depth == 0 {
            // Depth-0 formulas carry no successor information: every member
            // of the target's previous family qualifies.
            target_prev.iter().cloned().collect()
        } else {
            let old = succ.get(a).cloned().unwrap_or_default();
            let old_union = Formula::or_all(old.iter().map(|c| c.denote()));
            let mut kept = BTreeSet::new();
            for cand in target_prev {
                if solver.entails(&cand.denote(), &old_union)? {
                    kept.insert(cand.clone());
                }
            }
            kept
        };
        out_succ.insert(a.clone(), members);
    }
    Ok(CanonicalFormula::Node {
        depth: l,
        pos: pos.clone(),
        neg: neg.clone(),
        succ: out_succ,
    })
}

/// Lifts a canonical formula of depth k ≤ `l` into the depth-`l` family over
/// the same propositions: the valuation is kept and each successor set is
/// replaced by the depth-(l-1) members entailing the old set's disjunction.
/// Depth-0 inputs lift to all of the previous family.  Lifting to the same
/// depth is the identity.
pub fn lift_mu(
    xi: &CanonicalFormula,
    l: usize,
    props: &BTreeSet<PropId>,
    agents: &BTreeSet<AgentId>,
    cap: u128,
    solver: &mut SolverHandle,
) -> Result<CanonicalFormula, Error> {
    let depth = match xi {
        CanonicalFormula::Top => {
            return Err(Error::InvalidArgument(
                "the depth lift is defined for depth 0 and above".into(),
            ))
        }
        CanonicalFormula::Node { depth, .. } => *depth,
    };
    if depth == l {
        return Ok(xi.clone());
    }
    let target_prev = enumerate_canonical(l as i64 - 1, props, agents, cap, solver)?;
    lift_with(xi, l, &target_prev, agents, solver)
}

/// Given `shallow` with preconditions of depth k and `deep` with strictly
/// greater precondition depth l, rewrites `deep`'s preconditions down to
/// depth k: each new precondition collects the depth-k canonical formulas
/// whose lift entails the old precondition.  Events, relations, and actual
/// events are unchanged.  When the two models are update equivalent, the
/// output is update equivalent to `shallow` as well.
pub fn reduce_depth(
    shallow: &ActionModel,
    deep: &ActionModel,
    cap: u128,
    solver: &mut SolverHandle,
) -> Result<ActionModel, Error> {
    let k = shallow.precondition_depth();
    let l = deep.precondition_depth();
    if k >= l {
        return Err(Error::DepthOrder(format!(
            "precondition depths must strictly increase: {k} is not below {l}"
        )));
    }
    let mut props: BTreeSet<PropId> = BTreeSet::new();
    let mut agents: BTreeSet<AgentId> = BTreeSet::new();
    for m in [shallow, deep] {
        agents.extend(m.agents.iter().cloned());
        for f in m.pre.values() {
            props.extend(f.propositions());
            agents.extend(f.agents());
        }
    }
    let ek = enumerate_canonical(k as i64, &props, &agents, cap, solver)?;
    let target_prev = enumerate_canonical(l as i64 - 1, &props, &agents, cap, solver)?;
    let mut lifted = Vec::with_capacity(ek.len());
    for xi in &ek {
        lifted.push(lift_with(xi, l, &target_prev, &agents, solver)?.denote());
    }
    let mut out = deep.clone();
    for (y, pre) in out.pre.iter_mut() {
        let mut picks: BTreeSet<Formula> = BTreeSet::new();
        for (xi, mu) in ek.iter().zip(&lifted) {
            if solver.entails(mu, &deep.pre[y])? {
                picks.insert(xi.denote());
            }
        }
        *pre = Formula::or_all(picks);
        let _ = y;
    }
    Ok(out)
}
