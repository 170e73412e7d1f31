//! Shrinking action models while preserving a chosen relation: quotient by
//! the greatest autobisimulation, rebuild from partition blocks with minimal
//! formula bases (preserving behaviour on propositional inputs), or search
//! covering families over a refined canonical form (preserving full update
//! equivalence, with a minimality guarantee).

use std::collections::{BTreeMap, BTreeSet};

use crate::action::{
    bisim_refine, generated_submodel, reach_sets, regular_version, ActionModel, EventId,
};
use crate::covermod::{enumerate_canonical, DEFAULT_CANONICAL_CAP};
use crate::emulation::{check_relation, Relation};
use crate::formula::{Formula, PropId};
use crate::solver::{SolverHandle, SolverPool};
use crate::Error;

/// Default ceiling on the number of candidate families examined by the
/// covering-family searches.
pub const DEFAULT_FAMILY_CAP: u64 = 1_000_000;

/// Advances `combo` to the next lexicographic combination of `k` indices
/// below `n`; false when exhausted.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Finds a smallest set of formulas over which every member of `fs` can be
/// written as a disjunction.  Candidates are conjunctions over subsets of
/// `fs`; a family of subsets is accepted when disjoining the conjunctions of
/// the subsets containing `f` recovers every `f`.  Smallest families are
/// tried first, so the result is a minimum-size basis.
pub fn minimal_formula_basis(
    fs: &[Formula],
    solver: &mut SolverHandle,
) -> Result<Vec<Formula>, Error> {
    // Deduplicate up to equivalence and drop contradictions: they are the
    // empty disjunction and constrain nothing.
    let mut live: Vec<Formula> = Vec::new();
    let sorted: BTreeSet<Formula> = fs.iter().cloned().collect();
    for f in sorted {
        if !solver.is_satisfiable(&f)? {
            continue;
        }
        let mut seen = false;
        for g in &live {
            if solver.equivalent(g, &f)? {
                seen = true;
                break;
            }
        }
        if !seen {
            live.push(f);
        }
    }
    let n = live.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n >= 20 {
        return Err(Error::CapExceeded {
            what: "formula basis search space".into(),
            needed: 1u128 << n,
            cap: 1u128 << 20,
        });
    }

    let masks: Vec<u32> = (1..(1u32 << n)).collect();
    let conj = |mask: u32| -> Formula {
        Formula::and_all(
            live.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| f.clone()),
        )
    };

    let mut examined: u64 = 0;
    for k in 0..=n {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            examined += 1;
            if examined > DEFAULT_FAMILY_CAP {
                return Err(Error::CapExceeded {
                    what: "formula basis families examined".into(),
                    needed: examined as u128,
                    cap: DEFAULT_FAMILY_CAP as u128,
                });
            }
            let family: Vec<u32> = combo.iter().map(|i| masks[*i]).collect();
            let mut ok = true;
            for (i, f) in live.iter().enumerate() {
                let rebuilt = Formula::or_all(
                    family
                        .iter()
                        .filter(|mask| *mask & (1 << i) != 0)
                        .map(|mask| conj(*mask)),
                );
                if !solver.equivalent(f, &rebuilt)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                let mut out: Vec<Formula> = family.iter().map(|m| conj(*m)).collect();
                out.sort();
                return Ok(out);
            }
            if k == 0 || !next_combination(&mut combo, masks.len()) {
                break;
            }
        }
    }
    unreachable!("the family of singleton subsets is always a basis")
}

/// Restricts to the events reachable from the actual ones and merges events
/// the greatest autobisimulation identifies.
pub fn minimize_bisimulation(
    model: &ActionModel,
    pool: &mut SolverPool,
) -> Result<ActionModel, Error> {
    let solver = pool.main();
    let sub = generated_submodel(model, &model.actual, solver)?;
    let (_, quotient) = bisim_refine(&sub, solver)?;
    Ok(quotient)
}

fn empty_model(model: &ActionModel) -> ActionModel {
    ActionModel {
        agents: model.agents.clone(),
        events: BTreeSet::new(),
        pre: BTreeMap::new(),
        relations: BTreeMap::new(),
        actual: BTreeSet::new(),
    }
}

/// Minimizes while preserving behaviour on purely propositional states:
/// events are partitioned by iteratively comparing, per agent and per block,
/// the disjunction of successor preconditions falling in the block; the
/// output then carries one event per member of a minimal formula basis of
/// each block's characteristic disjunctions.
pub fn minimize_prop_emulation(
    model: &ActionModel,
    pool: &mut SolverPool,
) -> Result<ActionModel, Error> {
    let solver = pool.main();
    let m0 = generated_submodel(model, &model.actual, solver)?;
    if m0.events.is_empty() {
        return Ok(empty_model(model));
    }
    let events: Vec<EventId> = m0.events.iter().cloned().collect();
    let agents: Vec<_> = m0.agents.iter().cloned().collect();

    // Disjunction of the preconditions of x's a-successors inside a block.
    let succ_sum = |x: &EventId, a: &crate::formula::AgentId, block: &BTreeSet<EventId>| {
        let parts: BTreeSet<Formula> = m0
            .successors(a, x)
            .into_iter()
            .filter(|y| block.contains(y))
            .map(|y| m0.pre[&y].clone())
            .collect();
        Formula::or_all(parts)
    };

    let mut blocks: Vec<BTreeSet<EventId>> = vec![events.iter().cloned().collect()];
    loop {
        let mut next: Vec<BTreeSet<EventId>> = Vec::new();
        for block in &blocks {
            // Group the block's members by the equivalence classes of their
            // per-(block, agent) successor disjunctions.
            let mut groups: Vec<(Vec<Formula>, BTreeSet<EventId>)> = Vec::new();
            'members: for x in block {
                let sig: Vec<Formula> = blocks
                    .iter()
                    .flat_map(|theta| agents.iter().map(move |a| (theta, a)))
                    .map(|(theta, a)| succ_sum(x, a, theta))
                    .collect();
                for (rep, members) in groups.iter_mut() {
                    let mut same = true;
                    for (f, g) in rep.iter().zip(&sig) {
                        if !solver.equivalent(f, g)? {
                            same = false;
                            break;
                        }
                    }
                    if same {
                        members.insert(x.clone());
                        continue 'members;
                    }
                }
                groups.push((sig, [x.clone()].into_iter().collect()));
            }
            for (_, members) in groups {
                next.push(members);
            }
        }
        next.sort_by(|p, q| p.iter().next().cmp(&q.iter().next()));
        if next == blocks {
            break;
        }
        blocks = next;
    }

    // Characteristic formulas per block: per agent and source block, the
    // block's share of the source block's successor preconditions (skipping
    // unsatisfiable source blocks), plus its share of the actual events.
    let block_pre = |theta: &BTreeSet<EventId>| -> Formula {
        Formula::or_all(
            theta
                .iter()
                .map(|x| m0.pre[x].clone())
                .collect::<BTreeSet<_>>(),
        )
    };
    let flow = |from: &BTreeSet<EventId>, a: &crate::formula::AgentId, into: &BTreeSet<EventId>| {
        let parts: BTreeSet<Formula> = from
            .iter()
            .flat_map(|x| m0.successors(a, x))
            .filter(|y| into.contains(y))
            .map(|y| m0.pre[&y].clone())
            .collect();
        Formula::or_all(parts)
    };

    let mut bases: Vec<Vec<Formula>> = Vec::new();
    for theta in &blocks {
        let mut fs: BTreeSet<Formula> = BTreeSet::new();
        for theta0 in &blocks {
            if !solver.is_satisfiable(&block_pre(theta0))? {
                continue;
            }
            for a in &agents {
                fs.insert(flow(theta0, a, theta));
            }
        }
        let actual_share: BTreeSet<Formula> = theta
            .iter()
            .filter(|x| m0.actual.contains(*x))
            .map(|x| m0.pre[x].clone())
            .collect();
        fs.insert(Formula::or_all(actual_share));
        let fv: Vec<Formula> = fs.into_iter().collect();
        bases.push(minimal_formula_basis(&fv, solver)?);
    }

    // Assemble: one event per basis member, related when the target's
    // formula lies inside the source block's flow into the target block.
    let mut out = empty_model(model);
    out.agents = m0.agents.clone();
    let mut ids: Vec<Vec<EventId>> = Vec::new();
    for (i, basis) in bases.iter().enumerate() {
        let mut row = Vec::new();
        for (j, g) in basis.iter().enumerate() {
            if !solver.is_satisfiable(g)? {
                row.push(EventId::new(""));
                continue;
            }
            let id = EventId::new(format!("t{i}g{j}"));
            out.events.insert(id.clone());
            out.pre.insert(id.clone(), g.clone());
            row.push(id);
        }
        ids.push(row);
    }
    for (i, theta) in blocks.iter().enumerate() {
        let actual_sum = Formula::or_all(
            theta
                .iter()
                .filter(|x| m0.actual.contains(*x))
                .map(|x| m0.pre[x].clone())
                .collect::<BTreeSet<_>>(),
        );
        for (j, g) in bases[i].iter().enumerate() {
            if !out.events.contains(&ids[i][j]) {
                continue;
            }
            if solver.entails(g, &actual_sum)? {
                out.actual.insert(ids[i][j].clone());
            }
        }
    }
    for a in &agents {
        let mut pairs = BTreeSet::new();
        for (i, theta) in blocks.iter().enumerate() {
            for (i2, theta2) in blocks.iter().enumerate() {
                let route = flow(theta, a, theta2);
                for (j2, g2) in bases[i2].iter().enumerate() {
                    if !out.events.contains(&ids[i2][j2]) {
                        continue;
                    }
                    if solver.entails(g2, &route)? {
                        for (j, _) in bases[i].iter().enumerate() {
                            if out.events.contains(&ids[i][j]) {
                                pairs.insert((ids[i][j].clone(), ids[i2][j2].clone()));
                            }
                        }
                    }
                }
            }
        }
        out.relations.insert(a.clone(), pairs);
    }
    out.validate()?;
    Ok(out)
}

/// Minimizes while preserving update equivalence.  The input is first
/// rewritten over the canonical formulas of its own depth and vocabulary and
/// quotiented; the result's events are then covered by the fewest possible
/// overlapping groups such that grouping respects the actual events and the
/// semantic reach of every group.  The output is verified equivalent to the
/// input and is smallest among all equivalent models.
pub fn minimize_equivalence(
    model: &ActionModel,
    pool: &mut SolverPool,
) -> Result<ActionModel, Error> {
    let k = model.precondition_depth();
    let mut props: BTreeSet<PropId> = BTreeSet::new();
    for f in model.pre.values() {
        props.extend(f.propositions());
    }
    let mut agents = model.agents.clone();
    for f in model.pre.values() {
        agents.extend(f.agents());
    }
    let solver = pool.main();
    let family: Vec<Formula> =
        enumerate_canonical(k as i64, &props, &agents, DEFAULT_CANONICAL_CAP, solver)?
            .iter()
            .map(|c| c.denote())
            .collect();
    let regular = regular_version(model, &family, solver)?;
    let (_, refined) = bisim_refine(&regular, solver)?;

    if refined.events.is_empty() {
        let out = empty_model(model);
        let verdict = check_relation(model, &out, Relation::EquivAtoms, pool)?;
        if !verdict.holds {
            return Err(Error::InvalidModel(
                "minimization produced a non-equivalent model".into(),
            ));
        }
        return Ok(out);
    }

    let events: Vec<EventId> = refined.events.iter().cloned().collect();
    let n = events.len();
    let rel_agents: Vec<_> = refined.agents.iter().cloned().collect();
    // Semantic reach (all events whose precondition is seeable) and its
    // edge-backed part, per event and agent.
    let mut reach: BTreeMap<(usize, usize), (BTreeSet<usize>, BTreeSet<usize>)> = BTreeMap::new();
    {
        let solver = pool.main();
        let index: BTreeMap<&EventId, usize> =
            events.iter().enumerate().map(|(i, e)| (e, i)).collect();
        for (xi, x) in events.iter().enumerate() {
            for (ai, a) in rel_agents.iter().enumerate() {
                let (r, q) = reach_sets(&refined, x, a, solver)?;
                let r: BTreeSet<usize> = r.iter().map(|e| index[e]).collect();
                let q: BTreeSet<usize> = q.iter().map(|e| index[e]).collect();
                reach.insert((xi, ai), (r, q));
            }
        }
    }
    let actual: BTreeSet<usize> = events
        .iter()
        .enumerate()
        .filter(|(_, e)| refined.actual.contains(*e))
        .map(|(i, _)| i)
        .collect();

    let group_bits: Vec<u32> = (1..(1u32 << n)).collect();
    let members = |mask: u32| -> BTreeSet<usize> {
        (0..n).filter(|i| mask & (1 << i) != 0).collect()
    };

    let mut examined: u64 = 0;
    for c in 0..=n {
        let mut combo: Vec<usize> = (0..c).collect();
        loop {
            examined += 1;
            if examined > DEFAULT_FAMILY_CAP {
                return Err(Error::CapExceeded {
                    what: "covering families examined".into(),
                    needed: examined as u128,
                    cap: DEFAULT_FAMILY_CAP as u128,
                });
            }
            let family: Vec<BTreeSet<usize>> =
                combo.iter().map(|i| members(group_bits[*i])).collect();

            // Actual events: groups lying inside the refined actual set must
            // recover it exactly.
            let chosen_actual: Vec<usize> = (0..family.len())
                .filter(|j| family[*j].is_subset(&actual))
                .collect();
            let mut covered: BTreeSet<usize> = BTreeSet::new();
            for j in &chosen_actual {
                covered.extend(family[*j].iter().copied());
            }
            let mut ok = covered == actual;

            // Relations: per group and agent, targets must avoid the group's
            // out-of-edge reach while the edge-backed reach stays covered.
            let mut relations: Vec<Vec<BTreeSet<usize>>> = Vec::new();
            if ok {
                'groups: for s in &family {
                    let mut row = Vec::new();
                    for (ai, _) in rel_agents.iter().enumerate() {
                        let mut q_all: BTreeSet<usize> = BTreeSet::new();
                        let mut danger: BTreeSet<usize> = BTreeSet::new();
                        for x in s {
                            let (r, q) = &reach[&(*x, ai)];
                            q_all.extend(q.iter().copied());
                            danger.extend(r.difference(q).copied());
                        }
                        let admissible: BTreeSet<usize> = (0..family.len())
                            .filter(|j| family[*j].is_disjoint(&danger))
                            .collect();
                        let mut target_union: BTreeSet<usize> = BTreeSet::new();
                        for j in &admissible {
                            target_union.extend(family[*j].iter().copied());
                        }
                        if !q_all.is_subset(&target_union) {
                            ok = false;
                            break 'groups;
                        }
                        row.push(admissible);
                    }
                    relations.push(row);
                }
            }

            if ok {
                let mut out = empty_model(model);
                out.agents = refined.agents.clone();
                let mut ids = Vec::new();
                for (j, s) in family.iter().enumerate() {
                    let id = EventId::new(format!("m{j}"));
                    let pre = Formula::or_all(
                        s.iter()
                            .map(|i| refined.pre[&events[*i]].clone())
                            .collect::<BTreeSet<_>>(),
                    );
                    out.events.insert(id.clone());
                    out.pre.insert(id.clone(), pre);
                    ids.push(id);
                }
                for j in &chosen_actual {
                    out.actual.insert(ids[*j].clone());
                }
                for (ai, a) in rel_agents.iter().enumerate() {
                    let mut pairs = BTreeSet::new();
                    for (j, row) in relations.iter().enumerate() {
                        for j2 in &row[ai] {
                            pairs.insert((ids[j].clone(), ids[*j2].clone()));
                        }
                    }
                    out.relations.insert(a.clone(), pairs);
                }
                out.validate()?;
                let verdict = check_relation(model, &out, Relation::EquivAtoms, pool)?;
                if !verdict.holds {
                    return Err(Error::InvalidModel(
                        "minimization produced a non-equivalent model".into(),
                    ));
                }
                return Ok(out);
            }

            if c == 0 || !next_combination(&mut combo, group_bits.len()) {
                break;
            }
        }
    }
    Err(Error::InvalidModel(
        "no covering family reproduced the refined model".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::test_support::{action, cex_a};
    use crate::formula::parse;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn pool() -> SolverPool {
        SolverPool::with_defaults()
    }

    #[test]
    fn basis_of_a_single_formula() {
        let mut s = SolverHandle::with_defaults();
        let basis = minimal_formula_basis(&[f("p")], &mut s).unwrap();
        assert_eq!(basis.len(), 1);
        assert!(s.equivalent(&basis[0], &f("p")).unwrap());
    }

    #[test]
    fn basis_of_overlapping_disjunction() {
        let mut s = SolverHandle::with_defaults();
        let basis = minimal_formula_basis(&[f("p"), f("q"), f("p | q")], &mut s).unwrap();
        assert_eq!(basis.len(), 2);
        // Every input is a disjunction over basis members that entail it.
        for src in ["p", "q", "p | q"] {
            let target = f(src);
            let mut picks = Vec::new();
            for g in &basis {
                if s.entails(g, &target).unwrap() {
                    picks.push(g.clone());
                }
            }
            let rebuilt = Formula::or_all(picks);
            assert!(
                s.equivalent(&rebuilt, &target).unwrap(),
                "cannot rebuild {src}"
            );
        }
    }

    #[test]
    fn basis_collapses_refinements() {
        let mut s = SolverHandle::with_defaults();
        let basis =
            minimal_formula_basis(&[f("p & q"), f("p & ~q"), f("p")], &mut s).unwrap();
        assert_eq!(basis.len(), 2);
    }

    #[test]
    fn basis_ignores_contradictions_and_duplicates() {
        let mut s = SolverHandle::with_defaults();
        let basis = minimal_formula_basis(
            &[f("bot"), f("p & ~p"), f("p"), f("p | (p & q)")],
            &mut s,
        )
        .unwrap();
        assert_eq!(basis.len(), 1);
        assert!(s.equivalent(&basis[0], &f("p")).unwrap());
    }

    #[test]
    fn bisimulation_minimizer_merges_duplicates() {
        let mut p = pool();
        let m = action(
            &["a"],
            &[("e1", "p"), ("e2", "p")],
            &[],
            &["e1", "e2"],
        );
        let out = minimize_bisimulation(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 1);
        let v = check_relation(&m, &out, Relation::Bisim, &mut p).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn bisimulation_minimizer_keeps_distinguishable_events() {
        let mut p = pool();
        let m = cex_a();
        let out = minimize_bisimulation(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 4);
    }

    #[test]
    fn propositional_minimizer_on_branching_example() {
        // One announcing event with two successors sharing a precondition.
        let mut p = pool();
        let m = action(
            &["a"],
            &[("e0", "top"), ("e1", "p"), ("e2", "p")],
            &[("a", "e0", "e1"), ("a", "e0", "e2")],
            &["e0"],
        );
        let out = minimize_prop_emulation(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 2);
        let edges: usize = out.relations.values().map(|r| r.len()).sum();
        assert_eq!(edges, 1);
        assert_eq!(out.actual.len(), 1);
        let top_event = out.actual.iter().next().unwrap();
        assert!(p.main().equivalent(&out.pre[top_event], &f("top")).unwrap());
        let v = check_relation(&m, &out, Relation::PropEmu, &mut p).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn propositional_minimizer_handles_overlapping_successors() {
        // Three chains whose successor preconditions overlap: p, q, p|q.
        let mut p = pool();
        let m = action(
            &["a"],
            &[
                ("x0p", "top"),
                ("x0q", "top"),
                ("x0r", "top"),
                ("x1p", "p"),
                ("x1q", "q"),
                ("x1r", "p | q"),
            ],
            &[("a", "x0p", "x1p"), ("a", "x0q", "x1q"), ("a", "x0r", "x1r")],
            &["x0p", "x0q", "x0r"],
        );
        let out = minimize_prop_emulation(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 5);
        let v = check_relation(&m, &out, Relation::PropEmu, &mut p).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn propositional_minimizer_is_size_idempotent() {
        let mut p = pool();
        let m = action(
            &["a"],
            &[("e0", "top"), ("e1", "p"), ("e2", "p")],
            &[("a", "e0", "e1"), ("a", "e0", "e2")],
            &["e0"],
        );
        let once = minimize_prop_emulation(&m, &mut p).unwrap();
        let twice = minimize_prop_emulation(&once, &mut p).unwrap();
        assert_eq!(once.events.len(), twice.events.len());
    }

    #[test]
    fn propositional_minimizer_drops_unreachable_events() {
        let mut p = pool();
        let m = action(
            &["a"],
            &[("e", "p"), ("junk", "q")],
            &[],
            &["e"],
        );
        let out = minimize_prop_emulation(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 1);
        let only = out.events.iter().next().unwrap();
        assert!(p.main().equivalent(&out.pre[only], &f("p")).unwrap());
    }

    #[test]
    fn equivalence_minimizer_merges_complementary_events() {
        let mut p = pool();
        let m = action(&["a"], &[("u", "p"), ("v", "~p")], &[], &["u", "v"]);
        let out = minimize_equivalence(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 1);
        let only = out.events.iter().next().unwrap();
        assert!(p.main().is_valid(&out.pre[only]).unwrap());
    }

    #[test]
    fn equivalence_minimizer_keeps_single_events() {
        let mut p = pool();
        let m = action(&["a"], &[("e", "p")], &[], &["e"]);
        let out = minimize_equivalence(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 1);
        let only = out.events.iter().next().unwrap();
        assert!(p.main().equivalent(&out.pre[only], &f("p")).unwrap());
    }

    #[test]
    fn equivalence_minimizer_handles_modal_preconditions() {
        let mut p = pool();
        let m = action(&["a"], &[("e", "[a]p")], &[], &["e"]);
        let out = minimize_equivalence(&m, &mut p).unwrap();
        assert_eq!(out.events.len(), 1);
        let only = out.events.iter().next().unwrap();
        assert!(p.main().equivalent(&out.pre[only], &f("[a]p")).unwrap());
    }

    #[test]
    fn minimizer_sizes_are_ordered() {
        let mut p = pool();
        let m = action(
            &["a"],
            &[("u", "p"), ("v", "~p"), ("w", "p")],
            &[],
            &["u", "v", "w"],
        );
        let bi = minimize_bisimulation(&m, &mut p).unwrap();
        let pe = minimize_prop_emulation(&m, &mut p).unwrap();
        let eq = minimize_equivalence(&m, &mut p).unwrap();
        assert!(eq.events.len() <= pe.events.len());
        assert!(pe.events.len() <= bi.events.len());
        assert_eq!(eq.events.len(), 1);
    }
}
