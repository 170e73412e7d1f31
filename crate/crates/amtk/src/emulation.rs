//! Deciding semantic equivalence of action models by fixpoint iteration.
//!
//! Two action models are update equivalent when executing them on any
//! pointed Kripke model yields bisimilar results.  The decision procedure
//! maintains, for every event pair `(x, y)`, a shrinking set of candidate
//! link formulas; a pair's set describes the situations in which `x` and `y`
//! act alike.  Each round discards candidates that fail a back-and-forth
//! condition on successor events, and entry conditions tie the surviving
//! candidates to the actual events.  On success, the disjunctions of the
//! final sets form a checkable witness ([`verify_certificate`]); different
//! starting pools ([`ThetaPreset`]) decide different relations, from plain
//! bisimilarity up to full update equivalence.

use std::collections::{BTreeMap, BTreeSet};

use crate::action::{regular_version, ActionModel, EventId};
use crate::covermod::{enumerate_canonical, DEFAULT_CANONICAL_CAP};
use crate::formula::{AgentId, Formula, PropId};
use crate::hatset::{build_kappa, DEFAULT_KAPPA_CAP};
use crate::kripke::{canonical_kripke, kripke_bisimilar, product_update};
use crate::solver::{SolverHandle, SolverPool};
use crate::Error;

/// Starting candidate pool for the iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThetaPreset {
    /// "True" for pairs with equivalent preconditions; decides bisimilarity.
    Bisim,
    /// "True" for every pair; decides propositional action emulation.
    PropEmu,
    /// The conjunction of the pair's preconditions; decides action emulation.
    Emu,
    /// All maximal consistent descriptions over the closure of both models'
    /// preconditions; decides update equivalence.
    Atoms,
    /// The box-closure pool of both models' preconditions; decides update
    /// equivalence with a typically much smaller pool.
    HatSet,
    /// Canonical formulas of the given depth over both models' precondition
    /// vocabulary; decides update equivalence when the depth is at least
    /// both models' precondition depth.
    Cover(usize),
}

/// Which relation to decide; each maps to a [`ThetaPreset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Bisim,
    PropEmu,
    Emu,
    EquivAtoms,
    EquivHatset,
    EquivCover,
}

/// Candidate sets per event pair; a missing pair means the empty set.
pub type SigmaMap = BTreeMap<(EventId, EventId), BTreeSet<Formula>>;

/// The model an entry-condition failure was detected on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// An actual event whose entry condition failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub side: Side,
    pub event: EventId,
}

/// Outcome of the iteration: `iterations` counts loop passes (1-based); on
/// success the final candidate sets are the certificate, on failure the
/// first failing actual event is reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub iterations: usize,
    pub certificate: Option<SigmaMap>,
    pub failure: Option<Failure>,
}

/// Union of the two models' declared agents and every agent mentioned in a
/// precondition.
pub fn ambient_agents(a: &ActionModel, b: &ActionModel) -> BTreeSet<AgentId> {
    let mut agents = BTreeSet::new();
    for m in [a, b] {
        agents.extend(m.agents.iter().cloned());
        for f in m.pre.values() {
            agents.extend(f.agents());
        }
    }
    agents
}

fn precondition_pool(a: &ActionModel, b: &ActionModel) -> Vec<Formula> {
    let mut set: BTreeSet<Formula> = BTreeSet::new();
    for m in [a, b] {
        set.extend(m.pre.values().cloned());
    }
    set.into_iter().collect()
}

/// Builds the initial candidate sets for every event pair of `a` and `b`
/// under the given preset.
pub fn build_theta(
    preset: &ThetaPreset,
    a: &ActionModel,
    b: &ActionModel,
    pool: &mut SolverPool,
) -> Result<SigmaMap, Error> {
    let solver = pool.main();
    // The pool shared by all pairs, for the presets that use one.
    let shared: Option<Vec<Formula>> = match preset {
        ThetaPreset::Bisim | ThetaPreset::Emu => None,
        ThetaPreset::PropEmu => Some(vec![Formula::top()]),
        ThetaPreset::Atoms => {
            let phis = precondition_pool(a, b);
            Some(solver.atom_formulas(phis.iter())?)
        }
        ThetaPreset::HatSet => {
            let phis = precondition_pool(a, b);
            let agents = ambient_agents(a, b);
            Some(build_kappa(&phis, &agents, DEFAULT_KAPPA_CAP, solver)?)
        }
        ThetaPreset::Cover(k) => {
            let depth = a.precondition_depth().max(b.precondition_depth());
            if *k < depth {
                return Err(Error::InvalidArgument(format!(
                    "candidate depth {k} is below the precondition depth {depth}"
                )));
            }
            let mut props: BTreeSet<PropId> = BTreeSet::new();
            for f in precondition_pool(a, b) {
                props.extend(f.propositions());
            }
            let agents = ambient_agents(a, b);
            let members =
                enumerate_canonical(*k as i64, &props, &agents, DEFAULT_CANONICAL_CAP, solver)?;
            Some(members.iter().map(|c| c.denote()).collect())
        }
    };

    let mut theta = SigmaMap::new();
    for x in &a.events {
        for y in &b.events {
            let set: BTreeSet<Formula> = match preset {
                ThetaPreset::Bisim => {
                    if solver.equivalent(&a.pre[x], &b.pre[y])? {
                        [Formula::top()].into_iter().collect()
                    } else {
                        BTreeSet::new()
                    }
                }
                ThetaPreset::Emu => [Formula::and(a.pre[x].clone(), b.pre[y].clone())]
                    .into_iter()
                    .collect(),
                _ => shared
                    .as_ref()
                    .expect("shared pool exists for the remaining presets")
                    .iter()
                    .cloned()
                    .collect(),
            };
            theta.insert((x.clone(), y.clone()), set);
        }
    }
    Ok(theta)
}

fn sigma_union(sigma: &SigmaMap, x: &EventId, y: &EventId) -> Formula {
    match sigma.get(&(x.clone(), y.clone())) {
        Some(set) => Formula::or_all(set.iter().cloned()),
        None => Formula::bot(),
    }
}

/// Restricts every candidate set to the members consistent with the pair's
/// preconditions.  Inside the iteration's implications each dropped member
/// appears only in a disjunct that also requires both preconditions, so it
/// can never hold where the antecedent does; pruning it keeps every built
/// formula logically unchanged while keeping the solver's input small.
fn consistent_view(
    a: &ActionModel,
    b: &ActionModel,
    sigma: &SigmaMap,
    solver: &mut SolverHandle,
) -> Result<SigmaMap, Error> {
    let mut view = SigmaMap::new();
    for ((x, y), set) in sigma {
        let both = Formula::and(a.pre[x].clone(), b.pre[y].clone());
        let mut live = BTreeSet::new();
        for th in set {
            if solver.is_satisfiable(&Formula::and(th.clone(), both.clone()))? {
                live.insert(th.clone());
            }
        }
        view.insert((x.clone(), y.clone()), live);
    }
    Ok(view)
}

/// The per-agent successor condition a surviving candidate for `(x, y)` must
/// sit below (boxed): every successor of `x` can be matched by a successor
/// of `y` whose pair still has candidates, and conversely.
fn lambda(
    a: &ActionModel,
    b: &ActionModel,
    sigma: &SigmaMap,
    x: &EventId,
    y: &EventId,
    agent: &AgentId,
) -> Formula {
    let nonempty = |x2: &EventId, y2: &EventId| {
        sigma
            .get(&(x2.clone(), y2.clone()))
            .is_some_and(|s| !s.is_empty())
    };
    let mut parts = Vec::new();
    for x2 in a.successors(agent, x) {
        let matches = Formula::or_all(
            b.successors(agent, y)
                .into_iter()
                .filter(|y2| nonempty(&x2, y2))
                .map(|y2| Formula::and(b.pre[&y2].clone(), sigma_union(sigma, &x2, &y2))),
        );
        parts.push(Formula::implies(a.pre[&x2].clone(), matches));
    }
    for y2 in b.successors(agent, y) {
        let matches = Formula::or_all(
            a.successors(agent, x)
                .into_iter()
                .filter(|x2| nonempty(x2, &y2))
                .map(|x2| Formula::and(a.pre[&x2].clone(), sigma_union(sigma, &x2, &y2))),
        );
        parts.push(Formula::implies(b.pre[&y2].clone(), matches));
    }
    Formula::and_all(parts)
}

/// Runs entailment checks across the pool's handles; results are positional
/// and independent of how the work is split.
fn run_entailments(
    checks: &[(Formula, Formula)],
    pool: &mut SolverPool,
) -> Result<Vec<bool>, Error> {
    if pool.jobs() <= 1 || checks.len() < 4 {
        let solver = pool.main();
        return checks
            .iter()
            .map(|(f, g)| solver.entails(f, g))
            .collect();
    }
    let handles = pool.handles_mut();
    let chunk = checks.len().div_ceil(handles.len());
    let mut out = Vec::with_capacity(checks.len());
    let results: Vec<Result<Vec<bool>, Error>> = std::thread::scope(|scope| {
        let mut join = Vec::new();
        for (handle, work) in handles.iter_mut().zip(checks.chunks(chunk)) {
            join.push(scope.spawn(move || {
                work.iter().map(|(f, g)| handle.entails(f, g)).collect()
            }));
        }
        join.into_iter()
            .map(|j| j.join().expect("solver thread panicked"))
            .collect()
    });
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// The fixpoint iteration.  Starting from `theta`, each pass first checks
/// the entry conditions (every actual event's precondition must be covered
/// by the candidate-weighted preconditions of the other side's actual
/// events), then filters every pair's candidates through the boxed successor
/// condition.  Returns on the first entry failure or when the sets stop
/// changing.
pub fn iterate_emulation(
    a: &ActionModel,
    b: &ActionModel,
    theta: &SigmaMap,
    pool: &mut SolverPool,
) -> Result<Verdict, Error> {
    let agents = ambient_agents(a, b);
    let mut sigma: SigmaMap = theta.clone();
    let live_theta = consistent_view(a, b, theta, pool.main())?;
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let view: SigmaMap = sigma
            .iter()
            .map(|(key, set)| {
                let live = match live_theta.get(key) {
                    Some(l) => set.intersection(l).cloned().collect(),
                    None => BTreeSet::new(),
                };
                (key.clone(), live)
            })
            .collect();

        // Entry condition on a's actual events.
        for x in &a.actual {
            let cover = Formula::or_all(
                b.actual
                    .iter()
                    .filter(|y| !view[&(x.clone(), (*y).clone())].is_empty())
                    .map(|y| Formula::and(b.pre[y].clone(), sigma_union(&view, x, y))),
            );
            if !pool.main().entails(&a.pre[x], &cover)? {
                return Ok(Verdict {
                    holds: false,
                    iterations,
                    certificate: None,
                    failure: Some(Failure {
                        side: Side::A,
                        event: x.clone(),
                    }),
                });
            }
        }
        // Entry condition on b's actual events.
        for y in &b.actual {
            let cover = Formula::or_all(
                a.actual
                    .iter()
                    .filter(|x| !view[&((*x).clone(), y.clone())].is_empty())
                    .map(|x| Formula::and(a.pre[x].clone(), sigma_union(&view, x, y))),
            );
            if !pool.main().entails(&b.pre[y], &cover)? {
                return Ok(Verdict {
                    holds: false,
                    iterations,
                    certificate: None,
                    failure: Some(Failure {
                        side: Side::B,
                        event: y.clone(),
                    }),
                });
            }
        }

        // Filter every pair's candidates through the boxed successor
        // condition built from the current sets.
        let mut checks: Vec<(Formula, Formula)> = Vec::new();
        let mut slots: Vec<((EventId, EventId), Formula)> = Vec::new();
        for x in &a.events {
            for y in &b.events {
                let key = (x.clone(), y.clone());
                let Some(cur) = sigma.get(&key) else { continue };
                if cur.is_empty() {
                    continue;
                }
                let target = Formula::and_all(agents.iter().map(|ag| {
                    Formula::boxm(ag.clone(), lambda(a, b, &view, x, y, ag))
                }));
                for th in cur {
                    checks.push((th.clone(), target.clone()));
                    slots.push((key.clone(), th.clone()));
                }
            }
        }
        let kept = run_entailments(&checks, pool)?;
        let mut next: SigmaMap = sigma
            .keys()
            .map(|k| (k.clone(), BTreeSet::new()))
            .collect();
        for (flag, (key, th)) in kept.into_iter().zip(slots) {
            if flag {
                next.get_mut(&key).expect("slot key exists").insert(th);
            }
        }
        if next == sigma {
            return Ok(Verdict {
                holds: true,
                iterations,
                certificate: Some(sigma),
                failure: None,
            });
        }
        sigma = next;
    }
}

/// Decides the given relation between `a` and `b`.  Update equivalence via
/// canonical formulas picks the smallest admissible depth.
pub fn check_relation(
    a: &ActionModel,
    b: &ActionModel,
    rel: Relation,
    pool: &mut SolverPool,
) -> Result<Verdict, Error> {
    let preset = match rel {
        Relation::Bisim => ThetaPreset::Bisim,
        Relation::PropEmu => ThetaPreset::PropEmu,
        Relation::Emu => ThetaPreset::Emu,
        Relation::EquivAtoms => ThetaPreset::Atoms,
        Relation::EquivHatset => ThetaPreset::HatSet,
        Relation::EquivCover => {
            ThetaPreset::Cover(a.precondition_depth().max(b.precondition_depth()))
        }
    };
    let theta = build_theta(&preset, a, b, pool)?;
    iterate_emulation(a, b, &theta, pool)
}

/// Checks that `sigma`'s disjunctions witness the back-and-forth and entry
/// conditions between `a` and `b`; successful iterations always produce a
/// certificate that passes.
pub fn verify_certificate(
    a: &ActionModel,
    b: &ActionModel,
    sigma: &SigmaMap,
    solver: &mut SolverHandle,
) -> Result<bool, Error> {
    let agents = ambient_agents(a, b);
    // Forth and back on every pair with a nonempty set (an empty set denotes
    // "false" and satisfies any boxed condition).
    for x in &a.events {
        for y in &b.events {
            let eta = sigma_union(sigma, x, y);
            if matches!(eta, Formula::Bot) {
                continue;
            }
            for ag in &agents {
                for x2 in a.successors(ag, x) {
                    let matches = Formula::or_all(
                        b.successors(ag, y)
                            .into_iter()
                            .map(|y2| Formula::and(b.pre[&y2].clone(), sigma_union(sigma, &x2, &y2))),
                    );
                    let target =
                        Formula::boxm(ag.clone(), Formula::implies(a.pre[&x2].clone(), matches));
                    if !solver.entails(&eta, &target)? {
                        return Ok(false);
                    }
                }
                for y2 in b.successors(ag, y) {
                    let matches = Formula::or_all(
                        a.successors(ag, x)
                            .into_iter()
                            .map(|x2| Formula::and(a.pre[&x2].clone(), sigma_union(sigma, &x2, &y2))),
                    );
                    let target =
                        Formula::boxm(ag.clone(), Formula::implies(b.pre[&y2].clone(), matches));
                    if !solver.entails(&eta, &target)? {
                        return Ok(false);
                    }
                }
            }
        }
    }
    // Entry conditions.
    for x in &a.actual {
        let cover = Formula::or_all(
            b.actual
                .iter()
                .map(|y| Formula::and(b.pre[y].clone(), sigma_union(sigma, x, y))),
        );
        if !solver.entails(&a.pre[x], &cover)? {
            return Ok(false);
        }
    }
    for y in &b.actual {
        let cover = Formula::or_all(
            a.actual
                .iter()
                .map(|x| Formula::and(a.pre[x].clone(), sigma_union(sigma, x, y))),
        );
        if !solver.entails(&b.pre[y], &cover)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The canonical version of a model: events split along the maximal
/// consistent descriptions over its own preconditions.  Always update
/// equivalent to the input.
pub fn canonical_version(
    model: &ActionModel,
    solver: &mut SolverHandle,
) -> Result<ActionModel, Error> {
    let phis: Vec<Formula> = {
        let set: BTreeSet<Formula> = model.pre.values().cloned().collect();
        set.into_iter().collect()
    };
    let family = solver.atom_formulas(phis.iter())?;
    regular_version(model, &family, solver)
}

/// Independent equivalence oracle: build the canonical Kripke model of both
/// models' preconditions, execute both action models on it, and compare the
/// results for bisimilarity.
pub fn oracle_equivalent(
    a: &ActionModel,
    b: &ActionModel,
    solver: &mut SolverHandle,
) -> Result<bool, Error> {
    let phis = precondition_pool(a, b);
    let agents = ambient_agents(a, b);
    let base = canonical_kripke(solver, &phis, &agents)?;
    let pa = product_update(&base, a)?;
    let pb = product_update(&base, b)?;
    Ok(kripke_bisimilar(&pa, &pb).0)
}
