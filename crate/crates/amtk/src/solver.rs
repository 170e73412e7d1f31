//! Satisfiability for multi-agent modal logic K, by a depth-bounded tableau.
//!
//! The tableau decomposes propositional structure on a branch, then opens one
//! successor world per diamond, carrying along the bodies of the negated
//! diamonds (boxes) for the same agent.  Every successor step strictly lowers
//! the remaining modal depth, so the search terminates without loop checking;
//! a node budget guards against propositional blowup on adversarial inputs.
//!
//! On top of satisfiability the module offers validity, entailment,
//! equivalence, enumeration of the maximal consistent subsets of a closure
//! set ("atoms"), and the entailment filter used by the emulation iteration.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::formula::{closure, AgentId, Formula, PropId};
use crate::kripke::{KripkeModel, WorldId};
use crate::Error;

/// Tuning knobs for a solver instance.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Maximum tableau nodes explored per query before giving up with an
    /// error (distinct from an unsatisfiable verdict).
    pub node_budget: u64,
    /// Whether query results are memoized.  Verdicts are identical either
    /// way; the cache only saves work.
    pub cache: bool,
    /// Maximum count of sign-vector candidates examined by [`SolverHandle::atoms`].
    pub atom_cap: u128,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            node_budget: 1_000_000,
            cache: true,
            atom_cap: 1 << 22,
        }
    }
}

/// Counters exposed for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub queries: u64,
    pub cache_hits: u64,
    pub nodes_expanded: u64,
}

/// A satisfiability oracle with a memo table.  One handle is used from one
/// thread at a time; independent handles may run concurrently and always
/// agree, since verdicts are deterministic.
pub struct SolverHandle {
    config: SolverConfig,
    cache: HashMap<String, bool>,
    /// Memo for saturated successor-world subproblems, keyed by the sorted
    /// deduplicated formula set opened in the world.
    succ_memo: HashMap<Vec<Formula>, Option<WitnessNode>>,
    stats: SolverStats,
}

/// A maximal consistent subset of a closure set, with its conjunction in
/// canonical (sorted) order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Atom {
    pub members: BTreeSet<Formula>,
    pub conjunction: Formula,
}

impl SolverHandle {
    pub fn new(config: SolverConfig) -> Self {
        SolverHandle {
            config,
            cache: HashMap::new(),
            succ_memo: HashMap::new(),
            stats: SolverStats::default(),
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(SolverConfig::default())
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// Whether `f` has a model.
    pub fn is_satisfiable(&mut self, f: &Formula) -> Result<bool, Error> {
        self.stats.queries += 1;
        let key = cache_key(f);
        if self.config.cache {
            if let Some(&v) = self.cache.get(&key) {
                self.stats.cache_hits += 1;
                return Ok(v);
            }
        }
        let mut budget = self.config.node_budget;
        let mut scratch = HashMap::new();
        let memo = if self.config.cache { &mut self.succ_memo } else { &mut scratch };
        let searched = sat_search(vec![f.clone()], BTreeSet::new(), Vec::new(), &mut budget, memo);
        self.stats.nodes_expanded += self.config.node_budget - budget;
        let witness = match searched {
            Err(Error::BudgetExceeded { .. }) => {
                return Err(Error::BudgetExceeded {
                    budget: self.config.node_budget,
                })
            }
            other => other?,
        };
        let verdict = witness.is_some();
        if self.config.cache {
            self.cache.insert(key, verdict);
        }
        Ok(verdict)
    }

    /// Like [`Self::is_satisfiable`], but on success also returns a finite
    /// tree model whose root satisfies `f`.
    pub fn satisfying_model(&mut self, f: &Formula) -> Result<Option<KripkeModel>, Error> {
        self.stats.queries += 1;
        let mut budget = self.config.node_budget;
        let mut scratch = HashMap::new();
        let memo = if self.config.cache { &mut self.succ_memo } else { &mut scratch };
        let searched = sat_search(vec![f.clone()], BTreeSet::new(), Vec::new(), &mut budget, memo);
        self.stats.nodes_expanded += self.config.node_budget - budget;
        let witness = match searched {
            Err(Error::BudgetExceeded { .. }) => {
                return Err(Error::BudgetExceeded {
                    budget: self.config.node_budget,
                })
            }
            other => other?,
        };
        if self.config.cache {
            self.cache.insert(cache_key(f), witness.is_some());
        }
        Ok(witness.map(|w| witness_to_model(&w)))
    }

    /// Whether `f` holds in every model.
    pub fn is_valid(&mut self, f: &Formula) -> Result<bool, Error> {
        Ok(!self.is_satisfiable(&Formula::not(f.clone()))?)
    }

    /// Whether every model of `f` is a model of `g`.
    pub fn entails(&mut self, f: &Formula, g: &Formula) -> Result<bool, Error> {
        let counter = Formula::and(f.clone(), Formula::not(g.clone()));
        Ok(!self.is_satisfiable(&counter)?)
    }

    /// Mutual entailment.
    pub fn equivalent(&mut self, f: &Formula, g: &Formula) -> Result<bool, Error> {
        Ok(self.entails(f, g)? && self.entails(g, f)?)
    }

    /// The maximal consistent subsets of the closure of `phis`, in canonical
    /// order.  Sign vectors over the non-negated closure members are screened
    /// by propositional constraints before the tableau runs.
    pub fn atoms<'a, I>(&mut self, phis: I) -> Result<Vec<Atom>, Error>
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        let clo: Vec<Formula> = closure(phis).into_iter().collect();
        let positives: Vec<Formula> = clo
            .iter()
            .filter(|f| !matches!(f, Formula::Not(_)))
            .cloned()
            .collect();
        let m = positives.len();
        let candidates: u128 = 1u128 << m.min(127);
        if m >= 127 || candidates > self.config.atom_cap {
            return Err(Error::CapExceeded {
                what: format!("atom enumeration over {m} base formulas"),
                needed: candidates,
                cap: self.config.atom_cap,
            });
        }
        let index: BTreeMap<&Formula, usize> =
            positives.iter().enumerate().map(|(i, f)| (f, i)).collect();

        // Sign of an arbitrary closure member under an assignment to the
        // non-negated members: strip negations, flip per level.
        let sign_of = |assign: &[bool], f: &Formula| -> bool {
            let mut cur = f;
            let mut flip = false;
            while let Formula::Not(g) = cur {
                cur = g;
                flip = !flip;
            }
            let base = assign[*index.get(cur).expect("closure member core missing")];
            base != flip
        };

        let mut out = Vec::new();
        'vectors: for bits in 0u128..candidates {
            let assign: Vec<bool> = (0..m).map(|i| bits >> i & 1 == 1).collect();
            // Propositional screening: truth constants are fixed and a
            // disjunction must agree with its operands in every world.
            for (i, f) in positives.iter().enumerate() {
                match f {
                    Formula::Top if !assign[i] => continue 'vectors,
                    Formula::Bot if assign[i] => continue 'vectors,
                    Formula::Or(l, r) => {
                        if assign[i] != (sign_of(&assign, l) || sign_of(&assign, r)) {
                            continue 'vectors;
                        }
                    }
                    _ => {}
                }
            }
            let members: BTreeSet<Formula> = clo
                .iter()
                .filter(|f| sign_of(&assign, f))
                .cloned()
                .collect();
            let conjunction = Formula::and_all(members.iter().cloned());
            if self.is_satisfiable(&conjunction)? {
                out.push(Atom {
                    members,
                    conjunction,
                });
            }
        }
        out.sort();
        Ok(out)
    }

    /// The conjunctions of [`Self::atoms`], in the same order.
    pub fn atom_formulas<'a, I>(&mut self, phis: I) -> Result<Vec<Formula>, Error>
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        Ok(self.atoms(phis)?.into_iter().map(|a| a.conjunction).collect())
    }

    /// The members of `phis` that entail `xi`, preserving order.
    pub fn gamma_filter(&mut self, xi: &Formula, phis: &[Formula]) -> Result<Vec<Formula>, Error> {
        let mut out = Vec::new();
        for f in phis {
            if self.entails(f, xi)? {
                out.push(f.clone());
            }
        }
        Ok(out)
    }
}

/// A set of independent solver handles for running checks on several threads.
/// All handles share one configuration; results never depend on which handle
/// answers a query.
pub struct SolverPool {
    handles: Vec<SolverHandle>,
}

impl SolverPool {
    /// `jobs` handles (at least one).
    pub fn new(config: SolverConfig, jobs: usize) -> Self {
        let n = jobs.max(1);
        SolverPool {
            handles: (0..n).map(|_| SolverHandle::new(config.clone())).collect(),
        }
    }

    pub fn single(config: SolverConfig) -> Self {
        Self::new(config, 1)
    }

    pub fn with_defaults() -> Self {
        Self::single(SolverConfig::default())
    }

    pub fn jobs(&self) -> usize {
        self.handles.len()
    }

    /// The designated handle for sequential work.
    pub fn main(&mut self) -> &mut SolverHandle {
        &mut self.handles[0]
    }

    pub fn handles_mut(&mut self) -> &mut [SolverHandle] {
        &mut self.handles
    }

    /// Aggregated counters across all handles.
    pub fn total_stats(&self) -> SolverStats {
        let mut acc = SolverStats::default();
        for h in &self.handles {
            acc.queries += h.stats.queries;
            acc.cache_hits += h.stats.cache_hits;
            acc.nodes_expanded += h.stats.nodes_expanded;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Tableau
// ---------------------------------------------------------------------------

/// A leaf of the search: one world of a tree model.
#[derive(Clone)]
struct WitnessNode {
    props: BTreeSet<PropId>,
    children: Vec<(AgentId, WitnessNode)>,
}

fn charge(budget: &mut u64) -> Result<(), Error> {
    if *budget == 0 {
        // The budget that was configured is not in scope here; report the
        // exhaustion and let the handle's config tell the caller the limit.
        return Err(Error::BudgetExceeded { budget: 0 });
    }
    *budget -= 1;
    Ok(())
}

/// Splits nested disjunctions into their disjunct list, seeing through
/// double negations so negated conjunctions flatten fully.
fn split_or(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Or(l, r) => {
            split_or(l, out);
            split_or(r, out);
        }
        Formula::Not(g) => {
            if let Formula::Not(h) = &**g {
                split_or(h, out);
            } else {
                out.push(f.clone());
            }
        }
        _ => out.push(f.clone()),
    }
}

/// True when `f` is a literal already asserted on this branch.
fn asserted(lits: &BTreeSet<Formula>, f: &Formula) -> bool {
    match f {
        Formula::Prop(_) | Formula::Diamond(_, _) => lits.contains(f),
        Formula::Not(g) => {
            matches!(&**g, Formula::Prop(_) | Formula::Diamond(_, _)) && lits.contains(f)
        }
        _ => false,
    }
}

/// True when `f` is a literal whose complement is asserted on this branch.
fn refuted(lits: &BTreeSet<Formula>, f: &Formula) -> bool {
    match f {
        Formula::Prop(_) | Formula::Diamond(_, _) => lits.contains(&Formula::not(f.clone())),
        Formula::Not(g) => {
            matches!(&**g, Formula::Prop(_) | Formula::Diamond(_, _)) && lits.contains(&**g)
        }
        _ => false,
    }
}

/// Decides satisfiability of the conjunction of `todo` given already-placed
/// literals `lits` and pending disjunctions `clauses`; returns a witness
/// world on success.  Deterministic decompositions run first; disjunctions
/// are then pruned against the placed literals (dropping satisfied ones,
/// deleting refuted disjuncts, forcing lone survivors) and branching always
/// picks a smallest pending disjunction.
fn sat_search(
    mut todo: Vec<Formula>,
    mut lits: BTreeSet<Formula>,
    mut clauses: Vec<Vec<Formula>>,
    budget: &mut u64,
    memo: &mut HashMap<Vec<Formula>, Option<WitnessNode>>,
) -> Result<Option<WitnessNode>, Error> {
    loop {
        while let Some(f) = todo.pop() {
            charge(budget)?;
            match &f {
                Formula::Top => {}
                Formula::Bot => return Ok(None),
                Formula::Or(_, _) => {
                    let mut parts = Vec::new();
                    split_or(&f, &mut parts);
                    clauses.push(parts);
                }
                Formula::Not(g) => match &**g {
                    Formula::Top => return Ok(None),
                    Formula::Bot => {}
                    Formula::Not(h) => todo.push((**h).clone()),
                    Formula::Or(l, r) => {
                        todo.push(Formula::not((**l).clone()));
                        todo.push(Formula::not((**r).clone()));
                    }
                    Formula::Prop(_) | Formula::Diamond(_, _) => {
                        if lits.contains(&**g) {
                            return Ok(None);
                        }
                        lits.insert(f.clone());
                    }
                },
                Formula::Prop(_) | Formula::Diamond(_, _) => {
                    if lits.contains(&Formula::not(f.clone())) {
                        return Ok(None);
                    }
                    lits.insert(f.clone());
                }
            }
        }

        let mut kept: Vec<Vec<Formula>> = Vec::new();
        for clause in clauses {
            let mut live: Vec<Formula> = Vec::new();
            let mut satisfied = false;
            for d in clause {
                if matches!(d, Formula::Top) || asserted(&lits, &d) {
                    satisfied = true;
                    break;
                }
                if matches!(d, Formula::Bot) || refuted(&lits, &d) {
                    continue;
                }
                live.push(d);
            }
            if satisfied {
                continue;
            }
            match live.len() {
                0 => return Ok(None),
                1 => todo.push(live.pop().unwrap()),
                _ => {
                    live.sort();
                    kept.push(live);
                }
            }
        }
        kept.sort();
        kept.dedup();
        clauses = kept;
        if !todo.is_empty() {
            continue;
        }
        if clauses.is_empty() {
            break;
        }

        let mut at = 0;
        for (i, c) in clauses.iter().enumerate() {
            if c.len() < clauses[at].len() {
                at = i;
            }
        }
        // Split on the clause: each branch also assumes the negations of the
        // disjuncts already tried, so the branches partition the space.
        let clause = clauses.remove(at);
        let mut ruled_out: Vec<Formula> = Vec::new();
        for d in clause {
            charge(budget)?;
            let mut seed = vec![d.clone()];
            seed.extend(ruled_out.iter().cloned());
            if let Some(w) = sat_search(seed, lits.clone(), clauses.clone(), budget, memo)? {
                return Ok(Some(w));
            }
            ruled_out.push(Formula::not(d));
        }
        return Ok(None);
    }

    // Saturated branch: discharge each diamond in its own successor world,
    // together with every box body for the same agent.
    let mut children = Vec::new();
    for f in &lits {
        if let Formula::Diamond(a, body) = f {
            charge(budget)?;
            let mut succ = vec![(**body).clone()];
            for g in &lits {
                if let Formula::Not(inner) = g {
                    if let Formula::Diamond(b, chi) = &**inner {
                        if b == a {
                            succ.push(Formula::not((**chi).clone()));
                        }
                    }
                }
            }
            let key: Vec<Formula> = succ
                .iter()
                .cloned()
                .collect::<BTreeSet<Formula>>()
                .into_iter()
                .collect();
            let sub = match memo.get(&key) {
                Some(hit) => hit.clone(),
                None => {
                    let w = sat_search(succ, BTreeSet::new(), Vec::new(), budget, memo)?;
                    memo.insert(key, w.clone());
                    w
                }
            };
            match sub {
                None => return Ok(None),
                Some(w) => children.push((a.clone(), w)),
            }
        }
    }
    let props = lits
        .iter()
        .filter_map(|f| match f {
            Formula::Prop(p) => Some(p.clone()),
            _ => None,
        })
        .collect();
    Ok(Some(WitnessNode { props, children }))
}

fn witness_to_model(root: &WitnessNode) -> KripkeModel {
    let mut worlds = BTreeSet::new();
    let mut valuation = BTreeMap::new();
    let mut relations: BTreeMap<AgentId, BTreeSet<(WorldId, WorldId)>> = BTreeMap::new();
    let mut agents = BTreeSet::new();
    let mut counter = 0usize;

    fn walk(
        node: &WitnessNode,
        counter: &mut usize,
        worlds: &mut BTreeSet<WorldId>,
        valuation: &mut BTreeMap<WorldId, BTreeSet<PropId>>,
        relations: &mut BTreeMap<AgentId, BTreeSet<(WorldId, WorldId)>>,
        agents: &mut BTreeSet<AgentId>,
    ) -> WorldId {
        let id = WorldId::new(format!("w{}", *counter));
        *counter += 1;
        worlds.insert(id.clone());
        valuation.insert(id.clone(), node.props.clone());
        for (agent, child) in &node.children {
            let child_id = walk(child, counter, worlds, valuation, relations, agents);
            agents.insert(agent.clone());
            relations
                .entry(agent.clone())
                .or_default()
                .insert((id.clone(), child_id));
        }
        id
    }

    let root_id = walk(
        root,
        &mut counter,
        &mut worlds,
        &mut valuation,
        &mut relations,
        &mut agents,
    );
    KripkeModel {
        agents,
        worlds,
        valuation,
        relations,
        actual: [root_id].into_iter().collect(),
    }
}

// ---------------------------------------------------------------------------
// Cache keys
// ---------------------------------------------------------------------------

/// Canonical key: render after flattening and sorting disjunction operands.
/// Purely syntactic; equivalent formulas may still key differently.
fn cache_key(f: &Formula) -> String {
    normalize(f).render()
}

fn normalize(f: &Formula) -> Formula {
    match f {
        Formula::Top | Formula::Bot | Formula::Prop(_) => f.clone(),
        Formula::Not(g) => Formula::not(normalize(g)),
        Formula::Diamond(a, g) => Formula::diamond(a.clone(), normalize(g)),
        Formula::Or(_, _) => {
            let mut ops = Vec::new();
            flatten_or(f, &mut ops);
            ops.sort();
            Formula::or_all(ops)
        }
    }
}

fn flatten_or(f: &Formula, out: &mut Vec<Formula>) {
    if let Formula::Or(l, r) = f {
        flatten_or(l, out);
        flatten_or(r, out);
    } else {
        out.push(normalize(f));
    }
}
