//! Action model toolkit.
//!
//! A library for multi-agent modal logic (system K) and action models:
//!
//! * [`formula`] — formula syntax, parsing, printing, closures;
//! * [`solver`] — satisfiability, validity, entailment, and atom
//!   enumeration by a tableau procedure;
//! * [`kripke`] — Kripke models, model checking, product update,
//!   bisimulation, and the canonical model over a formula set;
//! * [`action`] — action models and structural operations (generated
//!   submodels, regular versions, reachability, partition refinement);
//! * [`emulation`] — the iterative emulation check that decides whether two
//!   action models induce the same updates, under several seeding policies;
//! * [`hatset`] — layered normal forms and the derived seeding set that
//!   keeps the emulation iteration complete while staying small;
//! * [`covermod`] — cover modalities, canonical formula families of bounded
//!   depth, depth lifting, and precondition depth reduction;
//! * [`minimize`] — minimal formula bases and event-space minimization up
//!   to bisimulation, propositional emulation, and full update equivalence;
//! * [`doc`] — the JSON document format for models;
//! * [`cli`] — the `amtk` command-line interface.

pub mod action;
pub mod cli;
pub mod covermod;
pub mod doc;
pub mod emulation;
pub mod formula;
pub mod hatset;
pub mod kripke;
pub mod minimize;
pub mod solver;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid identifier: '{0}'")]
    BadIdent(String),

    #[error("solver node budget exceeded ({budget} nodes); raise AMTK_NODE_BUDGET to retry")]
    BudgetExceeded { budget: u64 },

    #[error("enumeration cap exceeded: {what} would need {needed} members but the cap is {cap}")]
    CapExceeded {
        what: String,
        needed: u128,
        cap: u128,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("depth ordering violated: {0}")]
    DepthOrder(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub use formula::{AgentId, Formula, PropId};
pub use solver::{SolverConfig, SolverHandle, SolverPool};
