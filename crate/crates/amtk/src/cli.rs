//! Command-line front end: decide relations between action models, shrink
//! models, apply updates to state models, and query the underlying solver.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::covermod::{enumerate_canonical, DEFAULT_CANONICAL_CAP};
use crate::doc::ModelDocument;
use crate::emulation::{check_relation, Relation, Side, Verdict};
use crate::formula::{parse, AgentId, Formula, PropId};
use crate::kripke::product_update;
use crate::minimize::{minimize_bisimulation, minimize_equivalence, minimize_prop_emulation};
use crate::solver::{SolverConfig, SolverPool};
use crate::Error;

/// Environment variable overriding the solver's node budget.
pub const NODE_BUDGET_ENV: &str = "AMTK_NODE_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "amtk",
    version,
    about = "Action model toolkit: relation checking, minimization, updates"
)]
pub struct Cli {
    /// Number of solver workers for independent subtasks.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RelationArg {
    /// Bisimulation.
    Bisim,
    /// Propositional action emulation.
    PropEmu,
    /// Action emulation seeded with precondition conjunctions.
    Emu,
    /// Update equivalence.
    Equiv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaArg {
    /// Seed candidate sets with maximal consistent closure combinations.
    Atoms,
    /// Seed candidate sets with the boxed-normal-form pool.
    Hatset,
    /// Seed candidate sets with canonical formulas of matching depth.
    Cover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MinimizeArg {
    Bisim,
    PropEmu,
    Equiv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether two action models stand in a relation.
    Check {
        #[arg(long, value_enum)]
        relation: RelationArg,
        /// Candidate seeding for update equivalence (default: atoms).
        #[arg(long, value_enum)]
        theta: Option<ThetaArg>,
        /// First action model (JSON).
        a: PathBuf,
        /// Second action model (JSON).
        b: PathBuf,
    },
    /// Shrink an action model while preserving the chosen relation.
    Minimize {
        #[arg(long, value_enum)]
        relation: MinimizeArg,
        /// Action model to shrink (JSON).
        input: PathBuf,
        /// Where to write the result (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply an action model to a state model.
    Update {
        /// State model (JSON).
        state: PathBuf,
        /// Action model (JSON).
        action: PathBuf,
        /// Where to write the result (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide satisfiability of a formula.
    Sat { formula: String },
    /// Decide validity of a formula.
    Valid { formula: String },
    /// Decide entailment between two formulas.
    Entails { premise: String, conclusion: String },
    /// List the maximal consistent combinations over the formulas' closure.
    Atoms {
        #[arg(required = true)]
        formulas: Vec<String>,
    },
    /// Enumerate the canonical formulas of a depth and vocabulary.
    CanonicalFormulas {
        /// Modal depth (-1 yields the single trivial formula).
        #[arg(long)]
        depth: i64,
        /// Proposition names.
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
        /// Agent names.
        #[arg(long, value_delimiter = ',')]
        agents: Vec<String>,
    },
}

fn make_pool(jobs: usize) -> Result<SolverPool, Error> {
    let mut config = SolverConfig::default();
    if let Ok(text) = std::env::var(NODE_BUDGET_ENV) {
        config.node_budget = text.parse().map_err(|_| {
            Error::InvalidArgument(format!("{NODE_BUDGET_ENV} must be a positive integer"))
        })?;
    }
    Ok(SolverPool::new(config, jobs))
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    let certificate = v.certificate.as_ref().map(|sigma| {
        sigma
            .iter()
            .filter(|(_, set)| !set.is_empty())
            .map(|((x, y), set)| {
                json!({
                    "x": x.as_str(),
                    "y": y.as_str(),
                    "sigma": set.iter().map(|f| f.render()).collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>()
    });
    let failure = v.failure.as_ref().map(|fail| {
        json!({
            "side": match fail.side { Side::A => "A", Side::B => "B" },
            "event": fail.event.as_str(),
        })
    });
    json!({
        "holds": v.holds,
        "iterations": v.iterations,
        "certificate": certificate,
        "failure": failure,
    })
}

fn emit(doc: &ModelDocument, output: Option<&PathBuf>) -> Result<(), Error> {
    match output {
        Some(path) => doc.save(path),
        None => {
            println!("{}", doc.to_json()?);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Check {
            relation,
            theta,
            a,
            b,
        } => {
            if theta.is_some() && relation != RelationArg::Equiv {
                return Err(Error::InvalidArgument(
                    "--theta only applies to --relation equiv".into(),
                ));
            }
            let rel = match (relation, theta.unwrap_or(ThetaArg::Atoms)) {
                (RelationArg::Bisim, _) => Relation::Bisim,
                (RelationArg::PropEmu, _) => Relation::PropEmu,
                (RelationArg::Emu, _) => Relation::Emu,
                (RelationArg::Equiv, ThetaArg::Atoms) => Relation::EquivAtoms,
                (RelationArg::Equiv, ThetaArg::Hatset) => Relation::EquivHatset,
                (RelationArg::Equiv, ThetaArg::Cover) => Relation::EquivCover,
            };
            let left = ModelDocument::load(&a)?.to_action()?;
            let right = ModelDocument::load(&b)?.to_action()?;
            let mut pool = make_pool(cli.jobs)?;
            let verdict = check_relation(&left, &right, rel, &mut pool)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&verdict_json(&verdict))?
            );
            Ok(if verdict.holds { 0 } else { 1 })
        }
        Command::Minimize {
            relation,
            input,
            output,
        } => {
            let model = ModelDocument::load(&input)?.to_action()?;
            let mut pool = make_pool(cli.jobs)?;
            let out = match relation {
                MinimizeArg::Bisim => minimize_bisimulation(&model, &mut pool)?,
                MinimizeArg::PropEmu => minimize_prop_emulation(&model, &mut pool)?,
                MinimizeArg::Equiv => minimize_equivalence(&model, &mut pool)?,
            };
            eprintln!(
                "minimized {} events to {}",
                model.events.len(),
                out.events.len()
            );
            emit(&ModelDocument::from_action(&out), output.as_ref())?;
            Ok(0)
        }
        Command::Update {
            state,
            action,
            output,
        } => {
            let m = ModelDocument::load(&state)?.to_kripke()?;
            let act = ModelDocument::load(&action)?.to_action()?;
            let updated = product_update(&m, &act)?;
            emit(&ModelDocument::from_kripke(&updated), output.as_ref())?;
            Ok(0)
        }
        Command::Sat { formula } => {
            let f = parse(&formula)?;
            let mut pool = make_pool(cli.jobs)?;
            let yes = pool.main().is_satisfiable(&f)?;
            println!("{yes}");
            Ok(if yes { 0 } else { 1 })
        }
        Command::Valid { formula } => {
            let f = parse(&formula)?;
            let mut pool = make_pool(cli.jobs)?;
            let yes = pool.main().is_valid(&f)?;
            println!("{yes}");
            Ok(if yes { 0 } else { 1 })
        }
        Command::Entails {
            premise,
            conclusion,
        } => {
            let f = parse(&premise)?;
            let g = parse(&conclusion)?;
            let mut pool = make_pool(cli.jobs)?;
            let yes = pool.main().entails(&f, &g)?;
            println!("{yes}");
            Ok(if yes { 0 } else { 1 })
        }
        Command::Atoms { formulas } => {
            let fs = formulas
                .iter()
                .map(|s| parse(s))
                .collect::<Result<Vec<Formula>, Error>>()?;
            let mut pool = make_pool(cli.jobs)?;
            let atoms = pool.main().atom_formulas(fs.iter())?;
            let rendered: Vec<String> = atoms.iter().map(|f| f.render()).collect();
            println!("{}", serde_json::to_string_pretty(&rendered)?);
            Ok(0)
        }
        Command::CanonicalFormulas {
            depth,
            props,
            agents,
        } => {
            let props = props
                .iter()
                .map(|p| PropId::new(p))
                .collect::<Result<std::collections::BTreeSet<_>, Error>>()?;
            let agents = agents
                .iter()
                .map(|a| AgentId::new(a))
                .collect::<Result<std::collections::BTreeSet<_>, Error>>()?;
            let mut pool = make_pool(cli.jobs)?;
            let family = enumerate_canonical(
                depth,
                &props,
                &agents,
                DEFAULT_CANONICAL_CAP,
                pool.main(),
            )?;
            let rendered: Vec<String> = family.iter().map(|c| c.denote().render()).collect();
            println!("{}", serde_json::to_string_pretty(&rendered)?);
            Ok(0)
        }
    }
}

/// Parses command-line arguments, runs the request, and returns the process
/// exit code: 0 for a positive verdict, 1 for a negative one, 2 for errors.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
