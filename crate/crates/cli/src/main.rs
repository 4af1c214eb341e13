//! `asyncdes`: explore, minimize, compare and check the asynchronous DES
//! circuit, run it as a cipher, or execute a verification scenario.

mod model;
mod scenario;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use asyncdes::checks::run_prototype;
use asyncdes::{
    compare, compose_incremental, des_composition_plan, des_network, explore, minimize, simulated_by, BitDomain,
    ExploreOptions, Lts, Relation,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::model::{default_properties, render, semantics, Checker};

/// Malformed input: bad arguments, scenario or protocol text.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

#[derive(Parser)]
#[command(name = "asyncdes", version, about = "Verification toolkit for an asynchronous DES circuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the state space of the circuit and write it as AUT.
    Explore {
        #[command(flatten)]
        model: ModelArgs,
        /// Add the sample environment that feeds one input triple.
        #[arg(long)]
        closed: bool,
        /// Build the LTS step by step, minimizing for branching bisimulation.
        #[arg(long)]
        compositional: bool,
        /// Skip internal steps that commute with every other move.
        #[arg(long)]
        reduce: bool,
        /// Gates to hide, comma separated.
        #[arg(long, value_delimiter = ',')]
        hide: Vec<String>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reduce an AUT file modulo a bisimulation.
    Minimize {
        #[arg(long, value_enum)]
        relation: Equivalence,
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare two AUT files; exits with 1 if the relation does not hold.
    Compare {
        #[arg(long, value_enum)]
        relation: Comparison,
        left: PathBuf,
        right: PathBuf,
    },
    /// Verify correctness properties; exits with 1 if one fails.
    Check {
        /// A property number from 1 to 7, or `all`.
        #[arg(long, default_value = "all")]
        property: String,
        #[command(flatten)]
        model: ModelArgs,
        /// Seed of the random triples for property 5.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of random triples for property 5.
        #[arg(long, default_value_t = 20)]
        runs: usize,
    },
    /// Run the concrete circuit as a cipher on the line protocol.
    Run {
        #[arg(long)]
        tau_on_join: bool,
        #[arg(long)]
        sequential_sboxes: bool,
        /// Write every visible rendezvous to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Execute a scenario file.
    Scenario { file: PathBuf },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "abstract")]
    domain: Domain,
    /// Insert an internal step after every parallel input join.
    #[arg(long)]
    tau_on_join: bool,
    /// Fire the S-boxes one after another.
    #[arg(long)]
    sequential_sboxes: bool,
    /// Worker threads for state-space generation.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Abstract,
    Concrete,
}

#[derive(Clone, Copy, ValueEnum)]
enum Equivalence {
    Strong,
    Branching,
}

#[derive(Clone, Copy, ValueEnum)]
enum Comparison {
    Strong,
    Branching,
    /// The left LTS is simulated by the right one.
    Simulation,
}

impl From<Domain> for BitDomain {
    fn from(d: Domain) -> BitDomain {
        match d {
            Domain::Abstract => BitDomain::Abstract,
            Domain::Concrete => BitDomain::Concrete,
        }
    }
}

impl From<Equivalence> for Relation {
    fn from(e: Equivalence) -> Relation {
        match e {
            Equivalence::Strong => Relation::Strong,
            Equivalence::Branching => Relation::Branching,
        }
    }
}

/// Whether every property or comparison held.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Outcome {
    Holds,
    Fails,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Outcome::Holds) => ExitCode::SUCCESS,
        Ok(Outcome::Fails) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|cause| {
        cause.is::<Usage>() || matches!(cause.downcast_ref::<asyncdes::Error>(), Some(asyncdes::Error::Parse { .. }))
    });
    if usage {
        2
    } else {
        3
    }
}

pub fn read_lts(path: &Path) -> Result<Lts> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Lts::read_aut(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_lts(lts: &Lts, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut out = BufWriter::new(file);
    lts.write_aut(&mut out)?;
    out.flush()?;
    Ok(())
}

fn verdict(holds: bool) -> Outcome {
    if holds {
        Outcome::Holds
    } else {
        Outcome::Fails
    }
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Explore { model, closed, compositional, reduce, hide, max_states, output } => {
            let options = semantics(model.tau_on_join, model.sequential_sboxes);
            let net = des_network(model.domain.into(), &options, closed)?;
            let gates: Vec<&str> = hide.iter().map(String::as_str).collect();
            let net = net.hide(&gates);
            let mut eo = ExploreOptions::default().with_jobs(model.jobs).with_tau_confluence(reduce);
            if let Some(n) = max_states {
                eo = eo.with_max_states(n);
            }
            let lts = if compositional {
                compose_incremental(&net, &des_composition_plan(Relation::Branching, None), &eo)?.lts
            } else {
                explore(&net, &eo)?
            };
            write_lts(&lts, &output)?;
            println!("{} states, {} transitions", lts.n_states(), lts.n_transitions());
            Ok(Outcome::Holds)
        }
        Command::Minimize { relation, input, output } => {
            let lts = read_lts(&input)?;
            let min = minimize(&lts, relation.into());
            write_lts(&min, &output)?;
            println!("{} states, {} transitions", min.n_states(), min.n_transitions());
            Ok(Outcome::Holds)
        }
        Command::Compare { relation, left, right } => {
            let (a, b) = (read_lts(&left)?, read_lts(&right)?);
            let (name, result) = match relation {
                Comparison::Strong => ("strongly bisimilar", compare(&a, &b, Relation::Strong)),
                Comparison::Branching => ("branching bisimilar", compare(&a, &b, Relation::Branching)),
                Comparison::Simulation => ("simulated", simulated_by(&a, &b)?),
            };
            if result.holds {
                println!("{name}: yes");
            } else {
                println!("{name}: no");
                if let Some(w) = &result.witness {
                    println!("witness: {w}");
                }
            }
            Ok(verdict(result.holds))
        }
        Command::Check { property, model, seed, runs } => {
            let properties = match property.as_str() {
                "all" => default_properties(model.domain.into()),
                text => match text.parse::<u8>() {
                    Ok(k @ 1..=7) => vec![k],
                    _ => return Err(Usage(format!("--property expects 1 to 7 or `all`, not `{text}`")).into()),
                },
            };
            let options = semantics(model.tau_on_join, model.sequential_sboxes);
            let eo = ExploreOptions::default().with_jobs(model.jobs).with_tau_confluence(true);
            let mut checker = Checker::new(options, eo, seed, runs);
            let mut all = true;
            let stdout = io::stdout();
            for k in properties {
                let report = checker.run(k)?;
                all &= report.passed;
                write!(stdout.lock(), "{}", render(&report))?;
            }
            Ok(verdict(all))
        }
        Command::Run { tau_on_join, sequential_sboxes, trace } => {
            let options = semantics(tau_on_join, sequential_sboxes);
            let mut log = match &trace {
                Some(path) => Some(BufWriter::new(
                    fs::File::create(path).with_context(|| format!("writing {}", path.display()))?,
                )),
                None => None,
            };
            let stdin = io::stdin();
            let stdout = io::stdout();
            run_prototype(&options, stdin.lock(), stdout.lock(), log.as_mut().map(|w| w as &mut dyn Write))?;
            if let Some(mut w) = log {
                w.flush()?;
            }
            Ok(Outcome::Holds)
        }
        Command::Scenario { file } => scenario::run_file(&file, &mut io::stdout().lock()),
    }
}
