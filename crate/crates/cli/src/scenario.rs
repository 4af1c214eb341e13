//! Line-oriented verification scenarios. See the README for the format.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use asyncdes::checks::subkey_reference;
use asyncdes::{
    compare, compose_incremental, des_composition_plan, des_network, explore, minimize, simulated_by, BitDomain,
    ExploreOptions, Lts, Network, Relation,
};

use crate::model::{parse_domain, render, semantics, Checker};
use crate::{read_lts, write_lts, Outcome, Usage};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    BuildNetwork { domain: BitDomain, tau_on_join: bool, sequential_sboxes: bool, closed: bool },
    Explore { compositional: bool, reduce: bool, max_states: Option<usize>, jobs: usize },
    Hide(Vec<String>),
    HideAllBut(Vec<String>),
    StripOffers,
    Minimize(Relation),
    Save(String),
    Compare { relation: Check, target: Target, expect: bool },
    Check(u8),
    WriteAut(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Equivalence(Relation),
    SimulatedBy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    File(PathBuf),
    Saved(String),
    AbstractModel,
    SubkeyReference(usize),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::File(p) => write!(f, "file {}", p.display()),
            Target::Saved(n) => write!(f, "saved {n}"),
            Target::AbstractModel => f.write_str("builtin abstract-model"),
            Target::SubkeyReference(w) => write!(f, "builtin subkey-reference {w}"),
        }
    }
}

/// A parsed scenario: steps with their line numbers.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub steps: Vec<(usize, Step)>,
}

fn usage(line: usize, message: impl std::fmt::Display) -> anyhow::Error {
    Usage(format!("line {line}: {message}")).into()
}

fn parse_step(line: usize, words: &[&str]) -> Result<Step> {
    let (head, args) = (words[0], &words[1..]);
    let number = |text: Option<&&str>, what: &str| -> Result<usize> {
        text.and_then(|t| t.parse().ok()).ok_or_else(|| usage(line, format!("{what} expects a number")))
    };
    let relation = |text: &str| text.parse::<Relation>().map_err(|e| usage(line, e));
    let step = match head {
        "build-network" => {
            let domain = args
                .first()
                .and_then(|d| parse_domain(d))
                .ok_or_else(|| usage(line, "build-network expects abstract or concrete"))?;
            let mut step = (false, false, false);
            for flag in &args[1..] {
                match *flag {
                    "tau-on-join" => step.0 = true,
                    "sequential-sboxes" => step.1 = true,
                    "closed" => step.2 = true,
                    other => return Err(usage(line, format!("unknown network option `{other}`"))),
                }
            }
            Step::BuildNetwork { domain, tau_on_join: step.0, sequential_sboxes: step.1, closed: step.2 }
        }
        "explore" => {
            let (mut compositional, mut reduce, mut max_states, mut jobs) = (false, false, None, 1);
            let mut it = args.iter();
            while let Some(flag) = it.next() {
                match *flag {
                    "compositional" => compositional = true,
                    "reduce" => reduce = true,
                    "max-states" => max_states = Some(number(it.next(), "max-states")?),
                    "jobs" => jobs = number(it.next(), "jobs")?,
                    other => return Err(usage(line, format!("unknown explore option `{other}`"))),
                }
            }
            Step::Explore { compositional, reduce, max_states, jobs }
        }
        "hide" | "hide-all-but" if args.is_empty() => return Err(usage(line, format!("{head} expects gate names"))),
        "hide" => Step::Hide(args.iter().map(|g| g.to_string()).collect()),
        "hide-all-but" => Step::HideAllBut(args.iter().map(|g| g.to_string()).collect()),
        "rename" if args == ["strip-offers"] => Step::StripOffers,
        "rename" => return Err(usage(line, "rename supports only strip-offers")),
        "minimize" if args.len() == 1 => Step::Minimize(relation(args[0])?),
        "save" if args.len() == 1 => Step::Save(args[0].to_string()),
        "compare" => {
            let check = match args.first().copied() {
                Some("simulated-by") => Check::SimulatedBy,
                Some(r) => Check::Equivalence(relation(r)?),
                None => return Err(usage(line, "compare expects a relation")),
            };
            let (target, rest) = match &args[1..] {
                ["file", path, rest @ ..] => (Target::File(PathBuf::from(path)), rest),
                ["saved", name, rest @ ..] => (Target::Saved(name.to_string()), rest),
                ["builtin", "abstract-model", rest @ ..] => (Target::AbstractModel, rest),
                ["builtin", "subkey-reference", w, rest @ ..] => {
                    let w = number(Some(w), "subkey-reference")?;
                    if w >= 16 {
                        return Err(usage(line, "the subkey window must be below 16"));
                    }
                    (Target::SubkeyReference(w), rest)
                }
                _ => return Err(usage(line, "compare expects `file PATH`, `saved NAME` or a builtin")),
            };
            let expect = match rest {
                [] | ["expect", "holds"] => true,
                ["expect", "differs"] => false,
                _ => return Err(usage(line, "compare ends with `expect holds` or `expect differs`")),
            };
            Step::Compare { relation: check, target, expect }
        }
        "check" if args.len() == 1 => match args[0].strip_prefix('P').and_then(|k| k.parse::<u8>().ok()) {
            Some(k @ 1..=7) => Step::Check(k),
            _ => return Err(usage(line, "check expects P1 to P7")),
        },
        "write-aut" if args.len() == 1 => Step::WriteAut(PathBuf::from(args[0])),
        "minimize" | "save" | "check" | "write-aut" => {
            return Err(usage(line, format!("{head} expects one argument")))
        }
        other => return Err(usage(line, format!("unknown step `{other}`"))),
    };
    Ok(step)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Subject {
    Nothing,
    Network,
    Lts,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = content.split_whitespace().collect();
            if !words.is_empty() {
                steps.push((i + 1, parse_step(i + 1, &words)?));
            }
        }
        let scenario = Scenario { steps };
        scenario.type_check()?;
        Ok(scenario)
    }

    /// Every step finds the network or LTS it works on.
    fn type_check(&self) -> Result<()> {
        let (mut subject, mut built) = (Subject::Nothing, false);
        let mut saved = Vec::new();
        for (line, step) in &self.steps {
            let needs_lts = || -> Result<()> {
                if subject == Subject::Lts {
                    Ok(())
                } else {
                    Err(usage(*line, "this step needs an LTS; explore first"))
                }
            };
            match step {
                Step::BuildNetwork { .. } => {
                    subject = Subject::Network;
                    built = true;
                }
                Step::Explore { .. } if subject != Subject::Network => {
                    return Err(usage(*line, "explore needs a network; build-network first"))
                }
                Step::Explore { .. } => subject = Subject::Lts,
                Step::Hide(_) | Step::HideAllBut(_) if subject == Subject::Nothing => {
                    return Err(usage(*line, "nothing to hide gates of"))
                }
                Step::Hide(_) | Step::HideAllBut(_) => {}
                Step::StripOffers | Step::Minimize(_) | Step::WriteAut(_) => needs_lts()?,
                Step::Save(name) => {
                    needs_lts()?;
                    saved.push(name.clone());
                }
                Step::Compare { target, .. } => {
                    needs_lts()?;
                    if let Target::Saved(name) = target {
                        if !saved.contains(name) {
                            return Err(usage(*line, format!("nothing saved as `{name}`")));
                        }
                    }
                    if *target == Target::AbstractModel && !built {
                        return Err(usage(*line, "the abstract model needs the options of a build-network step"));
                    }
                }
                Step::Check(5 | 7) if !built => {
                    return Err(usage(*line, "this property needs a build-network step"))
                }
                Step::Check(5 | 7) => {}
                Step::Check(_) => needs_lts()?,
            }
        }
        Ok(())
    }
}

struct Run<'a> {
    base: PathBuf,
    out: &'a mut dyn Write,
    network: Option<Network>,
    lts: Option<Lts>,
    checker: Option<Checker>,
    saved: BTreeMap<String, Lts>,
    outcome: Outcome,
}

impl Run<'_> {
    fn lts(&self) -> &Lts {
        self.lts.as_ref().expect("type checked")
    }

    fn checker(&mut self) -> &mut Checker {
        self.checker.as_mut().expect("type checked")
    }

    fn target(&mut self, target: &Target) -> Result<Lts> {
        Ok(match target {
            Target::File(path) => read_lts(&self.base.join(path))?,
            Target::Saved(name) => self.saved[name].clone(),
            Target::AbstractModel => self.checker().abstract_lts()?.clone(),
            Target::SubkeyReference(w) => subkey_reference(*w),
        })
    }

    fn step(&mut self, step: &Step) -> Result<()> {
        match step {
            Step::BuildNetwork { domain, tau_on_join, sequential_sboxes, closed } => {
                let options = semantics(*tau_on_join, *sequential_sboxes);
                self.network = Some(des_network(*domain, &options, *closed)?);
                let eo = ExploreOptions::default().with_tau_confluence(true);
                self.checker = Some(Checker::new(options, eo, 1, 20));
                self.lts = None;
                let net = self.network.as_ref().unwrap();
                writeln!(self.out, "network: {} components", net.components().len())?;
            }
            Step::Explore { compositional, reduce, max_states, jobs } => {
                let net = self.network.as_ref().expect("type checked");
                let mut eo = ExploreOptions::default().with_jobs(*jobs).with_tau_confluence(*reduce);
                if let Some(n) = max_states {
                    eo = eo.with_max_states(*n);
                }
                let lts = if *compositional {
                    let done = compose_incremental(net, &des_composition_plan(Relation::Branching, None), &eo)?;
                    for s in &done.steps {
                        writeln!(
                            self.out,
                            "  {}: {} states, {} transitions, minimized {} states, {} transitions",
                            s.name, s.states, s.transitions, s.min_states, s.min_transitions
                        )?;
                    }
                    done.lts
                } else {
                    explore(net, &eo)?
                };
                writeln!(self.out, "explore: {} states, {} transitions", lts.n_states(), lts.n_transitions())?;
                self.lts = Some(lts);
            }
            Step::Hide(gates) | Step::HideAllBut(gates) => {
                let gates: Vec<&str> = gates.iter().map(String::as_str).collect();
                let all_but = matches!(step, Step::HideAllBut(_));
                if let Some(lts) = &self.lts {
                    self.lts = Some(if all_but { lts.hide_all_but(&gates) } else { lts.hide(&gates) });
                } else {
                    let net = self.network.take().expect("type checked");
                    self.network = Some(if all_but { net.hide_all_but(&gates) } else { net.hide(&gates) });
                }
            }
            Step::StripOffers => self.lts = Some(self.lts().strip_offers()),
            Step::Minimize(relation) => {
                let min = minimize(self.lts(), *relation);
                writeln!(self.out, "minimize {relation}: {} states, {} transitions", min.n_states(), min.n_transitions())?;
                self.lts = Some(min);
            }
            Step::Save(name) => {
                let lts = self.lts().clone();
                self.saved.insert(name.clone(), lts);
            }
            Step::Compare { relation, target, expect } => {
                let other = self.target(target)?;
                let (name, result) = match relation {
                    Check::Equivalence(r) => (r.to_string(), compare(self.lts(), &other, *r)),
                    Check::SimulatedBy => ("simulated-by".to_string(), simulated_by(self.lts(), &other)?),
                };
                let verdict = if result.holds { "HOLDS" } else { "DIFFERS" };
                writeln!(self.out, "compare {name} {target}: {verdict}")?;
                if let Some(w) = &result.witness {
                    writeln!(self.out, "  witness: {w}")?;
                }
                if result.holds != *expect {
                    writeln!(self.out, "  unexpected result")?;
                    self.outcome = Outcome::Fails;
                }
            }
            Step::Check(k) => {
                let lts = self.lts.clone();
                let checker = self.checker();
                let report = match lts {
                    Some(lts) if ![5, 7].contains(k) => checker.run_on(*k, &lts)?,
                    _ => checker.run(*k)?,
                };
                write!(self.out, "{}", render(&report))?;
                if !report.passed {
                    self.outcome = Outcome::Fails;
                }
            }
            Step::WriteAut(path) => {
                write_lts(self.lts(), &self.base.join(path))?;
                writeln!(self.out, "write-aut {}", path.display())?;
            }
        }
        Ok(())
    }
}

/// Runs `scenario`; relative paths are resolved against `base`.
pub fn run(scenario: &Scenario, base: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let mut run = Run {
        base: base.to_path_buf(),
        out,
        network: None,
        lts: None,
        checker: None,
        saved: BTreeMap::new(),
        outcome: Outcome::Holds,
    };
    for (line, step) in &scenario.steps {
        run.step(step).with_context(|| format!("scenario line {line}"))?;
    }
    Ok(run.outcome)
}

pub fn run_file(path: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = Scenario::parse(&text).with_context(|| format!("in {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    run(&scenario, base, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_parse() {
        let s = Scenario::parse(
            "# comment\nbuild-network concrete closed tau-on-join\nexplore reduce max-states 10 jobs 2\n\
             hide-all-but CRYPT OUTPUT\nrename strip-offers\nminimize branching\nsave x\n\
             compare simulated-by saved x expect holds # trailing\ncheck P6\nwrite-aut out/x.aut\n",
        )
        .unwrap();
        assert_eq!(s.steps.len(), 9);
        assert_eq!(
            s.steps[0],
            (2, Step::BuildNetwork { domain: BitDomain::Concrete, tau_on_join: true, sequential_sboxes: false, closed: true })
        );
        assert_eq!(s.steps[1].1, Step::Explore { compositional: false, reduce: true, max_states: Some(10), jobs: 2 });
        assert_eq!(
            s.steps[6].1,
            Step::Compare { relation: Check::SimulatedBy, target: Target::Saved("x".into()), expect: true }
        );
    }

    #[test]
    fn ill_typed_scenarios_are_rejected() {
        for (text, line) in [
            ("minimize branching\n", 1),
            ("build-network abstract\nminimize strong\n", 2),
            ("build-network abstract\n\nexplore\ncompare strong saved y\n", 4),
            ("check P5\n", 1),
            ("build-network abstract\ncheck P1\n", 2),
            ("explore\n", 1),
            ("build-network octal\n", 1),
            ("build-network abstract\nexplore\ncheck P8\n", 3),
            ("frobnicate\n", 1),
        ] {
            let err = Scenario::parse(text).unwrap_err();
            assert!(err.is::<Usage>(), "{text}");
            assert!(err.to_string().starts_with(&format!("line {line}:")), "{text}: {err}");
        }
    }
}
