use anyhow::Result;
use asyncdes::checks::*;
use asyncdes::network::{SAMPLE_DATA, SAMPLE_KEY};
use asyncdes::{des_apply, minimize, BitDomain, ExploreOptions, Lts, Relation, SemanticsOptions, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The closed sample triple: encryption of the default data and key.
pub const SAMPLE: (bool, u64, u64) = (true, SAMPLE_DATA, SAMPLE_KEY);

pub fn semantics(tau_on_join: bool, sequential_sboxes: bool) -> SemanticsOptions {
    SemanticsOptions { tau_on_join, sequential_sboxes, ..SemanticsOptions::lnt() }
}

pub fn parse_domain(text: &str) -> Option<BitDomain> {
    match text {
        "abstract" => Some(BitDomain::Abstract),
        "concrete" => Some(BitDomain::Concrete),
        _ => None,
    }
}

pub fn random_triples(seed: u64, runs: usize) -> Vec<(bool, u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..runs).map(|_| (rng.gen(), rng.gen(), rng.gen())).collect()
}

pub fn sample_output() -> Word {
    des_apply(Word::concrete(64, SAMPLE.1), Word::concrete(64, SAMPLE.2), SAMPLE.0)
}

/// Properties run by `check --property all` in each domain.
pub fn default_properties(domain: BitDomain) -> Vec<u8> {
    match domain {
        BitDomain::Abstract => vec![1, 2, 3, 4, 7],
        BitDomain::Concrete => vec![5, 6],
    }
}

/// Builds what the properties need, once, and runs them.
pub struct Checker {
    pub options: SemanticsOptions,
    pub explore: ExploreOptions,
    pub seed: u64,
    pub runs: usize,
    with_subkey: Option<Lts>,
    abstract_lts: Option<Lts>,
}

impl Checker {
    pub fn new(options: SemanticsOptions, explore: ExploreOptions, seed: u64, runs: usize) -> Checker {
        Checker { options, explore, seed, runs, with_subkey: None, abstract_lts: None }
    }

    /// The abstract model with SUBKEY visible.
    fn with_subkey(&mut self) -> Result<&Lts> {
        if self.with_subkey.is_none() {
            self.with_subkey = Some(abstract_model(&self.options, true, &self.explore)?.lts);
        }
        Ok(self.with_subkey.as_ref().unwrap())
    }

    /// The branching-minimized abstract model with SUBKEY hidden.
    pub fn abstract_lts(&mut self) -> Result<&Lts> {
        if self.abstract_lts.is_none() {
            let hidden = minimize(&self.with_subkey()?.hide(&["SUBKEY"]), Relation::Branching);
            self.abstract_lts = Some(hidden);
        }
        Ok(self.abstract_lts.as_ref().unwrap())
    }

    pub fn run(&mut self, property: u8) -> Result<CheckReport> {
        Ok(match property {
            1 => check_deadlock(self.abstract_lts()?, DeadlockMode::Strict),
            2 => check_inevitable_output(self.abstract_lts()?),
            3 => check_pipeline_depth(self.abstract_lts()?)?,
            4 => check_subkey_schedule(self.with_subkey()?),
            5 => check_prototype(&self.options, &random_triples(self.seed, self.runs))?,
            6 => {
                let sample = closed_sample(&self.options, BitDomain::Concrete, SAMPLE, &self.explore)?;
                let model = self.abstract_lts()?.clone();
                check_closed_sample(&sample, sample_output(), &model)?
            }
            7 => check_semantics_variants(&self.options, &self.explore)?,
            _ => anyhow::bail!(crate::Usage(format!("no property {property}; expected 1 to 7"))),
        })
    }

    /// Runs a property on an explicit LTS where it applies to one.
    pub fn run_on(&mut self, property: u8, lts: &Lts) -> Result<CheckReport> {
        Ok(match property {
            1 => check_deadlock(lts, DeadlockMode::Strict),
            2 => check_inevitable_output(lts),
            3 => check_pipeline_depth(lts)?,
            4 => check_subkey_schedule(lts),
            6 => {
                let model = self.abstract_lts()?.clone();
                check_closed_sample(lts, sample_output(), &model)?
            }
            _ => self.run(property)?,
        })
    }
}

/// The report line followed by its indented details.
pub fn render(report: &CheckReport) -> String {
    let mut text = format!("{report}\n");
    for depth in &report.depths {
        text.push_str(&format!(
            "  {} N={} over {} states, witness: {}\n",
            depth.gate,
            depth.n_max,
            depth.states,
            depth.witness.join(", ")
        ));
    }
    if !report.passed {
        for witness in &report.witnesses {
            text.push_str(&format!("  witness: [{}]\n", witness.join(", ")));
        }
    }
    text
}
