//! The seven correctness properties of the circuit, as direct graph
//! algorithms over explored LTSs and runs of the concrete prototype.

use std::collections::VecDeque;
use std::fmt;

use crate::blocks::{gates, SemanticsOptions};
use crate::desfunc::{des_apply, BitDomain, Word};
use crate::error::{Error, Result};
use crate::label::{Label, Value};
use crate::lts::{LabelId, Lts, StateId, Transition};
use crate::network::{
    compose_incremental, des_composition_plan, des_network, des_network_with, explore,
    sample_environment, Composition, ExploreOptions, PlanStep,
};
use crate::reduce::{compare, minimize, simulated_by, Relation};

mod prototype;

pub use prototype::{parse_line, run_prototype, Input, Prototype};

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    /// 1 to 7.
    pub property: u8,
    pub passed: bool,
    pub detail: String,
    /// Label sequences from the initial state. Failing reports carry at
    /// least one.
    pub witnesses: Vec<Vec<String>>,
    pub depths: Vec<PipelineDepth>,
}

impl CheckReport {
    fn new(property: u8, passed: bool, detail: impl Into<String>) -> CheckReport {
        CheckReport {
            property,
            passed,
            detail: detail.into(),
            witnesses: Vec::new(),
            depths: Vec::new(),
        }
    }

    fn with_witness(mut self, trace: Vec<String>) -> CheckReport {
        self.witnesses.push(trace);
        self
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PROPERTY_{}: {} \u{2014} {}", self.property, self.verdict(), self.detail)
    }
}

/// How far ahead of the pending result the circuit accepts one input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineDepth {
    pub gate: String,
    /// Largest value, over reachable states, of the number of `gate`
    /// actions minus the number of OUTPUT actions.
    pub n_max: i64,
    /// A shortest trace reaching a state where the count is `n_max`.
    pub witness: Vec<String>,
    /// Number of states over which the bound was established.
    pub states: usize,
}

/// Whether deadlocks reachable only after an OUTPUT are tolerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DeadlockMode {
    #[default]
    Strict,
    /// The closed sample stops for good once its result is delivered.
    TerminalAllowed,
}

fn is_gate(lts: &Lts, label: LabelId, gate: &str) -> bool {
    lts.label(label).gate() == Some(gate)
}

/// Breadth-first search from the initial state along the transitions
/// accepted by `follow`. Returns the tree edge that discovered each state.
fn bfs(lts: &Lts, follow: impl Fn(&Transition) -> bool) -> Vec<Option<Option<Transition>>> {
    let mut parent = vec![None; lts.n_states()];
    let mut queue = VecDeque::from([lts.initial()]);
    parent[lts.initial() as usize] = Some(None);
    while let Some(s) = queue.pop_front() {
        for t in lts.outgoing(s) {
            if follow(t) && parent[t.dst as usize].is_none() {
                parent[t.dst as usize] = Some(Some(*t));
                queue.push_back(t.dst);
            }
        }
    }
    parent
}

fn path_to(lts: &Lts, parent: &[Option<Option<Transition>>], mut s: StateId) -> Vec<String> {
    let mut trace = Vec::new();
    while let Some(Some(t)) = parent[s as usize] {
        trace.push(lts.label(t.label).to_string());
        s = t.src;
    }
    trace.reverse();
    trace
}

/// P1: no reachable state lacks outgoing transitions.
pub fn check_deadlock(lts: &Lts, mode: DeadlockMode) -> CheckReport {
    let parent = match mode {
        DeadlockMode::Strict => bfs(lts, |_| true),
        DeadlockMode::TerminalAllowed => bfs(lts, |t| !is_gate(lts, t.label, gates::OUTPUT)),
    };
    let reached = parent.iter().filter(|p| p.is_some()).count();
    let dead = (0..lts.n_states() as StateId)
        .find(|&s| parent[s as usize].is_some() && lts.outgoing(s).is_empty());
    let scope = match mode {
        DeadlockMode::Strict => "reachable states",
        DeadlockMode::TerminalAllowed => "states reachable before the first OUTPUT",
    };
    match dead {
        None => CheckReport::new(1, true, format!("no deadlock among {reached} {scope}")),
        Some(s) => {
            let trace = path_to(lts, &parent, s);
            CheckReport::new(1, false, format!("state {s} is a deadlock after {} actions", trace.len()))
                .with_witness(trace)
        }
    }
}

const TRIPLET: [&str; 3] = [gates::CRYPT, gates::DATA, gates::KEY];
const ALL_SEEN: usize = 0b111;

/// P2: once a CRYPT, a DATA and a KEY have been accepted since the last
/// OUTPUT, every maximal path reaches an OUTPUT.
pub fn check_inevitable_output(lts: &Lts) -> CheckReport {
    inevitable_output(lts, 2)
}

fn inevitable_output(lts: &Lts, property: u8) -> CheckReport {
    let n = lts.n_states();
    let kind: Vec<Option<usize>> = lts
        .labels()
        .iter()
        .map(|l| match l.gate() {
            Some(g) if g == gates::OUTPUT => Some(usize::MAX),
            Some(g) => TRIPLET.iter().position(|x| *x == g).map(|i| 1 << i),
            None => None,
        })
        .collect();
    let next_flags = |f: usize, label: LabelId| match kind[label as usize] {
        Some(usize::MAX) => 0,
        Some(bit) => f | bit,
        None => f,
    };

    // product of the LTS with the set of triplet gates seen since the last OUTPUT
    let node = |s: StateId, f: usize| s as usize * 8 + f;
    let mut parent: Vec<Option<Option<(usize, LabelId)>>> = vec![None; n * 8];
    let start = node(lts.initial(), 0);
    parent[start] = Some(None);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let (s, f) = ((p / 8) as StateId, p % 8);
        for t in lts.outgoing(s) {
            let q = node(t.dst, next_flags(f, t.label));
            if parent[q].is_none() {
                parent[q] = Some(Some((p, t.label)));
                queue.push_back(q);
            }
        }
    }
    let prefix = |s: StateId| {
        let mut trace = Vec::new();
        let mut p = node(s, ALL_SEEN);
        while let Some(Some((q, label))) = parent[p] {
            trace.push(lts.label(label).to_string());
            p = q;
        }
        trace.reverse();
        trace
    };
    let pending: Vec<bool> = (0..n).map(|s| parent[node(s as StateId, ALL_SEEN)].is_some()).collect();
    let region = pending.iter().filter(|&&p| p).count();
    let is_output = |label: LabelId| kind[label as usize] == Some(usize::MAX);

    if let Some(s) = (0..n).find(|&s| pending[s] && lts.outgoing(s as StateId).is_empty()) {
        let trace = prefix(s as StateId);
        return CheckReport::new(
            property,
            false,
            format!("state {s} deadlocks with a result pending"),
        )
        .with_witness(trace);
    }

    // a cycle avoiding OUTPUT inside the pending region
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut colour = vec![WHITE; n];
    for root in (0..n).filter(|&s| pending[s]) {
        if colour[root] != WHITE {
            continue;
        }
        let mut stack: Vec<(StateId, usize, Option<LabelId>)> = vec![(root as StateId, 0, None)];
        colour[root] = GREY;
        while let Some(top) = stack.last_mut() {
            let (s, i) = (top.0, top.1);
            let out = lts.outgoing(s);
            if i == out.len() {
                colour[s as usize] = BLACK;
                stack.pop();
                continue;
            }
            top.1 += 1;
            let t = out[i];
            if is_output(t.label) {
                continue;
            }
            match colour[t.dst as usize] {
                WHITE => {
                    colour[t.dst as usize] = GREY;
                    stack.push((t.dst, 0, Some(t.label)));
                }
                GREY => {
                    let at = stack.iter().position(|e| e.0 == t.dst).unwrap();
                    let mut cycle: Vec<String> =
                        stack[at + 1..].iter().map(|e| lts.label(e.2.unwrap()).to_string()).collect();
                    cycle.push(lts.label(t.label).to_string());
                    let mut trace = prefix(t.dst);
                    let len = cycle.len();
                    trace.extend(cycle);
                    return CheckReport::new(
                        property,
                        false,
                        format!(
                            "a cycle of {len} actions avoids OUTPUT with a result pending \
                             (the witness ends with the cycle)"
                        ),
                    )
                    .with_witness(trace);
                }
                _ => {}
            }
        }
    }
    CheckReport::new(
        property,
        true,
        format!("OUTPUT is inevitable from all {region} states with a complete input triplet"),
    )
}

/// Measures the lookahead on `gate`. Fails with a model error if two paths
/// reach one state with different counts.
pub fn measure_pipeline_depth(lts: &Lts, gate: &str) -> Result<PipelineDepth> {
    let n = lts.n_states();
    let delta: Vec<i64> = lts
        .labels()
        .iter()
        .map(|l| match l.gate() {
            Some(g) if g == gate => 1,
            Some(g) if g == gates::OUTPUT => -1,
            _ => 0,
        })
        .collect();
    let mut count: Vec<Option<i64>> = vec![None; n];
    let parent = bfs(lts, |_| true);
    let mut queue = VecDeque::from([lts.initial()]);
    count[lts.initial() as usize] = Some(0);
    while let Some(s) = queue.pop_front() {
        let c = count[s as usize].unwrap();
        for t in lts.outgoing(s) {
            let d = c + delta[t.label as usize];
            match count[t.dst as usize] {
                None => {
                    count[t.dst as usize] = Some(d);
                    queue.push_back(t.dst);
                }
                Some(e) if e != d => {
                    return Err(Error::Model(format!(
                        "the number of pending {gate} inputs is not a function of the state: \
                         state {} is reached with {e} and with {d}",
                        t.dst
                    )))
                }
                Some(_) => {}
            }
        }
    }
    let (best, n_max) = count
        .iter()
        .enumerate()
        .filter_map(|(s, c)| c.map(|c| (s, c)))
        .max_by_key(|&(s, c)| (c, std::cmp::Reverse(s)))
        .unwrap_or((lts.initial() as usize, 0));
    Ok(PipelineDepth {
        gate: gate.to_string(),
        n_max,
        witness: path_to(lts, &parent, best as StateId),
        states: count.iter().filter(|c| c.is_some()).count(),
    })
}

/// P3: the lookahead on each input gate is bounded and at least one.
pub fn check_pipeline_depth(lts: &Lts) -> Result<CheckReport> {
    let depths = TRIPLET
        .iter()
        .map(|g| measure_pipeline_depth(lts, g))
        .collect::<Result<Vec<_>>>()?;
    let passed = depths.iter().all(|d| d.n_max >= 1);
    let detail = depths
        .iter()
        .map(|d| format!("N({})={}", d.gate, d.n_max))
        .collect::<Vec<_>>()
        .join(", ");
    let detail = format!("{detail}; bounds hold on all {} states, each attained by a witness", lts.n_states());
    let mut report = CheckReport::new(3, passed, detail);
    report.witnesses = depths.iter().map(|d| d.witness.clone()).collect();
    report.depths = depths;
    Ok(report)
}

const ROUNDS: usize = 16;

/// The expected behaviour on SUBKEY and CRYPT: sixteen SUBKEY actions per
/// CRYPT, where the next CRYPT may be accepted up to `window` subkeys
/// before the current run ends (`window < 16`).
///
/// States: 0 idle, `1 + i` after `i` subkeys of a run, and `17 + j` after
/// the `16 - window + j`-th subkey when the next CRYPT is already in.
pub fn subkey_reference(window: usize) -> Lts {
    assert!(window < ROUNDS, "window must be below {ROUNDS}");
    let subkey = 1;
    let crypt = 2;
    let labels = vec![Label::Tau, Label::visible(gates::SUBKEY, vec![]), Label::visible(gates::CRYPT, vec![])];
    let run = |i: usize| (1 + i) as StateId;
    let early = |i: usize| (1 + ROUNDS + i - (ROUNDS - window)) as StateId;
    let mut transitions = vec![Transition::new(0, crypt, run(0))];
    for i in 0..ROUNDS {
        let next = if i + 1 == ROUNDS { 0 } else { run(i + 1) };
        transitions.push(Transition::new(run(i), subkey, next));
        if i >= ROUNDS - window {
            transitions.push(Transition::new(run(i), crypt, early(i)));
            let next = if i + 1 == ROUNDS { run(0) } else { early(i + 1) };
            transitions.push(Transition::new(early(i), subkey, next));
        }
    }
    Lts::new(1 + ROUNDS + window, 0, labels, transitions)
}

/// Hides everything but SUBKEY and CRYPT, strips offers and minimizes.
pub fn subkey_view(lts: &Lts) -> Lts {
    minimize(&lts.hide_all_but(&[gates::SUBKEY, gates::CRYPT]).strip_offers(), Relation::Branching)
}

/// P4: the SUBKEY/CRYPT behaviour is branching-equivalent to a reference
/// automaton for some lookahead window. `lts` must keep SUBKEY visible.
pub fn check_subkey_schedule(lts: &Lts) -> CheckReport {
    let view = subkey_view(lts);
    let subkeys = view.transitions().iter().filter(|t| is_gate(&view, t.label, gates::SUBKEY)).count();
    if subkeys == 0 {
        return CheckReport::new(4, false, "no SUBKEY action is reachable")
            .with_witness(Vec::new());
    }
    for window in 0..ROUNDS {
        if compare(&view, &subkey_reference(window), Relation::Branching).holds {
            return CheckReport::new(
                4,
                true,
                format!(
                    "sixteen SUBKEY per CRYPT; the next CRYPT is accepted up to {window} subkeys early \
                     ({} states, {} transitions)",
                    view.n_states(),
                    view.n_transitions()
                ),
            );
        }
    }
    let closest = (0..ROUNDS)
        .min_by_key(|&w| (view.n_states() as i64 - (1 + ROUNDS + w) as i64).abs())
        .unwrap();
    let witness = compare(&view, &subkey_reference(closest), Relation::Branching)
        .witness
        .map(|w| w.trace)
        .unwrap_or_default();
    CheckReport::new(
        4,
        false,
        format!(
            "the SUBKEY/CRYPT behaviour ({} states, {} transitions) matches no reference window; \
             distinguishing trace shown against window {closest}",
            view.n_states(),
            view.n_transitions()
        ),
    )
    .with_witness(witness)
}

/// P5: the concrete network computes DES on every `(encrypt, data, key)`
/// triple, and decrypting each result with the same key gives the data back.
pub fn check_prototype(options: &SemanticsOptions, triples: &[(bool, u64, u64)]) -> Result<CheckReport> {
    let mut proto = Prototype::new(options)?;
    for (n, &(encrypt, data, key)) in triples.iter().enumerate() {
        let (d, k) = (Word::concrete(64, data), Word::concrete(64, key));
        let expected = des_apply(d, k, encrypt);
        let got = proto.compute(encrypt, d, k)?;
        let back = proto.compute(!encrypt, got, k)?;
        let failure = if got != expected {
            Some(format!("triple {n}: OUTPUT {got} but DES gives {expected}"))
        } else if back != d {
            Some(format!("triple {n}: inverting {got} gives {back}, not {d}"))
        } else {
            None
        };
        if let Some(detail) = failure {
            let trace = proto.trace().to_vec();
            return Ok(CheckReport::new(5, false, detail).with_witness(trace));
        }
    }
    Ok(CheckReport::new(
        5,
        true,
        format!("{} runs match DES and invert correctly", triples.len()),
    ))
}

const SAMPLE_GATES: [&str; 4] = [gates::CRYPT, gates::DATA, gates::KEY, gates::OUTPUT];

/// The closed network for one run, generated with
/// confluence reduction and restricted to the four interface gates.
pub fn closed_sample(
    options: &SemanticsOptions,
    domain: BitDomain,
    (encrypt, data, key): (bool, u64, u64),
    explore_options: &ExploreOptions,
) -> Result<Lts> {
    let env = sample_environment(encrypt, domain.word(64, data), domain.word(64, key));
    let net = des_network_with(domain, options, Some(env))?;
    explore(&net.hide_all_but(&SAMPLE_GATES), &explore_options.with_tau_confluence(true))
}

/// P6: the closed sample delivers the right result, stops only after it,
/// and without offers is simulated by the abstract model.
pub fn check_closed_sample(sample: &Lts, expected: Word, abstract_model: &Lts) -> Result<CheckReport> {
    let dead = check_deadlock(sample, DeadlockMode::TerminalAllowed);
    if !dead.passed {
        return Ok(CheckReport { property: 6, ..dead });
    }
    let inevitable = inevitable_output(sample, 6);
    if !inevitable.passed {
        return Ok(inevitable);
    }
    let wanted = Label::visible(gates::OUTPUT, vec![Value::Word(expected)]);
    let parent = bfs(sample, |_| true);
    if let Some(t) = sample.transitions().iter().find(|t| {
        is_gate(sample, t.label, gates::OUTPUT) && *sample.label(t.label) != wanted
    }) {
        let mut trace = path_to(sample, &parent, t.src);
        trace.push(sample.label(t.label).to_string());
        return Ok(CheckReport::new(6, false, format!("wrong result, expected {wanted}")).with_witness(trace));
    }
    let small = minimize(&sample.strip_offers(), Relation::Branching);
    let big = minimize(
        &abstract_model.hide_all_but(&SAMPLE_GATES).strip_offers(),
        Relation::Branching,
    );
    let inclusion = simulated_by(&small, &big)?;
    if !inclusion.holds {
        let trace = inclusion.witness.map(|w| w.trace).unwrap_or_default();
        return Ok(CheckReport::new(
            6,
            false,
            "the sample without offers is not simulated by the abstract model",
        )
        .with_witness(trace));
    }
    Ok(CheckReport::new(
        6,
        true,
        format!(
            "{wanted} is inevitable and terminal; the stripped sample ({} states) is simulated by \
             the stripped abstract model ({} states)",
            small.n_states(),
            big.n_states()
        ),
    ))
}

/// The abstract open model, generated compositionally and
/// branching-minimized. SUBKEY stays visible when `subkey` is set.
pub fn abstract_model(options: &SemanticsOptions, subkey: bool, explore_options: &ExploreOptions) -> Result<Composition> {
    let net = des_network(BitDomain::Abstract, options, false)?;
    let net = if subkey { net } else { net.hide(&[gates::SUBKEY]) };
    compose_incremental(&net, &des_composition_plan(Relation::Branching, None), explore_options)
}

/// Generates the abstract model with only the round function, the key path
/// and the control part minimized, so that internal steps of the data path
/// remain.
pub fn variant_model(options: &SemanticsOptions, explore_options: &ExploreOptions) -> Result<Lts> {
    let net = des_network(BitDomain::Abstract, options, false)?.hide(&[gates::SUBKEY]);
    let mut plan = des_composition_plan(Relation::Branching, None);
    plan.retain(|s| ["cipher", "keypath", "control"].contains(&s.name.as_str()));
    plan.push(PlanStep::new(
        "des",
        &["IP", "CHOOSE_L", "CHOOSE_R", "XOR32", "FP", "cipher", "keypath", "control"],
    ));
    Ok(compose_incremental(&net, &plan, &explore_options.with_tau_confluence(false))?.lts)
}

/// P7: the model with an internal step after each join is branching
/// equivalent, but not strongly equivalent, to the default one.
pub fn check_semantics_variants(options: &SemanticsOptions, explore_options: &ExploreOptions) -> Result<CheckReport> {
    let default = SemanticsOptions { tau_on_join: false, ..options.clone() };
    let joined = SemanticsOptions { tau_on_join: true, ..options.clone() };
    let a = variant_model(&default, explore_options)?;
    let b = variant_model(&joined, explore_options)?;
    let branching = compare(&a, &b, Relation::Branching);
    let strong = compare(&a, &b, Relation::Strong);
    let sizes = format!(
        "{}/{} vs {}/{} states/transitions",
        a.n_states(),
        a.n_transitions(),
        b.n_states(),
        b.n_transitions()
    );
    let report = match (branching.holds, strong.holds) {
        (true, false) => CheckReport::new(7, true, format!("branching equivalent, strongly distinct ({sizes})")),
        (false, _) => CheckReport::new(7, false, format!("not branching equivalent ({sizes})")),
        (true, true) => CheckReport::new(7, false, format!("unexpectedly strongly equivalent ({sizes})")),
    };
    let witness = branching.witness.or(strong.witness).map(|w| w.trace).unwrap_or_default();
    Ok(report.with_witness(witness))
}
