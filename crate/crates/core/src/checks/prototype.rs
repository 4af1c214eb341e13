//! The concrete network as an executable DES: inputs arrive as text lines,
//! a fixed scheduler runs the circuit, results leave as text lines.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::blocks::{gates, Local, Offers, Process, SemanticsOptions, Slot};
use crate::desfunc::{BitDomain, Word};
use crate::error::{Error, Result};
use crate::label::{Label, Sort, Value};
use crate::network::{des_components, Network, Simulator};

const GRAMMAR: &str = "expected `CRYPT !0`, `CRYPT !1`, `DATA !<16 hex digits>` or `KEY !<16 hex digits>`";

/// Steps after which a run that never becomes quiescent is reported.
const STEP_LIMIT: usize = 1_000_000;

/// One rendezvous offered by the environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Input {
    /// `true` encrypts.
    Crypt(bool),
    Data(Word),
    Key(Word),
}

impl Input {
    fn slot(&self) -> usize {
        match self {
            Input::Crypt(_) => 0,
            Input::Data(_) => 1,
            Input::Key(_) => 2,
        }
    }
}

/// Parses one line of the protocol. Blank lines give `None`.
pub fn parse_line(line_no: usize, line: &str) -> Result<Option<Input>> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let err = |message: String| Error::Parse { line: line_no, message };
    let (gate, offer) = line
        .split_once('!')
        .map(|(g, o)| (g.trim(), o.trim()))
        .ok_or_else(|| err(GRAMMAR.to_string()))?;
    let word = |text: &str| {
        if text.len() == 16 && text.chars().all(|c| c.is_ascii_hexdigit()) {
            Ok(Word::concrete(64, u64::from_str_radix(text, 16).unwrap()))
        } else {
            Err(err(format!("`{text}` is not a 64-bit word; {GRAMMAR}")))
        }
    };
    match gate.to_ascii_uppercase().as_str() {
        "CRYPT" => match offer {
            "1" => Ok(Some(Input::Crypt(true))),
            "0" => Ok(Some(Input::Crypt(false))),
            other => Err(err(format!("`{other}` is not a boolean; {GRAMMAR}"))),
        },
        "DATA" => word(offer).map(|w| Some(Input::Data(w))),
        "KEY" => word(offer).map(|w| Some(Input::Key(w))),
        other => Err(err(format!("unknown gate `{other}`; {GRAMMAR}"))),
    }
}

/// Environment component holding at most one pending value per input gate
/// and accepting every result.
///
/// Local state: `pc` bits 0 to 2 flag a pending CRYPT, DATA, KEY; bit 3 is
/// the pending flag value; `data` holds the key above the data word.
#[derive(Debug)]
struct Feeder {
    gates: Vec<String>,
}

const PENDING_FLAG: u32 = 1 << 3;

impl Process for Feeder {
    fn name(&self) -> &str {
        "ENV"
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        let pc = state.pc;
        if pc & 1 != 0 {
            out.gate(0, 0, [Slot::Exact(Value::Bool(pc & PENDING_FLAG != 0))]);
        }
        if pc & 2 != 0 {
            out.gate(1, 1, [Slot::Exact(Value::Word(Word::concrete(64, state.data as u64)))]);
        }
        if pc & 4 != 0 {
            out.gate(2, 2, [Slot::Exact(Value::Word(Word::concrete(64, (state.data >> 64) as u64)))]);
        }
        out.gate(3, 3, [Slot::Any(Sort::Word { width: 64, domain: BitDomain::Concrete })]);
    }

    fn fire(&self, state: &Local, tag: u32, _values: &[Value]) -> Local {
        match tag {
            0..=2 => Local::new(state.pc & !(1 << tag), state.data),
            _ => *state,
        }
    }

    fn state_bound(&self) -> Option<usize> {
        None
    }
}

/// The concrete network driven by a queue of inputs. The scheduler always
/// takes the first enabled transition: internal steps by component index,
/// then rendezvous by gate.
pub struct Prototype {
    net: Network,
    env: usize,
    queues: [VecDeque<Input>; 3],
    state: Vec<Local>,
    trace: Vec<String>,
}

impl Prototype {
    pub fn new(options: &SemanticsOptions) -> Result<Prototype> {
        let mut components = des_components(BitDomain::Concrete, options)?;
        let env = components.len();
        components.push(Arc::new(Feeder {
            gates: [gates::CRYPT, gates::DATA, gates::KEY, gates::OUTPUT]
                .iter()
                .map(|g| g.to_string())
                .collect(),
        }));
        let net = Network::new(components, BitDomain::Concrete).hide_all_but(&gates::OBSERVABLE);
        let state = Simulator::new(&net).initial();
        Ok(Prototype { net, env, queues: Default::default(), state, trace: Vec::new() })
    }

    /// Queues one input and runs until nothing is enabled; returns the
    /// results delivered meanwhile.
    pub fn offer(&mut self, input: Input) -> Result<Vec<Word>> {
        self.queues[input.slot()].push_back(input);
        self.run()
    }

    /// One complete run: offers the flag, the data and the key.
    pub fn compute(&mut self, encrypt: bool, data: Word, key: Word) -> Result<Word> {
        self.trace.clear();
        let mut outputs = Vec::new();
        for input in [Input::Crypt(encrypt), Input::Data(data), Input::Key(key)] {
            outputs.extend(self.offer(input)?);
        }
        match outputs.as_slice() {
            [w] => Ok(*w),
            _ => Err(Error::Model(format!("one run produced {} results", outputs.len()))),
        }
    }

    /// Visible rendezvous so far (since the last [`Prototype::compute`]).
    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    fn refill(env: &mut Local, queues: &mut [VecDeque<Input>; 3]) {
        for (slot, queue) in queues.iter_mut().enumerate() {
            if env.pc & (1 << slot) != 0 {
                continue;
            }
            let Some(input) = queue.pop_front() else { continue };
            let (mut pc, mut data) = (env.pc | (1 << slot), env.data);
            match input {
                Input::Crypt(e) => {
                    pc = if e { pc | PENDING_FLAG } else { pc & !PENDING_FLAG };
                }
                Input::Data(w) => data = (data & !u128::from(u64::MAX)) | u128::from(w.bits()),
                Input::Key(w) => data = (data & u128::from(u64::MAX)) | (u128::from(w.bits()) << 64),
            }
            *env = Local::new(pc, data);
        }
    }

    fn run(&mut self) -> Result<Vec<Word>> {
        let mut outputs = Vec::new();
        let Prototype { net, env, queues, state, trace } = self;
        let mut sim = Simulator::new(net);
        for _ in 0..STEP_LIMIT {
            Prototype::refill(&mut state[*env], queues);
            let Some(step) = sim.successors(state)?.into_iter().next() else {
                return Ok(outputs);
            };
            if let Label::Visible { gate, offers } = &step.label {
                if &**gate == gates::OUTPUT {
                    outputs.push(offers[0].as_word());
                }
                trace.push(step.label.to_string());
            }
            *state = step.target;
        }
        Err(Error::Model(format!("no quiescent state within {STEP_LIMIT} steps")))
    }
}

/// Reads protocol lines from `input`, runs the prototype and writes one
/// `OUTPUT !<hex>` line per result. Visible rendezvous go to `trace`, one
/// per line. Returns the number of results.
pub fn run_prototype(
    options: &SemanticsOptions,
    input: impl BufRead,
    mut output: impl Write,
    mut trace: Option<&mut dyn Write>,
) -> Result<usize> {
    let mut proto = Prototype::new(options)?;
    let mut results = 0;
    let mut logged = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let Some(inp) = parse_line(i + 1, &line)? else { continue };
        for w in proto.offer(inp)? {
            writeln!(output, "{} !{}", gates::OUTPUT, w.to_hex())?;
            results += 1;
        }
        output.flush()?;
        if let Some(t) = trace.as_deref_mut() {
            for label in &proto.trace()[logged..] {
                writeln!(t, "{label}")?;
            }
            logged = proto.trace().len();
        }
    }
    Ok(results)
}
