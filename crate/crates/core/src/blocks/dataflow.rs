//! Pure compute blocks: gather inputs, apply a function, deliver outputs.

use std::fmt;

use super::{Local, Offers, Process, Slot};
use crate::desfunc::{BitDomain, Word};
use crate::label::{Command, Sort, Value};

const GATHER: u32 = 0;
const JOINED: u32 = 1;
const EMIT: u32 = 2;
const TAU_TAG: u32 = u32::MAX;

pub(crate) fn pc(phase: u32, mask: u32) -> u32 {
    (phase << 16) | mask
}

pub(crate) fn phase(pc: u32) -> u32 {
    pc >> 16
}

pub(crate) fn mask(pc: u32) -> u32 {
    pc & 0xFFFF
}

/// Bits needed to store a value of the sort in a local state.
pub(crate) fn sort_bits(sort: Sort) -> u32 {
    match sort {
        Sort::Bool | Sort::Dir => 1,
        Sort::Cmd => 2,
        Sort::Nat { max } => 8 - max.leading_zeros(),
        Sort::Word { domain: BitDomain::Abstract, .. } => 0,
        Sort::Word { width, .. } => u32::from(width),
    }
}

pub(crate) fn pack(data: u128, offset: u32, sort: Sort, value: &Value) -> u128 {
    let raw: u128 = match (sort, value) {
        (Sort::Bool, Value::Bool(b)) => u128::from(*b),
        (Sort::Dir, Value::Dir(d)) => u128::from(*d == crate::desfunc::Direction::Right),
        (Sort::Cmd, Value::Cmd(c)) => Command::ALL.iter().position(|x| x == c).unwrap() as u128,
        (Sort::Nat { .. }, Value::Nat(n)) => u128::from(*n),
        (Sort::Word { .. }, Value::Word(w)) => u128::from(w.bits()),
        (sort, value) => panic!("value {value} does not fit sort {sort:?}"),
    };
    let bits = sort_bits(sort);
    if bits == 0 {
        return data;
    }
    let field = ((1u128 << bits) - 1) << offset;
    (data & !field) | ((raw << offset) & field)
}

pub(crate) fn unpack(data: u128, offset: u32, sort: Sort) -> Value {
    let bits = sort_bits(sort);
    let raw = if bits == 0 { 0 } else { (data >> offset) & ((1u128 << bits) - 1) };
    match sort {
        Sort::Bool => Value::Bool(raw == 1),
        Sort::Dir => Value::Dir(if raw == 1 {
            crate::desfunc::Direction::Right
        } else {
            crate::desfunc::Direction::Left
        }),
        Sort::Cmd => Value::Cmd(Command::ALL[raw as usize]),
        Sort::Nat { .. } => Value::Nat(raw as u8),
        Sort::Word { width, domain } => Value::Word(Word::new(domain, width, raw as u64)),
    }
}

/// How an arbiter forwards the word it gathered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proj {
    Whole,
    /// The `n` most significant bits.
    High(u8),
    /// The `n` least significant bits.
    Low(u8),
}

impl Proj {
    pub fn apply(self, w: Word) -> Word {
        match self {
            Proj::Whole => w,
            Proj::High(n) => w.split(n).0,
            Proj::Low(n) => w.split(w.width() - n).1,
        }
    }
}

#[derive(Clone, Debug)]
struct Port {
    gate: usize,
    sorts: Vec<Sort>,
    offset: u32,
}

type ComputeFn = dyn Fn(&[Vec<Value>]) -> Vec<Vec<Value>> + Send + Sync;

/// A block that waits for all its inputs, then delivers all its outputs.
pub struct Dataflow {
    name: String,
    gates: Vec<String>,
    inputs: Vec<Port>,
    outputs: Vec<usize>,
    compute: Box<ComputeFn>,
    sequential_inputs: bool,
    sequential_outputs: bool,
    tau_on_join: bool,
}

impl fmt::Debug for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dataflow")
            .field("name", &self.name)
            .field("gates", &self.gates)
            .field("tau_on_join", &self.tau_on_join)
            .finish_non_exhaustive()
    }
}

pub struct DataflowBuilder {
    name: String,
    gates: Vec<String>,
    inputs: Vec<Port>,
    outputs: Vec<usize>,
    next_offset: u32,
    sequential_inputs: bool,
    sequential_outputs: bool,
    tau_on_join: bool,
}

fn gate_index(gates: &mut Vec<String>, gate: &str) -> usize {
    match gates.iter().position(|g| g == gate) {
        Some(i) => i,
        None => {
            gates.push(gate.to_string());
            gates.len() - 1
        }
    }
}

impl DataflowBuilder {
    pub fn input(mut self, gate: &str, sorts: Vec<Sort>) -> Self {
        let gate = gate_index(&mut self.gates, gate);
        let offset = self.next_offset;
        self.next_offset += sorts.iter().map(|&s| sort_bits(s)).sum::<u32>();
        assert!(self.next_offset <= 128, "{}: inputs exceed 128 bits", self.name);
        self.inputs.push(Port { gate, sorts, offset });
        self
    }

    pub fn output(mut self, gate: &str) -> Self {
        let gate = gate_index(&mut self.gates, gate);
        self.outputs.push(gate);
        self
    }

    pub fn tau_on_join(mut self, on: bool) -> Self {
        self.tau_on_join = on;
        self
    }

    pub fn sequential_inputs(mut self, on: bool) -> Self {
        self.sequential_inputs = on;
        self
    }

    pub fn sequential_outputs(mut self, on: bool) -> Self {
        self.sequential_outputs = on;
        self
    }

    pub fn compute(
        self,
        f: impl Fn(&[Vec<Value>]) -> Vec<Vec<Value>> + Send + Sync + 'static,
    ) -> Dataflow {
        assert!(!self.inputs.is_empty() && !self.outputs.is_empty());
        Dataflow {
            name: self.name,
            gates: self.gates,
            inputs: self.inputs,
            outputs: self.outputs,
            compute: Box::new(f),
            sequential_inputs: self.sequential_inputs,
            sequential_outputs: self.sequential_outputs,
            tau_on_join: self.tau_on_join,
        }
    }
}

impl Dataflow {
    pub fn builder(name: &str) -> DataflowBuilder {
        DataflowBuilder {
            name: name.to_string(),
            gates: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            next_offset: 0,
            sequential_inputs: false,
            sequential_outputs: false,
            tau_on_join: false,
        }
    }

    /// One word in, one word out.
    pub fn unary(
        name: &str,
        input: &str,
        sort: Sort,
        output: &str,
        f: impl Fn(Word) -> Word + Send + Sync + 'static,
    ) -> Dataflow {
        Dataflow::builder(name)
            .input(input, vec![sort])
            .output(output)
            .compute(move |ins| vec![vec![Value::Word(f(ins[0][0].as_word()))]])
    }

    fn joins(&self) -> bool {
        self.tau_on_join && self.inputs.len() > 1 && !self.sequential_inputs
    }

    fn gathered(&self, data: u128) -> Vec<Vec<Value>> {
        self.inputs
            .iter()
            .map(|p| {
                let mut offset = p.offset;
                p.sorts
                    .iter()
                    .map(|&s| {
                        let v = unpack(data, offset, s);
                        offset += sort_bits(s);
                        v
                    })
                    .collect()
            })
            .collect()
    }
}

fn pending(mask: u32, n: usize, sequential: bool) -> impl Iterator<Item = usize> {
    let missing = (0..n).filter(move |i| mask & (1 << i) == 0);
    missing.take(if sequential { 1 } else { n })
}

impl Process for Dataflow {
    fn name(&self) -> &str {
        &self.name
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        let m = mask(state.pc);
        match phase(state.pc) {
            GATHER => {
                for i in pending(m, self.inputs.len(), self.sequential_inputs) {
                    let port = &self.inputs[i];
                    out.gate(port.gate, i as u32, port.sorts.iter().map(|&s| Slot::Any(s)));
                }
            }
            JOINED => out.tau(TAU_TAG),
            EMIT => {
                let values = (self.compute)(&self.gathered(state.data));
                for j in pending(m, self.outputs.len(), self.sequential_outputs) {
                    out.gate(
                        self.outputs[j],
                        j as u32,
                        values[j].iter().cloned().map(Slot::Exact),
                    );
                }
            }
            p => unreachable!("{}: phase {p}", self.name),
        }
    }

    fn fire(&self, state: &Local, tag: u32, values: &[Value]) -> Local {
        let m = mask(state.pc);
        match phase(state.pc) {
            GATHER => {
                let port = &self.inputs[tag as usize];
                let mut data = state.data;
                let mut offset = port.offset;
                for (&s, v) in port.sorts.iter().zip(values) {
                    data = pack(data, offset, s, v);
                    offset += sort_bits(s);
                }
                let m = m | (1 << tag);
                if m == (1 << self.inputs.len()) - 1 {
                    let next = if self.joins() { JOINED } else { EMIT };
                    Local::new(pc(next, 0), data)
                } else {
                    Local::new(pc(GATHER, m), data)
                }
            }
            JOINED => Local::new(pc(EMIT, 0), state.data),
            EMIT => {
                let m = m | (1 << tag);
                if m == (1 << self.outputs.len()) - 1 {
                    Local::INITIAL
                } else {
                    Local::new(pc(EMIT, m), state.data)
                }
            }
            p => unreachable!("{}: phase {p}", self.name),
        }
    }
}
