//! The controller processes and the arbiters they drive.

use super::dataflow::{mask, pc, phase, Proj};
use super::{Local, Offers, Process, Slot};
use crate::desfunc::{BitDomain, Direction, ShiftSchedule, Word};
use crate::label::{Command, Sort, Value};

/// Emits `CS !0`, `CS !1`, ... `CS !(steps-1)` forever.
#[derive(Debug, Clone)]
pub struct Counter {
    name: String,
    gates: Vec<String>,
    steps: u8,
}

impl Counter {
    pub fn new(name: &str, cs: &str, steps: u8) -> Counter {
        Counter { name: name.into(), gates: vec![cs.into()], steps }
    }
}

impl Process for Counter {
    fn name(&self) -> &str {
        &self.name
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        out.gate(0, 0, [Slot::Exact(Value::Nat(state.pc as u8))]);
    }

    fn fire(&self, state: &Local, _tag: u32, _values: &[Value]) -> Local {
        Local::new((state.pc + 1) % u32::from(self.steps), 0)
    }

    fn state_bound(&self) -> Option<usize> {
        Some(self.steps as usize)
    }
}

/// Reads each step number on the control signal and, if the step calls for
/// it, sends one command to its arbiter before accepting the next step.
#[derive(Debug, Clone)]
pub struct StepController {
    name: String,
    gates: Vec<String>,
    table: Vec<Option<Command>>,
}

impl StepController {
    pub fn new(name: &str, cs: &str, out: &str, table: Vec<Option<Command>>) -> StepController {
        StepController { name: name.into(), gates: vec![cs.into(), out.into()], table }
    }
}

impl Process for StepController {
    fn name(&self) -> &str {
        &self.name
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        if state.pc == 0 {
            let max = (self.table.len() - 1) as u8;
            out.gate(0, 0, [Slot::Any(Sort::Nat { max })]);
        } else {
            let cmd = self.table[state.pc as usize - 1].expect("pending command");
            out.gate(1, 1, [Slot::Exact(Value::Cmd(cmd))]);
        }
    }

    fn fire(&self, state: &Local, _tag: u32, values: &[Value]) -> Local {
        if state.pc == 0 {
            let step = values[0].as_nat() as usize;
            match self.table.get(step).copied().flatten() {
                Some(_) => Local::new(step as u32 + 1, 0),
                None => Local::INITIAL,
            }
        } else {
            Local::INITIAL
        }
    }

    fn state_bound(&self) -> Option<usize> {
        Some(self.table.len() + 1)
    }
}

const WAIT_CRYPT: u32 = 0;
const WAIT_CS: u32 = 1;
const SEND: u32 = 2;
const END: u32 = 3;
const GOT_CS: u32 = 1;
const GOT_CRYPT: u32 = 2;

/// Reads the direction flag once per run and issues one register command per
/// schedule entry. Once the last command is out it accepts the next flag,
/// concurrently with the step that closes the run.
#[derive(Debug, Clone)]
pub struct ShiftController {
    name: String,
    gates: Vec<String>,
    encrypt_cmds: Vec<(Direction, u8)>,
    decrypt_cmds: Vec<(Direction, u8)>,
}

impl ShiftController {
    pub fn new(
        name: &str,
        cs: &str,
        crypt: &str,
        shift: &str,
        schedule: ShiftSchedule,
    ) -> ShiftController {
        ShiftController {
            name: name.into(),
            gates: vec![cs.into(), crypt.into(), shift.into()],
            encrypt_cmds: schedule.commands(true),
            decrypt_cmds: schedule.commands(false),
        }
    }

    fn at(phase: u32, entry: u32, flags: u32) -> u32 {
        (phase << 16) | (entry << 8) | flags
    }
}

const CS_GATE: usize = 0;
const CRYPT_GATE: usize = 1;
const SHIFT_GATE: usize = 2;
const MAX_STEP: u8 = 16;

impl Process for ShiftController {
    fn name(&self) -> &str {
        &self.name
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        let (ph, entry, flags) = (state.pc >> 16, (state.pc >> 8) & 0xFF, state.pc & 0xFF);
        match ph {
            WAIT_CRYPT => out.gate(CRYPT_GATE, 0, [Slot::Any(Sort::Bool)]),
            WAIT_CS => out.gate(CS_GATE, 0, [Slot::Any(Sort::Nat { max: MAX_STEP })]),
            SEND => {
                let cmds =
                    if state.data & 1 == 1 { &self.encrypt_cmds } else { &self.decrypt_cmds };
                let (dir, count) = cmds[entry as usize];
                out.gate(
                    SHIFT_GATE,
                    0,
                    [Slot::Exact(Value::Dir(dir)), Slot::Exact(Value::Nat(count))],
                );
            }
            END => {
                if flags & GOT_CS == 0 {
                    out.gate(CS_GATE, 0, [Slot::Any(Sort::Nat { max: MAX_STEP })]);
                }
                if flags & GOT_CRYPT == 0 {
                    out.gate(CRYPT_GATE, 1, [Slot::Any(Sort::Bool)]);
                }
            }
            _ => unreachable!(),
        }
    }

    fn fire(&self, state: &Local, tag: u32, values: &[Value]) -> Local {
        let (ph, entry, flags) = (state.pc >> 16, (state.pc >> 8) & 0xFF, state.pc & 0xFF);
        let rounds = self.encrypt_cmds.len() as u32;
        match ph {
            WAIT_CRYPT => {
                Local::new(Self::at(WAIT_CS, 0, 0), u128::from(values[0].as_bool()))
            }
            WAIT_CS => Local::new(Self::at(SEND, entry, 0), state.data),
            SEND if entry + 1 < rounds => Local::new(Self::at(WAIT_CS, entry + 1, 0), state.data),
            SEND => Local::new(Self::at(END, 0, 0), 0),
            END => {
                let (flags, data) = if tag == 0 {
                    (flags | GOT_CS, state.data)
                } else {
                    (flags | GOT_CRYPT, u128::from(values[0].as_bool()))
                };
                if flags == GOT_CS | GOT_CRYPT {
                    Local::new(Self::at(WAIT_CS, 0, 0), data)
                } else {
                    Local::new(Self::at(END, 0, flags), data)
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Multiplexer/demultiplexer driven by controller commands: reads a command,
/// gathers the inputs that command selects, then writes the outputs it selects.
#[derive(Debug, Clone)]
pub struct Arbiter {
    name: String,
    gates: Vec<String>,
    inputs: [Vec<(usize, u8)>; 3],
    outputs: [Vec<(usize, Proj)>; 3],
    domain: BitDomain,
    tau_on_join: bool,
}

const WAIT_CMD: u32 = 0;
const GATHER: u32 = 1;
const JOINED: u32 = 2;
const EMIT: u32 = 3;

fn cmd_index(c: Command) -> usize {
    Command::ALL.iter().position(|&x| x == c).unwrap()
}

impl Arbiter {
    /// `inputs[c]` and `outputs[c]` are the ports used under command `c`
    /// (indexed as [`Command::ALL`]). Inputs are `(gate, width)`.
    pub fn new(
        name: &str,
        cmd_gate: &str,
        inputs: [Vec<(&str, u8)>; 3],
        outputs: [Vec<(&str, Proj)>; 3],
        domain: BitDomain,
        tau_on_join: bool,
    ) -> Arbiter {
        let mut gates = vec![cmd_gate.to_string()];
        let mut index = |g: &str| match gates.iter().position(|x| x == g) {
            Some(i) => i,
            None => {
                gates.push(g.to_string());
                gates.len() - 1
            }
        };
        let inputs = inputs.map(|v| v.into_iter().map(|(g, w)| (index(g), w)).collect());
        let outputs = outputs.map(|v| v.into_iter().map(|(g, p)| (index(g), p)).collect());
        Arbiter { name: name.into(), gates, inputs, outputs, domain, tau_on_join }
    }

    fn at(ph: u32, cmd: usize, m: u32) -> u32 {
        pc(ph, ((cmd as u32) << 8) | m)
    }

    fn decode(pc_: u32) -> (u32, usize, u32) {
        let low = mask(pc_);
        (phase(pc_), (low >> 8) as usize, low & 0xFF)
    }

    fn bits(&self, width: u8) -> u32 {
        match self.domain {
            BitDomain::Concrete => u32::from(width),
            BitDomain::Abstract => 0,
        }
    }

    /// Concatenation of the gathered inputs, in port order.
    fn gathered(&self, cmd: usize, data: u128) -> Word {
        let ports = &self.inputs[cmd];
        let width: u8 = ports.iter().map(|p| p.1).sum();
        let bits = match self.domain {
            BitDomain::Abstract => 0,
            BitDomain::Concrete => data as u64,
        };
        Word::new(self.domain, width, bits)
    }
}

impl Process for Arbiter {
    fn name(&self) -> &str {
        &self.name
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        let (ph, cmd, m) = Self::decode(state.pc);
        match ph {
            WAIT_CMD => out.gate(0, 0, [Slot::Any(Sort::Cmd)]),
            GATHER => {
                for (i, &(gate, width)) in self.inputs[cmd].iter().enumerate() {
                    if m & (1 << i) == 0 {
                        let sort = Sort::Word { width, domain: self.domain };
                        out.gate(gate, i as u32, [Slot::Any(sort)]);
                    }
                }
            }
            JOINED => out.tau(0),
            EMIT => {
                let word = self.gathered(cmd, state.data);
                for (j, &(gate, proj)) in self.outputs[cmd].iter().enumerate() {
                    if m & (1 << j) == 0 {
                        out.gate(gate, j as u32, [Slot::Exact(Value::Word(proj.apply(word)))]);
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    fn fire(&self, state: &Local, tag: u32, values: &[Value]) -> Local {
        let (ph, cmd, m) = Self::decode(state.pc);
        match ph {
            WAIT_CMD => Local::new(Self::at(GATHER, cmd_index(values[0].as_cmd()), 0), 0),
            GATHER => {
                let ports = &self.inputs[cmd];
                // Port i occupies the bits below the ports that precede it.
                let below: u32 =
                    ports[tag as usize + 1..].iter().map(|p| self.bits(p.1)).sum();
                let w = values[0].as_word();
                let data = state.data | (u128::from(w.bits()) << below);
                let m = m | (1 << tag);
                if m == (1 << ports.len()) - 1 {
                    let next = if self.tau_on_join && ports.len() > 1 { JOINED } else { EMIT };
                    Local::new(Self::at(next, cmd, 0), data)
                } else {
                    Local::new(Self::at(GATHER, cmd, m), data)
                }
            }
            JOINED => Local::new(Self::at(EMIT, cmd, 0), state.data),
            EMIT => {
                let m = m | (1 << tag);
                if m == (1 << self.outputs[cmd].len()) - 1 {
                    Local::INITIAL
                } else {
                    Local::new(Self::at(EMIT, cmd, m), state.data)
                }
            }
            _ => unreachable!(),
        }
    }
}
