//! The boxes of the asynchronous DES architecture as local transition systems.
//!
//! Each block is a [`Process`]: a deterministic, cyclic state machine whose
//! transitions are rendezvous offers on its gates. A block never chooses
//! internally between two different actions; it may offer several gates at
//! once when it gathers inputs or delivers outputs in parallel.

use std::fmt;

use crate::desfunc::{BitDomain, ShiftSchedule};
use crate::error::Error;
use crate::label::{Sort, Value};

mod control;
mod dataflow;
mod env;

pub use control::{Arbiter, Counter, ShiftController, StepController};
pub use dataflow::{Dataflow, Proj};
pub use env::SampleEnvironment;

/// Local state of a process: a program counter and packed data registers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Local {
    pub pc: u32,
    pub data: u128,
}

impl Local {
    pub const INITIAL: Local = Local { pc: 0, data: 0 };

    pub fn new(pc: u32, data: u128) -> Local {
        Local { pc, data }
    }
}

/// One position of an offer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    /// `!v`: only this value.
    Exact(Value),
    /// `?x:S`: any value of the sort.
    Any(Sort),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OfferHead {
    /// Local gate index, `None` for the internal action.
    pub gate: Option<u16>,
    /// Opaque to the network, handed back to [`Process::fire`].
    pub tag: u32,
    start: u32,
    len: u32,
}

/// Reusable buffer of offers produced by one call to [`Process::offers`].
#[derive(Clone, Debug, Default)]
pub struct Offers {
    heads: Vec<OfferHead>,
    slots: Vec<Slot>,
}

impl Offers {
    pub fn clear(&mut self) {
        self.heads.clear();
        self.slots.clear();
    }

    pub fn tau(&mut self, tag: u32) {
        let start = self.slots.len() as u32;
        self.heads.push(OfferHead { gate: None, tag, start, len: 0 });
    }

    pub fn gate(&mut self, gate: usize, tag: u32, slots: impl IntoIterator<Item = Slot>) {
        let start = self.slots.len() as u32;
        self.slots.extend(slots);
        let len = self.slots.len() as u32 - start;
        self.heads.push(OfferHead { gate: Some(gate as u16), tag, start, len });
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn head(&self, i: usize) -> OfferHead {
        self.heads[i]
    }

    pub fn slots(&self, i: usize) -> &[Slot] {
        let h = self.heads[i];
        &self.slots[h.start as usize..(h.start + h.len) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (OfferHead, &[Slot])> + '_ {
        (0..self.heads.len()).map(move |i| (self.heads[i], self.slots(i)))
    }
}

/// A component of a network.
pub trait Process: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Gate names, indexed by the local gate numbers used in offers.
    fn gates(&self) -> &[String];

    fn initial(&self) -> Local {
        Local::INITIAL
    }

    /// Appends the offers enabled in `state`. The buffer is not cleared.
    fn offers(&self, state: &Local, out: &mut Offers);

    /// The state reached by taking the offer tagged `tag` with the given
    /// slot values (exact slots included).
    fn fire(&self, state: &Local, tag: u32, values: &[Value]) -> Local;

    /// Upper bound on the number of local states, when known.
    fn state_bound(&self) -> Option<usize> {
        None
    }
}

/// Modeling variants of the sequential composition and of the S-boxes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SemanticsOptions {
    /// Insert an internal step between a completed parallel input join and
    /// the following output, as the LOTOS `>>` operator does.
    pub tau_on_join: bool,
    /// Fire the eight S-boxes one after another, in index order.
    pub sequential_sboxes: bool,
    /// Rotation schedule of the key registers.
    pub schedule: ShiftSchedule,
}

impl SemanticsOptions {
    pub fn lnt() -> SemanticsOptions {
        SemanticsOptions::default()
    }

    pub fn lotos() -> SemanticsOptions {
        SemanticsOptions { tau_on_join: true, ..SemanticsOptions::default() }
    }

    pub fn sequential_sboxes() -> SemanticsOptions {
        SemanticsOptions { sequential_sboxes: true, ..SemanticsOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    L,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Half {
    C,
    D,
}

/// Every box of the architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockId {
    Counter,
    CtrlMuxLr(Side),
    CtrlMuxK,
    CtrlDmuxK,
    CtrlShift,
    ChooseL,
    ChooseR,
    ChooseK,
    DupK,
    Pc1,
    ShiftRegister(Half),
    Pc2,
    Ip,
    Xor32,
    Fp,
    E,
    Xor48,
    Sbox(u8),
    P,
}

impl BlockId {
    /// All instances in network order: controller, arbiters, key path, data
    /// path, cipher.
    pub fn all() -> Vec<BlockId> {
        let mut ids = vec![
            BlockId::Counter,
            BlockId::CtrlMuxLr(Side::L),
            BlockId::CtrlMuxLr(Side::R),
            BlockId::CtrlMuxK,
            BlockId::CtrlDmuxK,
            BlockId::CtrlShift,
            BlockId::ChooseL,
            BlockId::ChooseR,
            BlockId::ChooseK,
            BlockId::DupK,
            BlockId::Pc1,
            BlockId::ShiftRegister(Half::C),
            BlockId::ShiftRegister(Half::D),
            BlockId::Pc2,
            BlockId::Ip,
            BlockId::Xor32,
            BlockId::Fp,
            BlockId::E,
            BlockId::Xor48,
        ];
        ids.extend((1..=8).map(BlockId::Sbox));
        ids.push(BlockId::P);
        ids
    }

    /// True for the controller processes and the four arbiters, which have
    /// no counterpart in the standard's data-flow diagram.
    pub fn is_glue(self) -> bool {
        matches!(
            self,
            BlockId::Counter
                | BlockId::CtrlMuxLr(_)
                | BlockId::CtrlMuxK
                | BlockId::CtrlDmuxK
                | BlockId::CtrlShift
                | BlockId::ChooseL
                | BlockId::ChooseR
                | BlockId::ChooseK
                | BlockId::DupK
        )
    }

    pub fn name(self) -> String {
        match self {
            BlockId::Counter => "COUNTER".into(),
            BlockId::CtrlMuxLr(Side::L) => "CTRL_MUX_L".into(),
            BlockId::CtrlMuxLr(Side::R) => "CTRL_MUX_R".into(),
            BlockId::CtrlMuxK => "CTRL_MUX_K".into(),
            BlockId::CtrlDmuxK => "CTRL_DMUX_K".into(),
            BlockId::CtrlShift => "CTRL_SHIFT".into(),
            BlockId::ChooseL => "CHOOSE_L".into(),
            BlockId::ChooseR => "CHOOSE_R".into(),
            BlockId::ChooseK => "CHOOSE_K".into(),
            BlockId::DupK => "DUP_K".into(),
            BlockId::Pc1 => "PC1".into(),
            BlockId::ShiftRegister(Half::C) => "SHIFT_C".into(),
            BlockId::ShiftRegister(Half::D) => "SHIFT_D".into(),
            BlockId::Pc2 => "PC2".into(),
            BlockId::Ip => "IP".into(),
            BlockId::Xor32 => "XOR32".into(),
            BlockId::Fp => "FP".into(),
            BlockId::E => "E".into(),
            BlockId::Xor48 => "XOR48".into(),
            BlockId::Sbox(i) => format!("SBOX_{i}"),
            BlockId::P => "P".into(),
        }
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Gate names shared between blocks. Only the first five are observable.
pub mod gates {
    pub const CRYPT: &str = "CRYPT";
    pub const DATA: &str = "DATA";
    pub const KEY: &str = "KEY";
    pub const OUTPUT: &str = "OUTPUT";
    pub const SUBKEY: &str = "SUBKEY";
    pub const CS: &str = "CS";

    pub const CTRL_L: &str = "CTRL_L";
    pub const CTRL_R: &str = "CTRL_R";
    pub const CTRL_K: &str = "CTRL_K";
    pub const CTRL_DK: &str = "CTRL_DK";
    pub const SHIFT: &str = "SHIFT";

    pub const L_INIT: &str = "L_INIT";
    pub const R_INIT: &str = "R_INIT";
    pub const L_NEXT: &str = "L_NEXT";
    pub const L_LOOP: &str = "L_LOOP";
    pub const R_LOOP: &str = "R_LOOP";
    pub const R_F: &str = "R_F";
    pub const L_FINAL: &str = "L_FINAL";
    pub const R_FINAL: &str = "R_FINAL";
    pub const E_OUT: &str = "E_OUT";
    pub const F_OUT: &str = "F_OUT";

    pub const FIRST_K: &str = "FIRST_K";
    pub const INTERMEDIATE_K: &str = "INTERMEDIATE_K";
    pub const C_IN: &str = "C_IN";
    pub const D_IN: &str = "D_IN";
    pub const C_OUT: &str = "C_OUT";
    pub const D_OUT: &str = "D_OUT";
    pub const PC2_IN: &str = "PC2_IN";

    pub const OBSERVABLE: [&str; 5] = [CRYPT, DATA, KEY, OUTPUT, SUBKEY];

    pub fn sbox_in(i: u8) -> String {
        format!("S{i}_IN")
    }

    pub fn sbox_out(i: u8) -> String {
        format!("S{i}_OUT")
    }
}

/// Number of steps announced by the counter per run: one per iteration plus
/// the final routing step.
pub const STEPS: u8 = 17;

/// Builds the behavior of one block.
pub fn make_block(
    id: BlockId,
    domain: BitDomain,
    options: &SemanticsOptions,
) -> Result<Box<dyn Process>, Error> {
    use crate::desfunc::{self as des, Word};
    use crate::label::Command::{First, Last, Middle};
    use gates::*;

    let word = |width: u8| Sort::Word { width, domain };
    let join_tau = options.tau_on_join;
    let name = id.name();
    let block: Box<dyn Process> = match id {
        BlockId::Counter => Box::new(Counter::new(&name, CS, STEPS)),
        BlockId::CtrlMuxLr(side) => {
            let gate = if side == Side::L { CTRL_L } else { CTRL_R };
            let mut table = vec![Some(Middle); STEPS as usize];
            table[0] = Some(First);
            table[16] = Some(Last);
            Box::new(StepController::new(&name, CS, gate, table))
        }
        BlockId::CtrlMuxK => {
            let mut table = vec![Some(Middle); STEPS as usize];
            table[0] = Some(First);
            table[16] = None;
            Box::new(StepController::new(&name, CS, CTRL_K, table))
        }
        BlockId::CtrlDmuxK => {
            let mut table = vec![Some(Middle); STEPS as usize];
            table[15] = Some(Last);
            table[16] = None;
            Box::new(StepController::new(&name, CS, CTRL_DK, table))
        }
        BlockId::CtrlShift => {
            Box::new(ShiftController::new(&name, CS, CRYPT, SHIFT, options.schedule.clone()))
        }
        BlockId::ChooseL => Box::new(Arbiter::new(
            &name,
            CTRL_L,
            [vec![(L_INIT, 32)], vec![(L_LOOP, 32)], vec![(L_LOOP, 32)]],
            [
                vec![(L_NEXT, Proj::Whole)],
                vec![(L_NEXT, Proj::Whole)],
                vec![(L_FINAL, Proj::Whole)],
            ],
            domain,
            join_tau,
        )),
        BlockId::ChooseR => Box::new(Arbiter::new(
            &name,
            CTRL_R,
            [vec![(R_INIT, 32)], vec![(R_LOOP, 32)], vec![(R_LOOP, 32)]],
            [
                vec![(R_F, Proj::Whole), (L_LOOP, Proj::Whole)],
                vec![(R_F, Proj::Whole), (L_LOOP, Proj::Whole)],
                vec![(R_FINAL, Proj::Whole)],
            ],
            domain,
            join_tau,
        )),
        BlockId::ChooseK => {
            let halves = vec![(C_IN, Proj::High(28)), (D_IN, Proj::Low(28))];
            Box::new(Arbiter::new(
                &name,
                CTRL_K,
                [vec![(FIRST_K, 56)], vec![(INTERMEDIATE_K, 56)], vec![(INTERMEDIATE_K, 56)]],
                [halves.clone(), halves.clone(), halves],
                domain,
                join_tau,
            ))
        }
        BlockId::DupK => {
            let inputs = vec![(C_OUT, 28), (D_OUT, 28)];
            Box::new(Arbiter::new(
                &name,
                CTRL_DK,
                [inputs.clone(), inputs.clone(), inputs],
                [
                    vec![(PC2_IN, Proj::Whole), (INTERMEDIATE_K, Proj::Whole)],
                    vec![(PC2_IN, Proj::Whole), (INTERMEDIATE_K, Proj::Whole)],
                    vec![(PC2_IN, Proj::Whole)],
                ],
                domain,
                join_tau,
            ))
        }
        BlockId::Pc1 => Box::new(Dataflow::unary(&name, KEY, word(64), FIRST_K, |w| {
            des::PC1.apply(w)
        })),
        BlockId::Pc2 => Box::new(Dataflow::unary(&name, PC2_IN, word(56), SUBKEY, |w| {
            des::PC2.apply(w)
        })),
        BlockId::ShiftRegister(half) => {
            let (input, output) = match half {
                Half::C => (C_IN, C_OUT),
                Half::D => (D_IN, D_OUT),
            };
            Box::new(
                Dataflow::builder(&name)
                    .input(input, vec![word(28)])
                    .input(SHIFT, vec![Sort::Dir, Sort::Nat { max: 2 }])
                    .output(output)
                    .tau_on_join(join_tau)
                    .compute(|ins| {
                        let half = ins[0][0].as_word();
                        let cmd = (ins[1][0].as_dir(), ins[1][1].as_nat());
                        vec![vec![Value::Word(des::shift_register(half, cmd))]]
                    }),
            )
        }
        BlockId::Ip => Box::new(
            Dataflow::builder(&name)
                .input(DATA, vec![word(64)])
                .output(L_INIT)
                .output(R_INIT)
                .compute(|ins| {
                    let (l, r) = des::IP.apply(ins[0][0].as_word()).split(32);
                    vec![vec![Value::Word(l)], vec![Value::Word(r)]]
                }),
        ),
        BlockId::Xor32 => Box::new(
            Dataflow::builder(&name)
                .input(L_NEXT, vec![word(32)])
                .input(F_OUT, vec![word(32)])
                .output(R_LOOP)
                .tau_on_join(join_tau)
                .compute(|ins| {
                    let r = ins[0][0].as_word().xor(ins[1][0].as_word());
                    vec![vec![Value::Word(r)]]
                }),
        ),
        BlockId::Fp => Box::new(
            Dataflow::builder(&name)
                .input(L_FINAL, vec![word(32)])
                .input(R_FINAL, vec![word(32)])
                .output(OUTPUT)
                .tau_on_join(join_tau)
                .compute(|ins| {
                    let (l, r) = (ins[0][0].as_word(), ins[1][0].as_word());
                    vec![vec![Value::Word(des::FP.apply(r.concat(l)))]]
                }),
        ),
        BlockId::E => Box::new(Dataflow::unary(&name, R_F, word(32), E_OUT, |w| {
            des::E.apply(w)
        })),
        BlockId::Xor48 => {
            let mut b = Dataflow::builder(&name)
                .input(E_OUT, vec![word(48)])
                .input(SUBKEY, vec![word(48)])
                .tau_on_join(join_tau)
                .sequential_outputs(options.sequential_sboxes);
            for i in 1..=8 {
                b = b.output(&sbox_in(i));
            }
            Box::new(b.compute(|ins| {
                let x = ins[0][0].as_word().xor(ins[1][0].as_word());
                (0..8u8)
                    .map(|i| {
                        let six = Word::new(x.domain(), 6, x.bits() >> (42 - 6 * i));
                        vec![Value::Word(six)]
                    })
                    .collect()
            }))
        }
        BlockId::Sbox(i) if (1..=8).contains(&i) => {
            Box::new(Dataflow::unary(&name, &sbox_in(i), word(6), &sbox_out(i), move |w| {
                des::sbox_lookup(i as usize, w)
            }))
        }
        BlockId::Sbox(i) => return Err(Error::UnknownBlock(format!("SBOX_{i}"))),
        BlockId::P => {
            let mut b = Dataflow::builder(&name)
                .tau_on_join(join_tau)
                .sequential_inputs(options.sequential_sboxes);
            for i in 1..=8 {
                b = b.input(&sbox_out(i), vec![word(4)]);
            }
            Box::new(b.output(F_OUT).compute(|ins| {
                let domain = ins[0][0].as_word().domain();
                let bits = ins.iter().fold(0u64, |acc, v| (acc << 4) | v[0].as_word().bits());
                vec![vec![Value::Word(des::P.apply(Word::new(domain, 32, bits)))]]
            }))
        }
    };
    Ok(block)
}

/// Parses a block name as printed by [`BlockId::name`].
pub fn block_by_name(name: &str) -> Result<BlockId, Error> {
    BlockId::all()
        .into_iter()
        .find(|id| id.name() == name)
        .ok_or_else(|| Error::UnknownBlock(name.to_string()))
}
