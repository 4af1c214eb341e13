use super::{gates, Local, Offers, Process, Slot};
use crate::desfunc::{des_apply, Word};
use crate::label::Value;

/// Sequential environment for a single run: offers the flag, the data and
/// the key, then accepts only the correct result and stops.
#[derive(Debug, Clone)]
pub struct SampleEnvironment {
    gates: Vec<String>,
    encrypt: bool,
    data: Word,
    key: Word,
    expected: Word,
}

impl SampleEnvironment {
    pub fn new(encrypt: bool, data: Word, key: Word) -> SampleEnvironment {
        SampleEnvironment {
            gates: [gates::CRYPT, gates::DATA, gates::KEY, gates::OUTPUT]
                .iter()
                .map(|g| g.to_string())
                .collect(),
            encrypt,
            data,
            key,
            expected: des_apply(data, key, encrypt),
        }
    }

    pub fn expected(&self) -> Word {
        self.expected
    }
}

impl Process for SampleEnvironment {
    fn name(&self) -> &str {
        "ENV"
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        let value = match state.pc {
            0 => Value::Bool(self.encrypt),
            1 => Value::Word(self.data),
            2 => Value::Word(self.key),
            3 => Value::Word(self.expected),
            _ => return,
        };
        out.gate(state.pc as usize, 0, [Slot::Exact(value)]);
    }

    fn fire(&self, state: &Local, _tag: u32, _values: &[Value]) -> Local {
        Local::new(state.pc + 1, 0)
    }

    fn state_bound(&self) -> Option<usize> {
        Some(5)
    }
}
