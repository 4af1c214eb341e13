//! Rendezvous values and transition labels.

use std::fmt;
use std::sync::Arc;

use crate::desfunc::{BitDomain, Direction, Word};

/// Selector sent by the controller to an arbiter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    /// Take the initial input and feed the next iteration.
    First,
    /// Take the loop-back input and feed the next iteration.
    Middle,
    /// Take the loop-back input and feed the final output.
    Last,
}

impl Command {
    pub const ALL: [Command; 3] = [Command::First, Command::Middle, Command::Last];

    pub fn name(self) -> &'static str {
        match self {
            Command::First => "FIRST",
            Command::Middle => "MIDDLE",
            Command::Last => "LAST",
        }
    }
}

/// A value carried by an offer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Nat(u8),
    Cmd(Command),
    Dir(Direction),
    Word(Word),
    /// Uninterpreted offer text, as read back from an AUT file.
    Text(Arc<str>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Cmd(c) => f.write_str(c.name()),
            Value::Dir(Direction::Left) => f.write_str("LEFT"),
            Value::Dir(Direction::Right) => f.write_str("RIGHT"),
            Value::Word(w) => write!(f, "{w}"),
            Value::Text(t) => f.write_str(t),
        }
    }
}

/// The type of an offer slot, used to enumerate values nobody proposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    /// Naturals `0..=max`.
    Nat { max: u8 },
    Cmd,
    Dir,
    Word { width: u8, domain: BitDomain },
}

impl Sort {
    /// All values of the sort, or `None` if there are more than `limit`.
    pub fn enumerate(self, limit: u64) -> Option<Vec<Value>> {
        match self {
            Sort::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            Sort::Nat { max } => Some((0..=max).map(Value::Nat).collect()),
            Sort::Cmd => Some(Command::ALL.iter().map(|&c| Value::Cmd(c)).collect()),
            Sort::Dir => Some(vec![Value::Dir(Direction::Left), Value::Dir(Direction::Right)]),
            Sort::Word { width, domain } => {
                Some(domain.enumerate(width, limit)?.into_iter().map(Value::Word).collect())
            }
        }
    }
}

impl Value {
    pub fn as_word(&self) -> Word {
        match self {
            Value::Word(w) => *w,
            other => panic!("expected a word, got {other}"),
        }
    }

    pub fn as_bool(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            other => panic!("expected a boolean, got {other}"),
        }
    }

    pub fn as_nat(&self) -> u8 {
        match self {
            Value::Nat(n) => *n,
            other => panic!("expected a natural, got {other}"),
        }
    }

    pub fn as_cmd(&self) -> Command {
        match self {
            Value::Cmd(c) => *c,
            other => panic!("expected a command, got {other}"),
        }
    }

    pub fn as_dir(&self) -> Direction {
        match self {
            Value::Dir(d) => *d,
            other => panic!("expected a direction, got {other}"),
        }
    }
}

/// A transition label: the internal action, or a gate with its offers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Tau,
    Visible { gate: Arc<str>, offers: Vec<Value> },
}

impl Label {
    pub fn visible(gate: &str, offers: Vec<Value>) -> Label {
        Label::Visible { gate: Arc::from(gate), offers }
    }

    pub fn gate(&self) -> Option<&str> {
        match self {
            Label::Tau => None,
            Label::Visible { gate, .. } => Some(gate),
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }

    /// The same gate without offers.
    pub fn stripped(&self) -> Label {
        match self {
            Label::Tau => Label::Tau,
            Label::Visible { gate, .. } => Label::Visible { gate: gate.clone(), offers: Vec::new() },
        }
    }

    /// Parses the textual form written by `Display`. `i` is the internal
    /// action; offers are kept as uninterpreted text.
    pub fn parse(text: &str) -> Label {
        let text = text.trim();
        if text == "i" || text == "tau" {
            return Label::Tau;
        }
        let mut parts = text.split(" !");
        let gate = parts.next().unwrap_or_default().trim();
        let offers = parts.map(|p| Value::Text(Arc::from(p.trim()))).collect();
        Label::Visible { gate: Arc::from(gate), offers }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("i"),
            Label::Visible { gate, offers } => {
                f.write_str(gate)?;
                for o in offers {
                    write!(f, " !{o}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        assert_eq!(Label::Tau.to_string(), "i");
        assert_eq!(Label::visible("CS", vec![Value::Nat(7)]).to_string(), "CS !7");
        let shift = Label::visible(
            "SHIFT",
            vec![Value::Dir(Direction::Left), Value::Nat(2)],
        );
        assert_eq!(shift.to_string(), "SHIFT !LEFT !2");
        let out = Label::visible("OUTPUT", vec![Value::Word(Word::concrete(64, 0))]);
        assert_eq!(out.to_string(), "OUTPUT !0000000000000000");
        assert_eq!(
            Label::visible("CRYPT", vec![Value::Bool(true)]).to_string(),
            "CRYPT !TRUE"
        );
    }

    #[test]
    fn parse_round_trips_text() {
        for text in ["i", "CS !7", "SHIFT !LEFT !2", "DATA", "OUTPUT !85E813540F0AB405"] {
            assert_eq!(Label::parse(text).to_string(), text);
        }
        assert_eq!(Label::parse("CS !7").stripped().to_string(), "CS");
        assert_eq!(Label::parse("CS !7").gate(), Some("CS"));
    }

    #[test]
    fn sorts_enumerate() {
        assert_eq!(Sort::Nat { max: 16 }.enumerate(100).unwrap().len(), 17);
        assert_eq!(Sort::Bool.enumerate(100).unwrap().len(), 2);
        let abs = Sort::Word { width: 64, domain: BitDomain::Abstract };
        assert_eq!(abs.enumerate(1).unwrap().len(), 1);
        let conc = Sort::Word { width: 64, domain: BitDomain::Concrete };
        assert!(conc.enumerate(1 << 16).is_none());
    }
}
