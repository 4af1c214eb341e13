//! Explicit labeled transition systems and the AUT interchange format.
//!
//! An [`Lts`] is kept in canonical form: the label table starts with the
//! internal action and is otherwise sorted by rendering, and transitions are
//! sorted by `(source, label, target)` without duplicates. Two LTSs with the
//! same states, labels and transitions are therefore structurally equal and
//! print to the same AUT text.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::label::Label;

pub type StateId = u32;
pub type LabelId = u32;

/// Label id of the internal action in every [`Lts`].
pub const TAU: LabelId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub src: StateId,
    pub label: LabelId,
    pub dst: StateId,
}

impl Transition {
    pub fn new(src: StateId, label: LabelId, dst: StateId) -> Transition {
        Transition { src, label, dst }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    n_states: usize,
    initial: StateId,
    labels: Vec<Label>,
    transitions: Vec<Transition>,
    /// `transitions[first[s]..first[s + 1]]` leave state `s`.
    first: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    /// Distinct labels used by at least one transition.
    pub labels: usize,
    pub deadlocks: usize,
}

impl Lts {
    /// Builds an LTS, canonicalizing the label table and transition order.
    /// Labels may contain duplicates and need not include the internal action.
    pub fn new(
        n_states: usize,
        initial: StateId,
        labels: Vec<Label>,
        transitions: Vec<Transition>,
    ) -> Lts {
        assert!((initial as usize) < n_states.max(1), "initial state out of range");
        let n_states = n_states.max(1);
        let mut keyed: Vec<(String, Label)> = labels
            .iter()
            .filter(|l| !l.is_tau())
            .map(|l| (l.to_string(), l.clone()))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        let mut table = vec![Label::Tau];
        let mut rank: HashMap<String, LabelId> = HashMap::new();
        for (text, label) in keyed {
            rank.insert(text, table.len() as LabelId);
            table.push(label);
        }
        let remap: Vec<LabelId> = labels
            .iter()
            .map(|l| if l.is_tau() { TAU } else { rank[&l.to_string()] })
            .collect();
        let mut transitions: Vec<Transition> = transitions
            .into_iter()
            .map(|t| {
                assert!((t.src as usize) < n_states && (t.dst as usize) < n_states);
                Transition::new(t.src, remap[t.label as usize], t.dst)
            })
            .collect();
        transitions.sort_unstable();
        transitions.dedup();
        Lts::from_sorted(n_states, initial, table, transitions)
    }

    /// Trusted constructor: `labels[0]` is the internal action, labels are
    /// canonically ordered and transitions sorted and deduplicated.
    pub(crate) fn from_sorted(
        n_states: usize,
        initial: StateId,
        labels: Vec<Label>,
        transitions: Vec<Transition>,
    ) -> Lts {
        debug_assert!(labels.first().is_some_and(Label::is_tau));
        let mut first = vec![0u32; n_states + 1];
        for t in &transitions {
            first[t.src as usize + 1] += 1;
        }
        for s in 0..n_states {
            first[s + 1] += first[s];
        }
        Lts { n_states, initial, labels, transitions, first }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, id: LabelId) -> &Label {
        &self.labels[id as usize]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, s: StateId) -> &[Transition] {
        let (a, b) = (self.first[s as usize], self.first[s as usize + 1]);
        &self.transitions[a as usize..b as usize]
    }

    pub fn find_label(&self, text: &str) -> Option<LabelId> {
        self.labels.iter().position(|l| l.to_string() == text).map(|i| i as LabelId)
    }

    pub fn stats(&self) -> Stats {
        let mut used = vec![false; self.labels.len()];
        for t in &self.transitions {
            used[t.label as usize] = true;
        }
        Stats {
            states: self.n_states,
            transitions: self.transitions.len(),
            labels: used.iter().filter(|&&u| u).count(),
            deadlocks: self.deadlocks().count(),
        }
    }

    pub fn deadlocks(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.n_states as StateId).filter(move |&s| self.outgoing(s).is_empty())
    }

    /// Rewrites every label; labels mapped to the same text merge.
    pub fn map_labels(&self, f: impl Fn(&Label) -> Label) -> Lts {
        let labels = self.labels.iter().map(f).collect();
        Lts::new(self.n_states, self.initial, labels, self.transitions.clone())
    }

    /// Turns every label on one of the given gates into the internal action.
    pub fn hide(&self, gates: &[&str]) -> Lts {
        self.map_labels(|l| match l.gate() {
            Some(g) if gates.contains(&g) => Label::Tau,
            _ => l.clone(),
        })
    }

    /// Hides every gate except the given ones.
    pub fn hide_all_but(&self, gates: &[&str]) -> Lts {
        self.map_labels(|l| match l.gate() {
            Some(g) if !gates.contains(&g) => Label::Tau,
            _ => l.clone(),
        })
    }

    /// Rewrites `G !o1 !o2 ...` to `G`. The internal action is unchanged.
    pub fn strip_offers(&self) -> Lts {
        self.map_labels(Label::stripped)
    }

    /// The sub-LTS reachable from the initial state, renumbered in BFS order.
    pub fn reachable(&self) -> Lts {
        let mut index = vec![u32::MAX; self.n_states];
        let mut order = vec![self.initial];
        index[self.initial as usize] = 0;
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for t in self.outgoing(s) {
                if index[t.dst as usize] == u32::MAX {
                    index[t.dst as usize] = order.len() as u32;
                    order.push(t.dst);
                }
            }
        }
        if order.len() == self.n_states && self.initial == 0 {
            return self.clone();
        }
        let transitions = order
            .iter()
            .flat_map(|&s| self.outgoing(s))
            .map(|t| Transition::new(index[t.src as usize], t.label, index[t.dst as usize]))
            .collect();
        Lts::new(order.len(), 0, self.labels.clone(), transitions)
    }

    pub fn write_aut(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "des ({}, {}, {})", self.initial, self.transitions.len(), self.n_states)?;
        let rendered: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        for t in &self.transitions {
            writeln!(w, "({}, \"{}\", {})", t.src, rendered[t.label as usize], t.dst)?;
        }
        Ok(())
    }

    pub fn to_aut(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "des ({}, {}, {})", self.initial, self.transitions.len(), self.n_states);
        for t in &self.transitions {
            let _ = writeln!(s, "({}, \"{}\", {})", t.src, self.labels[t.label as usize], t.dst);
        }
        s
    }

    pub fn read_aut(text: &str) -> Result<Lts> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) =
            lines.next().ok_or(Error::Parse { line: 1, message: "empty AUT file".into() })?;
        let err = |line: usize, message: &str| Error::Parse { line: line + 1, message: message.into() };
        let inner = header
            .trim()
            .strip_prefix("des")
            .map(str::trim)
            .and_then(|h| h.strip_prefix('('))
            .and_then(|h| h.strip_suffix(')'))
            .ok_or_else(|| err(hline, "expected header `des (initial, transitions, states)`"))?;
        let nums: Vec<usize> = inner
            .split(',')
            .map(|n| n.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(hline, "header fields must be natural numbers"))?;
        let [initial, n_trans, n_states] = nums[..] else {
            return Err(err(hline, "header must have exactly three fields"));
        };
        if n_states == 0 || initial >= n_states {
            return Err(err(hline, "initial state out of range"));
        }

        let mut labels: Vec<Label> = Vec::new();
        let mut ids: HashMap<String, LabelId> = HashMap::new();
        let mut transitions = Vec::with_capacity(n_trans);
        for (ln, line) in lines {
            let body = line
                .trim()
                .strip_prefix('(')
                .and_then(|l| l.strip_suffix(')'))
                .ok_or_else(|| err(ln, "expected `(source, \"label\", target)`"))?;
            let (src, rest) =
                body.split_once(',').ok_or_else(|| err(ln, "missing label field"))?;
            let (label, dst) =
                rest.rsplit_once(',').ok_or_else(|| err(ln, "missing target field"))?;
            let src: usize = src.trim().parse().map_err(|_| err(ln, "bad source state"))?;
            let dst: usize = dst.trim().parse().map_err(|_| err(ln, "bad target state"))?;
            if src >= n_states || dst >= n_states {
                return Err(err(ln, "state number out of range"));
            }
            let label = label.trim();
            let label = label
                .strip_prefix('"')
                .and_then(|l| l.strip_suffix('"'))
                .unwrap_or(label);
            let id = *ids.entry(label.to_string()).or_insert_with(|| {
                labels.push(Label::parse(label));
                labels.len() as LabelId - 1
            });
            transitions.push(Transition::new(src as StateId, id, dst as StateId));
        }
        if transitions.len() != n_trans {
            return Err(Error::Parse {
                line: hline + 1,
                message: format!(
                    "header announces {n_trans} transitions, found {}",
                    transitions.len()
                ),
            });
        }
        Ok(Lts::new(n_states, initial as StateId, labels, transitions))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desfunc::Word;
    use crate::label::Value;

    #[test]
    fn single_transition_rendering() {
        let out = Label::visible("OUTPUT", vec![Value::Word(Word::concrete(64, 0))]);
        let lts = Lts::new(2, 0, vec![out], vec![Transition::new(0, 0, 1)]);
        assert_eq!(lts.to_aut(), "des (0, 1, 2)\n(0, \"OUTPUT !0000000000000000\", 1)\n");
        let mut buf = Vec::new();
        lts.write_aut(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), lts.to_aut());
    }

    #[test]
    fn canonical_label_order() {
        let a = Label::parse("B !1");
        let b = Label::parse("A");
        let lts = Lts::new(
            2,
            0,
            vec![a, Label::Tau, b],
            vec![Transition::new(0, 0, 1), Transition::new(0, 2, 1), Transition::new(1, 1, 0)],
        );
        assert_eq!(lts.labels()[0], Label::Tau);
        assert_eq!(lts.labels()[1].to_string(), "A");
        assert_eq!(lts.to_aut(), "des (0, 3, 2)\n(0, \"A\", 1)\n(0, \"B !1\", 1)\n(1, \"i\", 0)\n");
    }

    #[test]
    fn stats_count_deadlocks() {
        let lone = Lts::new(1, 0, vec![], vec![]);
        assert_eq!(lone.stats(), Stats { states: 1, transitions: 0, labels: 0, deadlocks: 1 });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Lts::read_aut("des (0, 1, 2)\n(0, \"A\" 1)\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = Lts::read_aut("dse (0, 1, 2)\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = Lts::read_aut("des (0, 2, 2)\n(0, \"A\", 1)\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = Lts::read_aut("des (0, 1, 2)\n(0, \"A\", 5)\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn unquoted_and_comma_labels() {
        let lts = Lts::read_aut("des (0, 2, 2)\n(0, a, 1)\n(1, \"G !1, 2\", 0)\n").unwrap();
        assert_eq!(lts.label(lts.outgoing(1)[0].label).to_string(), "G !1, 2");
    }

    #[test]
    fn strip_and_hide() {
        let lts = Lts::read_aut(
            "des (0, 3, 2)\n(0, \"CRYPT !TRUE\", 1)\n(0, \"CRYPT !FALSE\", 1)\n(1, \"CS !7\", 0)\n",
        )
        .unwrap();
        let stripped = lts.strip_offers();
        assert_eq!(stripped.n_transitions(), 2);
        assert_eq!(stripped.strip_offers(), stripped);
        let hidden = lts.hide(&["CS"]);
        assert_eq!(hidden.label(hidden.outgoing(1)[0].label), &Label::Tau);
    }
}
