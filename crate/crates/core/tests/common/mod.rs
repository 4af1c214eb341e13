#![allow(dead_code)]

use asyncdes::lts::{StateId, TAU};
use asyncdes::{Label, Lts, Transition};
use proptest::prelude::*;

/// Ground truth for small instances: the greatest strong or branching
/// bisimulation on the disjoint union, by naive fixpoint over all pairs.
pub fn naive_bisimilar(a: &Lts, b: &Lts, branching: bool) -> bool {
    let (u, ia, ib) = union(a, b);
    let n = u.n_states();
    let tau_reach = tau_closure(&u);
    let mut rel = vec![vec![true; n]; n];
    loop {
        let mut changed = false;
        for s in 0..n {
            for t in 0..n {
                if rel[s][t] && !(transfers(&u, &rel, &tau_reach, s, t, branching) && transfers(&u, &rel, &tau_reach, t, s, branching)) {
                    rel[s][t] = false;
                    rel[t][s] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel[ia as usize][ib as usize];
        }
    }
}

/// Every move of `s` is matched by `t`.
fn transfers(u: &Lts, rel: &[Vec<bool>], tau_reach: &[Vec<usize>], s: usize, t: usize, branching: bool) -> bool {
    u.outgoing(s as StateId).iter().all(|m| {
        let dst = m.dst as usize;
        if branching {
            if m.label == TAU && rel[dst][t] {
                return true;
            }
            tau_reach[t].iter().any(|&t1| {
                rel[s][t1]
                    && u.outgoing(t1 as StateId).iter().any(|n| n.label == m.label && rel[dst][n.dst as usize])
            })
        } else {
            u.outgoing(t as StateId).iter().any(|n| n.label == m.label && rel[dst][n.dst as usize])
        }
    })
}

fn tau_closure(u: &Lts) -> Vec<Vec<usize>> {
    (0..u.n_states())
        .map(|s| {
            let mut seen = vec![false; u.n_states()];
            let mut stack = vec![s];
            seen[s] = true;
            let mut out = Vec::new();
            while let Some(x) = stack.pop() {
                out.push(x);
                for t in u.outgoing(x as StateId) {
                    if t.label == TAU && !seen[t.dst as usize] {
                        seen[t.dst as usize] = true;
                        stack.push(t.dst as usize);
                    }
                }
            }
            out
        })
        .collect()
}

/// Disjoint union with a shared label table; returns both initial states.
pub fn union(a: &Lts, b: &Lts) -> (Lts, StateId, StateId) {
    let mut labels: Vec<Label> = a.labels().to_vec();
    let offset = labels.len() as u32;
    labels.extend(b.labels().iter().cloned());
    let shift = a.n_states() as StateId;
    let mut transitions: Vec<Transition> = a.transitions().to_vec();
    transitions.extend(
        b.transitions().iter().map(|t| Transition::new(t.src + shift, t.label + offset, t.dst + shift)),
    );
    let u = Lts::new(a.n_states() + b.n_states(), a.initial(), labels, transitions);
    (u, a.initial(), b.initial() + shift)
}

/// Small random LTSs over the labels `i`, `a`, `b`.
pub fn arb_lts(max_states: usize, max_transitions: usize) -> impl Strategy<Value = Lts> {
    (1..=max_states).prop_flat_map(move |n| {
        proptest::collection::vec((0..n as u32, 0..3u32, 0..n as u32), 0..=max_transitions).prop_map(
            move |edges| {
                let labels = vec![Label::Tau, Label::visible("a", vec![]), Label::visible("b", vec![])];
                let transitions = edges.into_iter().map(|(s, l, d)| Transition::new(s, l, d)).collect();
                Lts::new(n, 0, labels, transitions)
            },
        )
    })
}

/// `(key, data, encrypt, result)` rows of the known-answer fixture.
pub fn known_answers() -> Vec<(u64, u64, bool, u64)> {
    include_str!("../fixtures/des_kat.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let hex = |s: &str| u64::from_str_radix(s, 16).unwrap();
            (hex(f[0]), hex(f[1]), f[2] == "1", hex(f[3]))
        })
        .collect()
}

pub fn subkeys_fixture() -> Vec<u64> {
    include_str!("../fixtures/subkeys.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| u64::from_str_radix(l.trim(), 16).unwrap())
        .collect()
}
