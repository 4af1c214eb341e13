//! Bisimulation minimization, equivalence checking and weak simulation.
//!
//! Partitions are computed by signature refinement. For branching
//! bisimulation, cycles of internal steps are collapsed first; the internal
//! steps then form a DAG, and states are visited so that the signature of
//! every internal successor is known when a state is processed.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::lts::{LabelId, Lts, StateId, Transition, TAU};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Strong,
    Branching,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Strong => "strong",
            Relation::Branching => "branching",
        })
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "strong" => Ok(Relation::Strong),
            "branching" => Ok(Relation::Branching),
            _ => Err(format!("unknown relation `{s}` (expected strong or branching)")),
        }
    }
}

/// Outgoing moves of a state as (label, target block) pairs.
type Signature = [(LabelId, u32)];

/// Block index of every state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub block: Vec<u32>,
    pub blocks: usize,
}

/// Strongly connected components of the internal-step graph, numbered so
/// that every internal step between distinct components goes from a higher
/// to a lower number.
pub fn tau_sccs(lts: &Lts) -> (Vec<u32>, usize) {
    let n = lts.n_states();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut comp = vec![UNSEEN; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut counter = 0u32;
    let mut ncomp = 0u32;
    // (state, position in its outgoing transitions)
    let mut call: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let out = lts.outgoing(v);
            let mut descended = false;
            while *pos < out.len() {
                let t = out[*pos];
                *pos += 1;
                if t.label != TAU {
                    continue;
                }
                let w = t.dst;
                if index[w as usize] == UNSEEN {
                    index[w as usize] = counter;
                    low[w as usize] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, 0));
                    descended = true;
                    break;
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
            }
            if descended {
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w as usize] = false;
                    comp[w as usize] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    (comp, ncomp as usize)
}

/// Merges each internal-step cycle into one state and drops the internal
/// self-loops this creates.
fn collapse_tau_cycles(lts: &Lts) -> (Lts, Vec<u32>) {
    let (comp, ncomp) = tau_sccs(lts);
    let transitions = lts
        .transitions()
        .iter()
        .filter(|t| !(t.label == TAU && comp[t.src as usize] == comp[t.dst as usize]))
        .map(|t| Transition::new(comp[t.src as usize], t.label, comp[t.dst as usize]))
        .collect::<Vec<_>>();
    let mut transitions = transitions;
    transitions.sort_unstable();
    transitions.dedup();
    let collapsed = Lts::from_sorted(
        ncomp,
        comp[lts.initial() as usize],
        lts.labels().to_vec(),
        transitions,
    );
    (collapsed, comp)
}

/// Signature refinement from the one-block partition. When `history` is
/// given, the partition after every round is recorded (round 0 first).
fn refine(lts: &Lts, branching: bool, mut history: Option<&mut Vec<Vec<u32>>>) -> Partition {
    let n = lts.n_states();
    let mut block = vec![0u32; n];
    let mut blocks = 1usize;
    if let Some(h) = history.as_deref_mut() {
        h.push(block.clone());
    }
    let mut sigs: Vec<Vec<(LabelId, u32)>> = vec![Vec::new(); n];
    loop {
        for s in 0..n {
            let mut sig = Vec::new();
            for t in lts.outgoing(s as StateId) {
                let d = t.dst as usize;
                if branching && t.label == TAU && block[d] == block[s] {
                    // Internal successors come first in the visiting order.
                    debug_assert!(d < s);
                    sig.extend_from_slice(&sigs[d]);
                } else {
                    sig.push((t.label, block[d]));
                }
            }
            sig.sort_unstable();
            sig.dedup();
            sigs[s] = sig;
        }
        let mut ids: HashMap<(u32, &Signature), u32> = HashMap::with_capacity(blocks * 2);
        let mut next = vec![0u32; n];
        for s in 0..n {
            let len = ids.len() as u32;
            next[s] = *ids.entry((block[s], sigs[s].as_slice())).or_insert(len);
        }
        let count = ids.len();
        drop(ids);
        let stable = count == blocks;
        block = next;
        blocks = count;
        if let Some(h) = history.as_deref_mut() {
            h.push(block.clone());
        }
        if stable {
            return Partition { block, blocks };
        }
    }
}

/// The coarsest bisimulation of the given kind on `lts`.
pub fn partition(lts: &Lts, relation: Relation) -> Partition {
    match relation {
        Relation::Strong => refine(lts, false, None),
        Relation::Branching => {
            let (collapsed, comp) = collapse_tau_cycles(lts);
            let inner = refine(&collapsed, true, None);
            Partition {
                block: comp.iter().map(|&c| inner.block[c as usize]).collect(),
                blocks: inner.blocks,
            }
        }
    }
}

/// Quotient of `lts` by `partition`. Blocks are numbered by their smallest
/// member, so an already minimal LTS is returned unchanged. For branching
/// bisimulation, internal steps inside a block are dropped.
pub fn quotient(lts: &Lts, partition: &Partition, relation: Relation) -> Lts {
    let mut rank = vec![u32::MAX; partition.blocks];
    let mut next = 0u32;
    for &b in &partition.block {
        if rank[b as usize] == u32::MAX {
            rank[b as usize] = next;
            next += 1;
        }
    }
    let class = |s: StateId| rank[partition.block[s as usize] as usize];
    let mut transitions: Vec<Transition> = lts
        .transitions()
        .iter()
        .map(|t| Transition::new(class(t.src), t.label, class(t.dst)))
        .filter(|t| !(relation == Relation::Branching && t.label == TAU && t.src == t.dst))
        .collect();
    transitions.sort_unstable();
    transitions.dedup();
    Lts::from_sorted(partition.blocks, class(lts.initial()), lts.labels().to_vec(), transitions)
}

/// The minimal LTS equivalent to `lts` modulo `relation`.
pub fn minimize(lts: &Lts, relation: Relation) -> Lts {
    let lts = lts.reachable();
    let p = partition(&lts, relation);
    quotient(&lts, &p, relation)
}

/// Which operand of a comparison can perform the last action of a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A sequence of actions after which the two operands are told apart: the
/// last action can be performed by `side` and not matched by the other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub trace: Vec<String>,
    pub side: Side,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who = match self.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        write!(f, "[{}] (last action only on the {who})", self.trace.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub holds: bool,
    pub witness: Option<Witness>,
}

/// Disjoint union; the states of `b` are shifted by `a.n_states()`.
fn union(a: &Lts, b: &Lts) -> Lts {
    let offset = a.labels().len() as LabelId;
    let shift = a.n_states() as StateId;
    let mut labels = a.labels().to_vec();
    labels.extend_from_slice(b.labels());
    let mut transitions = a.transitions().to_vec();
    transitions.extend(b.transitions().iter().map(|t| {
        let label = if t.label == TAU { TAU } else { t.label + offset };
        Transition::new(t.src + shift, label, t.dst + shift)
    }));
    Lts::new(a.n_states() + b.n_states(), a.initial(), labels, transitions)
}

/// Decides `a ~ b` modulo `relation`. On failure a witness is returned;
/// for branching bisimulation it is computed on the two quotients.
pub fn compare(a: &Lts, b: &Lts, relation: Relation) -> Comparison {
    let (a, b) = match relation {
        Relation::Strong => (a.reachable(), b.reachable()),
        Relation::Branching => (minimize(a, relation), minimize(b, relation)),
    };
    let u = union(&a, &b);
    let (ia, ib) = (a.initial(), b.initial() + a.n_states() as StateId);
    let p = partition(&u, relation);
    if p.block[ia as usize] == p.block[ib as usize] {
        return Comparison { holds: true, witness: None };
    }
    let mut history = Vec::new();
    refine(&u, false, Some(&mut history));
    Comparison { holds: false, witness: Some(strong_witness(&u, &history, ia, ib)) }
}

/// Follows the refinement history down from the round that separated
/// `p` and `q` to an action one of them cannot match.
fn strong_witness(u: &Lts, history: &[Vec<u32>], p: StateId, q: StateId) -> Witness {
    let (mut p, mut q) = (p, q);
    let mut side = Side::Left;
    let mut trace = Vec::new();
    loop {
        let r = history
            .iter()
            .position(|h| h[p as usize] != h[q as usize])
            .expect("states are separated by some round");
        let prev = &history[r - 1];
        let sig = |s: StateId| -> Vec<(LabelId, u32)> {
            let mut v: Vec<_> = u.outgoing(s).iter().map(|t| (t.label, prev[t.dst as usize])).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (sp, sq) = (sig(p), sig(q));
        let (from, to, missing) = match sp.iter().find(|x| !sq.contains(x)) {
            Some(&m) => (p, q, m),
            None => {
                let m = *sq.iter().find(|x| !sp.contains(x)).expect("signatures differ");
                side = match side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                };
                (q, p, m)
            }
        };
        let (label, target) = missing;
        trace.push(u.label(label).to_string());
        let p_next = u
            .outgoing(from)
            .iter()
            .find(|t| t.label == label && prev[t.dst as usize] == target)
            .unwrap()
            .dst;
        match u.outgoing(to).iter().find(|t| t.label == label) {
            None => return Witness { trace, side },
            Some(t) => {
                p = p_next;
                q = t.dst;
            }
        }
    }
}

/// Largest number of state pairs [`simulated_by`] accepts.
pub const SIMULATION_PAIR_LIMIT: usize = 1 << 26;

/// Decides whether `a` is weakly simulated by `b`: every step of `a` is
/// matched by `b` up to internal steps, with visible labels compared by
/// rendering. On failure, a trace of `a` that `b` cannot perform is
/// reported when one exists.
pub fn simulated_by(a: &Lts, b: &Lts) -> Result<Comparison> {
    let (na, nb) = (a.n_states(), b.n_states());
    if na.saturating_mul(nb) > SIMULATION_PAIR_LIMIT {
        return Err(Error::Model(format!(
            "simulation over {na} x {nb} state pairs is too large; minimize the operands first"
        )));
    }
    let b_label: HashMap<String, LabelId> =
        b.labels().iter().enumerate().map(|(i, l)| (l.to_string(), i as LabelId)).collect();
    let map: Vec<Option<LabelId>> = a
        .labels()
        .iter()
        .map(|l| if l.is_tau() { Some(TAU) } else { b_label.get(&l.to_string()).copied() })
        .collect();

    let closure = tau_closures(b);
    // weak[q][l] = states reachable by tau* l tau*, visible l only.
    let nl = b.labels().len();
    let mut weak: Vec<Vec<Vec<StateId>>> = vec![vec![Vec::new(); nl]; nb];
    for q in 0..nb {
        let mut sets: Vec<Vec<bool>> = vec![Vec::new(); nl];
        for &m in &closure[q] {
            for t in b.outgoing(m) {
                if t.label == TAU {
                    continue;
                }
                let set = &mut sets[t.label as usize];
                if set.is_empty() {
                    *set = vec![false; nb];
                }
                for &e in &closure[t.dst as usize] {
                    set[e as usize] = true;
                }
            }
        }
        for (l, set) in sets.into_iter().enumerate() {
            weak[q][l] = set.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i as StateId).collect();
        }
    }

    let mut rel = vec![true; na * nb];
    let mut changed = true;
    while changed {
        changed = false;
        for p in 0..na {
            for q in 0..nb {
                if !rel[p * nb + q] {
                    continue;
                }
                let ok = a.outgoing(p as StateId).iter().all(|t| {
                    let candidates: &[StateId] = match map[t.label as usize] {
                        None => &[],
                        Some(TAU) => &closure[q],
                        Some(l) => &weak[q][l as usize],
                    };
                    candidates.iter().any(|&q2| rel[t.dst as usize * nb + q2 as usize])
                });
                if !ok {
                    rel[p * nb + q] = false;
                    changed = true;
                }
            }
        }
    }
    if rel[a.initial() as usize * nb + b.initial() as usize] {
        return Ok(Comparison { holds: true, witness: None });
    }
    let witness = trace_witness(a, b, &map, &closure, &weak);
    Ok(Comparison { holds: false, witness })
}

fn tau_closures(lts: &Lts) -> Vec<Vec<StateId>> {
    let n = lts.n_states();
    let mut seen = vec![u32::MAX; n];
    (0..n)
        .map(|s| {
            let mut out = vec![s as StateId];
            seen[s] = s as u32;
            let mut i = 0;
            while i < out.len() {
                let v = out[i];
                i += 1;
                for t in lts.outgoing(v) {
                    if t.label == TAU && seen[t.dst as usize] != s as u32 {
                        seen[t.dst as usize] = s as u32;
                        out.push(t.dst);
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// Shortest visible trace of `a` that `b` cannot perform, if any.
fn trace_witness(
    a: &Lts,
    b: &Lts,
    map: &[Option<LabelId>],
    closure: &[Vec<StateId>],
    weak: &[Vec<Vec<StateId>>],
) -> Option<Witness> {
    let a_closure = tau_closures(a);
    type Node = (StateId, Vec<StateId>);
    let start: Node = (a.initial(), closure[b.initial() as usize].clone());
    let mut seen: HashMap<Node, usize> = HashMap::new();
    let mut parent: Vec<(usize, LabelId)> = vec![(usize::MAX, TAU)];
    let mut nodes: Vec<Node> = vec![start.clone()];
    seen.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (p, qs) = nodes[i].clone();
        for &pm in &a_closure[p as usize] {
            for t in a.outgoing(pm) {
                if t.label == TAU {
                    continue;
                }
                let mut next: Vec<StateId> = match map[t.label as usize] {
                    None => Vec::new(),
                    Some(l) => qs.iter().flat_map(|&q| weak[q as usize][l as usize].iter().copied()).collect(),
                };
                next.sort_unstable();
                next.dedup();
                if next.is_empty() {
                    let mut trace = vec![a.label(t.label).to_string()];
                    let mut k = i;
                    while parent[k].0 != usize::MAX {
                        trace.push(a.label(parent[k].1).to_string());
                        k = parent[k].0;
                    }
                    trace.reverse();
                    return Some(Witness { trace, side: Side::Left });
                }
                let node = (t.dst, next);
                if !seen.contains_key(&node) && nodes.len() < 1 << 20 {
                    seen.insert(node.clone(), nodes.len());
                    nodes.push(node);
                    parent.push((i, t.label));
                    queue.push_back(nodes.len() - 1);
                }
            }
        }
    }
    None
}

/// Equivalence of the reachable parts modulo `relation`, without witness.
pub fn equivalent(a: &Lts, b: &Lts, relation: Relation) -> bool {
    compare(a, b, relation).holds
}

/// Labels of `lts`, rendered.
pub fn label_texts(lts: &Lts) -> Vec<String> {
    lts.labels().iter().map(Label::to_string).collect()
}
