//! Breadth-first generation of the global state space of a network.
//!
//! Global states are vectors of local-state indices packed into a byte
//! arena and interned in an open-addressing table. States are numbered in
//! discovery order. Successors are computed in parallel for a window of
//! states and merged sequentially in state order, so the numbering does not
//! depend on the number of worker threads.

use std::collections::HashMap;
use std::hash::BuildHasher;

use hashbrown::{DefaultHashBuilder, HashTable};
use rayon::prelude::*;

use super::Network;
use crate::blocks::{Local, Offers, Slot};
use crate::error::{Error, Result};
use crate::label::{Label, Value};
use crate::lts::{LabelId, Lts, StateId, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_transitions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: u32::MAX as usize - 1, max_transitions: usize::MAX }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub limits: Limits,
    /// Worker threads used to compute successors.
    pub jobs: usize,
    /// Expand a state through a single internal step when that step is
    /// confluent with every other transition of the state. Preserves
    /// branching bisimilarity; exploration fails if an internal cycle is
    /// made only of such states.
    pub tau_confluence: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { limits: Limits::default(), jobs: 1, tau_confluence: false }
    }
}

impl ExploreOptions {
    pub fn with_max_states(mut self, max_states: usize) -> Self {
        self.limits.max_states = max_states;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_tau_confluence(mut self, on: bool) -> Self {
        self.tau_confluence = on;
        self
    }
}

/// Sizes reported by [`explore_stream`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamSummary {
    pub states: usize,
    pub transitions: usize,
    /// Labels in first-use order; label ids passed to the sink index this.
    pub labels: Vec<Label>,
    /// States expanded through a single confluent internal step.
    pub reduced: usize,
}

/// Generates the reachable LTS of `net`, rooted at state 0.
pub fn explore(net: &Network, options: &ExploreOptions) -> Result<Lts> {
    let mut transitions = Vec::new();
    let summary = explore_stream(net, options, |src, label, dst| {
        transitions.push(Transition::new(src, label, dst))
    })?;
    Ok(Lts::new(summary.states, 0, summary.labels, transitions))
}

/// Generates the reachable state space, handing each transition to `sink`
/// as `(source, label, target)` instead of storing it.
pub fn explore_stream(
    net: &Network,
    options: &ExploreOptions,
    mut sink: impl FnMut(StateId, LabelId, StateId),
) -> Result<StreamSummary> {
    let mut explorer = Explorer::new(net, options.tau_confluence);
    let mut reduced_next: Vec<StateId> = Vec::new();
    let mut n_reduced = 0usize;
    let pool = if options.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(options.jobs)
                .build()
                .map_err(|e| Error::Model(format!("cannot start worker threads: {e}")))?,
        )
    } else {
        None
    };
    let initial: Vec<Local> = net.components().iter().map(|c| c.initial()).collect();
    let mut packed = vec![0u8; explorer.layout.stride];
    for (c, local) in initial.iter().enumerate() {
        let idx = explorer.tables[c].intern(*local, net, c)?;
        explorer.layout.write(&mut packed, c, idx);
    }
    explorer.store.insert(&packed);

    let mut n_transitions = 0usize;
    let mut head = 0usize;
    while head < explorer.store.len() {
        let end = (head + WINDOW).min(explorer.store.len());
        let batches = explorer.expand_window(head, end, pool.as_ref())?;
        for batch in batches {
            let mut reduced = batch.reduced.iter().peekable();
            let mut k = 0usize;
            for (i, &count) in batch.counts.iter().enumerate() {
                let src = (batch.first + i) as StateId;
                packed.copy_from_slice(explorer.store.get(src));
                let parent = packed.clone();
                let is_reduced = reduced.next_if(|&&r| r as usize == i).is_some();
                for _ in 0..count {
                    let succ = &batch.succs[k];
                    k += 1;
                    packed.copy_from_slice(&parent);
                    for &(c, local) in &batch.changes[succ.changes.0 as usize..succ.changes.1 as usize] {
                        let c = c as usize;
                        let idx = explorer.tables[c].intern(local, net, c)?;
                        explorer.layout.write(&mut packed, c, idx);
                    }
                    let dst = explorer.store.insert(&packed);
                    let label = match succ.gate {
                        None => 0,
                        Some(g) => {
                            let values = &batch.values[succ.values.0 as usize..succ.values.1 as usize];
                            explorer.labels.intern(net, g, values)
                        }
                    };
                    sink(src, label, dst);
                    if is_reduced {
                        if reduced_next.len() <= src as usize {
                            reduced_next.resize(src as usize + 1, NONE);
                        }
                        reduced_next[src as usize] = dst;
                        n_reduced += 1;
                    }
                    n_transitions += 1;
                    if explorer.store.len() > options.limits.max_states
                        || n_transitions > options.limits.max_transitions
                    {
                        return Err(Error::LimitExceeded {
                            states: explorer.store.len(),
                            transitions: n_transitions,
                        });
                    }
                }
            }
        }
        head = end;
    }
    if let Some(s) = reduced_cycle(&reduced_next) {
        return Err(Error::Model(format!(
            "confluence reduction closed an internal cycle through state {s}"
        )));
    }
    Ok(StreamSummary {
        states: explorer.store.len(),
        transitions: n_transitions,
        labels: explorer.labels.table,
        reduced: n_reduced,
    })
}

const NONE: StateId = StateId::MAX;

/// A state on a cycle of the functional graph `next`, if any.
fn reduced_cycle(next: &[StateId]) -> Option<StateId> {
    // 0 unvisited, 1 on the current path, 2 done
    let mut mark = vec![0u8; next.len()];
    let mut path = Vec::new();
    for start in 0..next.len() {
        let mut s = start;
        while s < next.len() && next[s] != NONE && mark[s] == 0 {
            mark[s] = 1;
            path.push(s);
            s = next[s] as usize;
        }
        if s < next.len() && mark[s] == 1 {
            return Some(s as StateId);
        }
        for p in path.drain(..) {
            mark[p] = 2;
        }
    }
    None
}

const WINDOW: usize = 1 << 15;
const CHUNK: usize = 512;
/// Largest number of values enumerated for a slot nobody fixes.
const ENUM_LIMIT: u64 = 1 << 16;

struct Layout {
    offsets: Vec<usize>,
    widths: Vec<usize>,
    stride: usize,
}

impl Layout {
    fn new(net: &Network) -> Layout {
        let mut offsets = Vec::new();
        let mut widths = Vec::new();
        let mut stride = 0;
        for c in net.components() {
            let w = match c.state_bound() {
                Some(n) if n <= 1 << 8 => 1,
                Some(n) if n <= 1 << 16 => 2,
                Some(_) => 4,
                None => 2,
            };
            offsets.push(stride);
            widths.push(w);
            stride += w;
        }
        Layout { offsets, widths, stride }
    }

    fn read(&self, packed: &[u8], c: usize) -> u32 {
        let o = self.offsets[c];
        match self.widths[c] {
            1 => u32::from(packed[o]),
            2 => u32::from(u16::from_le_bytes([packed[o], packed[o + 1]])),
            _ => u32::from_le_bytes(packed[o..o + 4].try_into().unwrap()),
        }
    }

    fn write(&self, packed: &mut [u8], c: usize, idx: u32) {
        let o = self.offsets[c];
        match self.widths[c] {
            1 => packed[o] = idx as u8,
            2 => packed[o..o + 2].copy_from_slice(&(idx as u16).to_le_bytes()),
            _ => packed[o..o + 4].copy_from_slice(&idx.to_le_bytes()),
        }
    }

    fn capacity(&self, c: usize) -> usize {
        match self.widths[c] {
            1 => 1 << 8,
            2 => 1 << 16,
            _ => u32::MAX as usize,
        }
    }
}

struct LocalTable {
    states: Vec<Local>,
    index: HashMap<Local, u32>,
    capacity: usize,
}

impl LocalTable {
    fn intern(&mut self, local: Local, net: &Network, c: usize) -> Result<u32> {
        if let Some(&i) = self.index.get(&local) {
            return Ok(i);
        }
        if self.states.len() >= self.capacity {
            return Err(Error::LocalStateOverflow {
                component: net.components()[c].name().to_string(),
                limit: self.capacity,
            });
        }
        let i = self.states.len() as u32;
        self.states.push(local);
        self.index.insert(local, i);
        Ok(i)
    }
}

struct StateStore {
    stride: usize,
    bytes: Vec<u8>,
    table: HashTable<u32>,
    hasher: DefaultHashBuilder,
}

impl StateStore {
    fn len(&self) -> usize {
        self.table.len()
    }

    fn get(&self, s: StateId) -> &[u8] {
        let o = s as usize * self.stride;
        &self.bytes[o..o + self.stride]
    }

    fn insert(&mut self, packed: &[u8]) -> StateId {
        let StateStore { stride, bytes, table, hasher } = self;
        let stride = *stride;
        let slice = |i: u32| &bytes[i as usize * stride..(i as usize + 1) * stride];
        let hash = hasher.hash_one(packed);
        if let Some(&i) = table.find(hash, |&i| slice(i) == packed) {
            return i;
        }
        let n = table.len() as u32;
        table.insert_unique(hash, n, |&i| hasher.hash_one(slice(i)));
        bytes.extend_from_slice(packed);
        n
    }
}

struct LabelTable {
    table: Vec<Label>,
    index: HashMap<(u16, Vec<Value>), LabelId>,
}

impl LabelTable {
    fn intern(&mut self, net: &Network, gate: u16, values: &[Value]) -> LabelId {
        if let Some(&id) = self.index.get(&(gate, values.to_vec())) {
            return id;
        }
        let id = self.table.len() as LabelId;
        self.table.push(Label::Visible {
            gate: net.gate_label(gate as usize).clone(),
            offers: values.to_vec(),
        });
        self.index.insert((gate, values.to_vec()), id);
        id
    }
}

struct Succ {
    /// `None` for an internal step (including synchronizations on hidden gates).
    gate: Option<u16>,
    values: (u32, u32),
    changes: (u32, u32),
}

/// Successors of a run of consecutive states.
#[derive(Default)]
struct Batch {
    first: usize,
    counts: Vec<u32>,
    succs: Vec<Succ>,
    changes: Vec<(u16, Local)>,
    values: Vec<Value>,
    /// Offsets (within the batch) of states expanded with a single
    /// confluent internal step.
    reduced: Vec<u32>,
}

impl Batch {
    fn key(&self, i: usize) -> LabelKey {
        let s = &self.succs[i];
        (s.gate, self.values[s.values.0 as usize..s.values.1 as usize].to_vec())
    }

    fn apply(&self, i: usize, locals: &[Local]) -> Vec<Local> {
        let s = &self.succs[i];
        let mut next = locals.to_vec();
        for &(c, l) in &self.changes[s.changes.0 as usize..s.changes.1 as usize] {
            next[c as usize] = l;
        }
        next
    }

    /// Drops every successor appended since `from` except the one at `from + keep`.
    fn keep_only(&mut self, from: usize, keep: usize) {
        let kept = self.succs.swap_remove(from + keep);
        self.succs.truncate(from);
        self.succs.push(kept);
    }
}

#[derive(Default)]
struct Scratch {
    locals: Vec<Local>,
    offers: Vec<Offers>,
    by_gate: Vec<Vec<(u16, u16)>>,
    touched: Vec<u16>,
    choice: Vec<usize>,
    candidates: Vec<Vec<Value>>,
    tuple: Vec<Value>,
}

struct Explorer<'n> {
    net: &'n Network,
    stepper: Stepper<'n>,
    reduce: bool,
    layout: Layout,
    tables: Vec<LocalTable>,
    store: StateStore,
    labels: LabelTable,
}

impl<'n> Explorer<'n> {
    fn new(net: &'n Network, reduce: bool) -> Explorer<'n> {
        let layout = Layout::new(net);
        let tables = (0..net.components().len())
            .map(|c| LocalTable {
                states: Vec::new(),
                index: HashMap::new(),
                capacity: layout.capacity(c),
            })
            .collect();
        let store = StateStore {
            stride: layout.stride,
            bytes: Vec::new(),
            table: HashTable::new(),
            hasher: DefaultHashBuilder::default(),
        };
        let labels = LabelTable { table: vec![Label::Tau], index: HashMap::new() };
        Explorer { net, stepper: Stepper { net }, reduce, layout, tables, store, labels }
    }

    fn expand_window(
        &self,
        start: usize,
        end: usize,
        pool: Option<&rayon::ThreadPool>,
    ) -> Result<Vec<Batch>> {
        let chunks: Vec<(usize, usize)> =
            (start..end).step_by(CHUNK).map(|a| (a, (a + CHUNK).min(end))).collect();
        match pool {
            None => {
                let mut scratch = Scratch::default();
                chunks.iter().map(|&(a, b)| self.expand_chunk(a, b, &mut scratch)).collect()
            }
            Some(pool) => pool.install(|| {
                chunks
                    .par_iter()
                    .map_init(Scratch::default, |scratch, &(a, b)| self.expand_chunk(a, b, scratch))
                    .collect()
            }),
        }
    }

    fn expand_chunk(&self, a: usize, b: usize, scratch: &mut Scratch) -> Result<Batch> {
        let mut batch = Batch { first: a, ..Batch::default() };
        let mut locals = Vec::with_capacity(self.net.components().len());
        for s in a..b {
            let packed = self.store.get(s as StateId);
            locals.clear();
            for c in 0..self.net.components().len() {
                locals.push(self.tables[c].states[self.layout.read(packed, c) as usize]);
            }
            let before = batch.succs.len();
            self.stepper.successors(&locals, scratch, &mut batch)?;
            if self.reduce && batch.succs.len() - before > 1 {
                if let Some(t) = self.stepper.confluent_tau(&locals, &batch, before, scratch)? {
                    batch.keep_only(before, t);
                    batch.reduced.push((batch.counts.len()) as u32);
                }
            }
            batch.counts.push((batch.succs.len() - before) as u32);
        }
        Ok(batch)
    }
}

/// One global transition, as computed by [`Simulator::successors`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: Label,
    pub target: Vec<Local>,
}

/// Step-by-step access to the transition relation of a network, without
/// storing any state space.
pub struct Simulator<'n> {
    stepper: Stepper<'n>,
    scratch: Scratch,
}

impl<'n> Simulator<'n> {
    pub fn new(net: &'n Network) -> Simulator<'n> {
        Simulator { stepper: Stepper { net }, scratch: Scratch::default() }
    }

    pub fn initial(&self) -> Vec<Local> {
        self.stepper.net.components().iter().map(|c| c.initial()).collect()
    }

    /// Transitions enabled in `state`: internal steps in component order,
    /// then rendezvous in gate order.
    pub fn successors(&mut self, state: &[Local]) -> Result<Vec<Step>> {
        let net = self.stepper.net;
        Ok(self
            .stepper
            .full_successors(state, &mut self.scratch)?
            .into_iter()
            .map(|((gate, values), target)| Step {
                label: match gate {
                    None => Label::Tau,
                    Some(g) => Label::Visible { gate: net.gate_label(g as usize).clone(), offers: values },
                },
                target,
            })
            .collect())
    }
}

/// Label of a successor, for comparisons: gate (`None` for internal) and values.
type LabelKey = (Option<u16>, Vec<Value>);

/// Computes the global transitions enabled in a vector of local states.
struct Stepper<'n> {
    net: &'n Network,
}

impl Stepper<'_> {
    /// Appends the successors of `locals` to `out`: internal steps in
    /// component order, then rendezvous in gate order.
    fn successors(&self, locals: &[Local], sc: &mut Scratch, out: &mut Batch) -> Result<()> {
        let net = self.net;
        let comps = net.components();
        sc.locals.clear();
        sc.locals.extend_from_slice(locals);
        if sc.offers.len() < comps.len() {
            sc.offers.resize_with(comps.len(), Offers::default);
        }
        if sc.by_gate.len() < net.gates().len() {
            sc.by_gate.resize_with(net.gates().len(), Vec::new);
        }
        for &g in &sc.touched {
            sc.by_gate[g as usize].clear();
        }
        sc.touched.clear();

        for (c, comp) in comps.iter().enumerate() {
            let offers = &mut sc.offers[c];
            offers.clear();
            comp.offers(&sc.locals[c], offers);
            for i in 0..offers.len() {
                let head = offers.head(i);
                match head.gate {
                    None => {
                        let next = comp.fire(&sc.locals[c], head.tag, &[]);
                        let at = out.changes.len() as u32;
                        out.changes.push((c as u16, next));
                        out.succs.push(Succ { gate: None, values: (0, 0), changes: (at, at + 1) });
                    }
                    Some(local) => {
                        let g = net.global_gate(c, local);
                        let list = &mut sc.by_gate[g as usize];
                        if list.is_empty() {
                            sc.touched.push(g);
                        }
                        list.push((c as u16, i as u16));
                    }
                }
            }
        }

        sc.touched.sort_unstable();
        let touched = std::mem::take(&mut sc.touched);
        let mut result = Ok(());
        for &g in &touched {
            result = self.synchronize(g, sc, out);
            if result.is_err() {
                break;
            }
        }
        sc.touched = touched;
        result
    }

    /// Successors of `locals` as complete local-state vectors.
    fn full_successors(&self, locals: &[Local], sc: &mut Scratch) -> Result<Vec<(LabelKey, Vec<Local>)>> {
        let mut batch = Batch::default();
        self.successors(locals, sc, &mut batch)?;
        Ok((0..batch.succs.len()).map(|i| (batch.key(i), batch.apply(i, locals))).collect())
    }

    /// Looks for the first internal successor among `batch.succs[from..]`
    /// that closes a diamond with every other successor: for each other
    /// transition `s -a-> s2`, the internal target `s1` has `s1 -a-> s3`
    /// and `s2` has an internal step to the same `s3`. Returns its offset.
    fn confluent_tau(
        &self,
        locals: &[Local],
        batch: &Batch,
        from: usize,
        sc: &mut Scratch,
    ) -> Result<Option<usize>> {
        let n = batch.succs.len() - from;
        let Some(t) = (0..n).find(|&i| batch.succs[from + i].gate.is_none()) else {
            return Ok(None);
        };
        let s1 = batch.apply(from + t, locals);
        let after_tau = self.full_successors(&s1, sc)?;
        for i in (0..n).filter(|&i| i != t) {
            let key = batch.key(from + i);
            let s2 = batch.apply(from + i, locals);
            if s2 == s1 {
                continue;
            }
            let closing = self.full_successors(&s2, sc)?;
            let ok = after_tau.iter().any(|(k, s3)| {
                *k == key && closing.iter().any(|(k2, s3b)| k2.0.is_none() && s3b == s3)
            });
            if !ok {
                return Ok(None);
            }
        }
        Ok(Some(t))
    }

    /// All rendezvous on gate `g` in the current state.
    fn synchronize(&self, g: u16, sc: &mut Scratch, out: &mut Batch) -> Result<()> {
        let net = self.net;
        let parts = net.participants(g as usize);
        let list = &sc.by_gate[g as usize];
        // Offers of each participant, as ranges into `list` (sorted by component).
        let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(parts.len());
        let mut pos = 0;
        for &p in parts {
            let start = pos;
            while pos < list.len() && list[pos].0 as usize == p {
                pos += 1;
            }
            if pos == start {
                return Ok(());
            }
            ranges.push((start, pos));
        }
        let hidden = net.hidden_flags()[g as usize];
        sc.choice.clear();
        sc.choice.extend(ranges.iter().map(|r| r.0));
        let mut candidates = std::mem::take(&mut sc.candidates);
        let mut tuple = std::mem::take(&mut sc.tuple);
        let result = loop {
            if let Err(e) = self.unify(g, hidden, parts, sc, &mut candidates, &mut tuple, out) {
                break Err(e);
            }
            // Advance the odometer over offer combinations.
            let mut k = 0;
            while k < ranges.len() {
                sc.choice[k] += 1;
                if sc.choice[k] < ranges[k].1 {
                    break;
                }
                sc.choice[k] = ranges[k].0;
                k += 1;
            }
            if k == ranges.len() {
                break Ok(());
            }
        };
        sc.candidates = candidates;
        sc.tuple = tuple;
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn unify(
        &self,
        g: u16,
        hidden: bool,
        parts: &[usize],
        sc: &Scratch,
        candidates: &mut Vec<Vec<Value>>,
        tuple: &mut Vec<Value>,
        out: &mut Batch,
    ) -> Result<()> {
        let list = &sc.by_gate[g as usize];
        let offer = |k: usize| {
            let (c, i) = list[sc.choice[k]];
            sc.offers[c as usize].slots(i as usize)
        };
        let arity = offer(0).len();
        if (1..parts.len()).any(|k| offer(k).len() != arity) {
            return Ok(());
        }
        candidates.resize_with(arity, Vec::new);
        for (pos, cand) in candidates.iter_mut().enumerate() {
            let mut exact: Option<&Value> = None;
            let mut sort = None;
            for k in 0..parts.len() {
                match &offer(k)[pos] {
                    Slot::Exact(v) => match exact {
                        Some(e) if e != v => return Ok(()),
                        _ => exact = Some(v),
                    },
                    Slot::Any(s) => sort = Some(*s),
                }
            }
            cand.clear();
            match (exact, sort) {
                (Some(v), _) => cand.push(v.clone()),
                (None, Some(s)) => match s.enumerate(ENUM_LIMIT) {
                    Some(values) => cand.extend(values),
                    None => {
                        return Err(Error::OpenGate {
                            gate: self.net.gates()[g as usize].clone(),
                        })
                    }
                },
                (None, None) => unreachable!("slot without offer"),
            }
        }

        let mut digits = vec![0usize; arity];
        loop {
            tuple.clear();
            tuple.extend((0..arity).map(|p| candidates[p][digits[p]].clone()));
            let vstart = out.values.len() as u32;
            if !hidden {
                out.values.extend(tuple.iter().cloned());
            }
            let cstart = out.changes.len() as u32;
            for k in 0..parts.len() {
                let (c, i) = list[sc.choice[k]];
                let head = sc.offers[c as usize].head(i as usize);
                let comp = &self.net.components()[c as usize];
                let next = comp.fire(&sc.locals[c as usize], head.tag, tuple);
                out.changes.push((c, next));
            }
            out.succs.push(Succ {
                gate: (!hidden).then_some(g),
                values: (vstart, out.values.len() as u32),
                changes: (cstart, out.changes.len() as u32),
            });
            let mut p = 0;
            loop {
                if p == arity {
                    return Ok(());
                }
                digits[p] += 1;
                if digits[p] < candidates[p].len() {
                    break;
                }
                digits[p] = 0;
                p += 1;
            }
        }
    }
}
