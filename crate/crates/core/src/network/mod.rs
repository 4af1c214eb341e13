//! Networks of processes synchronized by gate-wise rendezvous vectors.
//!
//! Every gate is owned by exactly one synchronization rule: all components
//! that declare the gate must take a step on it together, and their offers
//! must unify slot by slot. A gate declared by a single component is open
//! to the environment; its free slots are enumerated over their sort.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::blocks::{self, gates, make_block, BlockId, Local, Offers, Process, SemanticsOptions, Slot};
use crate::desfunc::{BitDomain, Word};
use crate::error::Result;
use crate::label::Label;
use crate::lts::Lts;

mod compose;
mod explore;

pub use compose::{compose_incremental, des_composition_plan, Composition, PlanStep, StepReport};
pub use explore::{explore, explore_stream, ExploreOptions, Limits, Simulator, Step, StreamSummary};

/// A synchronization vector: the components that must all participate in
/// every rendezvous on `gate`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncRule {
    pub gate: String,
    pub participants: Vec<String>,
    pub hidden: bool,
}

#[derive(Clone)]
pub struct Network {
    components: Vec<Arc<dyn Process>>,
    gate_names: Vec<String>,
    gate_labels: Vec<Arc<str>>,
    participants: Vec<Vec<usize>>,
    local_to_global: Vec<Vec<u16>>,
    hidden: Vec<bool>,
    domain: BitDomain,
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Network")
            .field("components", &self.component_names())
            .field("gates", &self.gate_names)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Network {
    pub fn new(components: Vec<Arc<dyn Process>>, domain: BitDomain) -> Network {
        let mut gate_names: Vec<String> = Vec::new();
        let mut participants: Vec<Vec<usize>> = Vec::new();
        let mut local_to_global = Vec::with_capacity(components.len());
        for (c, comp) in components.iter().enumerate() {
            let mut map = Vec::new();
            for g in comp.gates() {
                let gi = match gate_names.iter().position(|x| x == g) {
                    Some(i) => i,
                    None => {
                        gate_names.push(g.clone());
                        participants.push(Vec::new());
                        gate_names.len() - 1
                    }
                };
                if !participants[gi].contains(&c) {
                    participants[gi].push(c);
                }
                map.push(gi as u16);
            }
            local_to_global.push(map);
        }
        let gate_labels = gate_names.iter().map(|g| Arc::from(g.as_str())).collect();
        let hidden = vec![false; gate_names.len()];
        Network {
            components,
            gate_names,
            gate_labels,
            participants,
            local_to_global,
            hidden,
            domain,
        }
    }

    pub fn components(&self) -> &[Arc<dyn Process>] {
        &self.components
    }

    pub fn component_names(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.name()).collect()
    }

    pub fn component(&self, name: &str) -> Option<&Arc<dyn Process>> {
        self.components.iter().find(|c| c.name() == name)
    }

    pub fn domain(&self) -> BitDomain {
        self.domain
    }

    pub fn gates(&self) -> &[String] {
        &self.gate_names
    }

    pub fn is_hidden(&self, gate: &str) -> bool {
        self.gate_names.iter().position(|g| g == gate).is_some_and(|i| self.hidden[i])
    }

    /// Gates that are not hidden.
    pub fn visible_gates(&self) -> Vec<&str> {
        self.gate_names
            .iter()
            .zip(&self.hidden)
            .filter(|(_, &h)| !h)
            .map(|(g, _)| g.as_str())
            .collect()
    }

    pub fn sync_rules(&self) -> Vec<SyncRule> {
        self.gate_names
            .iter()
            .enumerate()
            .map(|(g, name)| SyncRule {
                gate: name.clone(),
                participants: self.participants[g]
                    .iter()
                    .map(|&c| self.components[c].name().to_string())
                    .collect(),
                hidden: self.hidden[g],
            })
            .collect()
    }

    /// Hides the given gates (unknown names are ignored).
    pub fn hide(mut self, gates: &[&str]) -> Network {
        for (g, name) in self.gate_names.iter().enumerate() {
            if gates.contains(&name.as_str()) {
                self.hidden[g] = true;
            }
        }
        self
    }

    /// Hides every gate except the given ones.
    pub fn hide_all_but(mut self, gates: &[&str]) -> Network {
        for (g, name) in self.gate_names.iter().enumerate() {
            if !gates.contains(&name.as_str()) {
                self.hidden[g] = true;
            }
        }
        self
    }

    pub fn hidden_gates(&self) -> Vec<&str> {
        self.gate_names
            .iter()
            .zip(&self.hidden)
            .filter(|(_, &h)| h)
            .map(|(g, _)| g.as_str())
            .collect()
    }

    pub(crate) fn gate_label(&self, g: usize) -> &Arc<str> {
        &self.gate_labels[g]
    }

    pub(crate) fn participants(&self, g: usize) -> &[usize] {
        &self.participants[g]
    }

    pub(crate) fn global_gate(&self, component: usize, local: u16) -> u16 {
        self.local_to_global[component][local as usize]
    }

    pub(crate) fn hidden_flags(&self) -> &[bool] {
        &self.hidden
    }
}

/// An explicit LTS used as a network component.
#[derive(Debug, Clone)]
pub struct LtsProcess {
    name: String,
    lts: Arc<Lts>,
    gates: Vec<String>,
    /// Local gate of each label, `None` for the internal action.
    label_gate: Vec<Option<u16>>,
}

impl LtsProcess {
    pub fn new(name: &str, lts: Lts) -> LtsProcess {
        let mut gates: Vec<String> = Vec::new();
        let label_gate = lts
            .labels()
            .iter()
            .map(|l| {
                l.gate().map(|g| match gates.iter().position(|x| x == g) {
                    Some(i) => i as u16,
                    None => {
                        gates.push(g.to_string());
                        (gates.len() - 1) as u16
                    }
                })
            })
            .collect();
        LtsProcess { name: name.to_string(), lts: Arc::new(lts), gates, label_gate }
    }

    pub fn lts(&self) -> &Lts {
        &self.lts
    }
}

impl Process for LtsProcess {
    fn name(&self) -> &str {
        &self.name
    }

    fn gates(&self) -> &[String] {
        &self.gates
    }

    fn initial(&self) -> Local {
        Local::new(self.lts.initial(), 0)
    }

    fn offers(&self, state: &Local, out: &mut Offers) {
        for t in self.lts.outgoing(state.pc) {
            match (self.label_gate[t.label as usize], self.lts.label(t.label)) {
                (Some(g), Label::Visible { offers, .. }) => {
                    out.gate(g as usize, t.dst, offers.iter().cloned().map(Slot::Exact))
                }
                _ => out.tau(t.dst),
            }
        }
    }

    fn fire(&self, _state: &Local, tag: u32, _values: &[crate::label::Value]) -> Local {
        Local::new(tag, 0)
    }

    fn state_bound(&self) -> Option<usize> {
        Some(self.lts.n_states())
    }
}

/// The blocks of the architecture, in network order.
pub fn des_components(
    domain: BitDomain,
    options: &SemanticsOptions,
) -> Result<Vec<Arc<dyn Process>>> {
    BlockId::all()
        .into_iter()
        .map(|id| make_block(id, domain, options).map(Arc::from))
        .collect()
}

/// The complete architecture. Internal gates are hidden; the five
/// observable gates stay visible. When `closed`, a sample environment
/// supplying one encryption of a fixed plaintext under a fixed key is added.
pub fn des_network(domain: BitDomain, options: &SemanticsOptions, closed: bool) -> Result<Network> {
    let sample = closed.then(|| {
        blocks::SampleEnvironment::new(
            true,
            domain.word(64, SAMPLE_DATA),
            domain.word(64, SAMPLE_KEY),
        )
    });
    des_network_with(domain, options, sample)
}

/// Plaintext and key of the default closed sample.
pub const SAMPLE_DATA: u64 = 0x0123_4567_89AB_CDEF;
pub const SAMPLE_KEY: u64 = 0x1334_5779_9BBC_DFF1;

pub fn des_network_with(
    domain: BitDomain,
    options: &SemanticsOptions,
    env: Option<blocks::SampleEnvironment>,
) -> Result<Network> {
    let mut components = des_components(domain, options)?;
    if let Some(env) = env {
        components.push(Arc::new(env));
    }
    Ok(Network::new(components, domain).hide_all_but(&gates::OBSERVABLE))
}

/// A closed sample environment for an arbitrary triple.
pub fn sample_environment(encrypt: bool, data: Word, key: Word) -> blocks::SampleEnvironment {
    blocks::SampleEnvironment::new(encrypt, data, key)
}

/// Gates touched by a set of components.
pub(crate) fn gates_of(components: &[Arc<dyn Process>]) -> BTreeSet<String> {
    components.iter().flat_map(|c| c.gates().iter().cloned()).collect()
}

#[cfg(test)]
mod tests;
