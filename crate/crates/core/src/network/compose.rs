//! Compositional generation: explore sub-networks, hide what no other part
//! of the network can observe, minimize, and compose the results.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{explore, gates_of, ExploreOptions, LtsProcess, Network};
use crate::blocks::{BlockId, Half, Process, Side};
use crate::error::{Error, Result};
use crate::lts::Lts;
use crate::reduce::{minimize, Relation};

/// One step of a composition plan. Members name network components or
/// earlier steps; each is consumed exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanStep {
    pub name: String,
    pub members: Vec<String>,
    /// Gates to hide in addition to the network's hidden gates that are
    /// internal to this step. Every gate listed must be internal.
    pub hide: Vec<String>,
    pub minimize: Option<Relation>,
}

impl PlanStep {
    pub fn new(name: &str, members: &[&str]) -> PlanStep {
        PlanStep {
            name: name.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
            hide: Vec::new(),
            minimize: None,
        }
    }

    pub fn hiding(mut self, gates: &[&str]) -> PlanStep {
        self.hide = gates.iter().map(|g| g.to_string()).collect();
        self
    }

    pub fn minimized(mut self, relation: Relation) -> PlanStep {
        self.minimize = Some(relation);
        self
    }
}

/// Sizes observed while running a plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub name: String,
    pub states: usize,
    pub transitions: usize,
    pub min_states: usize,
    pub min_transitions: usize,
}

#[derive(Clone, Debug)]
pub struct Composition {
    pub lts: Lts,
    pub steps: Vec<StepReport>,
}

/// Runs `plan` over the components of `net`. The last step must cover the
/// whole network; its (possibly minimized) LTS is returned.
pub fn compose_incremental(
    net: &Network,
    plan: &[PlanStep],
    options: &ExploreOptions,
) -> Result<Composition> {
    let mut pool: Vec<(String, Option<Arc<dyn Process>>)> = net
        .components()
        .iter()
        .map(|c| (c.name().to_string(), Some(Arc::clone(c))))
        .collect();
    let mut steps = Vec::new();
    let mut last = None;
    for step in plan {
        if pool.iter().any(|(n, _)| *n == step.name) {
            return Err(Error::Plan(format!("step name `{}` is already in use", step.name)));
        }
        let mut members = Vec::new();
        for m in &step.members {
            let slot = pool
                .iter_mut()
                .find(|(n, _)| n == m)
                .ok_or_else(|| Error::UnknownComponent(m.clone()))?;
            let process = slot
                .1
                .take()
                .ok_or_else(|| Error::Plan(format!("`{m}` is used by more than one step")))?;
            members.push(process);
        }
        let outside: Vec<Arc<dyn Process>> = pool.iter().filter_map(|(_, p)| p.clone()).collect();
        let outside = gates_of(&outside);
        let inside = gates_of(&members);
        let mut hide: BTreeSet<&str> = inside
            .iter()
            .filter(|g| net.is_hidden(g) && !outside.contains(*g))
            .map(String::as_str)
            .collect();
        for g in &step.hide {
            if outside.contains(g) {
                return Err(Error::Plan(format!(
                    "step `{}` hides gate {g}, which components outside the step still use",
                    step.name
                )));
            }
            hide.insert(g);
        }
        let hide: Vec<&str> = hide.into_iter().collect();
        let sub = Network::new(members, net.domain()).hide(&hide);
        let lts = explore(&sub, options)?;
        let (states, transitions) = (lts.n_states(), lts.n_transitions());
        let lts = match step.minimize {
            Some(rel) => minimize(&lts, rel),
            None => lts,
        };
        steps.push(StepReport {
            name: step.name.clone(),
            states,
            transitions,
            min_states: lts.n_states(),
            min_transitions: lts.n_transitions(),
        });
        pool.push((step.name.clone(), Some(Arc::new(LtsProcess::new(&step.name, lts.clone())))));
        last = Some(lts);
    }
    let left: Vec<&str> =
        pool.iter().filter(|(_, p)| p.is_some()).map(|(n, _)| n.as_str()).collect();
    match (last, left.as_slice()) {
        (Some(lts), [only]) if *only == plan.last().unwrap().name => Ok(Composition { lts, steps }),
        (None, _) => Err(Error::Plan("the plan has no steps".into())),
        _ => Err(Error::Plan(format!("the last step must cover the network; unused: {left:?}"))),
    }
}

/// The standard plan for the architecture: the round function, the key
/// path, the control part and the data path are generated and minimized
/// separately, then composed. `env` names an optional environment
/// component, added to the last step.
pub fn des_composition_plan(relation: Relation, env: Option<&str>) -> Vec<PlanStep> {
    let names = |ids: &[BlockId]| ids.iter().map(|b| b.name()).collect::<Vec<_>>();

    let mut cipher = vec![BlockId::E, BlockId::Xor48];
    cipher.extend((1..=8).map(BlockId::Sbox));
    cipher.push(BlockId::P);
    let key = [
        BlockId::Pc1,
        BlockId::ChooseK,
        BlockId::ShiftRegister(Half::C),
        BlockId::ShiftRegister(Half::D),
        BlockId::DupK,
        BlockId::Pc2,
    ];
    let control = [
        BlockId::Counter,
        BlockId::CtrlMuxLr(Side::L),
        BlockId::CtrlMuxLr(Side::R),
        BlockId::CtrlMuxK,
        BlockId::CtrlDmuxK,
        BlockId::CtrlShift,
    ];
    let data = [
        BlockId::Ip,
        BlockId::ChooseL,
        BlockId::ChooseR,
        BlockId::Xor32,
        BlockId::Fp,
    ];
    let step = |name: &str, members: Vec<String>| PlanStep {
        name: name.to_string(),
        members,
        hide: Vec::new(),
        minimize: Some(relation),
    };
    let mut data_members = names(&data);
    data_members.push("cipher".into());
    let mut top = vec!["datapath".to_string(), "keypath".into(), "control".into()];
    if let Some(env) = env {
        top.push(env.to_string());
    }
    vec![
        step("cipher", names(&cipher)),
        step("keypath", names(&key)),
        step("control", names(&control)),
        step("datapath", data_members),
        step("des", top),
    ]
}
