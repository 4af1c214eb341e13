use std::sync::Arc;

use super::*;
use crate::error::Error;
use crate::reduce::{compare, minimize, Relation};

fn toy(name: &str, aut: &str) -> Arc<dyn Process> {
    Arc::new(LtsProcess::new(name, Lts::read_aut(aut).unwrap()))
}

fn handshake() -> Network {
    let a = toy("A", "des (0, 2, 2)\n(0, \"GO\", 1)\n(1, \"A\", 0)\n");
    let b = toy("B", "des (0, 2, 2)\n(0, \"GO\", 1)\n(1, \"B\", 0)\n");
    Network::new(vec![a, b], BitDomain::Abstract)
}

fn cipher(options: &SemanticsOptions) -> Network {
    let mut ids = vec![BlockId::E, BlockId::Xor48];
    ids.extend((1..=8).map(BlockId::Sbox));
    ids.push(BlockId::P);
    let components = ids
        .into_iter()
        .map(|id| Arc::from(make_block(id, BitDomain::Abstract, options).unwrap()))
        .collect();
    Network::new(components, BitDomain::Abstract)
}

#[test]
fn handshake_interleaves_after_the_rendezvous() {
    let net = handshake();
    let rules = net.sync_rules();
    let go = rules.iter().find(|r| r.gate == "GO").unwrap();
    assert_eq!(go.participants, vec!["A", "B"]);
    assert!(rules.iter().filter(|r| r.gate != "GO").all(|r| r.participants.len() == 1));
    let lts = explore(&net, &ExploreOptions::default()).unwrap();
    assert_eq!((lts.n_states(), lts.n_transitions()), (4, 5));
    assert_eq!(
        lts.to_aut(),
        "des (0, 5, 4)\n(0, \"GO\", 1)\n(1, \"A\", 2)\n(1, \"B\", 3)\n(2, \"B\", 0)\n(3, \"A\", 0)\n"
    );
}

#[test]
fn hidden_rendezvous_is_internal() {
    let net = handshake().hide(&["GO"]);
    assert_eq!(net.hidden_gates(), vec!["GO"]);
    assert_eq!(net.visible_gates(), vec!["A", "B"]);
    let lts = explore(&net, &ExploreOptions::default()).unwrap();
    assert_eq!(lts.label(lts.outgoing(0)[0].label).to_string(), "i");
    let only_a = handshake().hide_all_but(&["A"]);
    assert_eq!(only_a.visible_gates(), vec!["A"]);
}

#[test]
fn numbering_does_not_depend_on_threads() {
    let net = cipher(&SemanticsOptions::lnt());
    let one = explore(&net, &ExploreOptions::default()).unwrap();
    let eight = explore(&net, &ExploreOptions::default().with_jobs(8)).unwrap();
    assert!(one.n_states() > 20_000);
    assert_eq!(one.to_aut(), eight.to_aut());

    let mut streamed = Vec::new();
    explore_stream(&net, &ExploreOptions::default().with_jobs(8), |s, l, d| streamed.push((s, l, d))).unwrap();
    let mut again = Vec::new();
    explore_stream(&net, &ExploreOptions::default(), |s, l, d| again.push((s, l, d))).unwrap();
    assert_eq!(streamed, again);
}

#[test]
fn limits_stop_exploration() {
    let net = cipher(&SemanticsOptions::lnt());
    match explore(&net, &ExploreOptions::default().with_max_states(100)) {
        Err(Error::LimitExceeded { states, .. }) => assert!(states > 100),
        other => panic!("expected a limit error, got {other:?}"),
    }
}

#[test]
fn wide_open_gates_are_rejected() {
    let ip: Arc<dyn Process> =
        Arc::from(make_block(BlockId::Ip, BitDomain::Concrete, &SemanticsOptions::lnt()).unwrap());
    let err = explore(&Network::new(vec![ip], BitDomain::Concrete), &ExploreOptions::default()).unwrap_err();
    assert!(matches!(err, Error::OpenGate { ref gate } if gate == gates::DATA), "{err}");
}

#[test]
fn confluence_reduction_preserves_branching_bisimilarity() {
    for options in [SemanticsOptions::lnt(), SemanticsOptions::lotos()] {
        let net = cipher(&options).hide(&[gates::E_OUT, &gates::sbox_in(1), &gates::sbox_out(8)]);
        let full = explore(&net, &ExploreOptions::default()).unwrap();
        let reduced = explore(&net, &ExploreOptions::default().with_tau_confluence(true)).unwrap();
        assert!(reduced.n_states() < full.n_states());
        assert!(compare(&full, &reduced, Relation::Branching).holds);
        let (a, b) = (minimize(&full, Relation::Branching), minimize(&reduced, Relation::Branching));
        assert_eq!((a.n_states(), a.n_transitions()), (b.n_states(), b.n_transitions()));
    }
}

#[test]
fn confluence_reduction_refuses_to_ignore_a_component() {
    let spin = toy("SPIN", "des (0, 2, 2)\n(0, i, 1)\n(1, i, 0)\n");
    let work = toy("WORK", "des (0, 1, 2)\n(0, \"B\", 1)\n");
    let net = Network::new(vec![spin, work], BitDomain::Abstract);
    assert!(explore(&net, &ExploreOptions::default()).is_ok());
    let err = explore(&net, &ExploreOptions::default().with_tau_confluence(true)).unwrap_err();
    assert!(matches!(err, Error::Model(_)), "{err}");
}

#[test]
fn plans_are_validated() {
    let net = handshake();
    let opts = ExploreOptions::default();
    let err = compose_incremental(&net, &[PlanStep::new("x", &["A", "C"])], &opts).unwrap_err();
    assert!(matches!(err, Error::UnknownComponent(ref c) if c == "C"));
    let err = compose_incremental(&net, &[PlanStep::new("x", &["A"])], &opts).unwrap_err();
    assert!(matches!(err, Error::Plan(_)));
    let err =
        compose_incremental(&net, &[PlanStep::new("x", &["A"]).hiding(&["GO"])], &opts).unwrap_err();
    assert!(matches!(err, Error::Plan(_)));
    let plan = [PlanStep::new("x", &["A"]), PlanStep::new("y", &["x", "B"]).hiding(&["GO"])];
    let done = compose_incremental(&net, &plan, &opts).unwrap();
    assert_eq!(done.steps.len(), 2);
    assert_eq!(done.lts.n_states(), 4);
    let minimized = [PlanStep::new("all", &["A", "B"]).hiding(&["GO"]).minimized(Relation::Branching)];
    let done = compose_incremental(&net, &minimized, &opts).unwrap();
    assert_eq!(done.steps[0].states, 4);
    assert_eq!(done.lts.n_states(), 3);
}

#[test]
fn the_architecture_has_twenty_eight_components() {
    let net = des_network(BitDomain::Abstract, &SemanticsOptions::lnt(), false).unwrap();
    assert_eq!(net.components().len(), 28);
    assert_eq!(net.visible_gates().len(), gates::OBSERVABLE.len());
    let closed = des_network(BitDomain::Abstract, &SemanticsOptions::lnt(), true).unwrap();
    assert_eq!(closed.components().len(), 29);
    for rule in closed.sync_rules() {
        assert!(rule.participants.len() >= 2, "gate {} is open in the closed network", rule.gate);
    }
}
