mod common;

use asyncdes::checks::*;
use asyncdes::network::{Simulator, SAMPLE_DATA, SAMPLE_KEY};
use asyncdes::{des_apply, minimize, simulated_by, BitDomain, Error, ExploreOptions, Lts, Relation, SemanticsOptions, Word};

fn aut(text: &str) -> Lts {
    Lts::read_aut(text).unwrap()
}

fn replay(lts: &Lts, trace: &[String]) -> Vec<u32> {
    let mut current = vec![lts.initial()];
    for step in trace {
        current = current
            .iter()
            .flat_map(|&s| lts.outgoing(s).iter())
            .filter(|t| lts.label(t.label).to_string() == *step)
            .map(|t| t.dst)
            .collect();
    }
    current
}

#[test]
fn a_lone_state_is_a_deadlock_with_an_empty_witness() {
    let r = check_deadlock(&aut("des (0, 0, 1)\n"), DeadlockMode::Strict);
    assert!(!r.passed);
    assert_eq!(r.witnesses, vec![Vec::<String>::new()]);
    assert!(r.to_string().starts_with("PROPERTY_1: FAIL"));
}

#[test]
fn deadlock_witness_is_a_shortest_path() {
    let lts = aut("des (0, 4, 4)\n(0, \"A\", 1)\n(1, \"B\", 2)\n(0, \"C\", 3)\n(3, \"D\", 0)\n");
    let r = check_deadlock(&lts, DeadlockMode::Strict);
    assert_eq!(r.witnesses[0], vec!["A", "B"]);
    assert_eq!(replay(&lts, &r.witnesses[0]), vec![2]);
}

#[test]
fn terminal_deadlocks_after_output_can_be_allowed() {
    let lts = aut("des (0, 2, 3)\n(0, \"CRYPT\", 1)\n(1, \"OUTPUT\", 2)\n");
    assert!(!check_deadlock(&lts, DeadlockMode::Strict).passed);
    assert!(check_deadlock(&lts, DeadlockMode::TerminalAllowed).passed);
    let early = aut("des (0, 3, 4)\n(0, \"CRYPT\", 1)\n(1, \"OUTPUT\", 2)\n(0, \"KEY\", 3)\n");
    assert!(!check_deadlock(&early, DeadlockMode::TerminalAllowed).passed);
}

const TRIPLET: &str = "(0, \"CRYPT\", 1)\n(1, \"DATA\", 2)\n(2, \"KEY\", 3)\n";

#[test]
fn output_is_inevitable_after_a_triplet() {
    let good = aut(&format!("des (0, 5, 5)\n{TRIPLET}(3, i, 4)\n(4, \"OUTPUT\", 0)\n"));
    assert!(check_inevitable_output(&good).passed);
}

#[test]
fn an_internal_loop_before_output_is_a_lasso() {
    let bad = aut(&format!("des (0, 6, 5)\n{TRIPLET}(3, i, 4)\n(4, i, 4)\n(4, \"OUTPUT\", 0)\n"));
    let r = check_inevitable_output(&bad);
    assert!(!r.passed);
    assert_eq!(r.witnesses[0], vec!["CRYPT", "DATA", "KEY", "i", "i"]);
}

#[test]
fn a_pending_deadlock_fails_inevitability() {
    let bad = aut(&format!("des (0, 4, 5)\n{TRIPLET}(3, i, 4)\n"));
    let r = check_inevitable_output(&bad);
    assert!(!r.passed);
    assert_eq!(r.witnesses[0], vec!["CRYPT", "DATA", "KEY", "i"]);
    // without a complete triplet nothing is pending
    assert!(check_inevitable_output(&aut("des (0, 1, 2)\n(0, \"CRYPT\", 1)\n")).passed);
}

#[test]
fn pipeline_depth_counts_inputs_ahead_of_outputs() {
    let lts = aut("des (0, 4, 3)\n(0, \"DATA\", 1)\n(1, \"DATA\", 2)\n(2, \"OUTPUT\", 1)\n(1, \"OUTPUT\", 0)\n");
    let d = measure_pipeline_depth(&lts, "DATA").unwrap();
    assert_eq!(d.n_max, 2);
    assert_eq!(d.witness, vec!["DATA", "DATA"]);
    assert_eq!(d.states, 3);
}

#[test]
fn inconsistent_counts_are_a_model_error() {
    let lts = aut("des (0, 2, 2)\n(0, \"DATA\", 1)\n(0, i, 1)\n");
    assert!(matches!(measure_pipeline_depth(&lts, "DATA"), Err(Error::Model(_))));
}

#[test]
fn the_reference_automaton_is_minimal() {
    for window in [0, 3, 15] {
        let r = subkey_reference(window);
        let m = minimize(&r, Relation::Branching);
        assert_eq!((m.n_states(), m.n_transitions()), (r.n_states(), r.n_transitions()));
        assert!(check_subkey_schedule(&r).passed);
        assert!(check_subkey_schedule(&r).detail.contains(&format!("up to {window} subkeys")));
    }
    let plain = subkey_reference(0);
    let subkeys = plain.transitions().iter().filter(|t| plain.label(t.label).to_string() == "SUBKEY").count();
    assert_eq!(subkeys, 16);
    assert_eq!(plain.n_states(), 17);
}

#[test]
fn fifteen_subkeys_fail_the_schedule_check() {
    let mut text = String::from("des (0, 16, 16)\n(0, \"CRYPT\", 1)\n");
    for i in 1..15 {
        text.push_str(&format!("({i}, \"SUBKEY\", {})\n", i + 1));
    }
    text.push_str("(15, \"SUBKEY\", 0)\n");
    let r = check_subkey_schedule(&aut(&text));
    assert!(!r.passed);
    assert!(!r.witnesses[0].is_empty());
}

#[test]
fn protocol_lines_are_parsed_strictly() {
    assert_eq!(parse_line(1, "CRYPT !1").unwrap(), Some(Input::Crypt(true)));
    assert_eq!(parse_line(1, "crypt !0").unwrap(), Some(Input::Crypt(false)));
    assert_eq!(
        parse_line(1, "DATA !0123456789abcdef").unwrap(),
        Some(Input::Data(Word::concrete(64, 0x0123_4567_89AB_CDEF)))
    );
    assert_eq!(parse_line(1, "   ").unwrap(), None);
    for (n, bad) in ["DATA !123", "KEY 0123456789ABCDEF", "OUTPUT !0123456789ABCDEF", "CRYPT !2", "DATA !0123456789ABCDEG"]
        .iter()
        .enumerate()
    {
        match parse_line(n + 7, bad) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, n + 7);
                assert!(message.contains("expected"), "{message}");
            }
            other => panic!("{bad}: {other:?}"),
        }
    }
}

#[test]
fn the_prototype_speaks_the_line_protocol() {
    let input = "CRYPT !1\nKEY !133457799BBCDFF1\nDATA !0123456789ABCDEF\n\nCRYPT !0\nDATA !85E813540F0AB405\nKEY !133457799bbcdff1\n";
    let mut out = Vec::new();
    let mut trace = Vec::new();
    let n = run_prototype(&SemanticsOptions::lnt(), input.as_bytes(), &mut out, Some(&mut trace)).unwrap();
    assert_eq!(n, 2);
    assert_eq!(String::from_utf8(out).unwrap(), "OUTPUT !85E813540F0AB405\nOUTPUT !0123456789ABCDEF\n");
    let trace = String::from_utf8(trace).unwrap();
    assert_eq!(trace.lines().filter(|l| l.starts_with("SUBKEY")).count(), 32);
    assert!(trace.lines().any(|l| l == "OUTPUT !85E813540F0AB405"));
}

#[test]
fn the_prototype_reports_bad_lines() {
    let err = run_prototype(&SemanticsOptions::lnt(), "CRYPT !1\nDATA !xyz\n".as_bytes(), Vec::new(), None).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
}

#[test]
fn pipelined_inputs_are_answered_in_order() {
    let mut proto = Prototype::new(&SemanticsOptions::lnt()).unwrap();
    let pairs = [(1u64, 2u64), (3, 4), (5, 6)];
    let mut outputs = Vec::new();
    for &(d, k) in &pairs {
        outputs.extend(proto.offer(Input::Crypt(true)).unwrap());
        outputs.extend(proto.offer(Input::Data(Word::concrete(64, d))).unwrap());
        outputs.extend(proto.offer(Input::Key(Word::concrete(64, k))).unwrap());
    }
    let expected: Vec<Word> =
        pairs.iter().map(|&(d, k)| des_apply(Word::concrete(64, d), Word::concrete(64, k), true)).collect();
    assert_eq!(outputs, expected);
}

#[test]
fn prototype_check_counts_runs() {
    let r = check_prototype(&SemanticsOptions::lnt(), &[(true, 1, 2), (false, 3, 4)]).unwrap();
    assert!(r.passed, "{r}");
    assert!(r.detail.starts_with("2 runs"));
}

#[test]
fn closed_samples_take_one_input_of_each_kind() {
    let eo = ExploreOptions::default();
    let sample = closed_sample(&SemanticsOptions::lnt(), BitDomain::Abstract, (true, 0, 0), &eo).unwrap();
    for gate in ["CRYPT", "DATA", "KEY"] {
        assert_eq!(measure_pipeline_depth(&sample, gate).unwrap().n_max, 1);
    }
}

#[test]
fn the_abstract_model_is_not_included_in_a_sample() {
    let eo = ExploreOptions::default().with_tau_confluence(true);
    let opts = SemanticsOptions::lnt();
    let model = abstract_model(&opts, false, &eo).unwrap().lts;
    let sample = closed_sample(&opts, BitDomain::Concrete, (true, SAMPLE_DATA, SAMPLE_KEY), &eo).unwrap();
    let small = minimize(&sample.strip_offers(), Relation::Branching);
    let big = minimize(&model.strip_offers(), Relation::Branching);
    assert!(simulated_by(&small, &big).unwrap().holds);
    let reverse = simulated_by(&big, &small).unwrap();
    assert!(!reverse.holds);
    assert!(!reverse.witness.unwrap().trace.is_empty());
    let expected = des_apply(Word::concrete(64, SAMPLE_DATA), Word::concrete(64, SAMPLE_KEY), true);
    assert!(check_closed_sample(&sample, expected, &model).unwrap().passed);
    let wrong = check_closed_sample(&sample, Word::concrete(64, 0), &model).unwrap();
    assert!(!wrong.passed);
    assert_eq!(wrong.witnesses[0].last().unwrap(), "OUTPUT !85E813540F0AB405");
}

#[test]
fn simulator_replays_a_witness_on_the_network() {
    let net = asyncdes::des_network(BitDomain::Abstract, &SemanticsOptions::lnt(), false).unwrap().hide(&["SUBKEY"]);
    let eo = ExploreOptions::default().with_tau_confluence(true);
    let model = abstract_model(&SemanticsOptions::lnt(), false, &eo).unwrap().lts;
    let depth = measure_pipeline_depth(&model, "KEY").unwrap();
    // depth-first search over (state, position), preferring the next visible step
    let mut sim = Simulator::new(&net);
    let witness = &depth.witness;
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![(sim.initial(), 0usize)];
    let mut found = false;
    while let Some((state, pos)) = stack.pop() {
        if pos == witness.len() {
            found = true;
            break;
        }
        if !seen.insert((state.clone(), pos)) || seen.len() > 1_000_000 {
            continue;
        }
        let steps = sim.successors(&state).unwrap();
        for s in steps.iter().filter(|s| s.label.is_tau()) {
            stack.push((s.target.clone(), pos));
        }
        for s in steps.iter().filter(|s| s.label.to_string() == witness[pos]) {
            stack.push((s.target.clone(), pos + 1));
        }
    }
    assert!(found, "network refuses {witness:?}");
}
