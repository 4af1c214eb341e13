use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn asyncdes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asyncdes")).args(args).output().unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_asyncdes"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn minimizing_a_single_state_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("one.aut"), dir.path().join("min.aut"));
    fs::write(&a, "des (0, 0, 1)\n").unwrap();
    for relation in ["strong", "branching"] {
        let o = asyncdes(&["minimize", "--relation", relation, path(&a), "-o", path(&b)]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(fs::read_to_string(&b).unwrap(), "des (0, 0, 1)\n");
    }
}

#[test]
fn run_encrypts_a_known_answer() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let o = with_stdin(
        &["run", "--trace", path(&trace)],
        "CRYPT !1\nKEY !133457799BBCDFF1\nDATA !0123456789ABCDEF\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "OUTPUT !85E813540F0AB405\n");
    let log = fs::read_to_string(&trace).unwrap();
    assert!(log.starts_with("CRYPT !TRUE\n"), "{log}");
    assert_eq!(log.lines().last(), Some("OUTPUT !85E813540F0AB405"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let o = with_stdin(&["run"], "CRYPT !1\nDATA !12345\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(asyncdes(&["check", "--property", "9"]).status.code(), Some(2));
    assert_eq!(asyncdes(&["explore", "--domain", "octal", "-o", "x"]).status.code(), Some(2));
    assert_eq!(asyncdes(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn failing_generation_is_an_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.aut");
    let open = asyncdes(&["explore", "--domain", "concrete", "-o", path(&out)]);
    assert_eq!(open.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&open.stderr).contains("open"));
    let limited = asyncdes(&["explore", "--domain", "abstract", "--max-states", "1000", "-o", path(&out)]);
    assert_eq!(limited.status.code(), Some(3));
    assert_eq!(asyncdes(&["minimize", "--relation", "strong", "/nonexistent.aut", "-o", path(&out)]).status.code(), Some(3));
}

#[test]
fn compare_reports_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.aut"), dir.path().join("b.aut"), dir.path().join("c.aut"));
    fs::write(&a, "des (0, 2, 3)\n(0, \"A\", 1)\n(1, i, 2)\n").unwrap();
    fs::write(&b, "des (0, 1, 2)\n(0, \"A\", 1)\n").unwrap();
    fs::write(&c, "des (0, 1, 2)\n(0, \"B\", 1)\n").unwrap();
    let strong = asyncdes(&["compare", "--relation", "strong", path(&a), path(&b)]);
    assert_eq!(strong.status.code(), Some(1));
    assert!(stdout(&strong).contains("witness: [A, i]"), "{}", stdout(&strong));
    assert_eq!(asyncdes(&["compare", "--relation", "branching", path(&a), path(&b)]).status.code(), Some(0));
    assert_eq!(asyncdes(&["compare", "--relation", "simulation", path(&b), path(&a)]).status.code(), Some(0));
    let sim = asyncdes(&["compare", "--relation", "simulation", path(&c), path(&a)]);
    assert_eq!(sim.status.code(), Some(1));
    assert!(stdout(&sim).contains("witness: [B]"));
}

#[test]
fn compositional_exploration_gives_the_abstract_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("des.aut");
    let o = asyncdes(&["explore", "--domain", "abstract", "--compositional", "--hide", "SUBKEY", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "28 states, 78 transitions\n");
    assert!(fs::read_to_string(&out).unwrap().starts_with("des (0, 78, 28)\n"));
}

#[test]
fn the_abstract_suite_passes() {
    let o = asyncdes(&["check", "--property", "all", "--domain", "abstract", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let verdicts: Vec<&str> = text.lines().filter(|l| l.starts_with("PROPERTY_")).collect();
    assert_eq!(verdicts.len(), 5);
    for k in [1, 2, 3, 4, 7] {
        assert!(text.contains(&format!("PROPERTY_{k}: PASS")), "{text}");
    }
}

#[test]
fn the_concrete_suite_passes() {
    let o = asyncdes(&["check", "--domain", "concrete", "--runs", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PROPERTY_5: PASS"));
    assert!(stdout(&o).contains("5 runs match DES"));
    assert!(stdout(&o).contains("PROPERTY_6: PASS"));
}

const SMALL: &str = "\
build-network abstract
explore compositional reduce jobs 4
hide SUBKEY
minimize branching
write-aut out/des.aut
check P1
check P3
build-network concrete closed
hide-all-but CRYPT DATA KEY OUTPUT
explore reduce
write-aut out/sample.aut
check P6
compare strong builtin abstract-model expect differs
";

#[test]
fn scenario_runs_are_reproducible() {
    let runs: Vec<(String, String, String)> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let file = dir.path().join("small.scn");
            fs::write(&file, SMALL).unwrap();
            let o = asyncdes(&["scenario", path(&file)]);
            assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
            let read = |name: &str| fs::read_to_string(dir.path().join("out").join(name)).unwrap();
            (stdout(&o), read("des.aut"), read("sample.aut"))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].0.contains("minimize branching: 28 states, 78 transitions"));
}

#[test]
fn scenario_failures_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.scn");
    fs::write(&file, "build-network abstract\nexplore compositional\ncompare branching builtin subkey-reference 3\n").unwrap();
    let o = asyncdes(&["scenario", path(&file)]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("DIFFERS"));
    fs::write(&file, "build-network abstract\nminimize strong\n").unwrap();
    let o = asyncdes(&["scenario", path(&file)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn the_shipped_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("paper.scn");
    fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/paper.scn"), &file).unwrap();
    let o = asyncdes(&["scenario", path(&file)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for k in 1..=7 {
        assert!(text.contains(&format!("PROPERTY_{k}: PASS")), "{text}");
    }
    assert!(dir.path().join("out/des_sample_min.aut").exists());
}
