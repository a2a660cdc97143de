use std::process::{Command, Output};

use proptest::prelude::*;

use objev::cli::scenario::{to_json, Suite};
use objev::cli::{builtin, generate_random_scenario, parse_scenario, BUILTIN_NAMES};

fn objev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_objev")).args(args).output().expect("binary runs")
}

fn shipped(name: &str) -> String {
    format!("{}/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn shipped_files_match_builtins() {
    for name in BUILTIN_NAMES {
        let text = std::fs::read_to_string(shipped(name)).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), builtin(name).unwrap(), "{name}");
    }
}

#[test]
fn verify_exit_codes() {
    assert_eq!(objev(&["verify", "cnot2"]).status.code(), Some(0));
    assert_eq!(objev(&["verify", &shipped("cnot3")]).status.code(), Some(0));

    let broken = objev(&["verify", "cnot2-broken"]);
    assert_eq!(broken.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&broken.stderr);
    assert!(stderr.contains("objectivity"), "{stderr}");
    let report: serde_json::Value = serde_json::from_slice(&broken.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let obj = report["suites"].as_array().unwrap().iter().find(|s| s["name"] == "objectivity").unwrap();
    assert_eq!(obj["status"], "fail");
}

#[test]
fn invalid_scenarios_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"object_dim\": [2]\n}").unwrap();
    let out = objev(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3") && stderr.contains("object_dim"), "{stderr}");

    assert_eq!(objev(&["verify", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(objev(&["fuzz", "--object-dim", "1", "--probe-dims", "2"]).status.code(), Some(2));
    assert_eq!(objev(&["show", "nope"]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let a = objev(&["verify", "cnot3", "--seed", "7"]).stdout;
    let b = objev(&["verify", "cnot3", "--seed", "7"]).stdout;
    assert_eq!(a, b);
    let c = objev(&["verify", "cnot3", "--seed", "8"]).stdout;
    assert_ne!(a, c);
    let timed: serde_json::Value = serde_json::from_slice(&objev(&["verify", "cnot2", "--timing"]).stdout).unwrap();
    assert!(timed["wall_time_ms"].as_f64().is_some());
}

#[test]
fn output_flag_and_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let out = objev(&["verify", "qutrit3", "--format", "text", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("multiway") && text.trim_end().ends_with("PASS"), "{text}");
}

#[test]
fn tolerance_scale_can_break_a_passing_scenario() {
    // roundoff residuals exceed tolerances scaled this far down
    let out = objev(&["verify", "cnot2", "--tolerance-scale", "1e-20"]);
    assert_ne!(out.status.code(), Some(0));
    assert_eq!(objev(&["verify", "cnot2", "--tolerance-scale", "0"]).status.code(), Some(2));
}

#[test]
fn fuzz_runs_axioms_on_random_models() {
    let out = objev(&["fuzz", "--object-dim", "2", "--probe-dims", "2", "2", "--count", "4", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 4);
    assert_eq!(report["passed"], true);
}

#[test]
fn show_lists_builtins() {
    let out = objev(&["show", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in BUILTIN_NAMES {
        assert!(text.lines().any(|l| l == name));
    }
}

#[test]
fn sample_with_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = objev(&["sample", "cnot3", "--trials", "500", "--records", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 500);
    assert!(records.iter().all(|r| r["agreed"] == true));
}

fn suite_subset() -> impl Strategy<Value = Vec<Suite>> {
    proptest::sample::subsequence(Suite::ALL.to_vec(), 0..=Suite::ALL.len())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn scenario_round_trip(
        which in 0usize..BUILTIN_NAMES.len(),
        seed in any::<u64>(),
        trials in 0usize..1_000_000,
        w1 in 0.0f64..=1.0,
        phase in -10.0f64..10.0,
        phases in 1usize..32,
        suites in suite_subset(),
    ) {
        let mut f = builtin(BUILTIN_NAMES[which]).unwrap();
        f.seed = seed;
        f.trials = trials;
        f.phases = phases;
        f.suites = suites;
        let fam = f.family.as_mut().unwrap();
        fam.weights = [w1, 1.0 - w1];
        fam.phase = phase;
        f.weight_grid.push([1.0 - w1, w1]);
        let parsed = parse_scenario(&to_json(&f)).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn random_scenario_round_trip(d in 2usize..=3, dims in proptest::collection::vec(2usize..=3, 1..=2), seed in any::<u64>()) {
        let f = generate_random_scenario(d, &dims, seed).unwrap();
        prop_assert_eq!(parse_scenario(&to_json(&f)).unwrap(), f);
    }
}
