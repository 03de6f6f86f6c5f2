use std::path::Path;
use std::process::{Command, Output};

fn taskplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taskplan")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = taskplan(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn translate_eventually_gives_two_states() {
    let hoa = ok(&["translate", "--formula", "F a"]);
    assert!(hoa.contains("States: 2"));
    assert!(hoa.contains("Acceptance: 1 Inf(0)"));
}

#[test]
fn translate_round_trips_through_hoa() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("phi4.hoa");
    ok(&["translate", "--fixture", "hw_lab_6", "--out", first.to_str().unwrap()]);
    let again = ok(&["translate", "--hoa", first.to_str().unwrap()]);
    assert_eq!(again, std::fs::read_to_string(&first).unwrap());
}

#[test]
fn translate_rejects_bad_syntax() {
    let o = taskplan(&["translate", "--formula", "F ("]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn toy_plan_matches_oracle_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy");
    let out_s = out.to_str().unwrap();
    let log = ok(&["plan", "--fixture", "toy_2x2", "--out", out_s]);
    assert!(log.lines().any(|l| l.starts_with("t=") && l.contains(" incumbent=")));
    for f in ["plan.json", "poset.json", "poset.dot", "gantt.csv", "prune_report.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let plan = json(&out.join("plan.json"));
    assert_eq!(plan["makespan"].as_f64().unwrap(), 18.0);
    let oracle = ok(&["oracle", "--plan-dir", out_s, "--fixture", "toy_2x2"]);
    assert!(oracle.contains("gap=0.000"), "{oracle}");

    ok(&["simulate", "--plan-dir", out_s, "--fixture", "toy_2x2"]);
    let trace = json(&out.join("trace.json"));
    assert_eq!(trace["makespan"].as_f64().unwrap(), 18.0);
    assert!(out.join("trace_gantt.csv").exists());
}

#[test]
fn seeded_simulation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let plan_dir = dir.path().join("plan");
    ok(&["plan", "--fixture", "toy_collab", "--out", plan_dir.to_str().unwrap()]);
    let mut traces = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("sim{k}"));
        ok(&[
            "simulate",
            "--plan-dir",
            plan_dir.to_str().unwrap(),
            "--fixture",
            "toy_collab",
            "--seed",
            "11",
            "--noise",
            "0.4",
            "--with-failures",
            "--out",
            out.to_str().unwrap(),
        ]);
        traces.push(std::fs::read(out.join("trace.json")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    let trace: serde_json::Value = serde_json::from_slice(&traces[0]).unwrap();
    assert_eq!(trace["replans"].as_array().unwrap().len(), 1);
}

#[test]
fn example_poset_dot_has_expected_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex");
    ok(&["plan", "--fixture", "example3", "--budget-poset", "2", "--budget-bnb", "2", "--out", out.to_str().unwrap()]);
    let dot = std::fs::read_to_string(out.join("poset.dot")).unwrap();
    assert!(dot.contains("w0 -> w1;") && dot.contains("w0 -> w2;"), "{dot}");
    assert!(dot.contains("w1 -> w2 [dir=none"), "{dot}");
}

#[test]
fn prune_and_posets_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let log = ok(&["prune", "--fixture", "hw_lab_6", "--out", out.to_str().unwrap()]);
    assert!(log.contains("decomposable edges removed"));
    let report = json(&out.join("prune_report.json"));
    assert!(report["edges_final"].as_u64().unwrap() <= report["edges_initial"].as_u64().unwrap());
    ok(&["posets", "--fixture", "toy_2x2", "--out", out.to_str().unwrap()]);
    assert!(!json(&out.join("posets.json")).as_array().unwrap().is_empty());
    assert!(out.join("poset_0.dot").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = |f: &str| taskplan(&["plan", "--fixture", "toy_2x2", "--formula", f, "--out", out]).status.code();
    assert_eq!(code("F (sweep_p1 && !sweep_p1)"), Some(2));
    assert_eq!(code("F (sweep_p1 && sweep_p2)"), Some(3));
    let o = taskplan(&["plan", "--fixture", "toy_2x2", "--budget-poset", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
}
