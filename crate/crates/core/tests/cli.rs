use std::path::PathBuf;
use std::process::{Command, Output};

fn tcpn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcpn"))
        .args(args)
        .env_remove("TCPN_STEP_LIMIT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn json_output_matches_golden_files() {
    for (policy, golden) in [
        ("hrrn", include_str!("golden/table_hrrn.json")),
        ("FCFS", include_str!("golden/table_fcfs.json")),
    ] {
        let out = tcpn(&[
            "run",
            "--policy",
            policy,
            "--workload",
            "paper-table1",
            "--format",
            "json",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out), golden, "policy {policy}");
    }
}

#[test]
fn hrrn_json_reproduces_marking_fields() {
    let out = tcpn(&[
        "run",
        "--policy",
        "hrrn",
        "--workload",
        "paper-table1",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["makespan"], 19);
    let rows: Vec<(i64, i64, i64, i64, i64, i64, i64)> = v["processes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            let f = |k: &str| p[k].as_i64().unwrap();
            (
                f("pi"),
                f("it"),
                f("st"),
                f("wt"),
                f("es"),
                p["pr"][0].as_i64().unwrap(),
                p["pr"][1].as_i64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        rows,
        vec![
            (6, 1, 3, 0, 1, 100, 0),
            (4, 5, 2, 0, 5, 100, 0),
            (1, 6, 4, 1, 7, 125, 0),
            (3, 8, 2, 3, 11, 250, 0),
            (2, 7, 3, 6, 13, 300, 0),
            (5, 9, 3, 7, 16, 333, 0),
        ]
    );
}

#[test]
fn gantt_csv_matches_golden() {
    let out = tcpn(&[
        "run",
        "--policy",
        "fcfs",
        "--workload",
        "paper-table1",
        "--format",
        "gantt-csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), include_str!("golden/table_fcfs_gantt.csv"));
}

#[test]
fn table_format_runs() {
    let out = tcpn(&[
        "run",
        "--policy",
        "Sjf",
        "--workload",
        "paper-table1",
        "--format",
        "table",
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("makespan 19"));
    assert!(text.contains("trace:"));
}

#[test]
fn gantt_trace_goes_to_stderr_as_json() {
    let out = tcpn(&[
        "run",
        "--policy",
        "pr",
        "--workload",
        "paper-table1",
        "--format",
        "gantt-csv",
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let trace: Vec<serde_json::Value> = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(
        trace[0],
        serde_json::json!({"t": 0, "transition": "Idle", "detail": {"tick": 0}})
    );
    assert_eq!(
        trace
            .iter()
            .filter(|e| e["transition"] == "Execute")
            .count(),
        6
    );
}

#[test]
fn bogus_policy_lists_valid_ones() {
    let out = tcpn(&["run", "--policy", "bogus", "--workload", "paper-table1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("fcfs, sjf, pr, hrrn"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn workload_files_in_both_formats() {
    let json = scratch(
        "table.json",
        r#"[{"pi":1,"it":6,"st":4,"priority":2},{"pi":2,"it":7,"st":3,"priority":1},
           {"pi":3,"it":8,"st":2,"priority":2},{"pi":4,"it":5,"st":2,"priority":3},
           {"pi":5,"it":9,"st":3,"priority":1},{"pi":6,"it":1,"st":3,"priority":4}]"#,
    );
    let csv = scratch(
        "table.csv",
        "pi,it,st,priority\n1,6,4,2\n2,7,3,1\n3,8,2,2\n4,5,2,3\n5,9,3,1\n6,1,3,4\n",
    );
    for path in [&json, &csv] {
        let out = tcpn(&[
            "run",
            "--policy",
            "hrrn",
            "--workload",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out), include_str!("golden/table_hrrn.json"));
    }
}

#[test]
fn invalid_workload_file_exits_one() {
    let bad = scratch("bad.json", r#"[{"pi":1,"it":0,"st":0}]"#);
    let out = tcpn(&[
        "run",
        "--policy",
        "fcfs",
        "--workload",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("service time must be >= 1"));

    let unknown = scratch("workload.txt", "[]");
    let out = tcpn(&[
        "run",
        "--policy",
        "fcfs",
        "--workload",
        unknown.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = tcpn(&[
        "run",
        "--policy",
        "fcfs",
        "--workload",
        unknown.to_str().unwrap(),
        "--input-format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"aggregates\":null"));
}

#[test]
fn missing_file_exits_one() {
    let out = tcpn(&["compare", "--workload", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn step_limit_env_var_overrides_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_tcpn"))
        .args(["run", "--policy", "fcfs", "--workload", "paper-table1"])
        .env("TCPN_STEP_LIMIT", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("step limit of 5"));

    let out = Command::new(env!("CARGO_BIN_EXE_tcpn"))
        .args([
            "run",
            "--policy",
            "fcfs",
            "--workload",
            "paper-table1",
            "--step-limit",
            "100",
        ])
        .env("TCPN_STEP_LIMIT", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn compare_all_policies_on_table() {
    for policy in ["fcfs", "sjf", "pr", "hrrn"] {
        let out = tcpn(&["compare", "--policy", policy, "--workload", "paper-table1"]);
        assert_eq!(out.status.code(), Some(0), "{policy}: {}", stdout(&out));
    }
}

#[test]
fn compare_reports_injected_fault() {
    let out = tcpn(&[
        "compare",
        "--policy",
        "fcfs",
        "--workload",
        "paper-table1",
        "--inject-fault",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("pi 1"), "{text}");
    assert!(text.contains("dispatch engine=8 oracle=7"), "{text}");
}

#[test]
fn fuzz_summary() {
    let out = tcpn(&["fuzz", "--seed", "42", "--count", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "400/400 comparisons passed\n");

    let out = tcpn(&["fuzz", "--seed", "42", "--count", "0"]);
    assert_eq!(out.status.code(), Some(0));

    let out = tcpn(&["fuzz", "--seed", "9001", "--count", "2", "--inject-fault"]);
    assert_ne!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("FAIL seed=9001 policy=FCFS"), "{text}");
    assert!(text.contains("FAIL seed=9002"), "{text}");
    assert!(text.ends_with("0/8 comparisons passed\n"), "{text}");
}
