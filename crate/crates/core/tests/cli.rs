use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imex-dimsim"))
        .args(args)
        .env("IMEX_DIMSIM_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    let dir = tempfile::tempdir().unwrap();
    run(args, dir.path()).status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let scan_csv = out("scan.csv");
    let conv_csv = out("r.csv");
    let catalog_json = out("catalog.json");
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec![], 2),
        (vec!["--help"], 0),
        (vec!["--version"], 0),
        (vec!["frobnicate"], 2),
        // verify
        (vec!["verify"], 0),
        (vec!["verify", "--method", "3B", "--method", "2A"], 0),
        (vec!["verify", "--method", "nosuch"], 2),
        // scan
        (
            vec![
                "scan", "--method", "2B", "--nx", "5", "--ny", "5", "--out", &scan_csv,
            ],
            0,
        ),
        (
            vec![
                "scan",
                "--method",
                "3A",
                "--pair",
                "--early-exit",
                "--nx",
                "5",
                "--ny",
                "5",
                "--out",
                &scan_csv,
            ],
            0,
        ),
        (vec!["scan", "--method", "nosuch", "--out", &scan_csv], 2),
        (
            vec![
                "scan", "--method", "2B", "--alpha", "120", "--out", &scan_csv,
            ],
            2,
        ),
        (
            vec!["scan", "--method", "2B", "--nx", "1", "--out", &scan_csv],
            2,
        ),
        (vec!["scan", "--method", "2B"], 2),
        // converge
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--mu",
                "-1",
                "--h0",
                "0.1",
                "--levels",
                "3",
            ],
            0,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--h0",
                "0.1",
                "--levels",
                "2",
            ],
            2,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "nosuch",
                "--h0",
                "0.1",
            ],
            2,
        ),
        (
            vec![
                "converge",
                "--method",
                "nosuch",
                "--problem",
                "pr",
                "--h0",
                "0.1",
            ],
            2,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--h0",
                "0.1",
                "--start",
                "magic",
            ],
            2,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--mu",
                "-1",
                "--h0",
                "0.1",
                "--levels",
                "3",
                "--min-order",
                "5",
            ],
            1,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--mu",
                "-1",
                "--h0",
                "0.1",
                "--levels",
                "3",
                "--min-order",
                "1.5",
                "--max-order",
                "2.5",
            ],
            0,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--h0",
                "0.1",
                "--levels",
                "3",
                "--format",
                "xml",
                "--out",
                &conv_csv,
            ],
            2,
        ),
        (
            vec![
                "converge",
                "--method",
                "2B",
                "--problem",
                "pr",
                "--h0",
                "0.3",
                "--levels",
                "3",
            ],
            1,
        ),
        // integrate
        (
            vec![
                "integrate",
                "--method",
                "3B",
                "--problem",
                "vdp",
                "--eps",
                "1",
                "--h",
                "0.05",
            ],
            0,
        ),
        (
            vec![
                "integrate",
                "--method",
                "DIRK343",
                "--problem",
                "advdiff",
                "--n",
                "16",
                "--h",
                "0.05",
            ],
            0,
        ),
        (
            vec![
                "integrate",
                "--method",
                "3B",
                "--problem",
                "vdp",
                "--h",
                "0.3",
            ],
            2,
        ),
        (
            vec![
                "integrate",
                "--method",
                "3B",
                "--problem",
                "vdp",
                "--h",
                "-1",
            ],
            2,
        ),
        (
            vec![
                "integrate",
                "--method",
                "3B",
                "--problem",
                "advdiff",
                "--n",
                "4",
                "--h",
                "0.1",
            ],
            2,
        ),
        // catalog
        (vec!["catalog"], 0),
        (vec!["catalog", "--out", &catalog_json], 0),
    ];
    for (args, expected) in cases {
        let o = run(&args, dir.path());
        assert_eq!(
            o.status.code(),
            Some(expected),
            "{args:?}\nstdout: {}\nstderr: {}",
            stdout(&o),
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn off_grid_levels_are_skipped_not_fatal() {
    // h0 = 0.3 does not divide [0, 1]: every level is skipped with a warning
    // and the run exits 1 after writing what it has.
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let o = run(
        &[
            "converge",
            "--method",
            "2B",
            "--problem",
            "pr",
            "--h0",
            "0.3",
            "--levels",
            "3",
            "--out",
            json.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipped"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["skipped"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_prints_a_residual_row_per_member() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], dir.path());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 8);
    for name in ["2A", "2B", "3A", "3B"] {
        assert!(text.contains(&format!("IMEX-DIMSIM-{name}")));
    }
}

#[test]
fn unknown_names_list_the_alternatives() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--method", "nosuch"], dir.path());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2A") && err.contains("3B"), "{err}");
    let o = run(
        &[
            "integrate",
            "--method",
            "2B",
            "--problem",
            "heat",
            "--h",
            "0.1",
        ],
        dir.path(),
    );
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("vdp") && err.contains("advdiff"), "{err}");
}

#[test]
fn converge_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let o = run(
        &[
            "converge",
            "--method",
            "3B",
            "--problem",
            "vdp",
            "--eps",
            "1e-6",
            "--h0",
            "0.025",
            "--levels",
            "5",
            "--out",
            csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,error,pairwise_order");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].ends_with(','));
    assert!(!text.contains('\r'));
    // 17 significant digits
    let h: &str = lines[1].split(',').next().unwrap();
    assert_eq!(h, "2.5000000000000001e-2");
    // the reference run was cached
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("r{k}.csv"));
        let scan = dir.path().join(format!("s{k}.csv"));
        let c = run(
            &[
                "converge",
                "--method",
                "2B",
                "--problem",
                "advdiff",
                "--n",
                "16",
                "--h0",
                "0.05",
                "--levels",
                "3",
                "--out",
                csv.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert_eq!(c.status.code(), Some(0));
        let s = run(
            &[
                "scan",
                "--method",
                "3B",
                "--pair",
                "--nx",
                "9",
                "--ny",
                "7",
                "--out",
                scan.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert_eq!(s.status.code(), Some(0));
        texts.push((
            std::fs::read_to_string(csv).unwrap(),
            std::fs::read_to_string(scan).unwrap(),
        ));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn json_outputs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let o = run(
        &[
            "converge",
            "--method",
            "DIRK232",
            "--problem",
            "linear",
            "--h0",
            "0.1",
            "--levels",
            "3",
            "--out",
            json.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 3);
    assert_eq!(v["pairwise_orders"].as_array().unwrap().len(), 2);

    let o = run(&["catalog"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);

    let o = run(
        &[
            "integrate",
            "--method",
            "2B",
            "--problem",
            "linear",
            "--h",
            "0.05",
            "--tf",
            "0.5",
        ],
        dir.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["t_final"].as_f64(), Some(0.5));
    assert_eq!(v["stats"]["steps"].as_u64(), Some(10));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("scan.csv");
    let o = run(
        &[
            "scan",
            "--method",
            "2B",
            "--nx",
            "3",
            "--ny",
            "3",
            "--out",
            target.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("file"));
    assert_eq!(code(&["catalog", "--out", target.to_str().unwrap()]), 1);
}
