use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hypfred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypfred"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    hypfred(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example13_is_resonant_at_64() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "solve",
            "--builtin",
            "example13",
            "--nx",
            "64",
            "--nt",
            "64",
            "--tau",
            "1e-2",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["branch"], "resonant");
    assert!(report["kernel_dim"].as_u64().unwrap() >= 3);
    assert!(report["kernel_residual"].as_f64().unwrap() <= 1e-2);
    assert!(dir.path().join("solution.csv").exists());
}

#[test]
fn example13_kernel_files_on_small_grid() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "solve",
            "--builtin",
            "example13",
            "--nx",
            "17",
            "--nt",
            "16",
            "--tau",
            "1e-2",
            "--dump-kernel",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let dim = json(&dir.path().join("report.json"))["kernel_dim"]
        .as_u64()
        .unwrap();
    assert!(dim >= 3);
    for i in 1..=dim {
        assert!(dir.path().join(format!("kernel_{i}.csv")).exists());
        assert!(dir.path().join(format!("cokernel_{i}.csv")).exists());
    }
}

#[test]
fn pure_forcing_solves_uniquely() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "solve",
            "--builtin",
            "pure-forcing",
            "--nx",
            "9",
            "--nt",
            "8",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["branch"], "unique");
    assert_eq!(report["kernel_dim"], 0);
    // Ff = x
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,i,q,x,t,value"));
    let mut count = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[5] - cols[3]).abs() <= 1e-14, "{line}");
        count += 1;
    }
    assert_eq!(count, 9 * 8);
}

#[test]
fn malformed_json_exits_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"n\": 1, \"m\": ").unwrap();
    let o = run_in(dir.path(), &["solve", "--problem", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("problem JSON"));
}

#[test]
fn invalid_expression_names_the_key() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.json");
    fs::write(
        &path,
        r#"{"n": 1, "m": 1, "a": ["1"], "b": [["0"]], "g": [["0"]], "h": [["0"]], "r": [["0"]], "f": ["sin(x"]}"#,
    )
    .unwrap();
    let o = run_in(dir.path(), &["solve", "--problem", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("f[1]"));
}

#[test]
fn problem_file_round_trip_solves() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.json");
    fs::write(
        &path,
        r#"{"n": 1, "m": 1, "a": ["1"], "b": [["0"]], "g": [["0"]], "h": [["0"]], "r": [["0"]], "f": ["1"],
            "description": "pure forcing by hand"}"#,
    )
    .unwrap();
    let o = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            path.to_str().unwrap(),
            "--nx",
            "5",
            "--nt",
            "4",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_tau_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &["solve", "--builtin", "pure-forcing", "--tau=-1"],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = run_in(
        dir.path(),
        &["solve", "--builtin", "pure-forcing", "--tau", "0"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_levy_flags_example13_pairs() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "check-levy",
            "--builtin",
            "example13",
            "--nx",
            "9",
            "--nt",
            "8",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("pair (1,2): FAIL"));
    assert!(out.contains("pair (2,1): FAIL"));
    assert!(out.contains("necessary-condition"));
    let report = json(&dir.path().join("levy.json"));
    assert_eq!(report["pass"], false);

    let o = run_in(
        dir.path(),
        &[
            "check-levy",
            "--builtin",
            "levy-pass",
            "--nx",
            "9",
            "--nt",
            "8",
        ],
    );
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn residual_of_example13_kernel_converges() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "residual",
            "--builtin",
            "example13",
            "--exact",
            "sin((pi/2)*x)*sin(t-(pi/2)*x),cos((pi/2)*x)*sin(t-(pi/2)*x)",
            "--grids",
            "17x16,33x32,65x64",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = json(&dir.path().join("residual.json"))["rows"]
        .as_array()
        .unwrap()
        .clone();
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        assert!(r["order"].as_f64().unwrap() >= 1.8, "{r}");
    }
    assert!(dir.path().join("residual.csv").exists());
}

#[test]
fn converge_on_manufactured_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "converge",
            "--builtin",
            "manufactured-wellposed",
            "--grids",
            "9x8,17x16,33x32",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = json(&dir.path().join("converge.json"))["rows"]
        .as_array()
        .unwrap()
        .clone();
    assert_eq!(rows[0]["metric"], "error");
    assert!(rows[2]["order"].as_f64().unwrap() >= 1.8, "{rows:?}");
}

#[test]
fn converge_rejects_non_refining_grids() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &["converge", "--builtin", "example13", "--grids", "9x8,9x16"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spectrum_and_kernel_write_artifacts() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "spectrum",
            "--builtin",
            "levy-pass",
            "--nx",
            "9",
            "--nt",
            "8",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let s = json(&dir.path().join("spectrum.json"));
    assert_eq!(s["complete_spectrum"], true);
    assert_eq!(s["singular_values"].as_array().unwrap().len(), 2 * 9 * 8);
    assert_eq!(s["count_below_tau"], 0);

    let o = run_in(
        dir.path(),
        &[
            "kernel",
            "--builtin",
            "example13",
            "--nx",
            "9",
            "--nt",
            "8",
            "--tau",
            "5e-2",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let k = json(&dir.path().join("kernel.json"));
    let dim = k["kernel_dim"].as_u64().unwrap();
    assert!(dim >= 1);
    assert!(dir.path().join(format!("kernel_{dim}.csv")).exists());
}

#[test]
fn trace_and_apply_dump_csv() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "trace",
            "--builtin",
            "example13",
            "--nx",
            "9",
            "--nt",
            "8",
            "--x",
            "0.5",
            "--t",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(csv.starts_with("xi,omega,c,d\n"));
    // constant speed 2/π: ω(0) = 1 - 0.5·π/2
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(last[0], 0.0);
    assert!((last[1] - (1.0 - 0.25 * std::f64::consts::PI)).abs() <= 1e-12);

    let o = run_in(
        dir.path(),
        &[
            "apply",
            "--builtin",
            "example13",
            "--nx",
            "9",
            "--nt",
            "8",
            "--exact",
            "x,t",
            "--terms",
            "rb",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("apply.csv").exists());
    let o = run_in(
        dir.path(),
        &[
            "apply",
            "--builtin",
            "example13",
            "--exact",
            "x,t",
            "--terms",
            "q",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn list_builtins_names_all() {
    let o = hypfred(&["list-builtins"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in [
        "example13",
        "pure-forcing",
        "manufactured-wellposed",
        "levy-pass",
    ] {
        assert!(out.contains(name), "{out}");
    }
}

#[test]
fn unknown_builtin_and_missing_source_fail() {
    assert_eq!(
        hypfred(&["solve", "--builtin", "nope"]).status.code(),
        Some(1)
    );
    // clap reports usage errors with its own code
    assert_ne!(hypfred(&["solve"]).status.code(), Some(0));
}

#[test]
fn runs_are_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [
        "solve",
        "--builtin",
        "levy-pass",
        "--nx",
        "9",
        "--nt",
        "8",
        "--threads",
        "1",
    ];
    assert_eq!(run_in(a.path(), &args).status.code(), Some(0));
    assert_eq!(run_in(b.path(), &args).status.code(), Some(0));
    let strip = |dir: &Path| {
        let mut v = json(&dir.join("report.json"));
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    assert_eq!(
        fs::read(a.path().join("solution.csv")).unwrap(),
        fs::read(b.path().join("solution.csv")).unwrap()
    );
}
