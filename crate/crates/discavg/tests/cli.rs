use std::path::Path;
use std::process::{Command, Output};

use discavg::manifest::RunManifest;
use discavg::series_json;
use discavg_core::invariants::htilde2_reference;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discavg")).current_dir(dir).args(args).output().unwrap()
}

fn run(args: &[&str]) -> Output {
    run_in(Path::new("."), args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn weights_prints_rational_row() {
    let o = run(&["weights", "--n0", "1", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "-1/2,0,1/2\n");
    let o = run(&["weights", "--n0", "2", "--n", "4"]);
    assert_eq!(stdout(&o), "1/12,-2/3,0,2/3,-1/12\n");
}

#[test]
fn weights_table_and_json() {
    let o = run(&["weights", "--n0", "0", "--n", "1", "--out", "csv"]);
    assert_eq!(stdout(&o), "k,weight\n0,-1\n1,1\n");
    let o = run(&["weights", "--n0", "0", "--n", "1", "--out", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["weights"], serde_json::json!(["-1", "1"]));
}

#[test]
fn bad_stencil_is_usage_error() {
    let o = run(&["weights", "--n0", "3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n0 must satisfy 0 ≤ n0 ≤ n"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_flag_suggests_alternative() {
    let o = run(&["weights", "--n0", "1", "--nn", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'--n'"), "{}", stderr(&o));
    let o = run(&["wieghts"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weights"), "{}", stderr(&o));
}

#[test]
fn escaped_orbit_exits_three() {
    let o = run(&["orbit", "--model", "henon", "--eps", "1e-3", "--point", "3,0", "--steps", "30"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("k,x,y\n0,3,0\n"));
}

#[test]
fn config_fills_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("w.cfg"), "# stencil\nn0 = 0\nn = 1\n").unwrap();
    let o = run_in(dir.path(), &["weights", "--config", "w.cfg"]);
    assert_eq!(stdout(&o), "-1,1\n");
    let o = run_in(dir.path(), &["weights", "--config", "w.cfg", "--n", "2"]);
    assert_eq!(stdout(&o), "-3/2,2,-1/2\n");
}

#[test]
fn manifest_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "scan", "--model", "henon", "--eps", "1e-3", "--base-iterate", "4", "--res", "8", "--nmax", "6",
        "--threads", "2", "--out", "scan.csv",
    ];
    let o = run_in(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = std::fs::read(dir.path().join("scan.csv")).unwrap();
    let m = RunManifest::read(&dir.path().join("scan.csv.manifest.json")).unwrap();
    assert_eq!(m.subcommand, "scan");
    assert_eq!(m.parameters["command"]["Scan"]["res"], 8);
    assert_eq!(m.tool_version, env!("CARGO_PKG_VERSION"));
    std::fs::remove_file(dir.path().join("scan.csv")).unwrap();
    let argv: Vec<&str> = m.argv.iter().map(String::as_str).collect();
    let o = run_in(dir.path(), &argv);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("scan.csv")).unwrap(), first);
}

#[test]
fn scan_is_independent_of_thread_count() {
    let base = ["scan", "--eps", "-1e-3", "--base-iterate", "4", "--res", "12", "--nmax", "8"];
    let outputs: Vec<String> = ["1", "3", "8"]
        .iter()
        .map(|t| {
            let mut a = base.to_vec();
            a.extend(["--threads", t]);
            stdout(&run(&a))
        })
        .collect();
    assert!(outputs[0].starts_with("x,y,opt_n,min_G,escaped\n"));
    assert_eq!(outputs[0].lines().count(), 145);
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn scan_metadata_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["scan", "--eps", "1e-3", "--base-iterate", "4", "--res", "5", "--nmax", "4", "--out-json", "meta.json"]);
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["cells"], 25);
    assert_eq!(meta["n_max"], 4);
    assert!(dir.path().join("meta.json.manifest.json").exists());
}

#[test]
fn invariant_json_feeds_drift() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "invariant", "--model", "henon", "--eps-symbolic", "--scheme", "symmetric", "--m", "1", "--base-iterate", "4",
            "--cap-xy", "8", "--cap-eps", "1", "--out", "h.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("h.json")).unwrap()).unwrap();
    assert_eq!(v["defect_valuations"]["eps_linear"], 7);
    let h = series_json::from_str(&v["hamiltonian"].to_string()).unwrap();
    let reference = htilde2_reference();
    for (m, c) in reference.terms() {
        assert_eq!(&h.coefficient(m), c, "{m:?}");
    }
    let o = run_in(
        dir.path(),
        &["drift", "--eps", "1e-3", "--h", "from-file:h.json", "--point", "0.03,0", "--point", "0,0", "--steps", "2000"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "x,y,max,mean,steps,escaped_at");
    let max: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(max > 0.0 && max < 1e-8, "{max}");
    assert_eq!(rows[2], "0,0,0,0,2000,");
}

#[test]
fn drift_needs_parameter_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("h.json"),
        r#"{"vars":["x","y","mu"],"cap_total":4,"cap_per_var":[null,null,1],"terms":[{"exp":[2,0,1],"num":"1","den":"1"}]}"#,
    )
    .unwrap();
    let o = run_in(dir.path(), &["drift", "--eps", "0", "--h", "from-file:h.json", "--point", "0.1,0", "--steps", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--h-params"));
    let o = run_in(dir.path(), &["drift", "--eps", "0", "--h", "from-file:h.json", "--h-params", "0.5", "--point", "0.1,0", "--steps", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn vfield_and_flow_error_outputs() {
    let o = run(&["vfield", "--model", "exp_scalar", "--s", "0.1", "--scheme", "forward", "--m", "2", "--point", "1", "--method", "newton"]);
    let out = stdout(&o);
    let v: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let oracle = -1.5 + 2.0 * 0.1f64.exp() - 0.5 * 0.2f64.exp();
    assert!((v - oracle).abs() < 1e-12);
    let o = run(&["flow-error", "--model", "exp_scalar", "--s", "0.1", "--scheme", "forward", "--orders", "1..3", "--point", "1"]);
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "m,order,error,integrator_estimate,integrator_limited");
    assert_eq!(out.lines().count(), 4);
    let o = run(&["vfield", "--model", "henon", "--point", "0.1", "--m", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repro_writes_h2_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["repro", "henon-h2", "--out-json", "report.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    let h = series_json::from_str(&std::fs::read_to_string(dir.path().join("henon-h2.json")).unwrap()).unwrap();
    assert_eq!(h.sub(&htilde2_reference()).ok().map(|d| d.is_zero()), Some(true));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let check = &report[0]["checks"][0];
    for key in ["criterion", "expected", "observed", "pass"] {
        assert!(check.get(key).is_some(), "{key}");
    }
    let o = run(&["repro", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
