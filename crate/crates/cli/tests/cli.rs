use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(exp: &str, config: &str, dir: &Path, extra: &[&str], threads: Option<&str>) -> Output {
    let cfg = dir.join(format!("{exp}.toml"));
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relkernel"));
    cmd.arg(exp).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out")).args(extra);
    match threads {
        Some(t) => cmd.env("RELKERNEL_THREADS", t),
        None => cmd.env_remove("RELKERNEL_THREADS"),
    };
    cmd.output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_MC: &str = "seed = 11\n[mc-compare]\nestimators = [\"H1\", \"H2\", \"H3\", \"NR\"]\nn_paths = 3000\nn_slices = 8\nblock_size = 256\nz_max = 100.0\n";

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("levy-check", "sede = 1\n"),
        ("levy-check", "[levy-check]\nmasses = [0.0]\ntolerence = 1e-4\n"),
        ("levy-check", "[grid\n"),
        ("levy-check", "experiment = \"kernel\"\n"),
        ("chernoff-rate", "[chernoff-rate]\nsteppers = [\"F7\"]\n"),
        ("chernoff-rate", "[chernoff-rate.expect_slope]\nF7 = [-1.0, 0.0]\n"),
        ("mc-compare", "[mc-compare]\nprobes = [[0.0, 0.0]]\n"),
        ("oracle", "[grid]\npoints = 63\n"),
        ("oracle", "[potentials.vector]\nkind = \"spiral\"\n"),
    ];
    for (exp, text) in cases {
        let out = run(exp, text, dir.path(), &[], None);
        assert_eq!(out.status.code(), Some(2), "{exp} {text:?}: {}", String::from_utf8_lossy(&out.stderr));
        let err: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
        assert_eq!(err["status"], "config_error");
    }
    let out = run("levy-check", "", dir.path(), &[], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    let out = run("no-such-experiment", "", dir.path(), &[], None);
    assert_eq!(out.status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_relkernel"))
        .args(["kernel", "--config", "/nonexistent/cfg.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn broken_h1_rule_exits_3_with_named_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("property-suite", "[property-suite]\nh1_rule = \"left-endpoint\"\n", dir.path(), &[], None);
    assert_eq!(out.status.code(), Some(3));
    let report = read_json(&dir.path().join("out/property-suite.failure.json"));
    assert_eq!(report["status"], "property_violation");
    let names: Vec<&str> = report["violated_invariants"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(names.contains(&"hermiticity"), "{names:?}");
    assert!(names.contains(&"gauge_covariance"), "{names:?}");
    let stderr: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(stderr, report);

    let ok = run("property-suite", "", dir.path(), &[], None);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
}

#[test]
fn sidecar_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[levy-check]\nmasses = [1.0]\ndims = [1]\nxi = [1.0, 2.0]\n";
    let out = run("levy-check", text, dir.path(), &["--seed", "99"], Some("2"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let side = read_json(&dir.path().join("out/levy-check.json"));
    assert_eq!(side["experiment"], "levy-check");
    assert_eq!(side["status"], "ok");
    assert_eq!(side["seed"], 99);
    assert_eq!(side["workers"], 2);
    assert_eq!(side["config_source"], text);
    assert_eq!(side["config"]["levy-check"]["xi"], serde_json::json!([1.0, 2.0]));
    assert!(side["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert!(side["version"].as_str().unwrap().starts_with('v'));
    let csv = fs::read_to_string(dir.path().join("out/levy-check.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,d,xi,symbol,integral,residual");
    assert_eq!(lines.len(), 3);
}

#[test]
fn csv_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for threads in ["1", "3", "8"] {
        let out = run("mc-compare", SMALL_MC, dir.path(), &[], Some(threads));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        bodies.push(fs::read(dir.path().join("out/mc-compare.csv")).unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));

    let out = run("mc-compare", SMALL_MC, dir.path(), &["--seed", "12"], Some("2"));
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(fs::read(dir.path().join("out/mc-compare.csv")).unwrap(), bodies[0]);

    let chernoff = "[grid]\npoints = 32\nlength = 12.0\n[chernoff-rate]\nsteppers = [\"F1\", \"Split_H3\"]\nn_max = 16\n";
    let mut bodies = Vec::new();
    for threads in ["1", "4"] {
        let out = run("chernoff-rate", chernoff, dir.path(), &[], Some(threads));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        bodies.push(fs::read(dir.path().join("out/chernoff-rate.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn slope_bands_are_per_stepper() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[potentials]\nvector = { kind = \"zero\" }\n[chernoff-rate]\nsteppers = [\"G_scalar\", \"G_scalar_symmetrized\"]\nn_list = [8, 16, 32, 64]\nnorms = [\"operator\"]\nfit = \"all\"\n";
    let good = format!("{base}[chernoff-rate.expect_slope]\nG_scalar = [-1.2, -0.8]\nG_scalar_symmetrized = [-2.25, -1.75]\n");
    let out = run("chernoff-rate", &good, dir.path(), &[], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = format!("{base}[chernoff-rate.expect_slope]\nG_scalar = [-2.25, -1.75]\n");
    let out = run("chernoff-rate", &bad, dir.path(), &[], None);
    assert_eq!(out.status.code(), Some(3));
    let report = read_json(&dir.path().join("out/chernoff-rate.failure.json"));
    assert_eq!(report["violations"].as_array().unwrap().len(), 1);
    assert!(report["violations"][0]["case"].as_str().unwrap().contains("G_scalar"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = relkernel_cli::config::Config::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let exp = cfg.experiment.clone().expect("shipped configs name their experiment");
        cfg.validate_for(&exp).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 6);
}
