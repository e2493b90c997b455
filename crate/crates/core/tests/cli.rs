mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use serde_json::Value;
use tempfile::TempDir;

fn skewjet(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_skewjet")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8(out.stderr).unwrap())
}

fn write_map(dir: &TempDir, name: &str, f: &skewjet::PolyMap) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, f.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_local_exit_codes() {
    let (code, r, _) = skewjet(&["check-local", "--construct", "skew-cubic", "--n", "2", "--at", "0,0"]);
    assert_eq!(code, 0);
    assert_eq!(r["holds"], "true");
    assert_eq!(r["kind"], "local-condition");

    let (code, r, _) = skewjet(&["check-local", "--construct", "appendix-triple", "--n", "2", "--N", "6", "--at", "0,0"]);
    assert_eq!(code, 1);
    assert!(r["witness"].is_object());

    let dir = TempDir::new().unwrap();
    let linear = write_map(&dir, "linear.json", &linear_map(3, 1));
    let (code, r, _) = skewjet(&["check-local", "--map", &linear, "--at", "0"]);
    assert_eq!(code, 1);
    assert_eq!(r["holds"], "false");
}

#[test]
fn certified_mode_reports_mesh_and_constant() {
    let (code, r, _) = skewjet(&["check-local", "--construct", "skew-cubic", "--n", "2", "--certify", "--mesh", "1e-3"]);
    assert_eq!(code, 0);
    assert_eq!(r["mode"], "certified");
    assert!(r["lipschitz"].as_f64().unwrap() > 0.0);
    let mesh = r["mesh"].as_f64().unwrap();
    assert!(mesh > 0.0 && mesh <= 1e-3);
    let (code, _, err) = skewjet(&["check-local", "--construct", "skew-cubic", "--n", "2", "--certify"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn check_pair_classifies() {
    let dir = TempDir::new().unwrap();
    let cubic = write_map(&dir, "cubic.json", &twisted_cubic());
    let planar = write_map(&dir, "planar.json", &parabola());
    let parallel = write_map(&dir, "parallel.json", &space_curve(0.0, 1.0));

    let (code, r, _) = skewjet(&["check-pair", "--map", &cubic, "--p", "0", "--q", "1"]);
    assert_eq!((code, r["classification"].as_str()), (0, Some("none")));
    let (code, r, _) = skewjet(&["check-pair", "--map", &planar, "--p", "0", "--q", "1"]);
    assert_eq!((code, r["classification"].as_str()), (1, Some("intersecting")));
    let (code, r, _) = skewjet(&["check-pair", "--map", &parallel, "--p", "-1", "--q", "1"]);
    assert_eq!((code, r["classification"].as_str()), (1, Some("parallel")));
    let (code, _, err) = skewjet(&["check-pair", "--map", &cubic, "--p", "0.5", "--q", "0.5"]);
    assert_eq!(code, 2);
    assert!(err.contains("diagonal"), "{err}");
}

#[test]
fn sweep_genericity_and_transversality() {
    let (code, r, _) = skewjet(&["sweep", "--construct", "skew-cubic", "--n", "2", "--r", "0.05", "--trials", "2000"]);
    assert_eq!(code, 0);
    assert_eq!(r["kind"], "sweep");
    assert_eq!(r["worst_pair"].as_array().unwrap().len(), 2);

    let (code, r, _) = skewjet(&["genericity", "--n", "2", "--N", "6", "--trials", "50"]);
    assert_eq!(code, 0);
    assert_eq!(r["failures"], 0);
    assert_eq!(r["min_sigma_quartiles"].as_array().unwrap().len(), 3);

    let (code, r, _) = skewjet(&["transversality", "--n", "2", "--N", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["injective"], true);
}

#[test]
fn geometry_command() {
    let (code, r, _) = skewjet(&["geometry", "--construct", "skew-cubic", "--n", "1"]);
    assert_eq!(code, 0);
    assert_eq!(r["torsion"].as_f64(), Some(-1.0));
    assert_eq!(r["ii_nonsingular"], true);
    assert_eq!(r["curve_condition"], true);
}

#[test]
fn reports_echo_configuration() {
    let (_, r, _) = skewjet(&["check-local", "--construct", "skew-cubic", "--n", "1", "--seed", "17", "--tol", "1e-7"]);
    assert_eq!(r["config"]["command"], "check-local");
    assert_eq!(r["config"]["seed"], 17);
    assert_eq!(r["config"]["construct"], "skew-cubic");
    assert_eq!(r["tool"], "skewjet");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["tolerances"]["sigma_min"].as_f64(), Some(1e-7));
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["sweep", "--construct", "skew-cubic", "--n", "2", "--trials", "500", "--seed", "3"];
    let a = Command::new(env!("CARGO_BIN_EXE_skewjet")).args(args).output().unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_skewjet")).args(args).arg("--threads").arg("1").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_and_plot_files() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let plot = dir.path().join("profile.csv");
    let (code, r, _) = skewjet(&[
        "check-local",
        "--construct",
        "skew-cubic",
        "--n",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(saved, r);
    let mut rows = csv::Reader::from_path(&plot).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["theta", "sigma_min"]);
    let sigmas: Vec<f64> = rows.records().map(|row| row.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(sigmas.len(), 720);
    let min = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min >= r["min_sigma"].as_f64().unwrap() - 1e-12);

    let hist = dir.path().join("hist.csv");
    let (code, _, _) = skewjet(&["genericity", "--n", "2", "--N", "6", "--trials", "10", "--plot-data", hist.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(csv::Reader::from_path(&hist).unwrap().records().count(), 10);
}

#[test]
fn construct_emits_loadable_json() {
    let (code, r, _) = skewjet(&["construct", "--construct", "appendix-triple", "--n", "2", "--N", "7"]);
    assert_eq!(code, 0);
    assert_eq!((r["n"].as_u64(), r["N"].as_u64(), r["degree"].as_u64()), (Some(2), Some(7), Some(3)));
    let f = skewjet::PolyMap::from_json(&r.to_string()).unwrap();
    assert_eq!(f, skewjet::constructions::appendix_triple(2, 7).unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let missing = Path::new("/nonexistent/map.json");
    let cubic = write_map(&dir, "cubic.json", &twisted_cubic());
    let cases: Vec<Vec<&str>> = vec![
        vec!["check-local", "--map", bad.to_str().unwrap()],
        vec!["check-local", "--map", missing.to_str().unwrap()],
        vec!["check-local", "--map", &cubic, "--at", "0,0"],
        vec!["check-local", "--construct", "helix", "--n", "2"],
        vec!["check-local", "--construct", "skew-cubic"],
        vec!["check-local", "--construct", "skew-cubic", "--n", "2", "--map", &cubic],
        vec!["check-pair", "--map", &cubic, "--p", "0"],
        vec!["genericity", "--n", "2"],
        vec!["sweep", "--construct", "skew-cubic", "--n", "1", "--plot-data", "x.csv"],
        vec!["frobnicate"],
        vec![],
    ];
    for args in cases {
        let (code, _, _) = skewjet(&args);
        assert_eq!(code, 2, "{args:?}");
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(skewjet(&["--help"]).0, 0);
    assert_eq!(skewjet(&["--version"]).0, 0);
}
