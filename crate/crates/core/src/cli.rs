//! Command-line front end.
//!
//! Every command prints a JSON report (and writes it to `--out` when given).
//! Exit codes: 0 when the check passes, 1 when it fails, 2 on usage or input
//! errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::constructions;
use crate::error::{Error, Result};
use crate::geometry;
use crate::jets::PolyMap;
use crate::local_condition::{self, BoundaryEvaluator, LocalOptions, Verdict};
use crate::skewness;
use crate::sphere;
use crate::stratification;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "skewjet", version, about = "Check totally skew embeddings and the third-order local condition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide the local condition at a point.
    CheckLocal(Opts),
    /// Decide total skewness of the tangent spaces at two points.
    CheckPair(Opts),
    /// Test random pairs in a ball around a point.
    Sweep(Opts),
    /// Run the local condition on random jet triples.
    Genericity(Opts),
    /// Compare the local condition with its geometric form.
    Geometry(Opts),
    /// Injectivity of the tangent system at the counterexample point.
    Transversality(Opts),
    /// Print a named construction as polynomial-map JSON.
    Construct(Opts),
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct Opts {
    /// Named construction: skew-cubic or appendix-triple.
    #[arg(long, conflicts_with = "map")]
    pub construct: Option<String>,
    /// Polynomial map JSON file.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Domain dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Target dimension.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    /// Base point, comma separated (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub at: Option<Vec<f64>>,
    /// First point of a pair.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Second point of a pair.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Sweep radius.
    #[arg(long)]
    pub r: Option<f64>,
    /// Number of random trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Rank or margin tolerance (default depends on the command).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Certified decision on a covering net (n <= 4).
    #[arg(long, requires = "mesh")]
    pub certify: bool,
    /// Mesh size of the covering net.
    #[arg(long)]
    pub mesh: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// CSV side file with plot data.
    #[arg(long)]
    #[serde(skip)]
    pub plot_data: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

pub const DEFAULT_RADIUS: f64 = 0.05;
pub const DEFAULT_SWEEP_TRIALS: usize = 10_000;
pub const DEFAULT_GENERICITY_TRIALS: usize = 1000;

/// A finished command: exit code, report, and optional CSV rows.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
    pub plot: Option<Plot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckLocal(_) => "check-local",
            Command::CheckPair(_) => "check-pair",
            Command::Sweep(_) => "sweep",
            Command::Genericity(_) => "genericity",
            Command::Geometry(_) => "geometry",
            Command::Transversality(_) => "transversality",
            Command::Construct(_) => "construct",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::CheckLocal(o)
            | Command::CheckPair(o)
            | Command::Sweep(o)
            | Command::Genericity(o)
            | Command::Geometry(o)
            | Command::Transversality(o)
            | Command::Construct(o) => o,
        }
    }
}

fn load_map(o: &Opts) -> Result<PolyMap> {
    match (&o.construct, &o.map) {
        (Some(name), None) => {
            let n = o.n.ok_or_else(|| Error::Input("--construct needs --n".into()))?;
            constructions::by_name(name, n, o.big_n)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
            let f = PolyMap::from_json(&text)?;
            if o.n.is_some_and(|n| n != f.dim_in()) || o.big_n.is_some_and(|m| m != f.dim_out()) {
                return Err(Error::Input(format!(
                    "--n/--N do not match the map file (n = {}, N = {})",
                    f.dim_in(),
                    f.dim_out()
                )));
            }
            Ok(f)
        }
        (None, None) => Err(Error::Input("give a map with --construct NAME or --map FILE".into())),
        (Some(_), Some(_)) => Err(Error::Input("--construct and --map are mutually exclusive".into())),
    }
}

fn point(v: &Option<Vec<f64>>, n: usize, flag: &str) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![0.0; n]),
        Some(p) if p.len() == n => Ok(p.clone()),
        Some(p) => Err(Error::Input(format!("--{flag} has {} coordinates, the map has n = {n}", p.len()))),
    }
}

fn required_point(v: &Option<Vec<f64>>, n: usize, flag: &str) -> Result<Vec<f64>> {
    if v.is_none() {
        return Err(Error::Input(format!("--{flag} is required")));
    }
    point(v, n, flag)
}

fn dims(o: &Opts) -> Result<(usize, usize)> {
    let n = o.n.ok_or_else(|| Error::Input("--n is required".into()))?;
    let big_n = o.big_n.ok_or_else(|| Error::Input("--N is required".into()))?;
    Ok((n, big_n))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn verdict_exit(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Angle profile `theta -> sigma_min` of the boundary matrix for `n = 2`.
const PROFILE_POINTS: usize = 720;

fn local_profile(ev: &BoundaryEvaluator) -> Result<Plot> {
    match ev.dim_in() {
        1 => Ok(Plot {
            header: vec!["y", "sigma_min"],
            rows: [1.0, -1.0].iter().map(|&y| vec![y, ev.sigma_min(&[y])]).collect(),
        }),
        2 => Ok(Plot {
            header: vec!["theta", "sigma_min"],
            rows: (0..PROFILE_POINTS)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / PROFILE_POINTS as f64;
                    vec![th, ev.sigma_min(&[th.cos(), th.sin()])]
                })
                .collect(),
        }),
        n => Err(Error::Input(format!("--plot-data for check-local needs n <= 2, got n = {n}"))),
    }
}

fn check_local(o: &Opts) -> Result<Outcome> {
    let f = load_map(o)?;
    let a = point(&o.at, f.dim_in(), "at")?;
    let opts = LocalOptions { tol: o.tol.unwrap_or(local_condition::DEFAULT_TOL), seed: o.seed, ..LocalOptions::default() };
    let report = if o.certify {
        let mesh = o.mesh.ok_or_else(|| Error::Input("--certify needs --mesh".into()))?;
        local_condition::certify_local_condition(&f, &a, mesh, &opts)?
    } else {
        local_condition::check_local_condition(&f, &a, &opts)?
    };
    let plot = match &o.plot_data {
        Some(_) => Some(local_profile(&BoundaryEvaluator::new(&f, &a)?)?),
        None => None,
    };
    let mut value = to_value(&report);
    value["kind"] = json!("local-condition");
    let mut tolerances = json!({ "sigma_min": opts.tol });
    if o.certify {
        tolerances["net_budget"] = json!(sphere::NET_BUDGET);
    }
    value["tolerances"] = tolerances;
    Ok(Outcome { exit_code: verdict_exit(report.holds == Verdict::True), report: value, plot })
}

fn check_pair(o: &Opts) -> Result<Outcome> {
    let f = load_map(o)?;
    let n = f.dim_in();
    let (p, q) = (required_point(&o.p, n, "p")?, required_point(&o.q, n, "q")?);
    let tol = o.tol.unwrap_or(skewness::DEFAULT_RANK_TOL);
    let skew = skewness::is_pair_skew(&f, &p, &q, tol)?;
    let class = skewness::classify_failure(&f, &p, &q, tol)?;
    let mut value = to_value(&skew);
    value["kind"] = json!("pair");
    value["classification"] = to_value(&class.kind);
    if let Some(w) = &class.witness {
        value["witness"] = to_value(w);
    }
    value["tolerances"] = json!({ "relative_rank": tol });
    Ok(Outcome { exit_code: verdict_exit(skew.skew), report: value, plot: None })
}

fn sweep(o: &Opts) -> Result<Outcome> {
    let f = load_map(o)?;
    let a = point(&o.at, f.dim_in(), "at")?;
    let tol = o.tol.unwrap_or(skewness::DEFAULT_RANK_TOL);
    let r = o.r.unwrap_or(DEFAULT_RADIUS);
    let report = skewness::sweep_neighborhood(&f, &a, r, o.trials.unwrap_or(DEFAULT_SWEEP_TRIALS), tol, o.seed)?;
    let mut value = to_value(&report);
    value["tolerances"] = json!({ "relative_rank": tol });
    Ok(Outcome { exit_code: verdict_exit(report.pass), report: value, plot: None })
}

fn genericity(o: &Opts) -> Result<Outcome> {
    let (n, big_n) = dims(o)?;
    let opts = LocalOptions { tol: o.tol.unwrap_or(local_condition::DEFAULT_TOL), seed: o.seed, ..LocalOptions::default() };
    let trials = o.trials.unwrap_or(DEFAULT_GENERICITY_TRIALS);
    let report = stratification::genericity_experiment(n, big_n, trials, o.seed, &opts)?;
    let plot = o.plot_data.as_ref().map(|_| Plot {
        header: vec!["trial", "min_sigma"],
        rows: report.min_sigmas.iter().enumerate().map(|(i, &s)| vec![i as f64, s]).collect(),
    });
    let mut value = to_value(&report);
    value["tolerances"] = json!({
        "sigma_min": opts.tol,
        "failure_sigma": stratification::FAILURE_SIGMA,
        "failure_residual": stratification::FAILURE_RESIDUAL,
    });
    Ok(Outcome { exit_code: verdict_exit(report.pass), report: value, plot })
}

fn geometry_cmd(o: &Opts) -> Result<Outcome> {
    let f = load_map(o)?;
    let a = point(&o.at, f.dim_in(), "at")?;
    let tol = o.tol.unwrap_or(local_condition::DEFAULT_TOL);
    let report = geometry::equivalence_check(&f, &a, tol, o.seed)?;
    let mut value = to_value(&report);
    value["tolerances"] = json!({
        "margin": tol,
        "borderline_factor": geometry::BORDERLINE_FACTOR,
        "immersion": geometry::IMMERSION_TOL,
    });
    Ok(Outcome { exit_code: verdict_exit(report.pass), report: value, plot: None })
}

fn transversality(o: &Opts) -> Result<Outcome> {
    let (n, big_n) = dims(o)?;
    let tol = o.tol.unwrap_or(stratification::TRANSVERSALITY_TOL);
    let report = stratification::transversality_check(n, big_n, tol)?;
    let pass = report.injective && report.unconstrained_kernel_dim == 2;
    let mut value = to_value(&report);
    value["pass"] = json!(pass);
    value["tolerances"] = json!({ "sigma_min": tol });
    Ok(Outcome { exit_code: verdict_exit(pass), report: value, plot: None })
}

fn construct(o: &Opts) -> Result<Outcome> {
    if o.map.is_some() {
        return Err(Error::Input("construct takes --construct NAME, not --map".into()));
    }
    let f = load_map(o)?;
    Ok(Outcome { exit_code: EXIT_PASS, report: to_value(&f.to_json_value()), plot: None })
}

/// Runs a parsed command without touching stdout or files.
pub fn execute(cmd: &Command) -> Result<Outcome> {
    let o = cmd.opts();
    if o.plot_data.is_some() && !matches!(cmd, Command::CheckLocal(_) | Command::Genericity(_)) {
        return Err(Error::Input(format!("--plot-data is not available for {}", cmd.name())));
    }
    let mut outcome = match cmd {
        Command::CheckLocal(o) => check_local(o)?,
        Command::CheckPair(o) => check_pair(o)?,
        Command::Sweep(o) => sweep(o)?,
        Command::Genericity(o) => genericity(o)?,
        Command::Geometry(o) => geometry_cmd(o)?,
        Command::Transversality(o) => transversality(o)?,
        Command::Construct(_) => return construct(o),
    };
    let report = outcome.report.as_object_mut().expect("reports are objects");
    let mut config = match to_value(o) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    config.insert("command".into(), json!(cmd.name()));
    report.insert("config".into(), Value::Object(config));
    report.insert("tool".into(), json!("skewjet"));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    Ok(outcome)
}

fn write_plot(path: &PathBuf, plot: &Plot) -> Result<()> {
    let io = |e: csv::Error| Error::Input(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&plot.header).map_err(io)?;
    for row in &plot.rows {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

/// Parses `args` (including the program name), runs the command, prints the
/// report and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let o = cli.command.opts();
    if let Some(t) = o.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let outcome = match execute(&cli.command) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(path) = &o.out {
        if let Err(e) = fs::write(path, format!("{text}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if let (Some(path), Some(plot)) = (&o.plot_data, &outcome.plot) {
        if let Err(e) = write_plot(path, plot) {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    outcome.exit_code
}
