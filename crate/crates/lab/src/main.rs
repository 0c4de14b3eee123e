//! `nradial` — experiment runner.  Every subcommand reads a plain-text
//! config (or built-in defaults), runs deterministically under its seed,
//! and writes CSV/JSON plus a manifest into a hash-namespaced directory.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 runtime failure,
//! 4 check failure (an experiment ran but violated its declared tolerance).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nradial_lab::cfgfile::Config;
use nradial_lab::emit;
use nradial_lab::experiments::{approx, dyson, identities, lattice, trace};
use nradial_lab::manifest::ExperimentManifest;

use nradial_core::dyson::SimOptions;
use nradial_core::{AngleConfig, Estimate};

#[derive(Parser)]
#[command(name = "nradial", version, about = "n-radial SLE numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Plain-text `key = value` experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config's `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Rayon worker threads (default: all cores). Results are unaffected.
    #[arg(long)]
    threads: Option<usize>,
    /// Output root; NRADIAL_OUT_DIR overrides the default `./out`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact-identity sweeps: cotangent identity and finite-difference checks.
    Identities(Common),
    /// SDE estimators: martingale, feynman-kac, stationarity, balance.
    Dyson(Common),
    /// Generate a driving path, trace the curves, and emit them.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Driving law: independent | locally-independent | n-radial.
        #[arg(long)]
        law: Option<String>,
    },
    /// Exponential decay rate of the Feynman–Kac functional.
    Decay(Common),
    /// Discrete-approximation convergence study K(u, h).
    Approx(Common),
    /// Lattice λ-SAW partition sums.
    Lattice(Common),
}

enum Failure {
    Validation(String),
    Runtime(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Check(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) | Failure::Check(m) => m,
        }
    }
}

impl From<nradial_lab::cfgfile::CfgError> for Failure {
    fn from(e: nradial_lab::cfgfile::CfgError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Identities(c) => run_kind("identities", c, None),
        Cmd::Dyson(c) => run_kind("dyson", c, None),
        Cmd::Trace { common, law } => run_kind("trace", common, law.as_deref()),
        Cmd::Decay(c) => run_kind("decay", c, None),
        Cmd::Approx(c) => run_kind("approx", c, None),
        Cmd::Lattice(c) => run_kind("lattice", c, None),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run_kind(kind: &str, common: &Common, law_flag: Option<&str>) -> Result<(), Failure> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string());
    }
    if let Some(law) = law_flag {
        cfg.set("law", law);
    }
    let seed = cfg.u64_or("seed", 0)?;
    let out_root = common
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("NRADIAL_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut params: BTreeMap<String, String> = cfg.entries().clone();
    params.insert("kind".into(), kind.into());
    let threads = common.threads.unwrap_or_else(rayon::current_num_threads);
    let mut manifest = ExperimentManifest::new(kind, seed, threads, params);
    let dir = manifest.run_dir(&out_root)?;

    match kind {
        "identities" => run_identities(&cfg, seed, &dir, &mut manifest),
        "dyson" => run_dyson(&cfg, seed, &dir, &mut manifest),
        "trace" => run_trace_cmd(&cfg, seed, &dir, &mut manifest),
        "decay" => run_decay(&cfg, seed, &dir, &mut manifest),
        "approx" => run_approx(&cfg, seed, &dir, &mut manifest),
        "lattice" => run_lattice(&cfg, &dir, &mut manifest),
        _ => unreachable!("kinds are fixed by the CLI"),
    }?;

    manifest.write(&dir)?;
    println!("{}", dir.display());
    Ok(())
}

fn sim_options(cfg: &Config, seed: u64, default_paths: usize) -> Result<SimOptions, Failure> {
    Ok(SimOptions {
        dt: cfg.f64_or("dt", 1e-3)?,
        gap_floor: cfg.f64_or("gap_floor", 0.02)?,
        max_substep_depth: cfg.u64_or("max_substep_depth", 20)? as u32,
        seed,
        n_paths: cfg.usize_or("paths", default_paths)?,
    })
}

fn start_config(cfg: &Config) -> Result<AngleConfig, Failure> {
    let n = cfg.usize_or("n", 2)?;
    if n == 0 {
        return Err(Failure::Validation("n must be at least 1".into()));
    }
    Ok(AngleConfig::equally_spaced(n))
}

fn run_identities(
    cfg: &Config,
    seed: u64,
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
) -> Result<(), Failure> {
    let per_n = cfg.usize_or("configs_per_n", 2000)?;
    let fd_configs = cfg.usize_or("fd_configs", 100)?;
    let cot_tol = cfg.f64_or("cot_tol", 1e-9)?;
    let fd_tol = cfg.f64_or("fd_tol", 1e-4)?;

    let cot = identities::cot_identity_sweep(per_n, 2..=6, seed);
    let fd = identities::fd_sweep(fd_configs, seed);

    #[derive(Serialize)]
    struct Report {
        cot_configs: usize,
        cot_max_rel_err: f64,
        fd_configs: usize,
        fd_max_grad_rel_err: f64,
        fd_max_lap_rel_err: f64,
    }
    let report = Report {
        cot_configs: cot.configs_tested,
        cot_max_rel_err: cot.max_rel_err,
        fd_configs: fd.configs_tested,
        fd_max_grad_rel_err: fd.max_grad_rel_err,
        fd_max_lap_rel_err: fd.max_lap_rel_err,
    };
    emit::write_json(&dir.join("results.json"), &manifest.manifest_hash, &report)?;
    manifest.record_output("results.json");

    if cot.max_rel_err >= cot_tol {
        return Err(Failure::Check(format!(
            "cotangent identity: max relative error {} ≥ {}",
            cot.max_rel_err, cot_tol
        )));
    }
    if fd.max_grad_rel_err >= fd_tol || fd.max_lap_rel_err >= fd_tol {
        return Err(Failure::Check(format!(
            "finite-difference check: gradient {} / laplacian {} vs tolerance {}",
            fd.max_grad_rel_err, fd.max_lap_rel_err, fd_tol
        )));
    }
    Ok(())
}

fn run_dyson(
    cfg: &Config,
    seed: u64,
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
) -> Result<(), Failure> {
    let mode = cfg.str_or("mode", "martingale").to_string();
    let alpha = cfg.f64_or("alpha", 0.5)?;
    let t = cfg.f64_or("t", 0.5)?;
    match mode.as_str() {
        "martingale" => {
            let cfg0 = start_config(cfg)?;
            let opts = sim_options(cfg, seed, 10_000)?;
            let est = dyson::martingale_estimate(&cfg0, alpha, t, &opts);
            let sigma = est.sigma_distance(&Estimate::exact(1.0, "unit"));
            finish_estimates(dir, manifest, &[(t, est)], &serde_json::json!({ "sigma_from_unit": sigma }))?;
            check_sigma(cfg, sigma)
        }
        "feynman-kac" => {
            let cfg0 = start_config(cfg)?;
            let opts = sim_options(cfg, seed, 10_000)?;
            let d = dyson::feynman_kac_estimate(&cfg0, alpha, t, &opts, dyson::FkEstimator::Direct);
            let ti = dyson::feynman_kac_estimate(&cfg0, alpha, t, &opts, dyson::FkEstimator::Tilted);
            let sigma = d.sigma_distance(&ti);
            finish_estimates(
                dir,
                manifest,
                &[(t, d), (t, ti)],
                &serde_json::json!({ "cross_sigma": sigma }),
            )?;
            check_sigma(cfg, sigma)
        }
        "stationarity" => {
            let samples = cfg.usize_or("samples", 100_000)?;
            let opts = sim_options(cfg, seed, 0)?;
            let ks = dyson::stationarity_ks(alpha, samples, &opts);
            emit::write_json(
                &dir.join("results.json"),
                &manifest.manifest_hash,
                &serde_json::json!({ "alpha": alpha, "samples": samples, "ks": ks }),
            )?;
            manifest.record_output("results.json");
            let tol = cfg.f64_or("check_ks", f64::INFINITY)?;
            if ks >= tol {
                return Err(Failure::Check(format!("KS distance {ks} ≥ {tol}")));
            }
            Ok(())
        }
        "balance" => {
            let bins = cfg.usize_or("bins", 12)?;
            let transitions = cfg.usize_or("transitions", 200_000)?;
            let min_count = cfg.usize_or("min_count", 100)?;
            let opts = sim_options(cfg, seed, 0)?;
            let report =
                dyson::check_detailed_balance_n2(alpha, t, bins, transitions, min_count, &opts);
            emit::write_json(&dir.join("results.json"), &manifest.manifest_hash, &report)?;
            manifest.record_output("results.json");
            let tol = cfg.f64_or("check_sigma", f64::INFINITY)?;
            if report.max_sigma >= tol {
                return Err(Failure::Check(format!(
                    "detailed balance: max deviation {}σ ≥ {tol}σ",
                    report.max_sigma
                )));
            }
            Ok(())
        }
        other => Err(Failure::Validation(format!(
            "unknown dyson mode `{other}`; expected martingale | feynman-kac | stationarity | balance"
        ))),
    }
}

fn check_sigma(cfg: &Config, sigma: f64) -> Result<(), Failure> {
    let tol = cfg.f64_or("check_sigma", f64::INFINITY)?;
    if sigma >= tol {
        return Err(Failure::Check(format!("deviation {sigma}σ ≥ {tol}σ")));
    }
    Ok(())
}

fn finish_estimates(
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
    points: &[(f64, Estimate)],
    summary: &serde_json::Value,
) -> Result<(), Failure> {
    emit::write_estimates_csv(&dir.join("results.csv"), points)?;
    emit::write_json(&dir.join("results.json"), &manifest.manifest_hash, summary)?;
    manifest.record_output("results.csv");
    manifest.record_output("results.json");
    Ok(())
}

fn run_trace_cmd(
    cfg: &Config,
    seed: u64,
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
) -> Result<(), Failure> {
    let law_name = cfg.str_or("law", "n-radial").to_string();
    let law = trace::parse_law(&law_name)
        .ok_or_else(|| Failure::Validation(format!("unknown law `{law_name}`")))?;
    let n = cfg.usize_or("n", 2)?;
    let a = cfg.f64_or("a", 0.5)?;
    let t = cfg.f64_or("t", 0.25)?;
    let opts = sim_options(cfg, seed, 1)?;
    let stream = cfg.u64_or("stream", 0)?;
    let run = trace::run_trace(law, n, a, t, &opts, stream)
        .map_err(|e| Failure::Validation(e.to_string()))?;

    emit::write_trace_csv(&dir.join("trace.csv"), &run.traces)?;
    manifest.record_output("trace.csv");

    // replay bundle: the driving path itself
    #[derive(Serialize)]
    struct Bundle {
        law: String,
        a: f64,
        truncated: bool,
        times: Vec<f64>,
        thetas: Vec<Vec<f64>>,
    }
    let bundle = Bundle {
        law: law.name().to_string(),
        a,
        truncated: run.driving.truncated,
        times: run.driving.times.clone(),
        thetas: run
            .driving
            .thetas
            .iter()
            .map(|c| c.angles().to_vec())
            .collect(),
    };
    emit::write_json(&dir.join("driving.json"), &manifest.manifest_hash, &bundle)?;
    manifest.record_output("driving.json");
    Ok(())
}

fn run_decay(
    cfg: &Config,
    seed: u64,
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
) -> Result<(), Failure> {
    let alpha = cfg.f64_or("alpha", 0.5)?;
    let ts = cfg.f64_list_or("ts", &[1.0, 1.5, 2.0, 2.5, 3.0])?;
    if ts.len() < 2 {
        return Err(Failure::Validation("need at least two checkpoints".into()));
    }
    let cfg0 = start_config(cfg)?;
    let opts = sim_options(cfg, seed, 20_000)?;
    let points = dyson::decay_curve(&cfg0, alpha, &ts, &opts);
    let summary = dyson::decay_summary(&cfg0, alpha, &points);
    emit::write_estimates_csv(&dir.join("results.csv"), &points)?;
    emit::write_json(&dir.join("summary.json"), &manifest.manifest_hash, &summary)?;
    manifest.record_output("results.csv");
    manifest.record_output("summary.json");

    let slope_tol = cfg.f64_or("check_slope_rel", f64::INFINITY)?;
    let rel = (summary.slope - summary.expected_slope).abs() / summary.expected_slope.abs();
    if rel >= slope_tol {
        return Err(Failure::Check(format!(
            "decay slope {} vs expected {}: relative error {rel} ≥ {slope_tol}",
            summary.slope, summary.expected_slope
        )));
    }
    Ok(())
}

fn run_approx(
    cfg: &Config,
    seed: u64,
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
) -> Result<(), Failure> {
    let runs = cfg.u64_or("runs", 50)?;
    let u = cfg.f64_or("u", 1.0)?;
    let a = cfg.f64_or("a", 1.0)?;
    let level = cfg.u64_or("level", 15)? as u32;
    let h_exps: Vec<u32> = cfg
        .f64_list_or("h_exponents", &[4.0, 5.0, 6.0, 7.0, 8.0, 9.0])?
        .into_iter()
        .map(|e| e as u32)
        .collect();
    if h_exps.iter().any(|&e| e >= level) {
        return Err(Failure::Validation(
            "every h exponent must be below the Brownian refinement level".into(),
        ));
    }
    let study = approx::convergence_study(runs, u, &h_exps, a, seed, level);
    emit::write_approx_csv(&dir.join("results.csv"), &study.rows)?;
    #[derive(Serialize)]
    struct Summary {
        order: f64,
        order_stderr: f64,
        medians: Vec<(f64, f64)>,
    }
    emit::write_json(
        &dir.join("summary.json"),
        &manifest.manifest_hash,
        &Summary {
            order: study.order.slope,
            order_stderr: study.order.slope_stderr,
            medians: study.medians.clone(),
        },
    )?;
    manifest.record_output("results.csv");
    manifest.record_output("summary.json");

    let min_order = cfg.f64_or("check_order", f64::NEG_INFINITY)?;
    if study.order.slope < min_order {
        return Err(Failure::Check(format!(
            "fitted order {} < {min_order}",
            study.order.slope
        )));
    }
    Ok(())
}

fn run_lattice(
    cfg: &Config,
    dir: &std::path::Path,
    manifest: &mut ExperimentManifest,
) -> Result<(), Failure> {
    let domain = lattice::parse_domain(cfg.str_or("domain", "rect 4x4"))
        .map_err(Failure::Validation)?;
    let starts: Vec<(i32, i32)> = cfg
        .str_or("starts", "0,0; 3,3")
        .split(';')
        .map(lattice::parse_site)
        .collect::<Result<_, _>>()
        .map_err(Failure::Validation)?;
    let target = lattice::parse_site(cfg.str_or("target", "1,1")).map_err(Failure::Validation)?;
    let betas = cfg.f64_list_or("betas", &[1.0])?;
    let cs = cfg.f64_list_or("cs", &[0.0, -2.0])?;
    let ns: Vec<usize> = cfg
        .f64_list_or("ns", &[1.0, 2.0])?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    let max_len = match cfg.usize_or("max_len", 0)? {
        0 => None,
        v => Some(v),
    };
    let rows = lattice::sweep(&domain, &starts, target, &betas, &cs, &ns, max_len)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    emit::write_lattice_csv(&dir.join("results.csv"), &rows)?;
    manifest.record_output("results.csv");
    Ok(())
}
