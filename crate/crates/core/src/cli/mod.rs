//! Command-line front end: `dirac-lap <subcommand> --config <file> --out <dir>`.
//!
//! Each subcommand writes one or more CSV tables plus `summary.json` into the
//! output directory and nothing anywhere else. Exit status 0 means success,
//! 2 a rejected configuration, 3 a numerical failure.

pub mod config;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{parse_config, parse_config_str, ConfigErrors, GridConfig, InitialDatum, RunConfig, Subcommand};
pub use table::{format_float, Table};

use crate::clifford::DiracMatrices;
use crate::fields::{sample_potential, BlockDiagonal, PotentialSpec, SpinorField};
use crate::highenergy::{classify_product, neumann_tail_check, product_norm, sphere_partition, ProductSpec};
use crate::kernels::{kernel_split, schrodinger_kernel};
use crate::{lap, propagator, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Products whose upper bracket stays at or below this count as small.
pub const SMALL_PRODUCT: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "dirac-lap", version, about = "Weighted resolvent, threshold, high-energy and propagator experiments for Dirac operators")]
pub struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel parts.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Wall time of one stage of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub subcommand: Subcommand,
    pub config_hash: String,
    pub config_echo: Value,
    pub status: String,
    pub error: Option<String>,
    pub stages: Vec<Stage>,
    pub warnings: Vec<String>,
    pub tables: Vec<String>,
    pub results: Value,
}

impl RunReport {
    fn new(config: &RunConfig) -> Self {
        let canonical = config.canonical_json();
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: config.subcommand,
            config_hash: config_hash(config),
            config_echo: serde_json::from_str(&canonical).expect("canonical JSON re-parses"),
            status: "running".into(),
            error: None,
            stages: Vec::new(),
            warnings: Vec::new(),
            tables: Vec::new(),
            results: Value::Null,
        }
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.stages.push(Stage {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Hex SHA-256 of the canonical configuration text.
pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Map a library error to its exit status.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Parse arguments, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("--threads must be at least 1");
            return EXIT_INVALID;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let mut config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            return EXIT_INVALID;
        }
    };
    if config.subcommand != args.subcommand {
        eprintln!(
            "command line asks for '{}' but the config describes '{}'",
            args.subcommand, config.subcommand
        );
        return EXIT_INVALID;
    }
    let out = match args.out.clone().or_else(|| config.output_dir.clone()) {
        Some(p) => p,
        None => {
            eprintln!("no output directory: pass --out or set output_dir in the config");
            return EXIT_INVALID;
        }
    };
    config.output_dir = None;
    match run(&config, &out) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}: wrote {} to {}", config.subcommand, report.tables.join(", "), out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}: {e}", config.subcommand);
            exit_code(&e)
        }
    }
}

/// Run a validated configuration, writing every artifact into `out`.
///
/// On failure the tables written so far stay in place and `summary.json`
/// records the error.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunReport> {
    let errors = config.violations();
    if !errors.is_empty() {
        return Err(Error::invalid(errors.join("; ")));
    }
    std::fs::create_dir_all(out)?;
    let mut report = RunReport::new(config);
    let result = dispatch(config, out, &mut report);
    match &result {
        Ok(()) => report.status = "ok".into(),
        Err(e) => {
            report.status = if e.is_numerical() { "numerical-failure" } else { "invalid" }.into();
            report.error = Some(e.to_string());
        }
    }
    let summary = serde_json::to_string_pretty(&report).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(out.join("summary.json"), summary + "\n")?;
    result.map(|_| report)
}

struct Setup {
    mats: DiracMatrices,
    grid: crate::fields::Grid,
    potential: BlockDiagonal,
}

fn setup(config: &RunConfig, report: &mut RunReport) -> Result<Setup> {
    report.stage("setup", |_| {
        let mats = DiracMatrices::new(config.n)?;
        let grid = config.grid()?;
        let potential = sample_potential(&config.potential, &grid, &mats)?;
        Ok(Setup { mats, grid, potential })
    })
}

fn dispatch(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    match config.subcommand {
        Subcommand::Matrices => matrices(config, out, report),
        Subcommand::KernelDump => kernel_dump(config, out, report),
        Subcommand::LapSweep => lap_sweep(config, out, report),
        Subcommand::ComplexSweep => complex_sweep(config, out, report),
        Subcommand::Threshold => threshold(config, out, report),
        Subcommand::Directed => directed(config, out, report),
        Subcommand::Neumann => neumann(config, out, report),
        Subcommand::Evolve => evolve(config, out, report),
        Subcommand::Strichartz => strichartz(config, out, report),
    }
}

fn open_table(out: &Path, name: &str, header: &[&str], report: &mut RunReport) -> Result<Table> {
    report.tables.push(name.to_string());
    Table::create(&out.join(name), header)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn matrices(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let mats = report.stage("build", |_| DiracMatrices::new(config.n))?;
    let mut table = open_table(out, "matrices.csv", &["matrix", "row", "col", "re", "im"], report)?;
    let named = mats
        .alphas()
        .iter()
        .enumerate()
        .map(|(k, a)| (format!("alpha_{}", k + 1), a))
        .chain(std::iter::once(("beta".to_string(), mats.beta())));
    for (name, a) in named {
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let z = a[(i, j)];
                table.row(&[name.clone(), i.to_string(), j.to_string(), format_float(z.re), format_float(z.im)])?;
            }
        }
    }
    let doc = json!({
        "n": config.n,
        "spinor_dim": mats.spinor_dim(),
        "alpha": mats.alphas(),
        "beta": mats.beta(),
        "relation_defect": mats.relation_defect(),
    });
    report.tables.push("matrices.json".into());
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(out.join("matrices.json"), text + "\n")?;
    report.results = json!({ "relation_defect": mats.relation_defect() });
    Ok(())
}

fn kernel_dump(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let z = config.z.expect("validated");
    let rs = config.r_grid.as_ref().expect("validated");
    let header = ["r", "Re", "Im", "osc_Re", "osc_Im", "loc_Re", "loc_Im"];
    let mut table = open_table(out, "kernel.csv", &header, report)?;
    report.stage("evaluate", |_| {
        for &r in rs {
            let g = schrodinger_kernel(config.n, z, r, config.branch)?;
            let s = kernel_split(config.n, z, r, config.branch)?;
            table.floats(&[r, g.re, g.im, s.osc.re, s.osc.im, s.loc.re, s.loc.im])?;
        }
        Ok(())
    })
}

const LAP_HEADER: [&str; 6] = ["lambda", "gamma", "norm_weighted", "norm_b_bstar", "cond", "flag"];

fn lap_rows(table: &mut Table, entries: &[lap::LapEntry], report: &mut RunReport) -> Result<()> {
    for e in entries {
        if let Some(flag) = &e.flag {
            report.warnings.push(format!("lambda = {}, gamma = {}: {flag}", e.lambda, e.gamma));
        }
        table.row(&[
            format_float(e.lambda),
            format_float(e.gamma),
            format_float(e.norm_weighted),
            opt(e.norm_b_bstar),
            format_float(e.cond),
            e.flag.clone().unwrap_or_default(),
        ])?;
    }
    Ok(())
}

fn lap_sweep(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let sigma = config.sigma.expect("validated");
    let lambdas = config.lambda_grid.as_ref().expect("validated");
    let mut table = open_table(out, "lap_sweep.csv", &LAP_HEADER, report)?;
    let sweep = report.stage("sweep", |_| {
        lap::lap_sweep(lambdas, sigma, &s.potential, &s.mats, config.m, &s.grid, config.branch, config.b_norm)
    })?;
    lap_rows(&mut table, &sweep.entries, report)?;
    report.results = json!({ "sup_norm": sweep.sup_norm });
    Ok(())
}

fn complex_sweep(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let sigma = config.sigma.expect("validated");
    let lambda = config.lambda.expect("validated");
    let gammas = config.gamma_grid.as_ref().expect("validated");
    let mut table = open_table(out, "complex_sweep.csv", &LAP_HEADER, report)?;
    let sweep = report.stage("sweep", |_| {
        lap::complex_sweep(lambda, gammas, sigma, &s.potential, &s.mats, config.m, &s.grid)
    })?;
    lap_rows(&mut table, &sweep.report.entries, report)?;
    report.results = json!({
        "boundary_norm": sweep.boundary_norm,
        "differences": sweep.differences,
        "l2_norms": sweep.l2_norms,
        "elementary_bounds": sweep.elementary_bounds,
    });
    Ok(())
}

/// Default energies above threshold at which `B_lambda` is sampled.
pub const DEFAULT_LAMBDA_OFFSETS: [f64; 3] = [0.4, 0.2, 0.1];

fn threshold(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let sigma = config.sigma.expect("validated");
    let offsets = config
        .lambda_offsets
        .clone()
        .unwrap_or_else(|| DEFAULT_LAMBDA_OFFSETS.to_vec());
    let mut table = open_table(out, "threshold.csv", &LAP_HEADER, report)?;
    let check = report.stage("regularity", |_| {
        lap::regularity_check(&s.potential, sigma, &s.mats, config.m, &s.grid, &offsets)
    })?;
    for (lambda, norm) in &check.blambda_decay {
        table.row(&[
            format_float(*lambda),
            format_float(0.0),
            format_float(*norm),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    let mut results = json!({
        "smallest_singular_value": check.smallest_singular_value,
        "regular": check.regular,
    });
    if !check.regular {
        report
            .warnings
            .push(format!("threshold is not regular: smallest singular value {:.3e}", check.smallest_singular_value));
    }
    if let Some(s_grid) = &config.s_grid {
        let profile_spec = PotentialSpec {
            coupling: 1.0,
            ..config.potential.clone()
        };
        let profile = sample_potential(&profile_spec, &s.grid, &s.mats)?;
        let mut coupling = open_table(out, "coupling.csv", &["s", "sigma_min"], report)?;
        let sweep = report.stage("coupling", |_| {
            lap::coupling_sweep(&profile, s_grid, sigma, &s.mats, config.m, &s.grid)
        })?;
        for (sv, v) in &sweep.table {
            coupling.floats(&[*sv, *v])?;
        }
        results["s_star"] = json!(sweep.s_star);
        results["s_bracket"] = json!(sweep.bracket);
        results["min_singular_value"] = json!(sweep.min_value);
    }
    report.results = results;
    Ok(())
}

const PRODUCT_HEADER: [&str; 7] = ["spec", "class", "z", "M", "norm_lo", "norm_hi", "pass"];

fn directed(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let delta = config.delta.expect("validated");
    let d = config.d.expect("validated");
    let partition = report.stage("partition", |_| sphere_partition(config.n, delta))?;
    let products = config.products.as_ref().expect("validated");
    let zs = config.z_list.as_ref().expect("validated");
    let specs: Vec<ProductSpec> = products
        .iter()
        .flat_map(|p| zs.iter().map(move |&z| ProductSpec::new(p.clone(), z, d)))
        .collect();
    for spec in &specs {
        classify_product(spec, &partition)?;
    }
    let mut table = open_table(out, "directed.csv", &PRODUCT_HEADER, report)?;
    report.stage("products", |_| {
        for spec in &specs {
            let class = classify_product(spec, &partition)?;
            let b = product_norm(spec, &partition, &s.potential, &s.mats, config.m, &s.grid, config.branch)?;
            table.row(&[
                spec.label(),
                class.to_string(),
                format_float(spec.z),
                spec.len().to_string(),
                format_float(b.lo),
                format_float(b.hi),
                (b.hi <= SMALL_PRODUCT).to_string(),
            ])?;
        }
        Ok(())
    })?;
    report.results = json!({ "pieces": partition.len(), "small_threshold": SMALL_PRODUCT });
    Ok(())
}

fn neumann(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let zs = config.z_list.as_ref().expect("validated");
    let ms = config.m_list.as_ref().expect("validated");
    let mut table = open_table(out, "neumann.csv", &PRODUCT_HEADER, report)?;
    let mut found = None;
    report.stage("tail", |_| {
        for &z in zs {
            for &power in ms {
                let t = neumann_tail_check(power, z, &s.potential, &s.mats, config.m, &s.grid, config.branch)?;
                table.row(&[
                    "neumann".into(),
                    "full".into(),
                    format_float(z),
                    power.to_string(),
                    format_float(t.norm.lo),
                    format_float(t.norm.hi),
                    t.pass.to_string(),
                ])?;
                if t.pass && found.is_none() {
                    found = Some((power, z, t.norm.hi, t.inverse_bound));
                }
            }
        }
        Ok(())
    })?;
    report.results = match found {
        Some((power, z, hi, inv)) => json!({ "first_pass": { "M": power, "z": z, "norm_hi": hi, "inverse_bound": inv } }),
        None => json!({ "first_pass": null }),
    };
    if found.is_none() {
        report.warnings.push("no (M, z) pair reached a tail norm of 1/2".into());
    }
    Ok(())
}

fn initial_field(config: &RunConfig, grid: &crate::fields::Grid, spinor_dim: usize) -> SpinorField {
    let init = config.initial_datum();
    let f = propagator::wave_packet(
        grid,
        &init.spinor(spinor_dim),
        &init.center(config.n),
        init.width,
        &init.momentum(config.n),
    );
    if init.mean_free {
        propagator::remove_mean(&f)
    } else {
        f
    }
}

fn hamiltonian(config: &RunConfig, s: &Setup, report: &mut RunReport) -> Result<propagator::DiscreteHamiltonian> {
    let h = report.stage("diagonalize", |_| {
        propagator::discretize_hamiltonian(&s.mats, config.m, &s.potential, &s.grid)
    })?;
    report.warnings.extend(h.warnings.iter().cloned());
    Ok(h)
}

fn evolve(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let h = hamiltonian(config, &s, report)?;
    let f = initial_field(config, &s.grid, s.mats.spinor_dim());
    let times = config.times.as_ref().expect("validated");
    let sigma = config.sigma.expect("validated");
    let mut table = open_table(out, "evolve.csv", &["t", "l2_norm", "weighted_norm"], report)?;
    let rows = report.stage("evolve", |_| propagator::evolution_table(&h, &f, times, sigma))?;
    for r in &rows {
        table.floats(&[r.t, r.l2_norm, r.weighted_norm])?;
    }
    let bound = h.point_spectrum_flags.iter().filter(|f| **f).count();
    report.results = json!({
        "initial_norm": f.l2_norm(),
        "max_norm_drift": rows.iter().map(|r| (r.l2_norm - f.l2_norm()).abs()).fold(0.0, f64::max),
        "point_spectrum_count": bound,
    });
    Ok(())
}

fn strichartz(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    let h = hamiltonian(config, &s, report)?;
    let f = initial_field(config, &s.grid, s.mats.spinor_dim());
    let queries = config.strichartz.as_ref().expect("validated");
    let mut table = open_table(out, "strichartz.csv", &["p", "q", "theta", "T", "ratio"], report)?;
    report.stage("norms", |_| {
        for q in queries {
            let ratio = propagator::strichartz_norm(&h, &f, q)?;
            table.floats(&[q.p, q.q, q.theta, q.window, ratio])?;
        }
        Ok(())
    })?;
    report.results = json!({
        "point_spectrum_count": h.point_spectrum_flags.iter().filter(|f| **f).count(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_text(text: &str) -> (tempfile::TempDir, Result<RunReport>) {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config_str(text).unwrap();
        let r = run(&config, dir.path());
        (dir, r)
    }

    #[test]
    fn matrices_for_n3_have_block_form() {
        let (dir, r) = run_text(r#"{"n":3,"subcommand":"matrices"}"#);
        r.unwrap();
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("matrices.json")).unwrap()).unwrap();
        // beta = diag(1, 1, -1, -1)
        let beta = &doc["beta"];
        assert_eq!(beta[0][0], json!([1.0, 0.0]));
        assert_eq!(beta[2][2], json!([-1.0, 0.0]));
        // alpha_1 carries [[0, -i], [i, 0]] in both off-diagonal blocks.
        assert_eq!(doc["alpha"][0][0][3], json!([0.0, -1.0]));
        assert_eq!(doc["alpha"][0][3][0], json!([0.0, 1.0]));
        assert_eq!(doc["alpha"][1][0][3], json!([1.0, 0.0]));
    }

    #[test]
    fn summary_echo_round_trips() {
        let (dir, r) = run_text(r#"{"n":2,"subcommand":"kernel-dump","z":2.0,"r_grid":[0.1,0.5,1.0,3.0]}"#);
        let report = r.unwrap();
        let summary: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        let echo = config::parse_config_value(summary["config_echo"].clone()).unwrap();
        assert_eq!(config_hash(&echo), report.config_hash);
        let csv = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
        assert!(csv.starts_with("r,Re,Im,osc_Re,osc_Im,loc_Re,loc_Im\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"n":2,"subcommand":"lap-sweep","sigma":0.6,"grid":{"L":8,"points":32},"lambda_grid":[]}"#).unwrap();
        let out = dir.path().join("out");
        let args = ["dirac-lap", "lap-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(main_with_args(args), EXIT_INVALID);
        assert!(!out.exists(), "nothing is written for a rejected config");
        std::fs::write(&cfg, r#"{"n":2,"subcommand":"matrices"}"#).unwrap();
        let args = ["dirac-lap", "lap-sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(main_with_args(args), EXIT_INVALID);
        let args = ["dirac-lap", "matrices", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        assert_eq!(main_with_args(args), EXIT_OK);
        assert_eq!(exit_code(&Error::MemoryCap { dim: 1, cap_bytes: 1 }), EXIT_NUMERICAL);
    }
}
