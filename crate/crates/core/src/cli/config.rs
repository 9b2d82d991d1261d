//! Run configuration: JSON in, a fully validated [`RunConfig`] out.
//!
//! Parsing is done key by key on a `serde_json::Value` so that a bad type in
//! one field does not hide problems in the others. Semantic checks run
//! afterwards and are collected the same way.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::fields::{Grid, PotentialKind, PotentialSpec};
use crate::highenergy::ProductIndex;
use crate::kernels::Branch;
use crate::propagator::StrichartzQuery;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Matrices,
    KernelDump,
    LapSweep,
    ComplexSweep,
    Threshold,
    Directed,
    Neumann,
    Evolve,
    Strichartz,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Matrices => "matrices",
            Subcommand::KernelDump => "kernel-dump",
            Subcommand::LapSweep => "lap-sweep",
            Subcommand::ComplexSweep => "complex-sweep",
            Subcommand::Threshold => "threshold",
            Subcommand::Directed => "directed",
            Subcommand::Neumann => "neumann",
            Subcommand::Evolve => "evolve",
            Subcommand::Strichartz => "strichartz",
        }
    }

    fn needs_grid(self) -> bool {
        !matches!(self, Subcommand::Matrices | Subcommand::KernelDump)
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(alias = "points")]
    pub points_per_axis: usize,
    #[serde(default)]
    pub periodic: bool,
}

/// Initial datum of the propagator subcommands: a Gaussian wave packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDatum {
    /// Spinor as `[re, im]` pairs; defaults to the first basis vector.
    #[serde(default)]
    pub spinor: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "unit")]
    pub width: f64,
    #[serde(default)]
    pub momentum: Option<Vec<f64>>,
    /// Subtract the zero Fourier mode (needed by massless smoothing).
    #[serde(default)]
    pub mean_free: bool,
}

fn unit() -> f64 {
    1.0
}

impl Default for InitialDatum {
    fn default() -> Self {
        Self {
            spinor: None,
            center: None,
            width: 1.0,
            momentum: None,
            mean_free: false,
        }
    }
}

impl InitialDatum {
    pub fn spinor(&self, spinor_dim: usize) -> Vec<C64> {
        match &self.spinor {
            Some(v) => v.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
            None => {
                let mut v = vec![C64::new(0.0, 0.0); spinor_dim];
                v[0] = C64::new(1.0, 0.0);
                v
            }
        }
    }

    pub fn center(&self, n: usize) -> Vec<f64> {
        self.center.clone().unwrap_or_else(|| vec![0.0; n])
    }

    pub fn momentum(&self, n: usize) -> Vec<f64> {
        self.momentum.clone().unwrap_or_else(|| vec![0.0; n])
    }
}

/// Everything a run needs. Optional blocks belong to particular subcommands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub n: usize,
    pub m: f64,
    pub potential: PotentialSpec,
    pub grid: Option<GridConfig>,
    pub sigma: Option<f64>,
    #[serde(with = "branch_text")]
    pub branch: Branch,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Also compute `B -> B*` norms in lap sweeps.
    pub b_norm: bool,
    pub lambda_grid: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub gamma_grid: Option<Vec<f64>>,
    pub z: Option<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub lambda_offsets: Option<Vec<f64>>,
    pub s_grid: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub d: Option<f64>,
    pub products: Option<Vec<Vec<ProductIndex>>>,
    pub z_list: Option<Vec<f64>>,
    #[serde(rename = "M")]
    pub m_list: Option<Vec<usize>>,
    pub times: Option<Vec<f64>>,
    pub initial: Option<InitialDatum>,
    pub strichartz: Option<Vec<StrichartzQuery>>,
}

mod branch_text {
    use super::*;

    pub fn serialize<S: serde::Serializer>(b: &Branch, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&b.to_string())
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Branch, D::Error> {
        let text = String::deserialize(d)?;
        Branch::from_str(&text).map_err(serde::de::Error::custom)
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Fields {
    map: Map<String, Value>,
    errors: Vec<String>,
}

impl Fields {
    /// Take `key` (or one of its aliases) and decode it.
    fn take<T: DeserializeOwned>(&mut self, keys: &[&str]) -> Option<T> {
        let present: Vec<&str> = keys.iter().copied().filter(|k| self.map.contains_key(*k)).collect();
        if present.len() > 1 {
            self.errors
                .push(format!("fields {} are aliases; give only one", present.join(" and ")));
        }
        let key = *present.first()?;
        let raw = self.map.remove(key)?;
        for other in &present[1..] {
            self.map.remove(*other);
        }
        if raw.is_null() {
            return None;
        }
        match serde_json::from_value(raw) {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("field '{key}': {e}"));
                None
            }
        }
    }

    fn required<T: DeserializeOwned>(&mut self, keys: &[&str]) -> Option<T> {
        let had = keys.iter().any(|k| self.map.get(*k).is_some_and(|v| !v.is_null()));
        let v = self.take(keys);
        if !had {
            self.errors.push(format!("missing field '{}'", keys[0]));
        }
        v
    }
}

fn potential_value(v: Value) -> Result<PotentialSpec, String> {
    match v {
        Value::String(s) if s == "zero" => Ok(PotentialSpec::zero()),
        Value::String(s) => Err(format!(
            "potential given as the string '{s}'; only \"zero\" may be abbreviated, other kinds need an object"
        )),
        other => {
            let mut spec: PotentialSpec = serde_json::from_value(other).map_err(|e| e.to_string())?;
            if spec.kind == PotentialKind::Zero {
                spec.coupling = 0.0;
            }
            Ok(spec)
        }
    }
}

/// Read and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read config {}: {e}", path.display())]))?;
    parse_config_str(&text)
}

/// Validate configuration text. Every violation is reported, not just the first.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigErrors> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigErrors(vec![format!("config is not valid JSON: {e}")]))?;
    parse_config_value(value)
}

pub fn parse_config_value(value: Value) -> Result<RunConfig, ConfigErrors> {
    let Value::Object(map) = value else {
        return Err(ConfigErrors(vec!["config must be a JSON object".into()]));
    };
    let mut f = Fields {
        map,
        errors: Vec::new(),
    };
    let subcommand: Option<Subcommand> = f.required(&["subcommand"]);
    let n: Option<usize> = f.required(&["n", "dimension"]);
    let m: f64 = f.take(&["m", "mass"]).unwrap_or(0.0);
    let potential = match f.map.remove("potential").or_else(|| f.map.remove("V")) {
        None | Some(Value::Null) => Some(PotentialSpec::zero()),
        Some(v) => match potential_value(v) {
            Ok(p) => Some(p),
            Err(e) => {
                f.errors.push(format!("field 'potential': {e}"));
                None
            }
        },
    };
    let grid: Option<GridConfig> = f.take(&["grid"]);
    let sigma: Option<f64> = f.take(&["sigma"]);
    let branch = match f.take::<String>(&["branch"]) {
        None => Branch::Plus,
        Some(s) => Branch::from_str(&s).unwrap_or_else(|_| {
            f.errors.push(format!("field 'branch': '{s}' is not one of plus, minus, +, -"));
            Branch::Plus
        }),
    };
    let seed: u64 = f.take(&["seed"]).unwrap_or(0);
    let output_dir: Option<PathBuf> = f.take(&["output_dir"]);
    let b_norm: bool = f.take(&["b_norm"]).unwrap_or(false);
    let lambda_grid = f.take(&["lambda_grid"]);
    let lambda = f.take(&["lambda"]);
    let gamma_grid = f.take(&["gamma_grid"]);
    let z = f.take(&["z"]);
    let r_grid = f.take(&["r_grid"]);
    let lambda_offsets = f.take(&["lambda_offsets"]);
    let s_grid = f.take(&["s_grid"]);
    let delta = f.take(&["delta"]);
    let d = f.take(&["d"]);
    let products = f.take(&["products"]);
    let z_list = f.take(&["z_list"]);
    let m_list = f.take(&["M", "m_list"]);
    let times = f.take(&["times"]);
    let initial = f.take(&["initial"]);
    let strichartz = f.take(&["strichartz"]);
    let mut unknown: Vec<&String> = f.map.keys().collect();
    unknown.sort();
    for k in unknown {
        f.errors.push(format!("unknown field '{k}'"));
    }
    let mut errors = f.errors;
    let (Some(subcommand), Some(n), Some(potential)) = (subcommand, n, potential) else {
        return Err(ConfigErrors(errors));
    };
    let config = RunConfig {
        subcommand,
        n,
        m,
        potential,
        grid,
        sigma,
        branch,
        seed,
        output_dir,
        b_norm,
        lambda_grid,
        lambda,
        gamma_grid,
        z,
        r_grid,
        lambda_offsets,
        s_grid,
        delta,
        d,
        products,
        z_list,
        m_list,
        times,
        initial,
        strichartz,
    };
    errors.extend(config.violations());
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn need<'a, T>(errors: &mut Vec<String>, v: &'a Option<T>, key: &str, sub: Subcommand) -> Option<&'a T> {
    if v.is_none() {
        errors.push(format!("{sub} needs field '{key}'"));
    }
    v.as_ref()
}

fn non_empty<'a, T>(errors: &mut Vec<String>, v: &'a Option<Vec<T>>, key: &str, sub: Subcommand) -> Option<&'a [T]> {
    let v = need(errors, v, key, sub)?;
    if v.is_empty() {
        errors.push(format!("{key} must not be empty"));
        return None;
    }
    Some(v)
}

fn all_positive(errors: &mut Vec<String>, v: &[f64], key: &str) {
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        errors.push(format!("{key} entries must be positive and finite (found {bad})"));
    }
}

impl RunConfig {
    /// The grid, if configured and valid.
    pub fn grid(&self) -> crate::Result<Grid> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| crate::Error::invalid("no grid configured"))?;
        Grid::new(self.n, g.half_width, g.points_per_axis, g.periodic)
    }

    pub fn initial_datum(&self) -> InitialDatum {
        self.initial.clone().unwrap_or_default()
    }

    /// Semantic checks, each naming the field and the rule it breaks.
    pub fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        let sub = self.subcommand;
        let n = self.n;
        if sub == Subcommand::Matrices {
            if !(2..=12).contains(&n) {
                e.push(format!("n = {n}: the Clifford family is built for 2 <= n <= 12"));
            }
        } else if !(n == 2 || n == 3) {
            e.push(format!("n = {n}: {sub} supports n = 2 or n = 3"));
        }
        if !(self.m >= 0.0) || !self.m.is_finite() {
            e.push(format!("m = {} must be a finite non-negative mass", self.m));
        }
        e.extend(self.potential.validate());

        let grid = if sub.needs_grid() {
            match &self.grid {
                None => {
                    e.push(format!("{sub} needs field 'grid'"));
                    None
                }
                Some(g) => {
                    if !(g.half_width > 0.0) || !g.half_width.is_finite() {
                        e.push("grid.L must be positive".into());
                    }
                    if g.points_per_axis < 2 {
                        e.push("grid.points_per_axis must be at least 2".into());
                    }
                    self.grid().ok()
                }
            }
        } else {
            None
        };
        let spacing = grid.as_ref().map(|g| g.spacing());
        let resolves = |e: &mut Vec<String>, z: f64, what: &str| {
            if let Some(h) = spacing {
                let limit = std::f64::consts::PI / (4.0 * z);
                if h > limit * (1.0 + 1e-12) {
                    e.push(format!(
                        "{what} = {z} is not resolved by grid spacing h = {h}; need h <= pi / (4 z) = {limit}"
                    ));
                }
            }
        };
        let sigma_lap = |e: &mut Vec<String>, sigma: Option<f64>| match sigma {
            None => e.push(format!("{sub} needs field 'sigma'")),
            Some(s) if !(s > 0.5) => e.push(format!(
                "sigma = {s}: sigma must exceed 1/2 for weighted limiting absorption bounds"
            )),
            _ => {}
        };

        match sub {
            Subcommand::Matrices => {}
            Subcommand::KernelDump => {
                if let Some(z) = need(&mut e, &self.z, "z", sub) {
                    if !(*z > 0.0) {
                        e.push(format!("z = {z} must be positive"));
                    }
                }
                if let Some(r) = non_empty(&mut e, &self.r_grid, "r_grid", sub) {
                    all_positive(&mut e, r, "r_grid");
                }
            }
            Subcommand::LapSweep => {
                sigma_lap(&mut e, self.sigma);
                if let Some(ls) = non_empty(&mut e, &self.lambda_grid, "lambda_grid", sub) {
                    for l in ls {
                        if !(l.abs() > self.m) || !l.is_finite() {
                            e.push(format!(
                                "lambda_grid entry {l} must satisfy |lambda| > m = {} (continuous spectrum)",
                                self.m
                            ));
                        }
                    }
                }
            }
            Subcommand::ComplexSweep => {
                sigma_lap(&mut e, self.sigma);
                if let Some(l) = need(&mut e, &self.lambda, "lambda", sub) {
                    if !(l.abs() > self.m) {
                        e.push(format!("lambda = {l} must satisfy |lambda| > m = {}", self.m));
                    }
                }
                if let Some(gs) = non_empty(&mut e, &self.gamma_grid, "gamma_grid", sub) {
                    if gs.iter().any(|g| *g == 0.0 || !g.is_finite()) {
                        e.push("gamma_grid entries must be finite and nonzero".into());
                    }
                }
            }
            Subcommand::Threshold => {
                match (n, self.m) {
                    (3, _) => {}
                    (2, m) if m == 0.0 => {}
                    (2, _) => e.push("threshold with n = 2 is only available for m = 0".into()),
                    _ => {}
                }
                match self.sigma {
                    None => e.push("threshold needs field 'sigma'".into()),
                    Some(s) if self.m > 0.0 && !(s > 1.0) => e.push(format!(
                        "sigma = {s}: sigma must exceed 1 when mass > 0 per threshold-suite hypothesis"
                    )),
                    Some(s) if !(s > 0.5) => e.push(format!("sigma = {s}: sigma must exceed 1/2")),
                    _ => {}
                }
                if let Some(o) = &self.lambda_offsets {
                    all_positive(&mut e, o, "lambda_offsets");
                }
                if let Some(s) = &self.s_grid {
                    if s.len() < 2 {
                        e.push("s_grid needs at least two couplings".into());
                    }
                }
            }
            Subcommand::Directed | Subcommand::Neumann => {
                if let Some(zs) = non_empty(&mut e, &self.z_list, "z_list", sub) {
                    all_positive(&mut e, zs, "z_list");
                    let zmax = zs.iter().cloned().fold(0.0, f64::max);
                    if zmax > 0.0 {
                        resolves(&mut e, zmax, "largest z");
                    }
                }
                if sub == Subcommand::Directed {
                    if let Some(delta) = need(&mut e, &self.delta, "delta", sub) {
                        let max = if n == 2 { std::f64::consts::PI } else { 1.0 };
                        if !(*delta > 0.0 && *delta <= max) {
                            e.push(format!("delta = {delta} must lie in (0, {max}]"));
                        }
                    }
                    if let Some(d) = need(&mut e, &self.d, "d", sub) {
                        if !(*d > 0.0) {
                            e.push(format!("d = {d} must be positive"));
                        }
                    }
                    if let Some(ps) = non_empty(&mut e, &self.products, "products", sub) {
                        if ps.iter().any(|p| p.is_empty()) {
                            e.push("every product needs at least one factor".into());
                        }
                    }
                } else if let Some(ms) = non_empty(&mut e, &self.m_list, "M", sub) {
                    if ms.contains(&0) {
                        e.push("M entries must be at least 1".into());
                    }
                }
            }
            Subcommand::Evolve | Subcommand::Strichartz => {
                if let Some(g) = &self.grid {
                    if !g.periodic {
                        e.push(format!("{sub} needs a periodic grid (grid.periodic = true)"));
                    }
                }
                self.check_initial(&mut e);
                if sub == Subcommand::Evolve {
                    if let Some(ts) = non_empty(&mut e, &self.times, "times", sub) {
                        if ts.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
                            e.push("times must be finite and non-negative".into());
                        }
                    }
                    match self.sigma {
                        None => e.push("evolve needs field 'sigma' for the weighted norm".into()),
                        Some(s) if !(s >= 0.0) => e.push(format!("sigma = {s} must be non-negative")),
                        _ => {}
                    }
                } else if let Some(qs) = non_empty(&mut e, &self.strichartz, "strichartz", sub) {
                    for (k, q) in qs.iter().enumerate() {
                        if q.massive != (self.m > 0.0) {
                            e.push(format!(
                                "strichartz[{k}]: massive = {} does not match m = {}",
                                q.massive, self.m
                            ));
                        }
                        for v in q.violations(n) {
                            e.push(format!("strichartz[{k}]: {v}"));
                        }
                        if !q.massive && q.theta != 0.0 && !self.initial_datum().mean_free {
                            e.push(format!(
                                "strichartz[{k}]: massless smoothing needs a mean-free datum (initial.mean_free = true)"
                            ));
                        }
                    }
                }
            }
        }
        e
    }

    fn check_initial(&self, e: &mut Vec<String>) {
        let init = self.initial_datum();
        let s = crate::clifford::spinor_dim(self.n.clamp(2, 12));
        if let Some(sp) = &init.spinor {
            if sp.len() != s {
                e.push(format!("initial.spinor has {} components, spinors have {s}", sp.len()));
            } else if sp.iter().all(|[a, b]| *a == 0.0 && *b == 0.0) {
                e.push("initial.spinor must be nonzero".into());
            }
        }
        for (key, v) in [("center", &init.center), ("momentum", &init.momentum)] {
            if let Some(v) = v {
                if v.len() != self.n {
                    e.push(format!("initial.{key} has {} entries, n = {}", v.len(), self.n));
                }
            }
        }
        if !(init.width > 0.0) {
            e.push(format!("initial.width = {} must be positive", init.width));
        }
    }

    /// Canonical JSON text, the thing hashed and echoed.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
