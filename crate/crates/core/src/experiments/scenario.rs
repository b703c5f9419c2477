//! JSON scenario files and the pipelines they drive.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::commutator::{commutator_test, CommutatorOptions};
use super::corpus::random_field;
use super::fit::{decay_fit, log_log_fit, spread_ratio};
use super::knapp::{knapp_packet, KnappShape};
use super::nls::{nls_solve, NlsParams};
use crate::coefficients::{build_profile, CoefficientProfile, ProfileSpec};
use crate::error::{LabError, Result};
use crate::field::{Field, Trajectory};
use crate::grid::Grid1D;
use crate::norms::{lq_norm, strichartz_quotient, StrichartzOptions, StrichartzPair};
use crate::operator1d::{lp_band, lp_cutoff, SpectralFunction};
use crate::phillips::{phillips_apply, KernelGrid, SymbolSample};
use crate::tensor_propagator::TensorOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FreeDecay,
    BvUniform,
    KronigPenneyWindow,
    KnappSweep,
    PhillipsOracle,
    CommutatorScaling,
    NlsMass,
    BochnerRieszUniform,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FreeDecay => "free_decay",
            ExperimentKind::BvUniform => "bv_uniform",
            ExperimentKind::KronigPenneyWindow => "kronig_penney_window",
            ExperimentKind::KnappSweep => "knapp_sweep",
            ExperimentKind::PhillipsOracle => "phillips_oracle",
            ExperimentKind::CommutatorScaling => "commutator_scaling",
            ExperimentKind::NlsMass => "nls_mass",
            ExperimentKind::BochnerRieszUniform => "bochner_riesz_uniform",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Points per axis (power of two).
    pub n: usize,
    /// Torus length per axis.
    pub length: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl TimeSpec {
    pub fn samples(&self) -> Vec<f64> {
        self.scaled(1.0)
    }

    fn scaled(&self, s: f64) -> Vec<f64> {
        let (a, b) = (self.t_min * s, self.t_max * s);
        if self.count == 1 {
            return vec![a];
        }
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / m;
                match self.spacing {
                    Spacing::Geometric => a * (b / a).powf(f),
                    Spacing::Uniform => a + (b - a) * f,
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.count >= 1
            && self.t_min.is_finite()
            && self.t_max.is_finite()
            && self.t_min <= self.t_max
            && self.t_min >= 0.0
            && (self.spacing == Spacing::Uniform || self.t_min > 0.0);
        if ok {
            Ok(())
        } else {
            Err(LabError::Config(format!("bad time grid {self:?} (geometric spacing needs t_min > 0)")))
        }
    }
}

/// Even radial symbols for the Phillips oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `exp(-s^2 / (2 width^2))`.
    Gaussian { width: f64 },
    /// `exp(-s^2 / (2 width^2)) cos(frequency s)`.
    ModulatedGaussian { width: f64, frequency: f64 },
    /// Littlewood-Paley low-frequency cutoff `phi(s)`.
    LpLow,
    /// Littlewood-Paley band `psi_k(s)`.
    LpBand { k: i32 },
}

impl SymbolSpec {
    fn label(&self) -> String {
        match self {
            SymbolSpec::Gaussian { width } => format!("gaussian(w={width})"),
            SymbolSpec::ModulatedGaussian { width, frequency } => format!("modulated_gaussian(w={width},f={frequency})"),
            SymbolSpec::LpLow => "lp_low".into(),
            SymbolSpec::LpBand { k } => format!("lp_band(k={k})"),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        match *self {
            SymbolSpec::Gaussian { width } => (-s * s / (2.0 * width * width)).exp(),
            SymbolSpec::ModulatedGaussian { width, frequency } => (-s * s / (2.0 * width * width)).exp() * (frequency * s).cos(),
            SymbolSpec::LpLow => lp_cutoff(s),
            SymbolSpec::LpBand { k } => lp_band(k, s),
        }
    }

    /// `(support radius, xi bandwidth of the transform)`.
    fn extent(&self) -> (f64, f64) {
        match *self {
            SymbolSpec::Gaussian { width } => (9.0 * width, 10.0 / width),
            SymbolSpec::ModulatedGaussian { width, frequency } => (9.0 * width, 10.0 / width + frequency),
            SymbolSpec::LpLow => (2.0, 64.0),
            SymbolSpec::LpBand { k } => (2f64.powi(k + 1), 64.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SymbolSpec::Gaussian { width } | SymbolSpec::ModulatedGaussian { width, .. } if !(width > 0.0) => {
                Err(LabError::Config(format!("symbol width {width} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Experiment-specific settings; each kind reads the knobs it documents and ignores the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Knobs {
    /// Uniformity band (`max / min` bound); default 2.
    pub factor: Option<f64>,
    /// Exponent tolerance; free_decay default 0.05 (`ell = 2`) or 0.1 (`ell = 1`), knapp_sweep 0.15.
    pub tolerance: Option<f64>,
    /// Coherence window constant `c` in `|t| <= c / N`; default 0.25.
    pub window_c: Option<f64>,
    /// Long-time window for the unlocalized Kronig-Penney quotient; default `[1, 2]`.
    pub long_window: Option<(f64, f64)>,
    /// Samples per time window (kronig_penney_window); default 24 local, 41 long.
    pub window_samples: Option<(usize, usize)>,
    /// Littlewood-Paley band of localized free half-wave data; default 0.
    pub band_k: Option<i32>,
    /// Dyadic rescalings for bv_uniform; default `[0, 2]`.
    pub k_list: Option<Vec<i32>>,
    /// Width of Gaussian Schrodinger data; default 1.
    pub data_width: Option<f64>,
    pub symbols: Option<Vec<SymbolSpec>>,
    pub corpus_size: Option<usize>,
    /// Random corpus bandwidth as a multiple of `R` (bochner_riesz_uniform); default 2.
    pub corpus_band_factor: Option<f64>,
    pub delta: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub q: Option<f64>,
    pub nls: Option<NlsParams>,
    /// Power-iteration steps (commutator_scaling); default 60.
    pub iterations: Option<usize>,
    /// Apply `<D>^{-1/p}` in Strichartz quotients; default false.
    pub inhomogeneous: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ExperimentKind,
    /// Output file stem; defaults to the kind name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_ell")]
    pub ell: u8,
    /// One profile per axis, or a single profile shared by all axes. The phillips_oracle
    /// kind reads the list as a one-dimensional corpus.
    pub profiles: Vec<ProfileSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub times: Option<TimeSpec>,
    #[serde(default)]
    pub pairs: Vec<StrichartzPair>,
    /// Frequency sweep `N` values.
    #[serde(default)]
    pub n_list: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub knobs: Knobs,
}

fn default_d() -> usize {
    1
}

fn default_ell() -> u8 {
    2
}

impl ScenarioConfig {
    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    fn grids(&self) -> Result<Vec<Grid1D>> {
        let g = Grid1D::new(self.grid.n, self.grid.length)?;
        Ok(vec![g; self.d])
    }

    fn axis_profiles(&self) -> Result<Vec<CoefficientProfile>> {
        let built = self.profiles.iter().map(build_profile).collect::<Result<Vec<_>>>()?;
        Ok(if built.len() == 1 { vec![built[0].clone(); self.d] } else { built })
    }

    fn operator(&self) -> Result<TensorOperator> {
        TensorOperator::from_profiles(&self.axis_profiles()?, &self.grids()?)
    }

    fn times(&self) -> Result<TimeSpec> {
        self.times.ok_or_else(|| LabError::Config(format!("{} needs a `times` block", self.kind.name())))
    }

    fn factor(&self) -> f64 {
        self.knobs.factor.unwrap_or(2.0)
    }
}

/// Parses a scenario file; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
}

pub fn config_from_value(v: Value) -> Result<ScenarioConfig> {
    serde_json::from_value(v).map_err(|e| LabError::Config(e.to_string()))
}

/// Sets `key` (dot-separated path) to `raw`, read as JSON when it parses and as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| LabError::Config(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(LabError::Config(format!("override key `{key}` is malformed")));
    }
    let mut node = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| LabError::Config(format!("override index `{part}` in `{key}`")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| LabError::Config(format!("override index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(LabError::Config(format!("override `{key}` descends into a scalar"))),
        };
    }
    Ok(())
}

/// JSON Schema of the scenario file format.
pub fn config_schema() -> Value {
    serde_json::to_value(schemars::schema_for!(ScenarioConfig)).expect("schema serializes")
}

/// Semantic checks beyond the schema.
pub fn validate_config(cfg: &ScenarioConfig) -> Result<()> {
    let bad = |m: String| Err(LabError::Config(m));
    if !(1..=3).contains(&cfg.d) {
        return bad(format!("d = {} outside 1..=3", cfg.d));
    }
    if cfg.ell != 1 && cfg.ell != 2 {
        return bad(format!("ell = {} must be 1 or 2", cfg.ell));
    }
    if cfg.profiles.is_empty() {
        return bad("at least one profile is required".into());
    }
    let corpus = cfg.kind == ExperimentKind::PhillipsOracle;
    if !corpus && cfg.profiles.len() != 1 && cfg.profiles.len() != cfg.d {
        return bad(format!("{} profiles for d = {}", cfg.profiles.len(), cfg.d));
    }
    for p in &cfg.profiles {
        build_profile(p).map_err(|e| LabError::Config(e.to_string()))?;
    }
    Grid1D::new(cfg.grid.n, cfg.grid.length).map_err(|e| LabError::Config(e.to_string()))?;
    if let Some(t) = &cfg.times {
        t.validate()?;
    }
    if cfg.n_list.iter().any(|n| !(*n > 0.0 && n.is_finite())) {
        return bad("n_list entries must be positive".into());
    }
    if let Some(f) = cfg.knobs.factor {
        if !(f >= 1.0) {
            return bad(format!("factor {f} must be >= 1"));
        }
    }
    let need_1d = |what: &str| if cfg.d != 1 { bad(format!("{what} runs in d = 1")) } else { Ok(()) };
    match cfg.kind {
        ExperimentKind::FreeDecay => {
            let t = cfg.times()?;
            if t.count < super::fit::MIN_DECAY_SAMPLES || t.t_min <= 0.0 {
                return bad("free_decay needs at least 5 positive times".into());
            }
        }
        ExperimentKind::BvUniform => {
            need_1d("bv_uniform")?;
            cfg.times()?;
            if cfg.ell != 2 {
                return bad("bv_uniform measures the Schrodinger flow (ell = 2)".into());
            }
        }
        ExperimentKind::KronigPenneyWindow => {
            need_1d("kronig_penney_window")?;
            if cfg.n_list.len() < 2 || cfg.n_list.iter().any(|n| n.log2().fract() != 0.0) {
                return bad("kronig_penney_window needs at least two dyadic N".into());
            }
        }
        ExperimentKind::KnappSweep => {
            cfg.times()?;
            if cfg.pairs.is_empty() || cfg.n_list.len() < 2 {
                return bad("knapp_sweep needs pairs and at least two N".into());
            }
            if let Some(p) = cfg.pairs.iter().find(|p| p.d != cfg.d || p.ell != cfg.ell) {
                return bad(format!("pair {p:?} does not match d = {}, ell = {}", cfg.d, cfg.ell));
            }
        }
        ExperimentKind::PhillipsOracle => {
            need_1d("phillips_oracle")?;
            for s in cfg.knobs.symbols.iter().flatten() {
                s.validate()?;
            }
        }
        ExperimentKind::CommutatorScaling => {
            need_1d("commutator_scaling")?;
            if cfg.n_list.len() < 2 {
                return bad("commutator_scaling needs at least two N".into());
            }
        }
        ExperimentKind::NlsMass => {
            if cfg.knobs.nls.is_none() {
                return bad("nls_mass needs knobs.nls".into());
            }
        }
        ExperimentKind::BochnerRieszUniform => {
            if cfg.knobs.radii.as_ref().is_none_or(|r| r.is_empty() || r.iter().any(|x| !(*x > 0.0))) {
                return bad("bochner_riesz_uniform needs positive knobs.radii".into());
            }
            if cfg.knobs.delta.is_some_and(|d| d < 0.0) {
                return bad("delta must be nonnegative".into());
            }
        }
    }
    Ok(())
}

/// Numeric table written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| LabError::Io(std::io::Error::other(e));
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| LabError::Io(std::io::Error::other(e.to_string())))
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

struct Outcome {
    table: Table,
    summary: Map<String, Value>,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Mass-one discrete delta at the box centre.
fn centred_delta(grids: &[Grid1D]) -> Result<Field> {
    let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
    let mut a = ArrayD::<Complex64>::zeros(IxDyn(&shape));
    let idx: Vec<usize> = shape.iter().map(|n| n / 2).collect();
    let vol: f64 = grids.iter().map(|g| g.spacing()).product();
    a[IxDyn(&idx)] = Complex64::new(1.0 / vol, 0.0);
    Field::new(grids.to_vec(), vec![a])
}

fn gaussian_bump(grids: &[Grid1D], width: f64) -> Result<Field> {
    let centre: Vec<f64> = grids.iter().map(|g| g.point(g.n() / 2)).collect();
    Field::from_fn(grids.to_vec(), |x| {
        let r2: f64 = x.iter().zip(&centre).map(|(a, c)| (a - c).powi(2)).sum();
        Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
    })
}

/// `(t, ||F_t(L) u0||_inf)` without storing the trajectory.
fn sup_series(op: &TensorOperator, family: impl Fn(f64) -> SpectralFunction, u0: &Field, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let s = op.to_spectral(u0)?;
    times.iter().map(|&t| Ok((t, op.from_spectral(&op.multiply(&family(t), &s)?)?.max_abs()))).collect()
}

fn free_decay(cfg: &ScenarioConfig) -> Result<Outcome> {
    let op = stage("build_operator", cfg.operator())?;
    let grids = op.grids();
    let times = cfg.times()?.samples();
    let u0 = stage(
        "initial_data",
        if cfg.ell == 2 {
            gaussian_bump(&grids, cfg.knobs.data_width.unwrap_or(1.0))
        } else {
            centred_delta(&grids).and_then(|d| op.joint_spectral_apply(&SpectralFunction::lp_band(cfg.knobs.band_k.unwrap_or(0)), &d))
        },
    )?;
    let mass = lq_norm(&u0, 1.0);
    let series = stage("evolve", sup_series(&op, |t| SpectralFunction::propagator(cfg.ell, t), &u0, &times))?;
    let fit = stage("fit", decay_fit(&series))?;
    let d = cfg.d as f64;
    let expected = if cfg.ell == 2 { -d / 2.0 } else { -(d - 1.0) / 2.0 };
    let tol = cfg.knobs.tolerance.unwrap_or(if cfg.ell == 2 { 0.05 } else { 0.1 });
    let mut table = Table::new(&["t", "sup_norm", "quotient"]);
    for &(t, v) in &series {
        table.push(vec![num(t), num(v), num(v / mass)]);
    }
    let mut summary = Map::new();
    summary.insert("fit".into(), json!(fit));
    summary.insert("expected_exponent".into(), json!(expected));
    summary.insert("tolerance".into(), json!(tol));
    summary.insert("pass".into(), json!((fit.exponent - expected).abs() <= tol));
    Ok(Outcome { table, summary })
}

/// `sup_t |t|^{1/2} ||e^{itL} u0||_inf / ||u0||_1` over the sampled times.
fn weighted_sup(series: &[(f64, f64)], mass: f64, sigma: f64) -> f64 {
    series.iter().map(|&(t, v)| v * t.abs().powf(sigma) / mass).fold(0.0, f64::max)
}

fn bv_uniform(cfg: &ScenarioConfig) -> Result<Outcome> {
    let op = stage("build_operator", cfg.operator())?;
    let delta = centred_delta(&op.grids())?;
    let spec = cfg.times()?;
    let ks = cfg.knobs.k_list.clone().unwrap_or_else(|| vec![0, 2]);
    let mut table = Table::new(&["k", "t", "quotient"]);
    let mut sups = Vec::new();
    let var_log = op.axes()[0].operator.profile().stats(&[]).var_log;
    for &k in &ks {
        let u0 = stage("initial_data", op.joint_spectral_apply(&SpectralFunction::lp_band(k), &delta))?;
        let mass = lq_norm(&u0, 1.0);
        let times = spec.scaled(4f64.powi(-k));
        let series = stage("evolve", sup_series(&op, |t| SpectralFunction::propagator(2, t), &u0, &times))?;
        for &(t, v) in &series {
            table.push(vec![k.to_string(), num(t), num(v * t.sqrt() / mass)]);
        }
        sups.push(weighted_sup(&series, mass, 0.5));
    }
    let ratio = spread_ratio(&sups);
    let mut summary = Map::new();
    summary.insert("var_log".into(), json!(var_log));
    summary.insert("k_list".into(), json!(ks));
    summary.insert("sup_quotients".into(), json!(sups));
    summary.insert("ratio".into(), json!(ratio));
    summary.insert("pass".into(), json!(ratio <= cfg.factor() && var_log < 2.0 * std::f64::consts::PI));
    Ok(Outcome { table, summary })
}

fn kronig_penney_window(cfg: &ScenarioConfig) -> Result<Outcome> {
    let op = stage("build_operator", cfg.operator())?;
    let delta = centred_delta(&op.grids())?;
    let c = cfg.knobs.window_c.unwrap_or(0.25);
    let (t_lo, t_hi) = cfg.knobs.long_window.unwrap_or((1.0, 2.0));
    let (n_local, n_long) = cfg.knobs.window_samples.unwrap_or((24, 41));
    let rows: Vec<Result<(f64, Vec<(f64, f64)>, Vec<(f64, f64)>, f64)>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let u0 = op.joint_spectral_apply(&SpectralFunction::lp_band(n.log2().round() as i32), &delta)?;
            let mass = lq_norm(&u0, 1.0);
            let local = TimeSpec { t_min: 1e-2 * c / n, t_max: c / n, count: n_local, spacing: Spacing::Geometric }.samples();
            let long = TimeSpec { t_min: t_lo, t_max: t_hi, count: n_long, spacing: Spacing::Uniform }.samples();
            let prop = |t| SpectralFunction::propagator(2, t);
            Ok((n, sup_series(&op, prop, &u0, &local)?, sup_series(&op, prop, &u0, &long)?, mass))
        })
        .collect();
    let mut table = Table::new(&["n", "window", "t", "quotient"]);
    let (mut local_sup, mut long_sup) = (Vec::new(), Vec::new());
    for r in rows {
        let (n, local, long, mass) = stage("evolve", r)?;
        for (name, series) in [("local", &local), ("long", &long)] {
            for &(t, v) in series {
                table.push(vec![num(n), name.into(), num(t), num(v * t.sqrt() / mass)]);
            }
        }
        local_sup.push(weighted_sup(&local, mass, 0.5));
        long_sup.push(weighted_sup(&long, mass, 0.5));
    }
    let ratio = spread_ratio(&local_sup);
    let increasing = long_sup.windows(2).all(|w| w[1] > w[0]);
    let mut summary = Map::new();
    summary.insert("n_list".into(), json!(cfg.n_list));
    summary.insert("window_c".into(), json!(c));
    summary.insert("local_constants".into(), json!(local_sup));
    summary.insert("local_ratio".into(), json!(ratio));
    summary.insert("long_quotients".into(), json!(long_sup));
    summary.insert("long_increasing".into(), json!(increasing));
    summary.insert("pass".into(), json!(ratio <= cfg.factor() && increasing));
    Ok(Outcome { table, summary })
}

fn knapp_sweep(cfg: &ScenarioConfig) -> Result<Outcome> {
    let op = stage("build_operator", cfg.operator())?;
    let grids = op.grids();
    let times = cfg.times()?.samples();
    let tol = cfg.knobs.tolerance.unwrap_or(0.15);
    let opts = StrichartzOptions {
        inhomogeneous_smoothing: cfg.knobs.inhomogeneous.unwrap_or(false),
        require_admissible: false,
        mu: 1.0,
    };
    let trajectories: Vec<Result<(f64, Field, Trajectory)>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let u0 = knapp_packet(&grids, cfg.ell, n, KnappShape::for_ell(cfg.ell))?;
            let traj = op.trajectory(cfg.ell, &times, &u0)?;
            Ok((n, u0, traj))
        })
        .collect();
    let trajectories = stage("evolve", trajectories.into_iter().collect::<Result<Vec<_>>>())?;
    let mut table = Table::new(&["p", "q", "n", "quotient"]);
    let mut pairs = Vec::new();
    let mut pass = true;
    for pair in &cfg.pairs {
        let mut pts = Vec::new();
        for (n, u0, traj) in &trajectories {
            let r = stage("quotient", strichartz_quotient(pair, traj, u0, &opts))?;
            table.push(vec![num(pair.p.0), num(pair.q.0), num(*n), num(r.raw)]);
            pts.push((*n, r.raw));
        }
        let fit = stage("fit", log_log_fit(&pts))?;
        let excess = pair.knapp_excess();
        let sharp = pair.is_sharp();
        let ok = if sharp {
            spread_ratio(&pts.iter().map(|p| p.1).collect::<Vec<_>>()) <= cfg.factor()
        } else if excess > 0.0 {
            fit.exponent > 0.0 && (fit.exponent - excess).abs() <= tol
        } else {
            true
        };
        pass &= ok;
        pairs.push(json!({
            "pair": pair,
            "sharp": sharp,
            "admissible": pair.is_admissible(),
            "predicted_exponent": excess.max(0.0),
            "fit": fit,
            "spread": spread_ratio(&pts.iter().map(|p| p.1).collect::<Vec<_>>()),
            "pass": ok,
        }));
    }
    let mut summary = Map::new();
    summary.insert("pairs".into(), Value::Array(pairs));
    summary.insert("tolerance".into(), json!(tol));
    summary.insert("pass".into(), json!(pass));
    Ok(Outcome { table, summary })
}

fn default_symbols() -> Vec<SymbolSpec> {
    vec![
        SymbolSpec::Gaussian { width: 1.0 },
        SymbolSpec::ModulatedGaussian { width: 1.5, frequency: 2.0 },
        SymbolSpec::LpLow,
        SymbolSpec::LpBand { k: 1 },
        SymbolSpec::LpBand { k: 2 },
    ]
}

fn phillips_oracle(cfg: &ScenarioConfig) -> Result<Outcome> {
    let g = Grid1D::new(cfg.grid.n, cfg.grid.length)?;
    let symbols = cfg.knobs.symbols.clone().unwrap_or_else(default_symbols);
    let tol = cfg.knobs.tolerance.unwrap_or(1e-6);
    let u = stage("initial_data", random_field(&[g], g.nyquist() / 2.0, cfg.seed))?;
    let mut table = Table::new(&["profile", "symbol", "rel_error", "tail_mass"]);
    let mut worst: f64 = 0.0;
    for (i, spec) in cfg.profiles.iter().enumerate() {
        let op = stage("build_operator", TensorOperator::from_profiles(&[build_profile(spec)?], &[g]))?;
        let s_max = op.lambda_max().sqrt();
        for sym in &symbols {
            let (radius, bandwidth) = sym.extent();
            let psi = stage(
                "symbol",
                KernelGrid::covering(1, s_max, radius, bandwidth)
                    .and_then(|kg| SymbolSample::from_radial(|r| Complex64::new(sym.eval(r), 0.0), radius, &kg)),
            )?;
            let out = stage("phillips", phillips_apply(&psi, &op, &u))?;
            let sf = sym.clone();
            let oracle = stage(
                "spectral",
                op.joint_spectral_apply(&SpectralFunction::real(sym.label(), move |l: f64| sf.eval(l.max(0.0).sqrt())), &u),
            )?;
            let err = out.field.rel_l2_diff(&oracle);
            worst = worst.max(err);
            table.push(vec![i.to_string(), sym.label(), num(err), num(out.tail_mass)]);
        }
    }
    let mut summary = Map::new();
    summary.insert("profiles".into(), json!(cfg.profiles.len()));
    summary.insert("symbols".into(), json!(symbols.len()));
    summary.insert("max_rel_error".into(), json!(worst));
    summary.insert("tolerance".into(), json!(tol));
    summary.insert("pass".into(), json!(worst <= tol));
    Ok(Outcome { table, summary })
}

fn commutator_scaling(cfg: &ScenarioConfig) -> Result<Outcome> {
    let g = Grid1D::new(cfg.grid.n, cfg.grid.length)?;
    let p = stage("build_profile", build_profile(&cfg.profiles[0]))?;
    let opts = CommutatorOptions { iterations: cfg.knobs.iterations.unwrap_or(60), seed: cfg.seed };
    let r = stage("commutator", commutator_test(&p, g, &cfg.n_list, opts))?;
    let mut table = Table::new(&["n", "norm"]);
    for &(n, s) in &r.norms {
        table.push(vec![num(n), num(s)]);
    }
    let bound = cfg.knobs.tolerance.unwrap_or(-0.9);
    let mut summary = Map::new();
    summary.insert("fit".into(), json!(r.fit));
    summary.insert("slope_bound".into(), json!(bound));
    summary.insert("pass".into(), json!(r.fit.is_some_and(|f| f.exponent <= bound)));
    Ok(Outcome { table, summary })
}

fn nls_mass(cfg: &ScenarioConfig) -> Result<Outcome> {
    let op = stage("build_operator", cfg.operator())?;
    let params = cfg.knobs.nls.expect("validated");
    let grids = op.grids();
    let base = gaussian_bump(&grids, cfg.knobs.data_width.unwrap_or(1.0))?;
    let vals = base.component(0).clone();
    let u0 = base.with_components(vec![vals.mapv(|z| z * 1.5)])?;
    let traj = stage("nls", nls_solve(&op, &params, &u0))?;
    let m0 = u0.norm_l2();
    let mut table = Table::new(&["t", "mass", "drift"]);
    let mut max_drift: f64 = 0.0;
    for (t, s) in traj.iter() {
        let drift = (s.norm_l2() - m0).abs() / m0;
        max_drift = max_drift.max(drift);
        table.push(vec![num(t), num(s.norm_l2()), num(drift)]);
    }
    let linear = stage("linear", nls_solve(&op, &NlsParams { mu: 0.0, ..params }, &u0))?;
    let linear_drift = linear.states().iter().map(|s| (s.norm_l2() - m0).abs() / m0).fold(0.0, f64::max);
    let last = |dt: f64| -> Result<Field> {
        let p = NlsParams { dt, record_every: usize::MAX, ..params };
        Ok(nls_solve(&op, &p, &u0)?.states().last().expect("final state").clone())
    };
    let (a, b, c) = stage("richardson", (|| Ok((last(params.dt)?, last(params.dt / 2.0)?, last(params.dt / 4.0)?)))())?;
    let order_ratio = a.sub(&b).norm_l2() / b.sub(&c).norm_l2();
    let mut summary = Map::new();
    summary.insert("max_mass_drift".into(), json!(max_drift));
    summary.insert("linear_max_mass_drift".into(), json!(linear_drift));
    summary.insert("richardson_ratio".into(), json!(order_ratio));
    summary.insert("pass".into(), json!(max_drift <= 1e-10 && linear_drift <= 1e-10 && (order_ratio - 4.0).abs() <= 0.8));
    Ok(Outcome { table, summary })
}

fn bochner_riesz_uniform(cfg: &ScenarioConfig) -> Result<Outcome> {
    let op = stage("build_operator", cfg.operator())?;
    let grids = op.grids();
    let radii = cfg.knobs.radii.clone().expect("validated");
    let delta = cfg.knobs.delta.unwrap_or(0.5);
    let q = cfg.knobs.q.unwrap_or(4.0);
    let size = cfg.knobs.corpus_size.unwrap_or(20);
    let band = cfg.knobs.corpus_band_factor.unwrap_or(2.0);
    let threshold = (cfg.d as f64 * (0.5 - 1.0 / q).abs() - 0.5).max(0.0);
    let mut table = Table::new(&["sample", "radius", "ratio"]);
    let mut worst = Vec::new();
    for (ri, &r) in radii.iter().enumerate() {
        let mut m: f64 = 0.0;
        for i in 0..size {
            let seed = cfg.seed.wrapping_add((ri * size + i) as u64);
            let u = stage("corpus", random_field(&grids, band * r, seed))?;
            let s = stage("apply", super::bochner_riesz_apply(&op, delta, r, &u))?;
            let ratio = lq_norm(&s, q) / lq_norm(&u, q);
            m = m.max(ratio);
            table.push(vec![i.to_string(), num(r), num(ratio)]);
        }
        worst.push(m);
    }
    let spread = spread_ratio(&worst);
    let mut summary = Map::new();
    summary.insert("delta".into(), json!(delta));
    summary.insert("critical_delta".into(), json!(threshold));
    summary.insert("max_ratio_per_radius".into(), json!(worst));
    summary.insert("spread".into(), json!(spread));
    summary.insert("pass".into(), json!(spread <= cfg.factor()));
    Ok(Outcome { table, summary })
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub summary_path: PathBuf,
    pub manifest: PathBuf,
    pub summary: Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Runs the configured pipeline and writes `<stem>.csv`, `<stem>_summary.json`,
/// `<stem>_manifest.json` into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunArtifacts> {
    stage("validate", validate_config(cfg))?;
    let outcome = match cfg.kind {
        ExperimentKind::FreeDecay => free_decay(cfg),
        ExperimentKind::BvUniform => bv_uniform(cfg),
        ExperimentKind::KronigPenneyWindow => kronig_penney_window(cfg),
        ExperimentKind::KnappSweep => knapp_sweep(cfg),
        ExperimentKind::PhillipsOracle => phillips_oracle(cfg),
        ExperimentKind::CommutatorScaling => commutator_scaling(cfg),
        ExperimentKind::NlsMass => nls_mass(cfg),
        ExperimentKind::BochnerRieszUniform => bochner_riesz_uniform(cfg),
    }
    .map_err(|e| match e {
        LabError::Stage { .. } => e,
        other => other.in_stage(cfg.kind.name()),
    })?;
    std::fs::create_dir_all(out_dir)?;
    let stem = cfg.stem();
    let config_json = serde_json::to_string(cfg)?;
    let mut summary = outcome.summary;
    summary.insert("kind".into(), json!(cfg.kind));
    summary.insert("seed".into(), json!(cfg.seed));
    let summary = Value::Object(summary);
    let csv = outcome.table.to_csv()?;
    let summary_text = serde_json::to_string_pretty(&summary)? + "\n";
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let summary_path = out_dir.join(format!("{stem}_summary.json"));
    std::fs::write(&csv_path, &csv)?;
    std::fs::write(&summary_path, &summary_text)?;
    let manifest = json!({
        "name": stem,
        "kind": cfg.kind,
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": sha256_hex(config_json.as_bytes()),
        "config": cfg,
        "files": [
            { "path": format!("{stem}.csv"), "sha256": sha256_hex(&csv), "bytes": csv.len() },
            { "path": format!("{stem}_summary.json"), "sha256": sha256_hex(summary_text.as_bytes()), "bytes": summary_text.len() },
        ],
    });
    let manifest_path = out_dir.join(format!("{stem}_manifest.json"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunArtifacts { csv: csv_path, summary_path, manifest: manifest_path, summary })
}
