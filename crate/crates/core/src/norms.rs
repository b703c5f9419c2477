//! Measurement functionals: Lebesgue and mixed space-time norms, Fourier and heat-block
//! Sobolev/Besov norms, dispersive and Strichartz quotients, and the wave energy.

use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use schemars::JsonSchema;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

use crate::error::{LabError, Result};
use crate::field::{Field, Trajectory};
use crate::fourier::fft_axes;
use crate::operator1d::{lp_band, SpectralFunction};
use crate::tensor_propagator::TensorOperator;

/// `(sum |u|^q h^d)^{1/q}`, the max for `q = inf`, with `|u|` the pointwise Euclidean norm.
pub fn lq_norm(u: &Field, q: f64) -> f64 {
    let m = u.modulus();
    if q.is_infinite() {
        return m.iter().cloned().fold(0.0, f64::max);
    }
    (m.iter().map(|v| v.powf(q)).sum::<f64>() * u.cell_volume()).powf(1.0 / q)
}

/// `L^p_t L^q_x` over the trajectory's (uniform) time grid, trapezoid in `t`.
pub fn mixed_norm(traj: &Trajectory, p: f64, q: f64) -> Result<f64> {
    let vals: Vec<f64> = traj.states().iter().map(|s| lq_norm(s, q)).collect();
    if p.is_infinite() {
        return Ok(vals.iter().cloned().fold(0.0, f64::max));
    }
    if traj.len() < 2 || !traj.is_uniform() {
        return Err(LabError::InvalidArgument("mixed norm needs a uniform time grid with at least two samples".into()));
    }
    let dt = traj.times()[1] - traj.times()[0];
    let pw: Vec<f64> = vals.iter().map(|v| v.powf(p)).collect();
    let integral = dt * (pw.iter().sum::<f64>() - 0.5 * (pw[0] + pw[pw.len() - 1]));
    Ok(integral.powf(1.0 / p))
}

/// Applies `m(xi)` on the torus dual lattice of every component.
pub fn fourier_multiplier(u: &Field, m: impl Fn(&[f64]) -> Complex64) -> Result<Field> {
    let grids = u.grids().to_vec();
    let total: usize = grids.iter().map(|g| g.n()).product();
    let freqs: Vec<Vec<f64>> = grids.iter().map(|g| g.frequencies()).collect();
    let comps = u
        .components()
        .iter()
        .map(|c| {
            let mut hat = fft_axes(c.clone(), false);
            let mut xi = vec![0.0; grids.len()];
            for (idx, v) in hat.indexed_iter_mut() {
                for (a, &i) in idx.slice().iter().enumerate() {
                    xi[a] = freqs[a][i];
                }
                *v *= m(&xi) / total as f64;
            }
            fft_axes(hat, true)
        })
        .collect();
    u.with_components(comps)
}

fn mean_abs(u: &Field) -> f64 {
    u.components().iter().map(|c| c.iter().sum::<Complex64>().norm() / c.len() as f64).fold(0.0, f64::max)
}

/// `|D|^s u` with `|D| = |nabla|`; the zero mode is mapped to 0.
pub fn fourier_sobolev(u: &Field, s: f64) -> Result<Field> {
    if s == 0.0 {
        return Ok(u.clone());
    }
    if s < 0.0 && mean_abs(u) > 1e-12 * u.max_abs().max(1e-300) {
        return Err(LabError::InvalidArgument(format!(
            "|D|^{s} needs mean-zero data (mean {:e})",
            mean_abs(u)
        )));
    }
    fourier_multiplier(u, |xi| {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        Complex64::new(if r == 0.0 { 0.0 } else { r.powf(s) }, 0.0)
    })
}

/// `<D>^s u = (1 + |xi|^2)^{s/2} u`.
pub fn bessel_potential(u: &Field, s: f64) -> Result<Field> {
    fourier_multiplier(u, |xi| Complex64::new((1.0 + xi.iter().map(|x| x * x).sum::<f64>()).powf(s / 2.0), 0.0))
}

/// `[sum_j (2^{s j} |block_j|_p)^q]^{1/q}`.
fn besov_sum(blocks: &[(i32, f64)], s: f64, q: f64) -> f64 {
    let terms = blocks.iter().map(|&(j, b)| 2f64.powf(s * j as f64) * b);
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `sum_{j in Z} (4^{-j} lambda e^{-4^{-j} lambda})^2`.
pub fn heat_block_square_sum(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let c = (lambda.ln() / 4f64.ln()).round() as i32;
    (c - 40..=c + 40).map(|j| heat_block(j, lambda).powi(2)).sum()
}

fn heat_block(j: i32, lambda: f64) -> f64 {
    let x = 4f64.powi(-j) * lambda;
    x * (-x).exp()
}

/// Range of `heat_block_square_sum` over one dyadic period of `lambda`.
pub fn heat_block_constants() -> (f64, f64) {
    (0..400).map(|i| heat_block_square_sum(4f64.powf(i as f64 / 400.0))).fold((f64::INFINITY, 0.0), |(a, b), v| (a.min(v), b.max(v)))
}

#[derive(Clone, Debug, Serialize)]
pub struct BesovReport {
    pub value: f64,
    /// `value` with the blocks rescaled so that `sum_j F_j^2` has geometric mean 1 over a dyadic period.
    pub normalized: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// Share of `|u|_2^2` not captured by the truncated block family (the kernel mode included).
    pub leak_fraction: f64,
    pub warning: Option<String>,
    /// `(j, |Delta_j u|_p)`.
    pub blocks: Vec<(i32, f64)>,
}

/// Homogeneous heat-block Besov norm with blocks `4^{-j} L e^{-4^{-j} L}`.
pub fn heat_besov_norm(op: &TensorOperator, u: &Field, s: f64, p: f64, q: f64) -> Result<BesovReport> {
    let lambda_min = op
        .axes()
        .iter()
        .map(|a| a.spectrum.lambda_min_positive())
        .fold(f64::INFINITY, f64::min);
    let lambda_max = op.lambda_max();
    let log4 = |x: f64| x.ln() / 4f64.ln();
    let (j_min, j_max) = (log4(lambda_min).floor() as i32, log4(lambda_max).ceil() as i32);
    let spec = op.to_spectral(u)?;
    let joint = op.joint_eigenvalues();
    let mut captured = 0.0;
    let mut total = 0.0;
    for c in spec.coeffs() {
        for (z, &l) in c.iter().zip(joint.iter()) {
            let w = z.norm_sqr();
            total += w;
            if l > 0.0 {
                let inside: f64 = (j_min..=j_max).map(|j| heat_block(j, l).powi(2)).sum();
                captured += w * inside / heat_block_square_sum(l);
            }
        }
    }
    let leak_fraction = if total > 0.0 { 1.0 - captured / total } else { 0.0 };
    let mut blocks = Vec::new();
    for j in j_min..=j_max {
        let b = op.joint_spectral_apply(&SpectralFunction::besov_block(j), u)?;
        blocks.push((j, lq_norm(&b, p)));
    }
    let warning = (leak_fraction > 0.01).then(|| {
        format!("{:.2}% of |u|_2^2 lies outside the resolved band j in [{j_min}, {j_max}]", 100.0 * leak_fraction)
    });
    let value = besov_sum(&blocks, s, q);
    let (lo, hi) = heat_block_constants();
    Ok(BesovReport { value, normalized: value / (lo * hi).powf(0.25), j_min, j_max, leak_fraction, warning, blocks })
}

/// Fourier-side homogeneous Besov norm with Littlewood-Paley blocks `psi_j(|xi|)`.
pub fn fourier_besov_norm(u: &Field, s: f64, p: f64, q: f64) -> Result<f64> {
    let xi_min = u.grids().iter().map(|g| g.frequency(1)).fold(f64::INFINITY, f64::min);
    let xi_max = u.grids().iter().map(|g| g.nyquist().powi(2)).sum::<f64>().sqrt();
    let (j_min, j_max) = (xi_min.log2().floor() as i32 - 1, xi_max.log2().ceil() as i32 + 1);
    let mut blocks = Vec::new();
    for j in j_min..=j_max {
        let b = fourier_multiplier(u, |xi| Complex64::new(lp_band(j, xi.iter().map(|x| x * x).sum::<f64>().sqrt()), 0.0))?;
        blocks.push((j, lq_norm(&b, p)));
    }
    Ok(besov_sum(&blocks, s, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayWeight {
    /// `(1 + |t|)^sigma`
    Shifted,
    /// `|t|^sigma`
    Homogeneous,
}

/// `(t, |u(t)|_inf w(t)^sigma / |u0|_1)` along the trajectory.
pub fn dispersive_quotient(traj: &Trajectory, u0: &Field, sigma: f64, weight: DecayWeight) -> Result<Vec<(f64, f64)>> {
    let mass = lq_norm(u0, 1.0);
    if mass == 0.0 {
        return Err(LabError::InvalidArgument("zero initial data".into()));
    }
    Ok(traj
        .iter()
        .map(|(t, u)| {
            let w = match weight {
                DecayWeight::Shifted => (1.0 + t.abs()).powf(sigma),
                DecayWeight::Homogeneous => t.abs().powf(sigma),
            };
            (t, lq_norm(u, f64::INFINITY) * w / mass)
        })
        .collect())
}

/// Lebesgue exponent in `[1, inf]`, serialized as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    pub fn inverse(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

impl JsonSchema for Exponent {
    fn schema_name() -> String {
        "Exponent".into()
    }

    fn json_schema(_: &mut schemars::gen::SchemaGenerator) -> schemars::schema::Schema {
        serde_json::from_value(serde_json::json!({
            "anyOf": [{ "type": "number", "minimum": 1.0 }, { "enum": ["inf", "infinity"] }]
        }))
        .expect("static schema")
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v >= 1.0 => Ok(Exponent(v)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity") => Ok(Exponent(f64::INFINITY)),
            _ => Err(serde::de::Error::custom("exponent must be a number >= 1 or \"inf\"")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct StrichartzPair {
    pub ell: u8,
    pub p: Exponent,
    pub q: Exponent,
    pub d: usize,
}

const ADMISSIBLE_TOL: f64 = 1e-12;

impl StrichartzPair {
    pub fn new(ell: u8, p: f64, q: f64, d: usize) -> Self {
        Self { ell, p: Exponent(p), q: Exponent(q), d }
    }

    /// `d (1/2 - 1/q) - ell / p`.
    pub fn s(&self) -> f64 {
        self.d as f64 * (0.5 - self.q.inverse()) - self.ell as f64 * self.p.inverse()
    }

    fn lhs_rhs(&self) -> (f64, f64) {
        let eff = if self.ell == 2 { self.d as f64 } else { self.d as f64 - 1.0 };
        (2.0 * self.p.inverse() + eff * self.q.inverse(), eff / 2.0)
    }

    fn in_range(&self) -> bool {
        [self.p.0, self.q.0].iter().all(|&v| v >= 2.0) && matches!(self.ell, 1 | 2) && (1..=3).contains(&self.d)
    }

    pub fn is_admissible(&self) -> bool {
        if !self.in_range() {
            return false;
        }
        let double_endpoint = self.p.0 == 2.0 && self.q.0.is_infinite() && self.d == if self.ell == 2 { 2 } else { 3 };
        let (lhs, rhs) = self.lhs_rhs();
        lhs <= rhs + ADMISSIBLE_TOL && !double_endpoint
    }

    /// Equality in the admissibility relation.
    pub fn is_sharp(&self) -> bool {
        let (lhs, rhs) = self.lhs_rhs();
        self.is_admissible() && (lhs - rhs).abs() <= ADMISSIBLE_TOL
    }

    /// `2/p + d/q - d/2` for `ell = 2` (resp. with `d - 1`), the Knapp growth exponent.
    pub fn knapp_excess(&self) -> f64 {
        let (lhs, rhs) = self.lhs_rhs();
        lhs - rhs
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StrichartzReport {
    pub pair: StrichartzPair,
    pub raw: f64,
    pub mu: f64,
    /// `raw / mu^{1/p}` with `mu` clamped to at least 1.
    pub normalized: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrichartzOptions {
    /// Apply `<D>^{-1/p}` on the left for `ell = 2`.
    pub inhomogeneous_smoothing: bool,
    /// Enforce admissibility (disable for Knapp sweeps of violating pairs).
    pub require_admissible: bool,
    /// `mu = T max|a'|^ell`.
    pub mu: f64,
}

impl Default for StrichartzOptions {
    fn default() -> Self {
        Self { inhomogeneous_smoothing: true, require_admissible: true, mu: 1.0 }
    }
}

/// `| |D|^{-s} (<D>^{-1/p}) u |_{L^p_t L^q_x} / |u0|_2`.
pub fn strichartz_quotient(
    pair: &StrichartzPair,
    traj: &Trajectory,
    u0: &Field,
    opts: &StrichartzOptions,
) -> Result<StrichartzReport> {
    if opts.require_admissible && !pair.is_admissible() {
        return Err(LabError::InvalidArgument(format!("pair {pair:?} is not admissible")));
    }
    let s = pair.s();
    let smooth = opts.inhomogeneous_smoothing && pair.ell == 2 && pair.p.inverse() > 0.0;
    let weighted = traj.map_states(|u| {
        let v = fourier_sobolev(u, -s)?;
        if smooth {
            bessel_potential(&v, -pair.p.inverse())
        } else {
            Ok(v)
        }
    })?;
    let raw = mixed_norm(&weighted, pair.p.0, pair.q.0)? / u0.norm_l2();
    let mu = opts.mu.max(1.0);
    Ok(StrichartzReport { pair: *pair, raw, mu, normalized: raw / mu.powf(pair.p.inverse()) })
}

/// `|u_t|_2^2 + sum_i <a_i d_i u, d_i u>` with the staggered difference of the operator.
pub fn energy(op: &TensorOperator, u: &Field, ut: &Field) -> Result<f64> {
    if u.grids() != op.grids().as_slice() || !u.same_layout(ut) {
        return Err(LabError::Shape("energy needs u, u_t on the operator grid".into()));
    }
    let mut total = ut.norm_l2().powi(2);
    let vol = u.cell_volume();
    for (axis, a) in op.axes().iter().enumerate() {
        let h = a.operator.grid().spacing();
        let stagger = a.operator.stagger();
        for c in u.components() {
            total += axis_form(c, axis, stagger) / (h * h) * vol;
        }
    }
    Ok(total)
}

fn axis_form(c: &ArrayD<Complex64>, axis: usize, stagger: &[f64]) -> f64 {
    let n = c.shape()[axis];
    let mut s = 0.0;
    for (idx, v) in c.indexed_iter() {
        let j = idx[axis];
        let mut next = idx.slice().to_vec();
        next[axis] = (j + 1) % n;
        s += stagger[j] * (c[IxDyn(&next)] - v).norm_sqr();
    }
    s
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormReport {
    pub name: String,
    pub value: f64,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl NormReport {
    pub fn new(name: impl Into<String>, value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(LabError::InvalidArgument(format!("norm value {value} must be finite and nonnegative")));
        }
        Ok(Self { name: name.into(), value, metadata: BTreeMap::new() })
    }

    pub fn with(mut self, key: &str, v: impl Serialize) -> Self {
        self.metadata.insert(key.to_string(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
        self
    }
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[NormReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_profile, ProfileSpec};
    use crate::grid::Grid1D;

    fn gaussian(g: Grid1D, c: f64) -> Field {
        Field::from_vec_1d(g, g.points().iter().map(|&x| Complex64::new((-(x - c).powi(2) / 2.0).exp(), 0.0)).collect()).unwrap()
    }

    #[test]
    fn lebesgue_norms() {
        let g = Grid1D::new(1024, 64.0).unwrap();
        let u = gaussian(g, 32.0);
        assert!((lq_norm(&u, 2.0) - std::f64::consts::PI.powf(0.25)).abs() < 1e-6);
        assert!((lq_norm(&u, f64::INFINITY) - 1.0).abs() < 1e-15);
        let ind = Field::from_vec_1d(g, (0..1024).map(|j| Complex64::new(if j < 5 { 1.0 } else { 0.0 }, 0.0)).collect()).unwrap();
        assert!((lq_norm(&ind, 1.0) - 5.0 * g.spacing()).abs() < 1e-15);
    }

    #[test]
    fn sobolev_roundtrip_and_modes() {
        let g = Grid1D::new(64, 8.0).unwrap();
        let xi0 = g.frequency(3);
        let mode = Field::from_vec_1d(g, g.points().iter().map(|&x| Complex64::from_polar(1.0, xi0 * x)).collect()).unwrap();
        let d = fourier_sobolev(&mode, 0.7).unwrap();
        assert!(d.sub(&mode.scaled(Complex64::new(xi0.powf(0.7), 0.0))).max_abs() < 1e-12);
        let zero_mean = Field::from_vec_1d(g, g.points().iter().map(|&x| Complex64::new((x * xi0).sin() + 0.2 * (2.0 * xi0 * x).cos(), 0.0)).collect()).unwrap();
        let back = fourier_sobolev(&fourier_sobolev(&zero_mean, 1.0).unwrap(), -1.0).unwrap();
        assert!(back.sub(&zero_mean).max_abs() < 1e-12);
        assert!(fourier_sobolev(&gaussian(g, 4.0), -1.0).is_err());
    }

    #[test]
    fn pair_tables() {
        assert!(!StrichartzPair::new(2, 2.0, f64::INFINITY, 2).is_admissible());
        assert!(StrichartzPair::new(2, 2.0, f64::INFINITY, 3).is_admissible());
        assert!(!StrichartzPair::new(1, 2.0, f64::INFINITY, 3).is_admissible());
        assert!(StrichartzPair::new(1, 2.0, f64::INFINITY, 3).s() == 1.0);
        assert!(StrichartzPair::new(2, 8.0, 4.0, 1).is_sharp());
        assert!(!StrichartzPair::new(2, 2.0, 2.0, 1).is_admissible());
        assert!((StrichartzPair::new(2, 2.0, 2.0, 1).knapp_excess() - 1.0).abs() < 1e-15);
        assert!(StrichartzPair::new(2, f64::INFINITY, 2.0, 1).is_sharp());
        assert!(StrichartzPair::new(1, f64::INFINITY, 2.0, 2).is_sharp());
        let p: StrichartzPair = serde_json::from_str(r#"{"ell":1,"p":2,"q":"inf","d":3}"#).unwrap();
        assert!(p.q.0.is_infinite());
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"ell":1,"p":2.0,"q":"inf","d":3}"#);
        assert!(serde_json::from_str::<StrichartzPair>(r#"{"ell":1,"p":0.5,"q":2,"d":1}"#).is_err());
    }

    #[test]
    fn energy_of_a_lattice_mode() {
        let p = build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap();
        let g = Grid1D::new(128, 8.0).unwrap();
        let op = TensorOperator::from_profiles(&[p], &[g]).unwrap();
        let xi0 = g.frequency(5);
        let u = Field::from_vec_1d(g, g.points().iter().map(|&x| Complex64::new((xi0 * x).sin(), 0.0)).collect()).unwrap();
        let zero = Field::zeros(vec![g], 1).unwrap();
        assert_eq!(energy(&op, &zero, &zero).unwrap(), 0.0);
        let h = g.spacing();
        let symbol = 4.0 * (xi0 * h / 2.0).sin().powi(2) / (h * h);
        assert!((energy(&op, &u, &zero).unwrap() - symbol * u.norm_l2().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn besov_block_constants_are_dyadically_periodic() {
        let (lo, hi) = heat_block_constants();
        assert!(lo > 0.0 && hi < 1.0 && lo <= hi);
        assert!((heat_block_square_sum(3.0) - heat_block_square_sum(12.0)).abs() < 1e-14);
    }

    #[test]
    fn report_json_lines() {
        let r = NormReport::new("lq", 1.5).unwrap().with("q", 4);
        let text = to_json_lines(&[r.clone(), r]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(NormReport::new("bad", f64::NAN).is_err());
    }
}
