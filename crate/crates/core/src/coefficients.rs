//! Structured elliptic coefficient families `a(x)` and their regularity statistics.
//!
//! Every profile is periodic (constants trivially so). Derived profiles (mollified,
//! Fourier-truncated, dilated) keep a handle on the profile they came from.

use num_complex::Complex64;
use rustfft::FftPlanner;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::error::{LabError, Result};
use crate::grid::{signed_index, Grid1D};
use crate::quadrature::gauss_legendre_unit;

const STAT_SAMPLES: usize = 1 << 14;
const BUMP_NODES: usize = 160;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub harmonic: u32,
    #[serde(default)]
    pub phase: f64,
}

/// JSON-facing description of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `values[i]` holds on `[breakpoints[i], breakpoints[i+1])`, the last value wraps around.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        period: f64,
    },
    KronigPenney {
        x0: f64,
        b0: f64,
        b1: f64,
    },
    /// `mean + sum amplitude cos(2 pi harmonic x / period + phase)`.
    TrigSeries {
        mean: f64,
        terms: Vec<TrigTerm>,
        period: f64,
    },
    /// `base + height exp(concentration (cos(2 pi (x - center) / period) - 1))`.
    VonMises {
        base: f64,
        height: f64,
        center: f64,
        concentration: f64,
        period: f64,
    },
    Mollified {
        parent: Box<ProfileSpec>,
        epsilon: f64,
    },
    /// DFT of the parent sampled on `(n, length)`, keeping angular frequencies `<= cutoff / 10`.
    FourierTruncated {
        parent: Box<ProfileSpec>,
        cutoff: f64,
        n: usize,
        length: f64,
    },
    /// `x -> parent(x / factor)`.
    Dilated {
        parent: Box<ProfileSpec>,
        factor: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Constant,
    PiecewiseConstant,
    KronigPenney,
    Smooth,
    Mollified,
    FourierTruncated,
}

#[derive(Clone, Debug)]
enum Smooth {
    Trig { mean: f64, terms: Vec<(f64, f64, f64)> },
    VonMises { base: f64, height: f64, center_angle: f64, concentration: f64 },
}

#[derive(Clone, Debug)]
enum Repr {
    Constant(f64),
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    Smooth(Smooth),
    Mollified { epsilon: f64 },
    Truncated { modes: Vec<(f64, Complex64)> },
}

#[derive(Clone, Debug)]
pub struct CoefficientProfile {
    kind: ProfileKind,
    repr: Repr,
    period: Option<f64>,
    parent: Option<Arc<CoefficientProfile>>,
    spec: ProfileSpec,
    bounds: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProfileStats {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub upper: f64,
    /// `f64::INFINITY` for discontinuous profiles.
    pub lip_seminorm: f64,
    /// Variation over one period.
    pub total_variation: f64,
    /// Window length (as a string key) to the largest variation in any window of that length.
    pub local_variation: BTreeMap<String, f64>,
    pub var_log: f64,
}

pub fn build_profile(spec: &ProfileSpec) -> Result<CoefficientProfile> {
    let bad = |m: String| Err(LabError::InvalidProfile(m));
    let (kind, repr, period, parent) = match spec {
        ProfileSpec::Constant { value } => {
            if !(value.is_finite() && *value > 0.0) {
                return bad(format!("constant value {value} is not positive"));
            }
            (ProfileKind::Constant, Repr::Constant(*value), None, None)
        }
        ProfileSpec::PiecewiseConstant { breakpoints, values, period } => {
            check_piecewise(breakpoints, values, *period)?;
            let repr = Repr::Piecewise { breakpoints: breakpoints.clone(), values: values.clone() };
            (ProfileKind::PiecewiseConstant, repr, Some(*period), None)
        }
        ProfileSpec::KronigPenney { x0, b0, b1 } => {
            if !(*x0 > 0.0 && *x0 < 1.0) {
                return bad(format!("kronig_penney x0 = {x0} must lie in (0, 1)"));
            }
            if !(*b0 > 0.0 && *b1 > 0.0) || b0 == b1 {
                return bad(format!("kronig_penney needs distinct positive b0, b1 (got {b0}, {b1})"));
            }
            let lhs = b0 * x0;
            let rhs = b1 * (1.0 - x0);
            if (lhs - rhs).abs() > 1e-12 * lhs.max(rhs) {
                return bad(format!("kronig_penney balance b0*x0 = {lhs} differs from b1*(1-x0) = {rhs}"));
            }
            let repr = Repr::Piecewise {
                breakpoints: vec![0.0, *x0],
                values: vec![1.0 / (b0 * b0), 1.0 / (b1 * b1)],
            };
            (ProfileKind::KronigPenney, repr, Some(1.0), None)
        }
        ProfileSpec::TrigSeries { mean, terms, period } => {
            check_period(*period)?;
            let sum: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
            if !(mean.is_finite() && mean - sum > 0.0) {
                return bad(format!("trig_series mean {mean} does not dominate amplitudes {sum}"));
            }
            let terms = terms.iter().map(|t| (t.amplitude, t.harmonic as f64, t.phase)).collect();
            (ProfileKind::Smooth, Repr::Smooth(Smooth::Trig { mean: *mean, terms }), Some(*period), None)
        }
        ProfileSpec::VonMises { base, height, center, concentration, period } => {
            check_period(*period)?;
            if !(*base > 0.0 && base + height.min(0.0) > 0.0 && *concentration >= 0.0) {
                return bad(format!("von_mises base {base}, height {height} not elliptic"));
            }
            let s = Smooth::VonMises {
                base: *base,
                height: *height,
                center_angle: 2.0 * PI * center / period,
                concentration: *concentration,
            };
            (ProfileKind::Smooth, Repr::Smooth(s), Some(*period), None)
        }
        ProfileSpec::Mollified { parent, epsilon } => {
            if !(epsilon.is_finite() && *epsilon > 0.0) {
                return bad(format!("mollifier width {epsilon} must be positive"));
            }
            let p = build_profile(parent)?;
            let period = p.period;
            (ProfileKind::Mollified, Repr::Mollified { epsilon: *epsilon }, period, Some(Arc::new(p)))
        }
        ProfileSpec::FourierTruncated { parent, cutoff, n, length } => {
            let g = Grid1D::new(*n, *length)?;
            if !(*cutoff >= 0.0) {
                return bad(format!("truncation cutoff {cutoff} must be nonnegative"));
            }
            let p = build_profile(parent)?;
            let modes = truncated_modes(&p, &g, *cutoff / 10.0);
            let repr = Repr::Truncated { modes };
            (ProfileKind::FourierTruncated, repr, Some(*length), Some(Arc::new(p)))
        }
        ProfileSpec::Dilated { parent, factor } => {
            if !(factor.is_finite() && *factor > 0.0) {
                return bad(format!("dilation factor {factor} must be positive"));
            }
            let p = build_profile(parent)?;
            return Ok(p.dilated(*factor, spec.clone()));
        }
    };
    let mut profile = CoefficientProfile { kind, repr, period, parent, spec: spec.clone(), bounds: (0.0, 0.0) };
    profile.bounds = profile.compute_bounds();
    if !(profile.bounds.0 > 0.0 && profile.bounds.1.is_finite()) {
        return bad(format!("profile is not elliptic: min sampled value {}", profile.bounds.0));
    }
    Ok(profile)
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(LabError::InvalidProfile(format!("period {period} must be positive")))
    }
}

fn check_piecewise(breakpoints: &[f64], values: &[f64], period: f64) -> Result<()> {
    check_period(period)?;
    let bad = |m: String| Err(LabError::InvalidProfile(m));
    if breakpoints.is_empty() || breakpoints.len() != values.len() {
        return bad("piecewise_constant needs one value per breakpoint".into());
    }
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return bad("breakpoints must be strictly increasing".into());
    }
    if breakpoints[0] < 0.0 || *breakpoints.last().unwrap() >= period {
        return bad("breakpoints must lie in [0, period)".into());
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return bad("piecewise_constant values must be positive".into());
    }
    Ok(())
}

fn truncated_modes(parent: &CoefficientProfile, g: &Grid1D, keep: f64) -> Vec<(f64, Complex64)> {
    let n = g.n();
    let mut buf: Vec<Complex64> = g.points().iter().map(|&x| Complex64::new(parent.eval(x), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut modes = Vec::new();
    for (k, c) in buf.iter().enumerate() {
        let w = g.frequency(k);
        if w.abs() <= keep * (1.0 + 1e-12) {
            let mut c = *c / n as f64;
            if signed_index(k, n) == (n / 2) as i64 {
                c = Complex64::new(c.re, 0.0);
            }
            modes.push((w, c));
        }
    }
    modes
}

struct Bump {
    norm: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn bump() -> &'static Bump {
    static BUMP: OnceLock<Bump> = OnceLock::new();
    BUMP.get_or_init(|| {
        let (x, w) = gauss_legendre_unit(BUMP_NODES);
        let raw = |y: f64| if y.abs() < 1.0 { (-1.0 / (1.0 - y * y)).exp() } else { 0.0 };
        let mass: f64 = x.iter().zip(&w).map(|(s, wi)| wi * raw(2.0 * s - 1.0)).sum::<f64>() * 2.0;
        Bump { norm: 1.0 / mass, nodes: x, weights: w }
    })
}

/// Unit-mass even bump supported in `[-1, 1]`.
pub fn mollifier_density(y: f64) -> f64 {
    if y.abs() < 1.0 {
        bump().norm * (-1.0 / (1.0 - y * y)).exp()
    } else {
        0.0
    }
}

/// `int_{-1}^{z} rho`.
pub fn mollifier_cdf(z: f64) -> f64 {
    if z <= -1.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    if z > 0.0 {
        return 1.0 - mollifier_cdf(-z);
    }
    let b = bump();
    let len = z + 1.0;
    b.nodes.iter().zip(&b.weights).map(|(s, w)| w * mollifier_density(-1.0 + len * s)).sum::<f64>() * len
}

impl CoefficientProfile {
    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn parent(&self) -> Option<&CoefficientProfile> {
        self.parent.as_deref()
    }

    /// Sampled ellipticity bounds `(lambda, Lambda)`.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.repr, Repr::Piecewise { .. })
    }

    /// Jump positions within one period, ascending.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.repr {
            Repr::Piecewise { breakpoints, .. } => breakpoints,
            _ => &[],
        }
    }

    /// `(position, a(x+) - a(x-))` for each breakpoint in one period.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        match &self.repr {
            Repr::Piecewise { breakpoints, values } => {
                let m = values.len();
                (0..m).map(|i| (breakpoints[i], values[i] - values[(i + m - 1) % m])).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Piecewise { breakpoints, values } => {
                let r = x.rem_euclid(self.period.unwrap());
                let i = breakpoints.partition_point(|&b| b <= r);
                if i == 0 {
                    *values.last().unwrap()
                } else {
                    values[i - 1]
                }
            }
            Repr::Smooth(s) => smooth_eval(s, x, self.period.unwrap()).0,
            Repr::Mollified { epsilon } => self.mollified_eval(*epsilon, x),
            Repr::Truncated { modes } => {
                modes.iter().map(|(w, c)| (c * Complex64::from_polar(1.0, w * x)).re).sum()
            }
        }
    }

    /// `a'(x)`, or `None` for discontinuous profiles.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.repr {
            Repr::Constant(_) => Some(0.0),
            Repr::Piecewise { .. } => {
                if self.jumps().iter().all(|j| j.1 == 0.0) {
                    Some(0.0)
                } else {
                    None
                }
            }
            Repr::Smooth(s) => Some(smooth_eval(s, x, self.period.unwrap()).1),
            Repr::Mollified { epsilon } => self.mollified_derivative(*epsilon, x),
            Repr::Truncated { modes } => Some(
                modes
                    .iter()
                    .map(|(w, c)| (c * Complex64::new(0.0, *w) * Complex64::from_polar(1.0, w * x)).re)
                    .sum(),
            ),
        }
    }

    fn mollified_eval(&self, eps: f64, x: f64) -> f64 {
        let parent = self.parent.as_ref().unwrap();
        if parent.is_piecewise() {
            let p = parent.period.unwrap();
            let mut acc = parent.eval(x - eps);
            for (xk, jump) in parent.jumps() {
                for image in images_in(xk, p, x - eps, x + eps) {
                    acc += jump * mollifier_cdf((x - image) / eps);
                }
            }
            acc
        } else {
            let b = bump();
            b.nodes
                .iter()
                .zip(&b.weights)
                .map(|(s, w)| {
                    let y = 2.0 * s - 1.0;
                    2.0 * w * mollifier_density(y) * parent.eval(x - eps * y)
                })
                .sum()
        }
    }

    fn mollified_derivative(&self, eps: f64, x: f64) -> Option<f64> {
        let parent = self.parent.as_ref().unwrap();
        if parent.is_piecewise() {
            let p = parent.period.unwrap();
            let mut acc = 0.0;
            for (xk, jump) in parent.jumps() {
                for image in images_in(xk, p, x - eps, x + eps) {
                    acc += jump * mollifier_density((x - image) / eps) / eps;
                }
            }
            Some(acc)
        } else {
            let b = bump();
            let mut acc = 0.0;
            for (s, w) in b.nodes.iter().zip(&b.weights) {
                let y = 2.0 * s - 1.0;
                acc += 2.0 * w * mollifier_density(y) * parent.derivative(x - eps * y)?;
            }
            Some(acc)
        }
    }

    /// `x -> a(x / factor)`, recorded under `spec`.
    fn dilated(&self, factor: f64, spec: ProfileSpec) -> CoefficientProfile {
        let repr = match &self.repr {
            Repr::Constant(c) => Repr::Constant(*c),
            Repr::Piecewise { breakpoints, values } => Repr::Piecewise {
                breakpoints: breakpoints.iter().map(|b| b * factor).collect(),
                values: values.clone(),
            },
            Repr::Smooth(s) => Repr::Smooth(s.clone()),
            Repr::Mollified { epsilon } => Repr::Mollified { epsilon: epsilon * factor },
            Repr::Truncated { modes } => Repr::Truncated { modes: modes.iter().map(|(w, c)| (w / factor, *c)).collect() },
        };
        let parent = self.parent.as_ref().map(|p| {
            let pspec = ProfileSpec::Dilated { parent: Box::new(p.spec.clone()), factor };
            Arc::new(p.dilated(factor, pspec))
        });
        CoefficientProfile {
            kind: self.kind,
            repr,
            period: self.period.map(|p| p * factor),
            parent,
            spec,
            bounds: self.bounds,
        }
    }

    pub fn dilate(&self, factor: f64) -> Result<CoefficientProfile> {
        build_profile(&ProfileSpec::Dilated { parent: Box::new(self.spec.clone()), factor })
    }

    pub fn mollify(&self, epsilon: f64) -> Result<CoefficientProfile> {
        build_profile(&ProfileSpec::Mollified { parent: Box::new(self.spec.clone()), epsilon })
    }

    pub fn fourier_truncate(&self, cutoff: f64, grid: &Grid1D) -> Result<CoefficientProfile> {
        build_profile(&ProfileSpec::FourierTruncated {
            parent: Box::new(self.spec.clone()),
            cutoff,
            n: grid.n(),
            length: grid.length(),
        })
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.points().iter().map(|&x| self.eval(x)).collect()
    }

    fn stat_period(&self) -> f64 {
        self.period.unwrap_or(1.0)
    }

    fn fine_samples(&self) -> (f64, Vec<f64>) {
        let p = self.stat_period();
        let dx = p / STAT_SAMPLES as f64;
        (dx, (0..STAT_SAMPLES).map(|j| self.eval(j as f64 * dx)).collect())
    }

    fn compute_bounds(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Constant(c) => (*c, *c),
            Repr::Piecewise { values, .. } => {
                (values.iter().cloned().fold(f64::INFINITY, f64::min), values.iter().cloned().fold(0.0, f64::max))
            }
            _ => {
                let (_, s) = self.fine_samples();
                (s.iter().cloned().fold(f64::INFINITY, f64::min), s.iter().cloned().fold(0.0, f64::max))
            }
        }
    }

    pub fn stats(&self, windows: &[f64]) -> ProfileStats {
        let (lambda, upper) = self.bounds;
        let p = self.stat_period();
        let (lip, tv, var_log, local): (f64, f64, f64, Box<dyn Fn(f64) -> f64>) = match &self.repr {
            Repr::Constant(_) => (0.0, 0.0, 0.0, Box::new(|_| 0.0)),
            Repr::Piecewise { .. } => {
                let jumps = self.jumps();
                let vals: Vec<f64> = jumps.iter().map(|&(x, _)| self.eval(x)).collect();
                let m = jumps.len();
                let log_jumps: Vec<f64> = (0..m).map(|i| (vals[i].ln() - vals[(i + m - 1) % m].ln()).abs()).collect();
                let tv: f64 = jumps.iter().map(|j| j.1.abs()).sum();
                let lip = if tv > 0.0 { f64::INFINITY } else { 0.0 };
                let positions: Vec<f64> = jumps.iter().map(|j| j.0).collect();
                let mags: Vec<f64> = jumps.iter().map(|j| j.1.abs()).collect();
                let local = move |t: f64| window_sum_discrete(&positions, &mags, p, t).min(tv);
                (lip, tv, log_jumps.iter().sum(), Box::new(local))
            }
            _ => {
                let (dx, s) = self.fine_samples();
                let n = s.len();
                let diffs: Vec<f64> = (0..n).map(|j| (s[(j + 1) % n] - s[j]).abs()).collect();
                let lip = diffs.iter().cloned().fold(0.0, f64::max) / dx;
                let tv: f64 = diffs.iter().sum();
                let var_log: f64 = (0..n).map(|j| (s[(j + 1) % n].ln() - s[j].ln()).abs()).sum();
                let local = move |t: f64| window_sum_sampled(&diffs, dx, t).min(tv);
                (lip, tv, var_log, Box::new(local))
            }
        };
        let local_variation = windows.iter().map(|&t| (format!("{t}"), local(t))).collect();
        ProfileStats { lambda, upper, lip_seminorm: lip, total_variation: tv, local_variation, var_log }
    }
}

pub fn profile_stats(p: &CoefficientProfile, windows: &[f64]) -> ProfileStats {
    p.stats(windows)
}

fn images_in(xk: f64, period: f64, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let m0 = ((lo - xk) / period).floor() as i64;
    let m1 = ((hi - xk) / period).ceil() as i64;
    (m0..=m1).map(move |m| xk + m as f64 * period).filter(move |&y| y > lo && y < hi)
}

/// Largest total jump inside a closed window of length `t` on the circle of length `period`.
fn window_sum_discrete(positions: &[f64], mags: &[f64], period: f64, t: f64) -> f64 {
    if t >= period {
        return mags.iter().sum();
    }
    let mut best: f64 = 0.0;
    for &start in positions {
        let s: f64 = positions
            .iter()
            .zip(mags)
            .filter(|(&x, _)| (x - start).rem_euclid(period) <= t)
            .map(|(_, m)| m)
            .sum();
        best = best.max(s);
    }
    best
}

fn window_sum_sampled(diffs: &[f64], dx: f64, t: f64) -> f64 {
    let n = diffs.len();
    let w = ((t / dx).round() as usize).min(n);
    if w == n {
        return diffs.iter().sum();
    }
    let mut s: f64 = diffs[..w].iter().sum();
    let mut best = s;
    for j in 0..n {
        s += diffs[(j + w) % n] - diffs[j];
        best = best.max(s);
    }
    best
}

fn smooth_eval(s: &Smooth, x: f64, period: f64) -> (f64, f64) {
    match s {
        Smooth::Trig { mean, terms } => {
            let mut v = *mean;
            let mut d = 0.0;
            for &(a, harmonic, ph) in terms {
                let w = 2.0 * PI * harmonic / period;
                v += a * (w * x + ph).cos();
                d -= a * w * (w * x + ph).sin();
            }
            (v, d)
        }
        Smooth::VonMises { base, height, center_angle, concentration } => {
            let w = 2.0 * PI / period;
            let arg = w * x - center_angle;
            let e = (concentration * (arg.cos() - 1.0)).exp();
            (base + height * e, -height * e * concentration * w * arg.sin())
        }
    }
}

/// Helper for the balanced Kronig-Penney cell: `x0 = b1 / (b0 + b1)`.
pub fn kronig_penney_balanced(b0: f64, b1: f64) -> ProfileSpec {
    ProfileSpec::KronigPenney { x0: b1 / (b0 + b1), b0, b1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp() -> CoefficientProfile {
        build_profile(&ProfileSpec::KronigPenney { x0: 2.0 / 3.0, b0: 1.0, b1: 2.0 }).unwrap()
    }

    #[test]
    fn constant_profile() {
        let p = build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap();
        assert_eq!(p.eval(3.7), 1.0);
        let s = p.stats(&[1.0]);
        assert_eq!((s.total_variation, s.lip_seminorm, s.var_log), (0.0, 0.0, 0.0));
    }

    #[test]
    fn kronig_penney_values_and_var_log() {
        let p = kp();
        assert_eq!(p.eval(0.1), 1.0);
        assert_eq!(p.eval(0.7), 0.25);
        assert_eq!(p.eval(1.1), 1.0);
        assert_eq!(p.eval(2.0 / 3.0), 0.25);
        let s = p.stats(&[0.5, 1.0]);
        let oracle = 2.0 * (4.0f64).ln();
        assert!((s.var_log - oracle).abs() < 1e-12);
        assert!(s.var_log < 2.0 * PI);
        assert_eq!(s.lip_seminorm, f64::INFINITY);
        assert!((s.total_variation - 1.5).abs() < 1e-15);
    }

    #[test]
    fn kronig_penney_rejects_unbalanced() {
        assert!(build_profile(&ProfileSpec::KronigPenney { x0: 0.5, b0: 1.0, b1: 2.0 }).is_err());
        assert!(build_profile(&ProfileSpec::KronigPenney { x0: 0.5, b0: 1.0, b1: 1.0 }).is_err());
    }

    #[test]
    fn rejects_non_elliptic() {
        assert!(build_profile(&ProfileSpec::Constant { value: 0.0 }).is_err());
        let spec = ProfileSpec::TrigSeries {
            mean: 1.0,
            terms: vec![TrigTerm { amplitude: 1.5, harmonic: 1, phase: 0.0 }],
            period: 1.0,
        };
        assert!(build_profile(&spec).is_err());
    }

    #[test]
    fn piecewise_variation() {
        let spec = ProfileSpec::PiecewiseConstant { breakpoints: vec![0.0, 0.3, 0.6], values: vec![1.0, 3.0, 1.0], period: 1.0 };
        let p = build_profile(&spec).unwrap();
        let s = p.stats(&[0.1, 0.35, 2.0]);
        assert!((s.total_variation - 4.0).abs() < 1e-15);
        assert!((s.local_variation["0.1"] - 2.0).abs() < 1e-15);
        assert!((s.local_variation["0.35"] - 4.0).abs() < 1e-15);
        assert!(s.local_variation.values().all(|&v| v <= s.total_variation));
    }

    #[test]
    fn mollifier_has_unit_mass_and_symmetric_cdf() {
        assert!((mollifier_cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((mollifier_cdf(0.0) - 0.5).abs() < 1e-13);
        let direct = crate::quadrature::integrate(mollifier_density, -1.0, 1.0, 200);
        assert!((direct - 1.0).abs() < 1e-12);
        assert!((mollifier_cdf(0.3) + mollifier_cdf(-0.3) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn mollified_profile_matches_quadrature_convolution() {
        let m = kp().mollify(0.05).unwrap();
        assert_eq!(m.kind(), ProfileKind::Mollified);
        assert!(m.parent().is_some());
        for &x in &[0.0f64, 0.02, 0.3, 0.65, 0.69, 0.99] {
            let mut cuts = vec![-1.0, 1.0];
            for xk in [-1.0f64, 0.0, 2.0 / 3.0, 1.0, 5.0 / 3.0] {
                let y = (x - xk) / 0.05;
                if y.abs() < 1.0 {
                    cuts.push(y);
                }
            }
            cuts.sort_by(f64::total_cmp);
            let oracle: f64 = cuts
                .windows(2)
                .map(|w| crate::quadrature::integrate(|y| mollifier_density(y) * kp().eval(x - 0.05 * y), w[0], w[1], 400))
                .sum();
            assert!((m.eval(x) - oracle).abs() < 1e-6, "x={x}");
        }
        let h = 1e-6;
        let x = 0.66;
        let fd = (m.eval(x + h) - m.eval(x - h)) / (2.0 * h);
        assert!((m.derivative(x).unwrap() - fd).abs() < 1e-5 * fd.abs().max(1.0));
    }

    #[test]
    fn mollified_total_variation_does_not_grow() {
        let p = kp();
        let tv = p.stats(&[]).total_variation;
        for eps in [0.01, 0.05, 0.2] {
            assert!(p.mollify(eps).unwrap().stats(&[]).total_variation <= tv + 1e-9);
        }
    }

    #[test]
    fn fourier_truncation_matches_direct_dft() {
        let parent = ProfileSpec::VonMises { base: 1.0, height: 1.0, center: 8.0, concentration: 6.0, period: 16.0 };
        let g = Grid1D::new(256, 16.0).unwrap();
        let p = build_profile(&parent).unwrap();
        let t = p.fourier_truncate(8.0, &g).unwrap();
        let samples = p.sample(&g);
        // direct DFT truncation oracle
        let n = g.n();
        let mut oracle = vec![0.0; n];
        for k in 0..n {
            let w = g.frequency(k);
            if w.abs() > 0.8 {
                continue;
            }
            let c: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(j, &s)| s * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64;
            for (j, o) in oracle.iter_mut().enumerate() {
                *o += (c * Complex64::from_polar(1.0, 2.0 * PI * (k * j) as f64 / n as f64)).re;
            }
        }
        for (j, x) in g.points().iter().enumerate() {
            assert!((t.eval(*x) - oracle[j]).abs() < 1e-12);
        }
        let full = p.fourier_truncate(10.0 * g.nyquist(), &g).unwrap();
        for x in g.points() {
            assert!((full.eval(x) - p.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_preserves_var_log() {
        let p = kp();
        let d = p.dilate(4.0).unwrap();
        assert_eq!(d.period(), Some(4.0));
        assert_eq!(d.eval(4.0 * 0.7), 0.25);
        assert!((d.stats(&[]).var_log - p.stats(&[]).var_log).abs() < 1e-12);
        let m = p.mollify(0.05).unwrap();
        let md = m.dilate(0.25).unwrap();
        assert!((md.eval(0.1) - m.eval(0.4)).abs() < 1e-14);
        assert!((md.stats(&[]).var_log - m.stats(&[]).var_log).abs() < 1e-9);
    }

    #[test]
    fn spec_roundtrips_through_json() {
        let spec = ProfileSpec::Mollified { parent: Box::new(kronig_penney_balanced(1.0, 2.0)), epsilon: 0.1 };
        let text = serde_json::to_string(&spec).unwrap();
        let back: ProfileSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        assert!(serde_json::from_str::<ProfileSpec>(r#"{"kind":"constant","value":1,"extra":2}"#).is_err());
    }
}
