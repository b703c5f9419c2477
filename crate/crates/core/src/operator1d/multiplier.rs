//! Scalar spectral functions `F(lambda)` and the dyadic cutoffs built from them.

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};

type Scalar = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A function on the spectrum, evaluated at eigenvalues `lambda >= 0`.
///
/// Functions with a removable singularity at zero carry the limit value explicitly.
#[derive(Clone)]
pub struct SpectralFunction {
    label: String,
    f: Arc<Scalar>,
    at_zero: Option<Complex64>,
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFunction").field("label", &self.label).field("at_zero", &self.at_zero).finish()
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl SpectralFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f), at_zero: None }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |l| c(f(l)))
    }

    /// `g(sqrt(lambda))`.
    pub fn of_root(label: impl Into<String>, g: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |l: f64| g(l.max(0.0).sqrt()))
    }

    pub fn with_value_at_zero(mut self, v: Complex64) -> Self {
        self.at_zero = Some(v);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, lambda: f64) -> Result<Complex64> {
        let l = lambda.max(0.0);
        let v = match self.at_zero {
            Some(z) if l == 0.0 => z,
            _ => (self.f)(l),
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(LabError::UndefinedMultiplier { label: self.label.clone(), lambda })
        }
    }

    pub fn eval_all(&self, lambdas: &[f64]) -> Result<Vec<Complex64>> {
        lambdas.iter().map(|&l| self.eval(l)).collect()
    }

    pub fn product(&self, other: &SpectralFunction) -> SpectralFunction {
        let (f, g) = (self.f.clone(), other.f.clone());
        let at_zero = match (self.at_zero, other.at_zero) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or_else(|| f(0.0)) * b.unwrap_or_else(|| g(0.0))),
        };
        SpectralFunction { label: format!("{}*{}", self.label, other.label), f: Arc::new(move |l| f(l) * g(l)), at_zero }
    }

    pub fn identity() -> Self {
        Self::real("one", |_| 1.0)
    }

    /// `e^{i t lambda^{ell/2}}`.
    pub fn propagator(ell: u8, t: f64) -> Self {
        match ell {
            2 => Self::new(format!("schrodinger(t={t})"), move |l| Complex64::from_polar(1.0, t * l)),
            _ => Self::new(format!("half_wave(t={t})"), move |l: f64| Complex64::from_polar(1.0, t * l.sqrt())),
        }
    }

    pub fn cosine(t: f64) -> Self {
        Self::real(format!("cos(t={t})"), move |l: f64| (t * l.sqrt()).cos())
    }

    /// `sin(t sqrt(lambda)) / sqrt(lambda)`, limit `t` at zero.
    pub fn sine_over_root(t: f64) -> Self {
        Self::real(format!("sin_over_root(t={t})"), move |l: f64| (t * l.sqrt()).sin() / l.sqrt()).with_value_at_zero(c(t))
    }

    /// `-sqrt(lambda) sin(t sqrt(lambda))`, the time derivative of the cosine family.
    pub fn cosine_derivative(t: f64) -> Self {
        Self::real(format!("dcos(t={t})"), move |l: f64| -l.sqrt() * (t * l.sqrt()).sin())
    }

    pub fn heat(t: f64) -> Self {
        Self::real(format!("heat(t={t})"), move |l| (-t * l).exp())
    }

    /// `phi(sqrt(lambda))`.
    pub fn lp_low() -> Self {
        Self::real("lp_low", |l: f64| lp_cutoff(l.sqrt()))
    }

    /// `psi_k(sqrt(lambda))`, supported in `2^{k-1} <= sqrt(lambda) <= 2^{k+1}`.
    pub fn lp_band(k: i32) -> Self {
        Self::real(format!("lp_band(k={k})"), move |l: f64| lp_band(k, l.sqrt()))
    }

    /// Heat block `4^{-j} lambda e^{-4^{-j} lambda}`.
    pub fn besov_block(j: i32) -> Self {
        let s = 4f64.powi(-j);
        Self::real(format!("besov_block(j={j})"), move |l| s * l * (-s * l).exp())
    }

    /// Bochner-Riesz mean `(1 - lambda / R^2)_+^delta` (`delta = 0` is the sharp indicator of `lambda <= R^2`).
    pub fn bochner_riesz(delta: f64, radius: f64) -> Self {
        let r2 = radius * radius;
        Self::real(format!("bochner_riesz(delta={delta},R={radius})"), move |l| {
            let x = 1.0 - l / r2;
            if x < 0.0 {
                0.0
            } else if delta == 0.0 {
                1.0
            } else {
                x.powf(delta)
            }
        })
    }

    /// Indicator of `lo <= sqrt(lambda) < hi`.
    pub fn root_window(lo: f64, hi: f64) -> Self {
        Self::real(format!("window[{lo},{hi})"), move |l: f64| {
            let s = l.sqrt();
            if s >= lo && s < hi {
                1.0
            } else {
                0.0
            }
        })
    }
}

fn smooth_step_kernel(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth radial cutoff: 1 on `|s| <= 1`, 0 on `|s| >= 2`, nonincreasing in `|s|`.
pub fn lp_cutoff(s: f64) -> f64 {
    let r = s.abs();
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let a = smooth_step_kernel(2.0 - r);
    a / (a + smooth_step_kernel(r - 1.0))
}

/// `phi(2^{-k} s) - phi(2^{-k+1} s)`; `k = 0` is the unit band on `[1/2, 2]`.
pub fn lp_band(k: i32, s: f64) -> f64 {
    let scale = 2f64.powi(-k);
    lp_cutoff(scale * s) - lp_cutoff(2.0 * scale * s)
}

/// Smallest `K` such that `phi + sum_{k=1..K} psi_k = 1` on `[0, s_max]`.
pub fn lp_band_count(s_max: f64) -> i32 {
    let mut k = 0;
    while 2f64.powi(k) < s_max {
        k += 1;
    }
    k.max(1)
}
