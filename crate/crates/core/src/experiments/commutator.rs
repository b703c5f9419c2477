use num_complex::Complex64;
use serde::Serialize;

use super::corpus::random_field;
use super::fit::{log_log_fit, DecayFit};
use crate::coefficients::CoefficientProfile;
use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid1D;
use crate::norms::fourier_multiplier;
use crate::operator1d::lp_band;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorOptions {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CommutatorOptions {
    fn default() -> Self {
        Self { iterations: 60, seed: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorFit {
    /// `(N, ||[S_N, a]||_{2->2})`.
    pub norms: Vec<(f64, f64)>,
    /// `None` when some commutator vanishes.
    pub fit: Option<DecayFit>,
}

/// Operator norm of `[S_N, a]` for the Fourier band projection `S_N = psi_0(|D| / N)`, by power
/// iteration on `-[S_N, a]^2 = [S_N, a]^* [S_N, a]` from a seeded random start.
pub fn commutator_test(p: &CoefficientProfile, grid: Grid1D, n_list: &[f64], opts: CommutatorOptions) -> Result<CommutatorFit> {
    if opts.iterations == 0 || n_list.is_empty() {
        return Err(LabError::InvalidArgument("commutator test needs iterations and at least one N".into()));
    }
    if let Some(n) = n_list.iter().find(|&&n| !(n > 0.0 && 2.0 * n <= grid.nyquist())) {
        return Err(LabError::InvalidArgument(format!("band N = {n} is not resolved (Nyquist {:.2})", grid.nyquist())));
    }
    let a: Vec<Complex64> = p.sample(&grid).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let times_a = |v: &Field| -> Result<Field> {
        let vals: Vec<Complex64> = v.values(0).iter().zip(&a).map(|(x, y)| x * y).collect();
        Field::from_vec_1d(grid, vals)
    };
    let mut norms = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = |v: &Field| fourier_multiplier(v, |xi| Complex64::new(lp_band(0, xi[0].abs() / n), 0.0));
        let comm = |v: &Field| -> Result<Field> { Ok(s(&times_a(v)?)?.sub(&times_a(&s(v)?)?)) };
        let mut v = random_field(&[grid], grid.nyquist(), opts.seed)?;
        let mut sigma = 0.0;
        for _ in 0..opts.iterations {
            let w = comm(&v)?;
            sigma = w.norm_l2() / v.norm_l2();
            if sigma == 0.0 {
                break;
            }
            let next = comm(&w)?.scaled(Complex64::new(-1.0, 0.0));
            let nn = next.norm_l2();
            if nn == 0.0 {
                break;
            }
            v = next.scaled(Complex64::new(1.0 / nn, 0.0));
        }
        norms.push((n, sigma));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let fit = if norms.iter().all(|&(_, s)| s > 1e-13 * scale) && norms.len() >= 2 { Some(log_log_fit(&norms)?) } else { None };
    Ok(CommutatorFit { norms, fit })
}
