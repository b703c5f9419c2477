//! Periodic divergence-form operator `L = -d/dx (a(x) d/dx)` and its functional calculus.

mod bloch;
mod multiplier;
mod spectrum;

pub use multiplier::{lp_band, lp_band_count, lp_cutoff, SpectralFunction};
pub use spectrum::{
    auto_decompose, bloch_decomposition, eigendecompose, eigendecompose_with_cap, fourier_decomposition, heat_kernel,
    spectral_apply, BasisKind, SpectralDecomposition1D, DEFAULT_EIGEN_CAP,
};

use faer::Mat;
use num_complex::Complex64;

use crate::coefficients::CoefficientProfile;
use crate::grid::Grid1D;

/// Staggered three-point discretization; `stagger[j]` is `a((j + 1/2) h)`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator1D {
    grid: Grid1D,
    profile: CoefficientProfile,
    stagger: Vec<f64>,
}

pub fn assemble_operator(profile: &CoefficientProfile, grid: &Grid1D) -> DiscreteOperator1D {
    let h = grid.spacing();
    let stagger = (0..grid.n()).map(|j| profile.eval((j as f64 + 0.5) * h)).collect();
    DiscreteOperator1D { grid: *grid, profile: profile.clone(), stagger }
}

impl DiscreteOperator1D {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn profile(&self) -> &CoefficientProfile {
        &self.profile
    }

    pub fn stagger(&self) -> &[f64] {
        &self.stagger
    }

    /// Matrix entry `A[j][m]`.
    pub fn entry(&self, j: usize, m: usize) -> f64 {
        let n = self.grid.n();
        let h2 = self.grid.spacing().powi(2);
        let prev = (j + n - 1) % n;
        let mut v = 0.0;
        if m == j {
            v += (self.stagger[j] + self.stagger[prev]) / h2;
        }
        if m == (j + 1) % n {
            v -= self.stagger[j] / h2;
        }
        if m == prev {
            v -= self.stagger[prev] / h2;
        }
        v
    }

    pub fn dense(&self) -> Mat<f64> {
        let n = self.grid.n();
        let mut a = Mat::<f64>::zeros(n, n);
        for j in 0..n {
            for m in [(j + n - 1) % n, j, (j + 1) % n] {
                a[(j, m)] = self.entry(j, m);
            }
        }
        a
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let h2 = self.grid.spacing().powi(2);
        (0..n)
            .map(|j| {
                let next = (j + 1) % n;
                let prev = (j + n - 1) % n;
                -(self.stagger[j] * (u[next] - u[j]) - self.stagger[prev] * (u[j] - u[prev])) / h2
            })
            .collect()
    }

    /// `sum_j a_{j+1/2} |u_{j+1} - u_j|^2 / h`, i.e. `<A u, u>` in the `h`-weighted inner product.
    pub fn quadratic_form(&self, u: &[Complex64]) -> f64 {
        let n = self.grid.n();
        let h = self.grid.spacing();
        (0..n).map(|j| self.stagger[j] * (u[(j + 1) % n] - u[j]).norm_sqr()).sum::<f64>() / h
    }

    pub fn frobenius_norm(&self) -> f64 {
        let n = self.grid.n();
        (0..n)
            .map(|j| [(j + n - 1) % n, j, (j + 1) % n].iter().map(|&m| self.entry(j, m).powi(2)).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Gershgorin bound on the largest eigenvalue.
    pub fn spectral_bound(&self) -> f64 {
        let n = self.grid.n();
        let h2 = self.grid.spacing().powi(2);
        (0..n).map(|j| 2.0 * (self.stagger[j] + self.stagger[(j + n - 1) % n]) / h2).fold(0.0, f64::max)
    }
}
