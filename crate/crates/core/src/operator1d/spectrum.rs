use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::bloch::BlochBasis;
use super::{DiscreteOperator1D, SpectralFunction};
use crate::coefficients::ProfileKind;
use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid1D;
use crate::lanes::map_axis;

pub const DEFAULT_EIGEN_CAP: usize = 4096;
const ZERO_SNAP: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Dense,
    Fourier,
    Bloch,
}

#[derive(Clone)]
enum Basis {
    Dense(Mat<f64>),
    Fourier { fwd: Arc<dyn Fft<f64>>, inv: Arc<dyn Fft<f64>> },
    Bloch(BlochBasis),
}

/// Eigenpairs of one axis operator, held as an orthonormal transform plus eigenvalues
/// indexed in transform order.
#[derive(Clone)]
pub struct SpectralDecomposition1D {
    grid: Grid1D,
    eigenvalues: Vec<f64>,
    basis: Basis,
}

impl std::fmt::Debug for SpectralDecomposition1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDecomposition1D")
            .field("grid", &self.grid)
            .field("basis", &self.kind())
            .field("lambda_max", &self.lambda_max())
            .finish()
    }
}

fn snap(mut eigenvalues: Vec<f64>) -> Vec<f64> {
    let top = eigenvalues.iter().cloned().fold(0.0, f64::max);
    for l in eigenvalues.iter_mut() {
        if *l <= ZERO_SNAP * top {
            *l = 0.0;
        }
    }
    eigenvalues
}

pub fn eigendecompose(op: &DiscreteOperator1D) -> Result<SpectralDecomposition1D> {
    eigendecompose_with_cap(op, DEFAULT_EIGEN_CAP)
}

/// Dense symmetric eigendecomposition, eigenvalues ascending.
pub fn eigendecompose_with_cap(op: &DiscreteOperator1D, cap: usize) -> Result<SpectralDecomposition1D> {
    let n = op.grid().n();
    if n > cap {
        return Err(LabError::Eigen(format!("n = {n} exceeds the dense cap {cap}")));
    }
    let a = op.dense();
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| LabError::Eigen(format!("{e:?}")))?;
    let q = evd.U().to_owned();
    let s = evd.S();
    let eigenvalues: Vec<f64> = (0..n).map(|k| s[k]).collect();
    // residual ||A Q - Q diag(lambda)||_F against ||A||_F
    let mut aq = Mat::<f64>::zeros(n, n);
    matmul(&mut aq, Accum::Replace, &a, &q, 1.0, Par::Seq);
    let mut res = 0.0;
    for k in 0..n {
        for j in 0..n {
            res += (aq[(j, k)] - q[(j, k)] * eigenvalues[k]).powi(2);
        }
    }
    let res = res.sqrt();
    let scale = op.frobenius_norm();
    if !(res <= 1e-10 * scale) {
        return Err(LabError::Eigen(format!("residual {res:e} exceeds 1e-10 * ||A|| = {:e}", 1e-10 * scale)));
    }
    Ok(SpectralDecomposition1D { grid: *op.grid(), eigenvalues: snap(eigenvalues), basis: Basis::Dense(q) })
}

/// Discrete Fourier basis; valid for constant coefficients.
pub fn fourier_decomposition(op: &DiscreteOperator1D) -> Result<SpectralDecomposition1D> {
    let s = op.stagger();
    let c = s[0];
    if s.iter().any(|&v| (v - c).abs() > 1e-14 * c) {
        return Err(LabError::Eigen("Fourier basis needs a constant coefficient".into()));
    }
    let g = *op.grid();
    let n = g.n();
    let h = g.spacing();
    let eigenvalues = (0..n)
        .map(|k| 4.0 * c / (h * h) * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
        .collect();
    let mut planner = FftPlanner::new();
    let basis = Basis::Fourier { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) };
    Ok(SpectralDecomposition1D { grid: g, eigenvalues: snap(eigenvalues), basis })
}

/// Bloch-Floquet basis for coefficients periodic with `period` (a divisor of the grid length).
pub fn bloch_decomposition(op: &DiscreteOperator1D, period: f64) -> Result<SpectralDecomposition1D> {
    let (basis, eigenvalues) = BlochBasis::new(op, period)?;
    Ok(SpectralDecomposition1D { grid: *op.grid(), eigenvalues: snap(eigenvalues), basis: Basis::Bloch(basis) })
}

/// Picks Fourier for constants, Bloch for profiles repeating at least twice on the grid, dense otherwise.
pub fn auto_decompose(op: &DiscreteOperator1D) -> Result<SpectralDecomposition1D> {
    if op.profile().kind() == ProfileKind::Constant {
        return fourier_decomposition(op);
    }
    let g = op.grid();
    if let Some(p) = op.profile().period() {
        let cells = g.length() / p;
        let points = p / g.spacing();
        let integral = |x: f64| (x - x.round()).abs() < 1e-9 && x.round() >= 1.0;
        if integral(cells) && integral(points) && cells.round() >= 2.0 && points.round() >= 4.0 {
            return bloch_decomposition(op, p);
        }
    }
    eigendecompose(op)
}

impl SpectralDecomposition1D {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn kind(&self) -> BasisKind {
        match self.basis {
            Basis::Dense(_) => BasisKind::Dense,
            Basis::Fourier { .. } => BasisKind::Fourier,
            Basis::Bloch(_) => BasisKind::Bloch,
        }
    }

    /// Eigenvalues in transform order (ascending for the dense basis).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest nonzero eigenvalue.
    pub fn lambda_min_positive(&self) -> f64 {
        self.eigenvalues.iter().cloned().filter(|&l| l > 0.0).fold(f64::INFINITY, f64::min)
    }

    pub fn dense_eigenvectors(&self) -> Option<&Mat<f64>> {
        match &self.basis {
            Basis::Dense(q) => Some(q),
            _ => None,
        }
    }

    /// Coefficients of each row of `lines` (shape `(m, n)`) in the eigenbasis.
    pub fn forward_lines(&self, lines: Array2<Complex64>) -> Array2<Complex64> {
        match &self.basis {
            Basis::Dense(q) => dense_times(&lines, q, false),
            Basis::Fourier { fwd, .. } => fft_lines(lines, fwd.as_ref()),
            Basis::Bloch(b) => b.forward_lines(lines),
        }
    }

    pub fn inverse_lines(&self, lines: Array2<Complex64>) -> Array2<Complex64> {
        match &self.basis {
            Basis::Dense(q) => dense_times(&lines, q, true),
            Basis::Fourier { inv, .. } => fft_lines(lines, inv.as_ref()),
            Basis::Bloch(b) => b.inverse_lines(lines),
        }
    }

    pub fn forward_axis(&self, data: &ArrayD<Complex64>, axis: usize) -> ArrayD<Complex64> {
        map_axis(data, axis, |b| self.forward_lines(b))
    }

    pub fn inverse_axis(&self, data: &ArrayD<Complex64>, axis: usize) -> ArrayD<Complex64> {
        map_axis(data, axis, |b| self.inverse_lines(b))
    }

    /// Grid values of the `k`-th eigenvector (unit norm in the plain Euclidean sense).
    pub fn mode(&self, k: usize) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut e = Array2::zeros((1, n));
        e[[0, k]] = Complex64::new(1.0, 0.0);
        self.inverse_lines(e).row(0).to_vec()
    }
}

/// `X Q` (or `X Q^T`) for complex `X` with rows as lines.
fn dense_times(x: &Array2<Complex64>, q: &Mat<f64>, transpose: bool) -> Array2<Complex64> {
    let (m, n) = x.dim();
    let re = Mat::<f64>::from_fn(m, n, |i, j| x[[i, j]].re);
    let im = Mat::<f64>::from_fn(m, n, |i, j| x[[i, j]].im);
    let mut ore = Mat::<f64>::zeros(m, n);
    let mut oim = Mat::<f64>::zeros(m, n);
    if transpose {
        matmul(&mut ore, Accum::Replace, &re, q.transpose(), 1.0, Par::Seq);
        matmul(&mut oim, Accum::Replace, &im, q.transpose(), 1.0, Par::Seq);
    } else {
        matmul(&mut ore, Accum::Replace, &re, q, 1.0, Par::Seq);
        matmul(&mut oim, Accum::Replace, &im, q, 1.0, Par::Seq);
    }
    Array2::from_shape_fn((m, n), |(i, j)| Complex64::new(ore[(i, j)], oim[(i, j)]))
}

fn fft_lines(mut lines: Array2<Complex64>, plan: &dyn Fft<f64>) -> Array2<Complex64> {
    let n = lines.ncols();
    let scale = 1.0 / (n as f64).sqrt();
    let buf = lines.as_slice_mut().expect("standard layout");
    plan.process(buf);
    buf.iter_mut().for_each(|z| *z *= scale);
    lines
}

fn check_1d(d: &SpectralDecomposition1D, u: &Field) -> Result<()> {
    if u.dim() != 1 || u.grids()[0] != d.grid {
        return Err(LabError::Shape("field grid does not match the decomposition".into()));
    }
    Ok(())
}

/// `F(L) u = Q diag(F(lambda)) Q^T u`, componentwise.
pub fn spectral_apply(d: &SpectralDecomposition1D, f: &SpectralFunction, u: &Field) -> Result<Field> {
    check_1d(d, u)?;
    let weights = f.eval_all(&d.eigenvalues)?;
    let comps = u
        .components()
        .iter()
        .map(|c| {
            let n = c.len();
            let line = Array2::from_shape_vec((1, n), c.iter().cloned().collect()).unwrap();
            let mut coef = d.forward_lines(line);
            coef.row_mut(0).iter_mut().zip(&weights).for_each(|(z, w)| *z *= w);
            let back = d.inverse_lines(coef);
            ArrayD::from_shape_vec(IxDyn(&[n]), back.row(0).to_vec()).unwrap()
        })
        .collect();
    u.with_components(comps)
}

/// Heat kernel `K(x_j, x_m, t)` with rows integrating to 1 against `h`.
pub fn heat_kernel(d: &SpectralDecomposition1D, t: f64) -> Result<Array2<f64>> {
    if !(t > 0.0) {
        return Err(LabError::InvalidArgument(format!("heat time {t} must be positive")));
    }
    let n = d.grid.n();
    let h = d.grid.spacing();
    let w: Vec<f64> = d.eigenvalues.iter().map(|l| (-t * l).exp()).collect();
    match &d.basis {
        Basis::Dense(q) => {
            let scaled = Mat::<f64>::from_fn(n, n, |j, k| q[(j, k)] * w[k]);
            let mut k = Mat::<f64>::zeros(n, n);
            matmul(&mut k, Accum::Replace, &scaled, q.transpose(), 1.0 / h, Par::Seq);
            Ok(Array2::from_shape_fn((n, n), |(j, m)| k[(j, m)]))
        }
        _ => {
            let eye = Array2::from_shape_fn((n, n), |(j, m)| Complex64::new(if j == m { 1.0 } else { 0.0 }, 0.0));
            let mut coef = d.forward_lines(eye);
            for mut row in coef.rows_mut() {
                row.iter_mut().zip(&w).for_each(|(z, wk)| *z *= wk);
            }
            let cols = d.inverse_lines(coef);
            // row j of `cols` is K e_j; K is symmetric
            Ok(Array2::from_shape_fn((n, n), |(j, m)| cols[[m, j]].re / h))
        }
    }
}
