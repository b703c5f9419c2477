//! Functional calculus through the cosine family: for an even symbol `Psi` on `R^d`,
//! `Psi(sqrt L_1, .., sqrt L_d) = (2 pi)^{-d} int Psi^(xi) prod_j cos(xi_j sqrt L_j) dxi`.
//!
//! `Psi^` is sampled by FFT on a periodic `y`-box of side `Y`, so the trapezoid rule in
//! `xi` reproduces the `Y`-periodization of `Psi`. That equals `Psi` on the spectrum as long as
//! `sqrt(lambda_max) + support radius < Y`.

use ndarray::{Array2, ArrayD, Axis as NdAxis, Dimension, IxDyn};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::fourier::fft_axes;
use crate::lanes::map_axis;
use crate::operator1d::lp_band;
use crate::tensor_propagator::{check_ell, TensorOperator};

/// Relative `L^1` tail of `Psi^` dropped when truncating the `xi`-box.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;
/// Required ratio of the `xi` Nyquist to the largest phase frequency.
pub const OVERSAMPLING: f64 = 4.0;

fn default_points(d: usize) -> usize {
    if d == 1 {
        4096
    } else {
        1024
    }
}

fn max_points(d: usize) -> usize {
    match d {
        1 => 1 << 17,
        2 => 2048,
        _ => 128,
    }
}

/// Periodic `y`-box `[-period/2, period/2)^d` with `points` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelGrid {
    pub d: usize,
    pub period: f64,
    pub points: usize,
}

impl KernelGrid {
    /// Smallest admissible box for arguments up to `s_max`, a symbol supported in
    /// `|y| <= radius`, and `xi`-content up to `bandwidth`.
    pub fn covering(d: usize, s_max: f64, radius: f64, bandwidth: f64) -> Result<Self> {
        let period = (s_max + radius + 1.0).max(4.0 * radius);
        let need = (OVERSAMPLING * bandwidth * period / PI).ceil() as usize;
        let points = need.max(default_points(d)).next_power_of_two();
        if points > max_points(d) {
            return Err(LabError::Aliasing(format!(
                "{points} points per axis needed for period {period:.3} and bandwidth {bandwidth:.3} (cap {})",
                max_points(d)
            )));
        }
        Ok(Self { d, period, points })
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn xi_spacing(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Largest `|xi|` resolved by the box.
    pub fn xi_nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    fn y(&self, j: usize) -> f64 {
        -0.5 * self.period + j as f64 * self.spacing()
    }
}

/// Samples of a symbol's Fourier transform on `xi = m dxi`, `m in -K..=K` per axis.
#[derive(Clone, Debug)]
pub struct SymbolSample {
    d: usize,
    xi_spacing: f64,
    period: f64,
    support_radius: f64,
    half: usize,
    values: ArrayD<Complex64>,
    even: bool,
    tail_mass: f64,
}

/// Average over all `2^d` coordinate sign flips of samples on a symmetric node box.
pub fn symmetrize(xi_spacing: f64, values: &ArrayD<Complex64>) -> Result<SymbolSample> {
    let len = values.shape()[0];
    if len.is_multiple_of(2) || values.shape().iter().any(|&s| s != len) {
        return Err(LabError::Shape("symmetric sample box needs equal odd side lengths".into()));
    }
    let mut v = values.clone();
    for axis in 0..v.ndim() {
        let mut flipped = v.clone();
        flipped.invert_axis(NdAxis(axis));
        v = (&v + &flipped).mapv(|z| z * 0.5);
    }
    let d = v.ndim();
    Ok(SymbolSample {
        d,
        xi_spacing,
        period: 2.0 * PI / xi_spacing,
        support_radius: f64::INFINITY,
        half: len / 2,
        values: v,
        even: true,
        tail_mass: 0.0,
    })
}

/// Reorders an FFT-ordered cube into the symmetric box `m in -K..=K`, `K = points/2 - 1`,
/// applying the `e^{i xi y_0}` phase of the box origin.
fn centered(data: &ArrayD<Complex64>, points: usize) -> ArrayD<Complex64> {
    let d = data.ndim();
    let half = points / 2 - 1;
    let side = 2 * half + 1;
    ArrayD::from_shape_fn(IxDyn(&vec![side; d]), |idx| {
        let mut src = Vec::with_capacity(d);
        let mut parity = 0i64;
        for &i in idx.slice() {
            let m = i as i64 - half as i64;
            parity += m;
            src.push(m.rem_euclid(points as i64) as usize);
        }
        let v = data[IxDyn(&src)];
        if parity % 2 == 0 {
            v
        } else {
            -v
        }
    })
}

fn sample_box(grid: &KernelGrid, f: impl Fn(f64) -> Complex64) -> ArrayD<Complex64> {
    ArrayD::from_shape_fn(IxDyn(&vec![grid.points; grid.d]), |idx| {
        let r2: f64 = idx.slice().iter().map(|&j| grid.y(j).powi(2)).sum();
        f(r2.sqrt())
    })
}

impl SymbolSample {
    /// `Psi(y) = g(|y|)`, supported (or negligible) in `|y| <= support_radius`.
    pub fn from_radial(g: impl Fn(f64) -> Complex64, support_radius: f64, grid: &KernelGrid) -> Result<Self> {
        let samples = sample_box(grid, g);
        // Psi^(xi) = int Psi(y) e^{-i xi y} dy; Psi even, so the sign of the exponent is immaterial.
        let spectrum = fft_axes(samples, true);
        let scale = grid.spacing().powi(grid.d as i32);
        let values = centered(&spectrum, grid.points).mapv(|z| z * scale);
        let mut s = symmetrize(grid.xi_spacing(), &values)?;
        s.period = grid.period;
        s.support_radius = support_radius;
        Ok(s.truncated(DEFAULT_TAIL_THRESHOLD))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn xi_spacing(&self) -> f64 {
        self.xi_spacing
    }

    /// Largest retained `|xi_j|`.
    pub fn xi_cutoff(&self) -> f64 {
        self.half as f64 * self.xi_spacing
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=2 * self.half).map(|i| (i as f64 - self.half as f64) * self.xi_spacing).collect()
    }

    /// `(2 pi)^{-d} sum_{dropped} |Psi^| dxi^d`, a sup-norm bound on the truncation error.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    fn weight(&self) -> f64 {
        (self.xi_spacing / (2.0 * PI)).powi(self.d as i32)
    }

    /// Smallest centered sub-box whose complement carries at most `threshold` of the `L^1` mass.
    pub fn truncated(&self, threshold: f64) -> SymbolSample {
        let h = self.half as i64;
        let mut shell = vec![0.0; self.half + 1];
        for (idx, v) in self.values.indexed_iter() {
            let r = idx.slice().iter().map(|&i| (i as i64 - h).unsigned_abs()).max().unwrap_or(0) as usize;
            shell[r] += v.norm();
        }
        let total: f64 = shell.iter().sum();
        let mut keep = self.half;
        let mut dropped = 0.0;
        while keep > 0 && dropped + shell[keep] <= threshold * total {
            dropped += shell[keep];
            keep -= 1;
        }
        let off = self.half - keep;
        let side = 2 * keep + 1;
        let values = ArrayD::from_shape_fn(IxDyn(&vec![side; self.d]), |idx| {
            let src: Vec<usize> = idx.slice().iter().map(|&i| i + off).collect();
            self.values[IxDyn(&src)]
        });
        SymbolSample { half: keep, values, tail_mass: self.tail_mass + dropped * self.weight(), ..self.clone() }
    }

    /// `(2 pi)^{-d} sum_xi dxi^d Psi^(xi) prod_j cos(xi_j s_j)` at the given per-axis arguments.
    pub fn reconstruct_grid(&self, args: &[Vec<f64>]) -> ArrayD<Complex64> {
        let nodes = self.nodes();
        let mut acc = self.values.clone();
        for (axis, s) in args.iter().enumerate() {
            let cos = Array2::from_shape_fn((nodes.len(), s.len()), |(m, k)| Complex64::new((nodes[m] * s[k]).cos(), 0.0));
            acc = map_axis(&acc, axis, |block| block.dot(&cos));
        }
        acc.mapv(|z| z * self.weight())
    }
}

#[derive(Clone, Debug)]
pub struct PhillipsOutput {
    pub field: Field,
    /// Sup bound on the multiplier error from the dropped `xi` tail.
    pub tail_mass: f64,
}

/// Applies the even symbol with cosine arguments `scale * sqrt(lambda_j)`.
fn apply_scaled(psi: &SymbolSample, op: &TensorOperator, u: &Field, scale: f64) -> Result<PhillipsOutput> {
    if !psi.even {
        return Err(LabError::InvalidArgument("Phillips calculus needs an even symbol".into()));
    }
    if psi.d != op.dim() {
        return Err(LabError::Shape(format!("symbol dimension {} vs operator dimension {}", psi.d, op.dim())));
    }
    let args: Vec<Vec<f64>> =
        op.axes().iter().map(|a| a.spectrum.eigenvalues().iter().map(|&l| scale * l.max(0.0).sqrt()).collect()).collect();
    let s_max = args.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    if s_max + psi.support_radius >= psi.period {
        return Err(LabError::Aliasing(format!(
            "y-period {:.3} does not clear spectrum radius {:.3} plus support {:.3}",
            psi.period, s_max, psi.support_radius
        )));
    }
    let weights = psi.reconstruct_grid(&args);
    Ok(PhillipsOutput { field: op.apply_weights(&weights, u)?, tail_mass: psi.tail_mass })
}

pub fn phillips_apply(psi: &SymbolSample, op: &TensorOperator, u: &Field) -> Result<PhillipsOutput> {
    apply_scaled(psi, op, u, 1.0)
}

/// `K_t(xi) = (2 pi)^{-d} int e^{i t |y|^ell} psi(y) e^{i y xi} dy` on the symmetric `xi`-box.
#[derive(Clone, Debug)]
pub struct DispersiveKernel {
    pub ell: u8,
    pub t: f64,
    grid: KernelGrid,
    half: usize,
    values: ArrayD<Complex64>,
}

/// Unit-annulus cutoff `psi_0(|y|)`, supported in `1/2 <= |y| <= 2`.
pub fn unit_cutoff(r: f64) -> f64 {
    lp_band(0, r)
}

/// Largest local frequency of `e^{i t |y|^ell}` over `|y| <= 2`.
pub fn phase_bandwidth(ell: u8, t: f64) -> f64 {
    ell as f64 * 2f64.powi(ell as i32 - 1) * t.abs()
}

pub fn dispersive_kernel(ell: u8, t: f64, xi_max: f64, grid: &KernelGrid) -> Result<DispersiveKernel> {
    dispersive_kernel_with(ell, t, xi_max, grid, unit_cutoff)
}

pub fn dispersive_kernel_with(
    ell: u8,
    t: f64,
    xi_max: f64,
    grid: &KernelGrid,
    cutoff: impl Fn(f64) -> f64,
) -> Result<DispersiveKernel> {
    check_ell(ell)?;
    if !(1..=2).contains(&grid.d) {
        return Err(LabError::InvalidArgument("kernels are computed for d in {1, 2}".into()));
    }
    let need = OVERSAMPLING * phase_bandwidth(ell, t).max(xi_max);
    if grid.xi_nyquist() < need {
        return Err(LabError::Aliasing(format!(
            "y-resolution gives |xi| <= {:.2}, need {:.2} for t = {t}, Xi = {xi_max}",
            grid.xi_nyquist(),
            need
        )));
    }
    if grid.period < 4.0 {
        return Err(LabError::Aliasing("y-period must exceed the cutoff support diameter 4".into()));
    }
    let samples = sample_box(grid, |r| Complex64::from_polar(cutoff(r), t * r.powi(ell as i32)));
    let spectrum = fft_axes(samples, true);
    let scale = (grid.spacing() / (2.0 * PI)).powi(grid.d as i32);
    let values = centered(&spectrum, grid.points).mapv(|z| z * scale);
    Ok(DispersiveKernel { ell, t, grid: *grid, half: grid.points / 2 - 1, values })
}

impl DispersiveKernel {
    pub fn grid(&self) -> &KernelGrid {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.grid.xi_spacing()
    }

    fn radius_at(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.xi(i).powi(2)).sum::<f64>().sqrt()
    }

    /// `max |K_t(xi)|` over `lo <= |xi| < hi`.
    pub fn max_abs_in_shell(&self, lo: f64, hi: f64) -> f64 {
        self.values
            .indexed_iter()
            .filter(|(idx, _)| {
                let r = self.radius_at(idx.slice());
                r >= lo && r < hi
            })
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `int_{|xi| > cutoff} |K_t| dxi` by the trapezoid rule.
    pub fn tail_mass(&self, cutoff: f64) -> f64 {
        let w = self.grid.xi_spacing().powi(self.grid.d as i32);
        self.values
            .indexed_iter()
            .filter(|(idx, _)| self.radius_at(idx.slice()) > cutoff)
            .map(|(_, v)| v.norm())
            .sum::<f64>()
            * w
    }

    /// `(xi, Re K, Im K)` rows; the `xi_2 = 0` line in `d = 2`.
    pub fn profile_rows(&self) -> Vec<(f64, f64, f64)> {
        let side = 2 * self.half + 1;
        (0..side)
            .map(|i| {
                let v = if self.grid.d == 1 { self.values[IxDyn(&[i])] } else { self.values[IxDyn(&[i, self.half])] };
                (self.xi(i), v.re, v.im)
            })
            .collect()
    }

    /// The symbol `Phi^ = (2 pi)^d K_t` of `Phi(y) = e^{i t |y|^ell} psi(y)`.
    pub fn to_symbol(&self) -> Result<SymbolSample> {
        let scale = (2.0 * PI).powi(self.grid.d as i32);
        let mut s = symmetrize(self.grid.xi_spacing(), &self.values.mapv(|z| z * scale))?;
        s.period = self.grid.period;
        s.support_radius = 2.0;
        Ok(s.truncated(DEFAULT_TAIL_THRESHOLD))
    }
}

/// `e^{i t L^{ell/2}} psi_k(sqrt L) u` through the cosine quadrature of the rescaled unit kernel:
/// `psi_k(s) = psi_0(2^{-k} s)` and `t s^ell = (2^{k ell} t) (2^{-k} s)^ell`.
pub fn frequency_localized_evolve(ell: u8, t: f64, k: i32, op: &TensorOperator, u: &Field) -> Result<PhillipsOutput> {
    check_ell(ell)?;
    let scale = 2f64.powi(-k);
    let t_unit = t * 2f64.powi(k * ell as i32);
    let s_max = scale * op.axes().iter().map(|a| a.spectrum.lambda_max().sqrt()).fold(0.0, f64::max);
    let grid = KernelGrid::covering(op.dim(), s_max, 2.0, phase_bandwidth(ell, t_unit).max(16.0))?;
    let kernel = dispersive_kernel(ell, t_unit, 0.0, &grid)?;
    apply_scaled(&kernel.to_symbol()?, op, u, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_profile, ProfileSpec};
    use crate::grid::Grid1D;
    use crate::operator1d::SpectralFunction;
    use rustfft::FftPlanner;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn test_field(g: Grid1D) -> Field {
        Field::from_vec_1d(
            g,
            g.points()
                .iter()
                .map(|&x| Complex64::new((-(g.periodic_offset(x, 5.0)).powi(2)).exp() + 0.3 * (x * 1.7).sin(), (3.1 * x).cos() * 0.2))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn symmetrize_cases() {
        let h = 0.5;
        let nodes: Vec<f64> = (-4..=4).map(|m| m as f64 * h).collect();
        let even = ArrayD::from_shape_vec(IxDyn(&[9]), nodes.iter().map(|&x| c(x * x + 1.0)).collect()).unwrap();
        assert_eq!(symmetrize(h, &even).unwrap().values(), &even);
        let odd = ArrayD::from_shape_vec(IxDyn(&[9]), nodes.iter().map(|&x| c(x.powi(3))).collect()).unwrap();
        assert!(symmetrize(h, &odd).unwrap().values().iter().all(|z| z.norm() == 0.0));
        let mixed = ArrayD::from_shape_vec(IxDyn(&[9]), nodes.iter().map(|&x| c(x + x * x)).collect()).unwrap();
        let s = symmetrize(h, &mixed).unwrap();
        for (z, x) in s.values().iter().zip(&nodes) {
            assert!((z.re - x * x).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_symbol_matches_spectral_route() {
        let p = build_profile(&ProfileSpec::VonMises { base: 1.0, height: 1.5, center: 2.0, concentration: 2.0, period: 8.0 }).unwrap();
        let g = Grid1D::new(256, 16.0).unwrap();
        let op = TensorOperator::from_profiles(&[p], &[g]).unwrap();
        let s_max = op.lambda_max().sqrt();
        let grid = KernelGrid::covering(1, s_max, 9.0, 10.0).unwrap();
        let psi = SymbolSample::from_radial(|r| c((-r * r / 2.0).exp()), 9.0, &grid).unwrap();
        let u = test_field(g);
        let out = phillips_apply(&psi, &op, &u).unwrap();
        let oracle = op.joint_spectral_apply(&SpectralFunction::real("gauss", |l| (-l / 2.0).exp()), &u).unwrap();
        assert!(out.field.rel_l2_diff(&oracle) < 1e-6, "{}", out.field.rel_l2_diff(&oracle));
        assert!(out.tail_mass < 1e-7);
    }

    #[test]
    fn band_symbol_is_a_projector() {
        let p = build_profile(&ProfileSpec::KronigPenney { x0: 2.0 / 3.0, b0: 1.0, b1: 2.0 }).unwrap();
        let g = Grid1D::new(256, 16.0).unwrap();
        let op = TensorOperator::from_profiles(&[p], &[g]).unwrap();
        let k = 2;
        let grid = KernelGrid::covering(1, op.lambda_max().sqrt(), 2f64.powi(k + 1), 64.0).unwrap();
        let psi = SymbolSample::from_radial(move |r| c(lp_band(k, r)), 2f64.powi(k + 1), &grid).unwrap();
        let u = test_field(g);
        let out = phillips_apply(&psi, &op, &u).unwrap().field;
        let oracle = op.joint_spectral_apply(&SpectralFunction::lp_band(k), &u).unwrap();
        assert!(out.rel_l2_diff(&oracle) < 1e-6, "{}", out.rel_l2_diff(&oracle));
    }

    #[test]
    fn aliasing_guard() {
        let grid = KernelGrid { d: 1, period: 8.0, points: 64 };
        assert!(matches!(dispersive_kernel(1, 16.0, 0.0, &grid), Err(LabError::Aliasing(_))));
        let p = build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap();
        let g = Grid1D::new(64, 8.0).unwrap();
        let op = TensorOperator::from_profiles(&[p], &[g]).unwrap();
        let small = KernelGrid { d: 1, period: 6.0, points: 4096 };
        let psi = SymbolSample::from_radial(|r| c((-r * r).exp()), 6.0, &small).unwrap();
        assert!(matches!(phillips_apply(&psi, &op, &test_field(g)), Err(LabError::Aliasing(_))));
    }

    #[test]
    fn zero_time_kernel_is_schwartz() {
        let grid = KernelGrid { d: 1, period: 32.0, points: 4096 };
        let k = dispersive_kernel(1, 0.0, 64.0, &grid).unwrap();
        let weighted = |lo: f64, hi: f64| {
            k.values()
                .indexed_iter()
                .filter(|(i, _)| (lo..hi).contains(&k.xi(i[0]).abs()))
                .map(|(i, v)| v.norm() * (1.0 + k.xi(i[0]).abs()).powi(4))
                .fold(0.0, f64::max)
        };
        let shells = [(20.0, 40.0), (40.0, 80.0), (80.0, 160.0), (160.0, 320.0)];
        let w: Vec<f64> = shells.iter().map(|&(lo, hi)| weighted(lo, hi)).collect();
        assert!(w.windows(2).all(|p| p[1] < p[0]), "{w:?}");
        assert!(w[3] < 0.2 * w[0]);
    }

    #[test]
    fn schrodinger_band_matches_discrete_fourier_multiplier() {
        let p = build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap();
        let g = Grid1D::new(256, 16.0).unwrap();
        let op = TensorOperator::from_profiles(&[p], &[g]).unwrap();
        let u = test_field(g);
        let (k, t) = (2, 0.3);
        let out = frequency_localized_evolve(2, t, k, &op, &u).unwrap().field;
        let h = g.spacing();
        let mut buf = u.values(0);
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(256).process(&mut buf);
        for (j, z) in buf.iter_mut().enumerate() {
            let w = 2.0 / h * (g.frequency(j) * h / 2.0).sin().abs();
            *z *= Complex64::from_polar(lp_band(k, w) / 256.0, t * w * w);
        }
        planner.plan_fft_inverse(256).process(&mut buf);
        let oracle = Field::from_vec_1d(g, buf).unwrap();
        assert!(out.rel_l2_diff(&oracle) < 1e-5, "{}", out.rel_l2_diff(&oracle));
        let at_zero = frequency_localized_evolve(2, 0.0, k, &op, &u).unwrap().field;
        let proj = op.joint_spectral_apply(&SpectralFunction::lp_band(k), &u).unwrap();
        assert!(at_zero.rel_l2_diff(&proj) < 1e-6);
    }
}
