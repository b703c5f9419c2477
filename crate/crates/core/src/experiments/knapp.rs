use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::fourier::fft_axes;
use crate::grid::Grid1D;

/// Frequency slab along the first axis: `[N, N + sqrt N]` (Schrodinger) or `[N, 2N]` (wave),
/// times `[-sqrt N, sqrt N]` in the remaining directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnappShape {
    Schrodinger,
    Wave,
}

impl KnappShape {
    pub fn for_ell(ell: u8) -> Self {
        if ell == 1 {
            KnappShape::Wave
        } else {
            KnappShape::Schrodinger
        }
    }

    fn longitudinal(self, n: f64) -> (f64, f64) {
        match self {
            KnappShape::Schrodinger => (n, n + n.sqrt()),
            KnappShape::Wave => (n, 2.0 * n),
        }
    }
}

fn logistic_ramp(x: f64) -> f64 {
    let e = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    e(x) / (e(x) + e(1.0 - x))
}

/// Smoothed indicator of `(lo, hi)`: flat on the inner half, smooth decay over the outer quarters.
fn plateau(x: f64, lo: f64, hi: f64) -> f64 {
    let (c, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let z = ((x - c) / r).abs();
    if z >= 1.0 {
        0.0
    } else {
        logistic_ramp(2.0 * (1.0 - z))
    }
}

/// Unit `L^2` packet with Fourier support in the Knapp slab at frequency `N`, centred in the box.
pub fn knapp_packet(grids: &[Grid1D], _ell: u8, n_freq: f64, shape: KnappShape) -> Result<Field> {
    if grids.is_empty() {
        return Err(LabError::InvalidArgument("Knapp packet needs at least one axis".into()));
    }
    let nyq = grids.iter().map(|g| g.nyquist()).fold(f64::INFINITY, f64::min);
    let (lo, hi) = shape.longitudinal(n_freq);
    if !(n_freq > 0.0) || hi > nyq / 4.0 {
        return Err(LabError::InvalidArgument(format!(
            "Knapp frequency {n_freq} (slab up to {hi:.2}) beyond Nyquist/4 = {:.2}",
            nyq / 4.0
        )));
    }
    let w = n_freq.sqrt();
    let shape_n: Vec<usize> = grids.iter().map(|g| g.n()).collect();
    let freqs: Vec<Vec<f64>> = grids.iter().map(|g| g.frequencies()).collect();
    let centre: Vec<f64> = grids.iter().map(|g| g.length() / 2.0).collect();
    let mut hat = ArrayD::<Complex64>::zeros(IxDyn(&shape_n));
    for (idx, v) in hat.indexed_iter_mut() {
        let xi: Vec<f64> = idx.slice().iter().enumerate().map(|(a, &i)| freqs[a][i]).collect();
        let mut amp = plateau(xi[0], lo, hi);
        for x in &xi[1..] {
            amp *= plateau(*x, -w, w);
        }
        if amp > 0.0 {
            let phase: f64 = xi.iter().zip(&centre).map(|(x, c)| -x * c).sum();
            *v = Complex64::from_polar(amp, phase);
        }
    }
    if hat.iter().all(|z| z.norm() == 0.0) {
        return Err(LabError::InvalidArgument(format!("Knapp slab at N = {n_freq} contains no lattice frequency")));
    }
    let u = Field::new(grids.to_vec(), vec![fft_axes(hat, true)])?;
    let norm = u.norm_l2();
    Ok(u.scaled(Complex64::new(1.0 / norm, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_profile, ProfileSpec};
    use crate::tensor_propagator::TensorOperator;

    #[test]
    fn slab_support_and_normalization() {
        let g = Grid1D::new(1024, 32.0).unwrap();
        let u = knapp_packet(&[g], 2, 16.0, KnappShape::Schrodinger).unwrap();
        assert!((u.norm_l2() - 1.0).abs() < 1e-12);
        let mut hat = u.values(0);
        rustfft::FftPlanner::new().plan_fft_forward(1024).process(&mut hat);
        let total: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        let inside: f64 = hat.iter().enumerate().filter(|(k, _)| (16.0..=20.0).contains(&g.frequency(*k))).map(|(_, z)| z.norm_sqr()).sum();
        assert!(inside / total >= 0.99);
        assert!(knapp_packet(&[g], 2, 30.0, KnappShape::Schrodinger).is_err());
    }

    #[test]
    fn coherence_window() {
        let g = Grid1D::new(2048, 32.0).unwrap();
        let op = TensorOperator::from_profiles(&[build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap()], &[g]).unwrap();
        for n in [8.0, 16.0, 32.0] {
            let u = knapp_packet(&[g], 2, n, KnappShape::Schrodinger).unwrap();
            let peak = u.max_abs();
            let later = op.evolve(2, 0.25 / n, &u).unwrap();
            assert!(later.max_abs() >= 0.5 * peak, "N = {n}");
        }
    }
}
