use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::field::Field;
use crate::fourier::fft_axes;
use crate::grid::Grid1D;

/// Complex Gaussian field whose lattice Fourier coefficients are i.i.d. on `|xi| <= band`
/// (zero mode excluded), normalized to unit `L^2` norm.
pub fn random_field(grids: &[Grid1D], band: f64, seed: u64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
    let freqs: Vec<Vec<f64>> = grids.iter().map(|g| g.frequencies()).collect();
    let mut hat = ArrayD::<Complex64>::zeros(IxDyn(&shape));
    for (idx, v) in hat.indexed_iter_mut() {
        let (re, im): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        let r2: f64 = idx.slice().iter().enumerate().map(|(a, &i)| freqs[a][i].powi(2)).sum();
        if r2 > 0.0 && r2 <= band * band {
            *v = Complex64::new(re, im);
        }
    }
    let u = Field::new(grids.to_vec(), vec![fft_axes(hat, true)])?;
    let norm = u.norm_l2();
    Ok(if norm > 0.0 { u.scaled(Complex64::new(1.0 / norm, 0.0)) } else { u })
}
