//! Complex grid functions on periodic tensor grids and time-indexed trajectories.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::Grid1D;

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grids: Vec<Grid1D>,
    components: Vec<ArrayD<Complex64>>,
}

impl Field {
    pub fn new(grids: Vec<Grid1D>, components: Vec<ArrayD<Complex64>>) -> Result<Self> {
        if grids.is_empty() || grids.len() > 3 {
            return Err(LabError::Shape(format!("dimension {} not in 1..=3", grids.len())));
        }
        if components.is_empty() || components.len() > 2 {
            return Err(LabError::Shape(format!("{} components (expected 1 or 2)", components.len())));
        }
        let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
        for c in &components {
            if c.shape() != shape.as_slice() {
                return Err(LabError::Shape(format!("component shape {:?} does not match grid {:?}", c.shape(), shape)));
            }
            if c.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(LabError::Shape("field has non-finite entries".into()));
            }
        }
        Ok(Self { grids, components })
    }

    pub fn zeros(grids: Vec<Grid1D>, n_components: usize) -> Result<Self> {
        let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
        let comps = (0..n_components).map(|_| ArrayD::zeros(IxDyn(&shape))).collect();
        Self::new(grids, comps)
    }

    /// Scalar field sampled from `f(x)` at the grid points.
    pub fn from_fn(grids: Vec<Grid1D>, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
        let data = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            let x: Vec<f64> = (0..grids.len()).map(|i| grids[i].point(idx[i])).collect();
            f(&x)
        });
        Self::new(grids, vec![data])
    }

    pub fn from_vec_1d(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        let data = ArrayD::from_shape_vec(IxDyn(&[values.len()]), values).map_err(|e| LabError::Shape(e.to_string()))?;
        Self::new(vec![grid], vec![data])
    }

    pub fn spinor_1d(grid: Grid1D, first: Vec<Complex64>, second: Vec<Complex64>) -> Result<Self> {
        let a = ArrayD::from_shape_vec(IxDyn(&[first.len()]), first).map_err(|e| LabError::Shape(e.to_string()))?;
        let b = ArrayD::from_shape_vec(IxDyn(&[second.len()]), second).map_err(|e| LabError::Shape(e.to_string()))?;
        Self::new(vec![grid], vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.grids.len()
    }

    pub fn grids(&self) -> &[Grid1D] {
        &self.grids
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grids.iter().map(|g| g.n()).collect()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ArrayD<Complex64> {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ArrayD<Complex64> {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[ArrayD<Complex64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ArrayD<Complex64>> {
        self.components
    }

    /// 1D component as a flat vector.
    pub fn values(&self, i: usize) -> Vec<Complex64> {
        self.components[i].iter().cloned().collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.grids.iter().map(|g| g.spacing()).product()
    }

    pub fn same_layout(&self, other: &Field) -> bool {
        self.grids == other.grids && self.components.len() == other.components.len()
    }

    pub fn with_components(&self, components: Vec<ArrayD<Complex64>>) -> Result<Field> {
        Field::new(self.grids.clone(), components)
    }

    /// Pointwise Euclidean modulus over components.
    pub fn modulus(&self) -> ArrayD<f64> {
        let mut out = self.components[0].mapv(|z| z.norm_sqr());
        for c in &self.components[1..] {
            out.zip_mut_with(c, |o, z| *o += z.norm_sqr());
        }
        out.mapv_inplace(f64::sqrt);
        out
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.components.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum();
        (s * self.cell_volume()).sqrt()
    }

    pub fn inner(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self
            .components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.cell_volume()
    }

    pub fn scaled(&self, alpha: Complex64) -> Field {
        Field { grids: self.grids.clone(), components: self.components.iter().map(|c| c.mapv(|z| z * alpha)).collect() }
    }

    pub fn add_scaled(&mut self, alpha: Complex64, other: &Field) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.zip_mut_with(b, |x, y| *x += alpha * y);
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.add_scaled(Complex64::new(-1.0, 0.0), other);
        out
    }

    /// `||self - other||_2 / ||other||_2`.
    pub fn rel_l2_diff(&self, reference: &Field) -> f64 {
        let d = self.sub(reference).norm_l2();
        let r = reference.norm_l2();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.modulus().iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Field>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(LabError::Shape(format!("{} times for {} states", times.len(), states.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidArgument("trajectory times must be strictly increasing".into()));
        }
        if states.iter().any(|s| !s.same_layout(&states[0])) {
            return Err(LabError::Shape("trajectory states must share one grid".into()));
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Field)> {
        self.times.iter().cloned().zip(self.states.iter())
    }

    pub fn map_states(&self, f: impl Fn(&Field) -> Result<Field>) -> Result<Trajectory> {
        let states = self.states.iter().map(f).collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.times.clone(), states)
    }

    pub fn is_uniform(&self) -> bool {
        if self.times.len() < 3 {
            return true;
        }
        let dt = self.times[1] - self.times[0];
        self.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300))
    }
}
