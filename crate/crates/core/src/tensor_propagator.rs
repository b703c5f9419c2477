//! `L = sum_i L_i` on tensor grids: joint functional calculus, Schrodinger and
//! half-wave groups, the cosine family, and a Duhamel solver.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

use crate::coefficients::CoefficientProfile;
use crate::error::{LabError, Result};
use crate::field::{Field, Trajectory};
use crate::grid::Grid1D;
use crate::operator1d::{assemble_operator, auto_decompose, DiscreteOperator1D, SpectralDecomposition1D, SpectralFunction};
use crate::quadrature::gauss_legendre_unit;

/// Gauss-Legendre nodes per Duhamel sub-step.
pub const DUHAMEL_NODES: usize = 4;

#[derive(Clone, Debug)]
pub struct Axis {
    pub operator: DiscreteOperator1D,
    pub spectrum: Arc<SpectralDecomposition1D>,
}

#[derive(Clone, Debug)]
pub struct TensorOperator {
    axes: Vec<Axis>,
    joint: OnceLock<ArrayD<f64>>,
}

/// Coefficients of a field in the joint eigenbasis, one array per component.
#[derive(Clone, Debug)]
pub struct SpectralField {
    template: Field,
    coeffs: Vec<ArrayD<Complex64>>,
}

impl SpectralField {
    pub fn coeffs(&self) -> &[ArrayD<Complex64>] {
        &self.coeffs
    }
}

impl TensorOperator {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(LabError::Shape(format!("dimension {} not in 1..=3", axes.len())));
        }
        for a in &axes {
            if a.operator.grid() != a.spectrum.grid() {
                return Err(LabError::Shape("axis operator and spectrum live on different grids".into()));
            }
        }
        Ok(Self { axes, joint: OnceLock::new() })
    }

    /// One axis per profile, each decomposed with the cheapest exact basis.
    pub fn from_profiles(profiles: &[CoefficientProfile], grids: &[Grid1D]) -> Result<Self> {
        if profiles.len() != grids.len() {
            return Err(LabError::Shape("one grid per profile required".into()));
        }
        let axes = profiles
            .iter()
            .zip(grids)
            .map(|(p, g)| {
                let operator = assemble_operator(p, g);
                let spectrum = Arc::new(auto_decompose(&operator)?);
                Ok(Axis { operator, spectrum })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    /// The same 1D operator on every axis, decomposed once.
    pub fn isotropic(profile: &CoefficientProfile, grid: &Grid1D, d: usize) -> Result<Self> {
        let operator = assemble_operator(profile, grid);
        let spectrum = Arc::new(auto_decompose(&operator)?);
        Self::new((0..d).map(|_| Axis { operator: operator.clone(), spectrum: spectrum.clone() }).collect())
    }

    pub fn from_decomposition(operator: DiscreteOperator1D, spectrum: SpectralDecomposition1D) -> Result<Self> {
        Self::new(vec![Axis { operator, spectrum: Arc::new(spectrum) }])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn grids(&self) -> Vec<Grid1D> {
        self.axes.iter().map(|a| *a.operator.grid()).collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.axes.iter().map(|a| a.spectrum.lambda_max()).sum()
    }

    /// Largest coefficient value over all axes.
    pub fn upper_ellipticity(&self) -> f64 {
        self.axes.iter().map(|a| a.operator.profile().bounds().1).fold(0.0, f64::max)
    }

    /// Joint eigenvalues `sum_i lambda_{k_i}` in transform order.
    pub fn joint_eigenvalues(&self) -> &ArrayD<f64> {
        self.joint.get_or_init(|| {
            let shape: Vec<usize> = self.axes.iter().map(|a| a.operator.grid().n()).collect();
            ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
                (0..shape.len()).map(|i| self.axes[i].spectrum.eigenvalues()[idx[i]]).sum()
            })
        })
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.grids() != self.grids().as_slice() {
            return Err(LabError::Shape("field grid does not match the operator".into()));
        }
        Ok(())
    }

    pub fn to_spectral(&self, u: &Field) -> Result<SpectralField> {
        self.check(u)?;
        let coeffs = u
            .components()
            .iter()
            .map(|c| {
                let mut data = c.clone();
                for (i, a) in self.axes.iter().enumerate() {
                    data = a.spectrum.forward_axis(&data, i);
                }
                data
            })
            .collect();
        Ok(SpectralField { template: u.clone(), coeffs })
    }

    pub fn from_spectral(&self, s: &SpectralField) -> Result<Field> {
        let comps = s
            .coeffs
            .iter()
            .map(|c| {
                let mut data = c.clone();
                for (i, a) in self.axes.iter().enumerate() {
                    data = a.spectrum.inverse_axis(&data, i);
                }
                data
            })
            .collect();
        s.template.with_components(comps)
    }

    /// Multiplies coefficients by `F` evaluated on the joint spectrum.
    pub fn multiply(&self, f: &SpectralFunction, s: &SpectralField) -> Result<SpectralField> {
        let weights = self.weights(f)?;
        Ok(SpectralField { template: s.template.clone(), coeffs: s.coeffs.iter().map(|c| c * &weights).collect() })
    }

    pub fn weights(&self, f: &SpectralFunction) -> Result<ArrayD<Complex64>> {
        let joint = self.joint_eigenvalues();
        let mut out = ArrayD::zeros(joint.raw_dim());
        for (o, &l) in out.iter_mut().zip(joint.iter()) {
            *o = f.eval(l)?;
        }
        Ok(out)
    }

    /// Multiplies joint eigen-coefficients by precomputed weights.
    pub fn apply_weights(&self, weights: &ArrayD<Complex64>, u: &Field) -> Result<Field> {
        if weights.shape() != self.joint_eigenvalues().shape() {
            return Err(LabError::Shape("weights do not match the joint spectrum".into()));
        }
        let s = self.to_spectral(u)?;
        let coeffs = s.coeffs.iter().map(|c| c * weights).collect();
        self.from_spectral(&SpectralField { template: s.template, coeffs })
    }

    pub fn joint_spectral_apply(&self, f: &SpectralFunction, u: &Field) -> Result<Field> {
        let s = self.to_spectral(u)?;
        self.from_spectral(&self.multiply(f, &s)?)
    }

    /// `F(L_axis)` acting along one axis only.
    pub fn axis_apply(&self, axis: usize, f: &SpectralFunction, u: &Field) -> Result<Field> {
        self.check(u)?;
        let spec = &self.axes[axis].spectrum;
        let w = f.eval_all(spec.eigenvalues())?;
        let comps = u
            .components()
            .iter()
            .map(|c| {
                let mut coef = spec.forward_axis(c, axis);
                for (idx, z) in coef.indexed_iter_mut() {
                    *z *= w[idx[axis]];
                }
                spec.inverse_axis(&coef, axis)
            })
            .collect();
        u.with_components(comps)
    }

    /// `e^{i t L^{ell/2}} u0` through the joint eigenbasis.
    pub fn evolve(&self, ell: u8, t: f64, u0: &Field) -> Result<Field> {
        check_ell(ell)?;
        self.joint_spectral_apply(&SpectralFunction::propagator(ell, t), u0)
    }

    /// `prod_i e^{i t L_i} u0` (Schrodinger only).
    pub fn evolve_factored(&self, t: f64, u0: &Field) -> Result<Field> {
        let f = SpectralFunction::propagator(2, t);
        let mut u = u0.clone();
        for axis in 0..self.dim() {
            u = self.axis_apply(axis, &f, &u)?;
        }
        Ok(u)
    }

    /// States `F_t(L) u0` for each time, transforming `u0` once.
    pub fn spectral_trajectory(
        &self,
        times: &[f64],
        family: impl Fn(f64) -> SpectralFunction,
        u0: &Field,
    ) -> Result<Trajectory> {
        let s = self.to_spectral(u0)?;
        let states = times.iter().map(|&t| self.from_spectral(&self.multiply(&family(t), &s)?)).collect::<Result<Vec<_>>>()?;
        Trajectory::new(times.to_vec(), states)
    }

    pub fn trajectory(&self, ell: u8, times: &[f64], u0: &Field) -> Result<Trajectory> {
        check_ell(ell)?;
        self.spectral_trajectory(times, |t| SpectralFunction::propagator(ell, t), u0)
    }

    /// Wave solution `u = cos(t sqrt L) f + sin(t sqrt L)/sqrt L g` and its time derivative.
    pub fn wave(&self, f: &Field, g: &Field, t: f64) -> Result<(Field, Field)> {
        let sf = self.to_spectral(f)?;
        let sg = self.to_spectral(g)?;
        let mut u = self.multiply(&SpectralFunction::cosine(t), &sf)?;
        let ug = self.multiply(&SpectralFunction::sine_over_root(t), &sg)?;
        let mut ut = self.multiply(&SpectralFunction::cosine_derivative(t), &sf)?;
        let utg = self.multiply(&SpectralFunction::cosine(t), &sg)?;
        for (a, b) in u.coeffs.iter_mut().zip(&ug.coeffs) {
            *a += b;
        }
        for (a, b) in ut.coeffs.iter_mut().zip(&utg.coeffs) {
            *a += b;
        }
        Ok((self.from_spectral(&u)?, self.from_spectral(&ut)?))
    }

    /// `u(t) = e^{itP} u0 + int_0^t e^{i(t-s)P} F(s) ds`, `P = L^{ell/2}`, by composite
    /// Gauss-Legendre quadrature with sub-steps no longer than `max_step`.
    pub fn duhamel_solve(
        &self,
        ell: u8,
        u0: &Field,
        forcing: &dyn Fn(f64) -> Result<Field>,
        times: &[f64],
        max_step: f64,
    ) -> Result<Trajectory> {
        check_ell(ell)?;
        if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidArgument("Duhamel output times must be nonnegative and increasing".into()));
        }
        if !(max_step > 0.0) {
            return Err(LabError::InvalidArgument("Duhamel sub-step must be positive".into()));
        }
        let joint = self.joint_eigenvalues().clone();
        let phase = |dt: f64| -> ArrayD<Complex64> {
            joint.mapv(|l| {
                let p = if ell == 2 { l } else { l.sqrt() };
                Complex64::from_polar(1.0, dt * p)
            })
        };
        let (nodes, weights) = gauss_legendre_unit(DUHAMEL_NODES);
        let mut state = self.to_spectral(u0)?;
        let mut t_now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t_next in times {
            let span = t_next - t_now;
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            let step_phase = phase(dt);
            for k in 0..steps {
                let a = t_now + k as f64 * dt;
                for c in state.coeffs.iter_mut() {
                    *c *= &step_phase;
                }
                for (s, w) in nodes.iter().zip(&weights) {
                    let node = a + s * dt;
                    let fs = self.to_spectral(&forcing(node)?)?;
                    if fs.coeffs.len() != state.coeffs.len() {
                        return Err(LabError::Shape("forcing has the wrong number of components".into()));
                    }
                    let ph = phase(a + dt - node);
                    for (c, f) in state.coeffs.iter_mut().zip(&fs.coeffs) {
                        ndarray::Zip::from(c).and(f).and(&ph).for_each(|c, f, p| *c += f * p * (w * dt));
                    }
                }
            }
            t_now = t_next;
            out.push(self.from_spectral(&state)?);
        }
        Trajectory::new(times.to_vec(), out)
    }
}

pub(crate) fn check_ell(ell: u8) -> Result<()> {
    if ell == 1 || ell == 2 {
        Ok(())
    } else {
        Err(LabError::InvalidArgument(format!("ell = {ell} must be 1 or 2")))
    }
}
