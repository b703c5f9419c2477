use num_complex::Complex64;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{Field, Trajectory};
use crate::operator1d::SpectralFunction;
use crate::tensor_propagator::TensorOperator;

pub const MASS_DRIFT_LIMIT: f64 = 1e-6;

/// `i u_t + L u = mu |u|^{p-1} u`, solved by Strang splitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NlsParams {
    /// Nonlinear coupling; `0` switches the nonlinearity off.
    pub mu: f64,
    pub power: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Store every `record_every`-th step (the final state is always stored).
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

fn nonlinear_phase(u: &mut Field, mu: f64, power: f64, tau: f64) {
    if mu == 0.0 {
        return;
    }
    let mods = u.modulus();
    for c in 0..u.n_components() {
        ndarray::Zip::from(u.component_mut(c)).and(&mods).for_each(|z, &m| {
            *z *= Complex64::from_polar(1.0, -mu * m.powf(power - 1.0) * tau);
        });
    }
}

pub fn nls_solve(op: &TensorOperator, params: &NlsParams, u0: &Field) -> Result<Trajectory> {
    let d = op.dim() as f64;
    let NlsParams { mu, power, dt, t_end, record_every } = *params;
    if !(power > 1.0 && power <= 1.0 + 4.0 / d + 1e-12) {
        return Err(LabError::InvalidArgument(format!("NLS power {power} outside (1, 1 + 4/d]")));
    }
    if !(dt > 0.0 && t_end > 0.0 && record_every > 0 && mu.is_finite()) {
        return Err(LabError::InvalidArgument("NLS needs dt > 0, t_end > 0, record_every > 0".into()));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let linear = op.weights(&SpectralFunction::propagator(2, dt))?;
    let mass0 = u0.norm_l2();
    let mut u = u0.clone();
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    for k in 1..=steps {
        nonlinear_phase(&mut u, mu, power, dt / 2.0);
        u = op.apply_weights(&linear, &u)?;
        nonlinear_phase(&mut u, mu, power, dt / 2.0);
        let t = k as f64 * dt;
        let drift = (u.norm_l2() - mass0).abs() / mass0.max(f64::MIN_POSITIVE);
        if drift > MASS_DRIFT_LIMIT {
            return Err(LabError::MassDrift { drift, limit: MASS_DRIFT_LIMIT, t });
        }
        if k % record_every == 0 || k == steps {
            times.push(t);
            states.push(u.clone());
        }
    }
    Trajectory::new(times, states)
}
