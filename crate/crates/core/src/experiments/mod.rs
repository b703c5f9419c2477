//! Scenario-level measurements built on the propagators and norms.

mod commutator;
mod corpus;
mod fit;
mod knapp;
mod nls;
pub mod scenario;
mod templates;

pub use commutator::{commutator_test, CommutatorFit, CommutatorOptions};
pub use corpus::random_field;
pub use fit::{decay_fit, log_log_fit, spread_ratio, DecayFit};
pub use knapp::{knapp_packet, KnappShape};
pub use nls::{nls_solve, NlsParams, MASS_DRIFT_LIMIT};
pub use scenario::{
    apply_override, config_from_value, config_schema, parse_config, run_scenario, validate_config, ExperimentKind, RunArtifacts,
    ScenarioConfig,
};
pub use templates::{template, template_names, template_value, TEMPLATES};

use crate::error::Result;
use crate::field::Field;
use crate::operator1d::SpectralFunction;
use crate::tensor_propagator::TensorOperator;

/// `(1 - L/R^2)_+^delta u`.
pub fn bochner_riesz_apply(op: &TensorOperator, delta: f64, radius: f64, u: &Field) -> Result<Field> {
    if !(delta >= 0.0 && radius > 0.0) {
        return Err(crate::LabError::InvalidArgument(format!("Bochner-Riesz needs delta >= 0, R > 0 (got {delta}, {radius})")));
    }
    op.joint_spectral_apply(&SpectralFunction::bochner_riesz(delta, radius), u)
}
