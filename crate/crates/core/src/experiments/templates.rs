//! Built-in scenario templates (`displab list`).

use serde_json::{json, Value};

use super::scenario::{config_from_value, ScenarioConfig};
use crate::error::Result;

/// `(name, description)`.
pub const TEMPLATES: &[(&str, &str)] = &[
    ("free_decay", "sup-norm decay exponent of the free flow (Gaussian data for ell = 2, unit-band data for ell = 1)"),
    ("bv_uniform", "band-localized dispersive constants at dyadic rescalings for a piecewise-constant coefficient"),
    ("kronig_penney_window", "short-time band constants and long-time quotients for the Kronig-Penney coefficient"),
    ("knapp_sweep", "Strichartz quotients of Knapp packets across frequencies, violating and sharp pairs"),
    ("phillips_oracle", "cosine-family functional calculus against the eigenbasis route on a profile x symbol corpus"),
    ("commutator_scaling", "operator norm of [S_N, a] against N for a smooth single-band coefficient"),
    ("nls_mass", "split-step NLS mass conservation and Strang self-convergence"),
    ("bochner_riesz_uniform", "L^q ratios of Bochner-Riesz means across radii on a random corpus"),
];

pub fn template_names() -> Vec<&'static str> {
    TEMPLATES.iter().map(|t| t.0).collect()
}

fn raw(name: &str) -> Option<Value> {
    let trig = |mean: f64, terms: Value, period: f64| json!({ "kind": "trig_series", "mean": mean, "terms": terms, "period": period });
    let constant = json!({ "kind": "constant", "value": 1.0 });
    Some(match name {
        "free_decay" => json!({
            "kind": "free_decay",
            "d": 1,
            "ell": 2,
            "profiles": [constant],
            "grid": { "n": 2048, "length": 512.0 },
            "times": { "t_min": 1.0, "t_max": 64.0, "count": 7, "spacing": "geometric" },
        }),
        "bv_uniform" => json!({
            "kind": "bv_uniform",
            "profiles": [{ "kind": "piecewise_constant", "breakpoints": [60.0, 64.0, 70.0], "values": [1.8, 1.2, 1.0], "period": 128.0 }],
            "grid": { "n": 2048, "length": 128.0 },
            "times": { "t_min": 0.01, "t_max": 2.0, "count": 48, "spacing": "geometric" },
            "knobs": { "k_list": [0, 2] },
        }),
        "kronig_penney_window" => json!({
            "kind": "kronig_penney_window",
            "profiles": [{ "kind": "kronig_penney", "x0": 2.0 / 3.0, "b0": 1.0, "b1": 2.0 }],
            "grid": { "n": 65536, "length": 512.0 },
            "n_list": [4.0, 8.0, 16.0, 32.0],
            "knobs": { "window_c": 0.25, "long_window": [1.0, 2.0] },
        }),
        "knapp_sweep" => json!({
            "kind": "knapp_sweep",
            "profiles": [constant],
            "grid": { "n": 4096, "length": 32.0 },
            "times": { "t_min": 0.0, "t_max": 0.5, "count": 513, "spacing": "uniform" },
            "n_list": [8.0, 16.0, 32.0, 64.0],
            "pairs": [
                { "ell": 2, "p": 2.0, "q": 2.0, "d": 1 },
                { "ell": 2, "p": 4.0, "q": 2.0, "d": 1 },
                { "ell": 2, "p": 8.0, "q": 4.0, "d": 1 },
                { "ell": 2, "p": "inf", "q": 2.0, "d": 1 },
            ],
        }),
        "phillips_oracle" => json!({
            "kind": "phillips_oracle",
            "profiles": [
                { "kind": "constant", "value": 1.3 },
                { "kind": "von_mises", "base": 1.0, "height": 1.5, "center": 2.0, "concentration": 2.0, "period": 8.0 },
                trig(1.5, json!([{ "amplitude": 0.4, "harmonic": 1 }, { "amplitude": 0.2, "harmonic": 3, "phase": 0.5 }]), 16.0),
                { "kind": "mollified", "parent": { "kind": "kronig_penney", "x0": 2.0 / 3.0, "b0": 1.0, "b1": 2.0 }, "epsilon": 0.1 },
                { "kind": "piecewise_constant", "breakpoints": [2.0, 7.0, 11.0], "values": [1.0, 2.5, 1.5], "period": 16.0 },
            ],
            "grid": { "n": 256, "length": 16.0 },
            "seed": 11,
        }),
        "commutator_scaling" => json!({
            "kind": "commutator_scaling",
            "profiles": [trig(1.5, json!([{ "amplitude": 0.4, "harmonic": 1 }]), 16.0)],
            "grid": { "n": 2048, "length": 16.0 },
            "n_list": [8.0, 16.0, 32.0, 64.0, 128.0],
            "seed": 5,
        }),
        "nls_mass" => json!({
            "kind": "nls_mass",
            "profiles": [trig(1.2, json!([{ "amplitude": 0.3, "harmonic": 2 }]), 16.0)],
            "grid": { "n": 256, "length": 16.0 },
            "knobs": { "nls": { "mu": 1.0, "power": 3.0, "dt": 0.01, "t_end": 1.0, "record_every": 10 } },
        }),
        "bochner_riesz_uniform" => json!({
            "kind": "bochner_riesz_uniform",
            "profiles": [trig(1.5, json!([{ "amplitude": 0.3, "harmonic": 1 }]), 16.0)],
            "grid": { "n": 512, "length": 16.0 },
            "seed": 3,
            "knobs": { "radii": [4.0, 8.0, 16.0, 32.0], "delta": 0.5, "q": 4.0, "corpus_size": 20, "corpus_band_factor": 2.0 },
        }),
        _ => return None,
    })
}

/// Template as a JSON document (for overrides) or `None` for an unknown name.
pub fn template_value(name: &str) -> Option<Value> {
    raw(name)
}

pub fn template(name: &str) -> Option<Result<ScenarioConfig>> {
    raw(name).map(config_from_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::validate_config;

    #[test]
    fn every_template_validates() {
        assert!(TEMPLATES.len() >= 8);
        for name in template_names() {
            let cfg = template(name).unwrap().unwrap();
            validate_config(&cfg).unwrap();
            assert_eq!(cfg.kind.name(), name);
        }
        assert!(template("nope").is_none());
    }
}
