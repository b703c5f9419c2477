use num_complex::Complex64;
use proptest::prelude::*;

use displab_core::experiments::random_field;
use displab_core::norms::*;
use displab_core::*;

fn grid(n: usize, length: f64) -> Grid1D {
    Grid1D::new(n, length).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogeneous_sobolev_inverts_on_mean_zero_data(seed in 0u64..1000, s in -2.0f64..2.0) {
        let g = grid(64, 2.0 * std::f64::consts::PI);
        let u = random_field(&[g, g], 20.0, seed).unwrap();
        let back = fourier_sobolev(&fourier_sobolev(&u, s).unwrap(), -s).unwrap();
        prop_assert!(back.rel_l2_diff(&u) < 1e-12);
    }

    #[test]
    fn bessel_potential_is_a_group(seed in 0u64..1000, s in -2.0f64..2.0, r in -2.0f64..2.0) {
        let g = grid(128, 10.0);
        let u = random_field(&[g], 30.0, seed).unwrap();
        let two = bessel_potential(&bessel_potential(&u, s).unwrap(), r).unwrap();
        let one = bessel_potential(&u, s + r).unwrap();
        prop_assert!(two.rel_l2_diff(&one) < 1e-12);
    }

    #[test]
    fn lebesgue_norms_obey_holder_on_the_torus(seed in 0u64..1000, p in 1.0f64..6.0, dq in 0.0f64..6.0) {
        let g = grid(128, 5.0);
        let u = random_field(&[g], 20.0, seed).unwrap();
        let q = p + dq;
        let vol = g.length();
        prop_assert!(lq_norm(&u, p) <= vol.powf(1.0 / p - 1.0 / q) * lq_norm(&u, q) * (1.0 + 1e-12));
        prop_assert!(lq_norm(&u, q) <= lq_norm(&u, f64::INFINITY) * vol.powf(1.0 / q) * (1.0 + 1e-12));
        prop_assert!((lq_norm(&u, 2.0) - u.norm_l2()).abs() < 1e-12);
    }

    #[test]
    fn sharp_pairs_are_admissible_and_excess_decides_admissibility(p in 2.0f64..40.0, d in 1usize..4, ell in 1u8..3) {
        let eff = if ell == 2 { d as f64 } else { d as f64 - 1.0 };
        if eff > 0.0 && 2.0 / p < eff / 2.0 {
            let q = eff / (eff / 2.0 - 2.0 / p);
            if q >= 2.0 {
                let pair = StrichartzPair::new(ell, p, q, d);
                prop_assert!(pair.is_sharp(), "{pair:?}");
                prop_assert!(pair.knapp_excess().abs() < 1e-9);
            }
        }
        let pair = StrichartzPair::new(ell, p, 2.0, d);
        prop_assert_eq!(pair.is_admissible(), pair.knapp_excess() <= 1e-12);
    }
}

#[test]
fn constant_in_time_trajectory_has_explicit_mixed_norm() {
    let g = grid(64, 4.0);
    let u = random_field(&[g], 10.0, 3).unwrap();
    let times: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64).collect();
    let traj = Trajectory::new(times.clone(), vec![u.clone(); times.len()]).unwrap();
    for (p, q) in [(2.0, 2.0), (4.0, 6.0), (f64::INFINITY, 3.0)] {
        let expected = if p.is_infinite() { 1.0 } else { 2f64.powf(1.0 / p) } * lq_norm(&u, q);
        let got = mixed_norm(&traj, p, q).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12, "{p} {q}: {got} vs {expected}");
    }
    let ragged = Trajectory::new(vec![0.0, 0.1, 0.3], vec![u.clone(); 3]).unwrap();
    assert!(mixed_norm(&ragged, 2.0, 2.0).is_err());
}

#[test]
fn exponent_serializes_infinity_as_text() {
    let pair: StrichartzPair = serde_json::from_str(r#"{ "ell": 2, "p": "inf", "q": 2, "d": 1 }"#).unwrap();
    assert!(pair.p.0.is_infinite() && pair.is_sharp());
    let text = serde_json::to_string(&pair).unwrap();
    assert!(text.contains(r#""p":"inf""#));
    assert_eq!(serde_json::from_str::<StrichartzPair>(&text).unwrap(), pair);
    assert!(serde_json::from_str::<StrichartzPair>(r#"{ "ell": 2, "p": 0.5, "q": 2, "d": 1 }"#).is_err());
    assert!(serde_json::from_str::<StrichartzPair>(r#"{ "ell": 2, "p": 4, "q": 2, "d": 1, "r": 1 }"#).is_err());
}

#[test]
fn heat_and_fourier_besov_agree_for_constant_coefficients() {
    let g = grid(256, 32.0);
    let one = build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap();
    let op = TensorOperator::from_profiles(&[one], &[g]).unwrap();
    let u = random_field(&[g], 12.0, 9).unwrap();
    for (s, p, q) in [(0.0, 2.0, 2.0), (0.5, 2.0, 1.0), (-0.5, 4.0, 2.0), (1.0, 1.0, f64::INFINITY)] {
        let heat = heat_besov_norm(&op, &u, s, p, q).unwrap();
        let fourier = fourier_besov_norm(&u, s, p, q).unwrap();
        let r = fourier / heat.normalized;
        assert!((0.5..=2.0).contains(&r), "s={s} p={p} q={q}: ratio {r}");
        assert!(heat.leak_fraction < 0.05, "{:?}", heat.warning);
    }
}

#[test]
fn dispersive_quotient_weights() {
    let g = grid(64, 8.0);
    let u0 = Field::from_fn(vec![g], |x| Complex64::new(if (x[0] - 4.0).abs() < 0.5 { 1.0 } else { 0.0 }, 0.0)).unwrap();
    let traj = Trajectory::new(vec![0.0, 1.0, 3.0], vec![u0.clone(); 3]).unwrap();
    let mass = lq_norm(&u0, 1.0);
    let shifted = dispersive_quotient(&traj, &u0, 0.5, DecayWeight::Shifted).unwrap();
    let homogeneous = dispersive_quotient(&traj, &u0, 0.5, DecayWeight::Homogeneous).unwrap();
    assert!((shifted[2].1 - 2.0 / mass).abs() < 1e-12);
    assert_eq!(homogeneous[0].1, 0.0);
    assert!((homogeneous[2].1 - 3f64.sqrt() / mass).abs() < 1e-12);
}

#[test]
fn energy_of_a_plane_wave_matches_the_stencil_symbol() {
    let g = grid(64, 8.0);
    let one = build_profile(&ProfileSpec::Constant { value: 1.0 }).unwrap();
    let op = TensorOperator::from_profiles(&[one], &[g]).unwrap();
    let k = g.frequency(3);
    let u = Field::from_fn(vec![g], |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
    let zero = Field::zeros(vec![g], 1).unwrap();
    let h = g.spacing();
    let symbol = (2.0 * (k * h / 2.0).sin() / h).powi(2);
    assert!((energy(&op, &u, &zero).unwrap() - symbol * g.length()).abs() < 1e-10);
}
