//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. Criteria listed in
//! `KNOWN_RED` still print FAIL but do not fail the target.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use displab_core::coefficients::TrigTerm;
use displab_core::dirac_transport::{dirac_evolve, dirac_evolve_with, DiracOptions, DiracSystem};
use displab_core::experiments::{
    apply_override, config_from_value, nls_solve, random_field, run_scenario, template_value, NlsParams,
};
use displab_core::norms::{energy, lq_norm};
use displab_core::operator1d::{auto_decompose, heat_kernel, lp_band, lp_cutoff};
use displab_core::*;

const KNOWN_RED: &[u32] = &[];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn profile(spec: ProfileSpec) -> CoefficientProfile {
    build_profile(&spec).unwrap()
}

fn kp() -> ProfileSpec {
    ProfileSpec::KronigPenney { x0: 2.0 / 3.0, b0: 1.0, b1: 2.0 }
}

fn trig(mean: f64, terms: &[(f64, u32, f64)], period: f64) -> CoefficientProfile {
    profile(ProfileSpec::TrigSeries {
        mean,
        terms: terms.iter().map(|&(amplitude, harmonic, phase)| TrigTerm { amplitude, harmonic, phase }).collect(),
        period,
    })
}

fn run_template(name: &str, overrides: &[&str], out: &Path) -> (Value, f64) {
    let mut doc = template_value(name).unwrap();
    for o in overrides {
        apply_override(&mut doc, o).unwrap();
    }
    let cfg = config_from_value(doc).unwrap();
    let start = Instant::now();
    let art = run_scenario(&cfg, out).unwrap();
    (art.summary, start.elapsed().as_secs_f64())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn oracle_equivalence(out: &Path) -> Outcome {
    let (s, secs) = run_template("phillips_oracle", &[], out);
    let err = f(&s["max_rel_error"]);
    let corpus = s["profiles"].as_u64().unwrap() >= 5 && s["symbols"].as_u64().unwrap() >= 5;
    outcome(
        corpus && err <= 1e-6 && secs <= 60.0,
        format!("{} profiles x {} symbols, max rel L2 error {err:.2e}, {secs:.1} s", s["profiles"], s["symbols"]),
    )
}

/// `cos(t sqrt L) u0` as the even part of the Dirac group applied to `(u0, 0)`.
fn dirac_cosine(sys: &DiracSystem, u0: &Field, t: f64, steps: usize, opts: DiracOptions) -> Field {
    let g = *sys.grid();
    let zero = vec![Complex64::new(0.0, 0.0); g.n()];
    let start = Field::spinor_1d(g, u0.values(0), zero).unwrap();
    let p = dirac_evolve_with(sys, &start, t, steps, opts).unwrap().0;
    let m = dirac_evolve_with(sys, &start, -t, steps, opts).unwrap().0;
    let even = p.values(0).iter().zip(m.values(0)).map(|(x, y)| (x + y) * 0.5).collect();
    Field::from_vec_1d(g, even).unwrap()
}

fn cosine_consistency() -> Outcome {
    let g = Grid1D::new(1024, 4.0).unwrap();
    let one = profile(ProfileSpec::Constant { value: 1.0 });
    let u0 = Field::from_fn(vec![g], |x| Complex64::new((3.0 * (std::f64::consts::TAU * (x[0] - 2.0) / 4.0).cos()).exp(), 0.0)).unwrap();
    let t = 2.0;
    let cases = [("mollified KP", profile(kp()).mollify(0.3).unwrap()), ("smooth", trig(1.5, &[(0.4, 1, 0.3), (0.2, 3, 0.0)], 4.0))];
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, a) in cases {
        let sys = DiracSystem::new(&a, &one, &g).unwrap();
        let spectral = auto_decompose(&assemble_operator(&a, &g)).unwrap();
        let reference = spectral_apply(&spectral, &SpectralFunction::cosine(t), &u0).unwrap();
        let steps = sys.default_steps(t);
        let err = dirac_cosine(&sys, &u0, t, steps, DiracOptions::default()).rel_l2_diff(&reference);
        // Single-node collocation is second order; its errors must shrink at rate >= 1 toward the spectral answer.
        let low = DiracOptions { nodes: 1, ..Default::default() };
        let sweep: Vec<f64> = [8, 16, 32].iter().map(|&s| dirac_cosine(&sys, &u0, t, s, low).rel_l2_diff(&reference)).collect();
        let orders: Vec<f64> = sweep.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let ok = err <= 1e-4 && orders.iter().all(|&o| o >= 1.0);
        pass &= ok;
        detail.push(format!("{label}: {err:.2e} ({steps} steps), refinement orders {:.2}/{:.2}", orders[0], orders[1]));
    }
    outcome(pass, detail.join("; "))
}

fn decay_exponents(out: &Path) -> Outcome {
    let runs: [(&str, &[&str], f64, f64); 3] = [
        ("d=1 Schrodinger", &[], -0.5, 0.05),
        ("d=2 Schrodinger", &["d=2", "grid.n=1024"], -1.0, 0.05),
        (
            "d=2 half-wave t in [8,128]",
            &["d=2", "ell=1", "grid.n=1024", "grid.length=512", "times.t_min=8", "times.t_max=128", "times.count=5"],
            -0.5,
            0.1,
        ),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, ov, expected, tol) in runs {
        let (s, _) = run_template("free_decay", ov, out);
        let e = f(&s["fit"]["exponent"]);
        pass &= (e - expected).abs() <= tol;
        detail.push(format!("{label} {e:.3}"));
    }
    outcome(pass, detail.join(", "))
}

fn bv_uniform(out: &Path) -> Outcome {
    let (s, _) = run_template("bv_uniform", &[], out);
    let (ratio, var) = (f(&s["ratio"]), f(&s["var_log"]));
    outcome(var < std::f64::consts::TAU && ratio <= 2.0, format!("Var(log a) {var:.3}, k in {{0,2}} constant ratio {ratio:.3}"))
}

fn kronig_penney(out: &Path) -> Outcome {
    let (s, _) = run_template("kronig_penney_window", &[], out);
    let ratio = f(&s["local_ratio"]);
    let long: Vec<String> = s["long_quotients"].as_array().unwrap().iter().map(|v| format!("{:.3}", f(v))).collect();
    let increasing = s["long_increasing"].as_bool().unwrap();
    outcome(ratio <= 2.0 && increasing, format!("short-time ratio {ratio:.3}, sup over [1,2]: {}", long.join(" < ")))
}

fn knapp(out: &Path) -> Outcome {
    let (s, _) = run_template("knapp_sweep", &[], out);
    let mut pass = true;
    let mut detail = Vec::new();
    for p in s["pairs"].as_array().unwrap() {
        let pair = &p["pair"];
        let name = format!("({},{})", pair["p"], pair["q"]);
        if p["sharp"].as_bool().unwrap() {
            let spread = f(&p["spread"]);
            pass &= spread <= 2.0;
            detail.push(format!("{name} spread {spread:.3}"));
        } else {
            let (e, want) = (f(&p["fit"]["exponent"]), f(&p["predicted_exponent"]));
            pass &= (e - want).abs() <= 0.15;
            detail.push(format!("{name} exponent {e:.3} vs {want}"));
        }
    }
    outcome(pass, detail.join(", "))
}

fn conservation() -> Outcome {
    let g = Grid1D::new(64, 8.0).unwrap();
    let op = TensorOperator::from_profiles(&[profile(kp()), trig(1.5, &[(0.4, 1, 0.0)], 8.0)], &[g, g]).unwrap();
    let u0 = random_field(&[g, g], 12.0, 4).unwrap();
    let mass = (0..5).map(|k| (op.evolve(2, 1.7 * k as f64, &u0).unwrap().norm_l2() - 1.0).abs()).fold(0.0, f64::max);

    let g1 = Grid1D::new(256, 16.0).unwrap();
    let op1 = TensorOperator::from_profiles(&[trig(1.2, &[(0.3, 2, 0.0)], 16.0)], &[g1]).unwrap();
    let params = NlsParams { mu: 1.0, power: 3.0, dt: 0.01, t_end: 1.0, record_every: 10 };
    let traj = nls_solve(&op1, &params, &random_field(&[g1], 6.0, 8).unwrap()).unwrap();
    let nls = traj.states().iter().map(|s| (s.norm_l2() - 1.0).abs()).fold(0.0, f64::max);

    let ut0 = random_field(&[g, g], 8.0, 5).unwrap();
    let e0 = energy(&op, &u0, &ut0).unwrap();
    let wave = [0.5, 3.0, 11.0]
        .iter()
        .map(|&t| {
            let (u, ut) = op.wave(&u0, &ut0, t).unwrap();
            (energy(&op, &u, &ut).unwrap() / e0 - 1.0).abs()
        })
        .fold(0.0, f64::max);

    let gd = Grid1D::new(256, 8.0).unwrap();
    let sys = DiracSystem::new(&trig(1.5, &[(0.4, 1, 0.3)], 8.0), &trig(1.2, &[(0.2, 2, 0.0)], 8.0), &gd).unwrap();
    let pair = Field::spinor_1d(gd, random_field(&[gd], 6.0, 1).unwrap().values(0), random_field(&[gd], 6.0, 2).unwrap().values(0)).unwrap();
    let w0 = sys.weighted_norm_sq(&pair).unwrap();
    let dirac = (sys.weighted_norm_sq(&dirac_evolve(&sys, &pair, 2.0, sys.default_steps(2.0)).unwrap()).unwrap() / w0 - 1.0).abs();

    let gh = Grid1D::new(128, 8.0).unwrap();
    let heat = [profile(kp()), trig(1.5, &[(0.4, 1, 0.0)], 8.0)]
        .iter()
        .flat_map(|p| {
            let d = auto_decompose(&assemble_operator(p, &gh)).unwrap();
            [0.01, 0.3, 4.0].map(|t| {
                let k = heat_kernel(&d, t).unwrap();
                k.rows().into_iter().map(|r| (r.sum() * gh.spacing() - 1.0).abs()).fold(0.0, f64::max)
            })
        })
        .fold(0.0, f64::max);

    let pass = mass <= 1e-10 && nls <= 1e-10 && wave <= 1e-8 && dirac <= 1e-8 && heat <= 1e-10;
    outcome(
        pass,
        format!("mass {mass:.1e}, NLS mass {nls:.1e}, wave energy {wave:.1e}, weighted Dirac L2 {dirac:.1e}, heat row sums {heat:.1e}"),
    )
}

fn commutator(out: &Path) -> Outcome {
    let (s, _) = run_template("commutator_scaling", &[], out);
    let slope = f(&s["fit"]["exponent"]);
    outcome(slope <= -0.9, format!("slope {slope:.3} over N = 8..128"))
}

fn littlewood_paley() -> Outcome {
    let g = Grid1D::new(256, 16.0).unwrap();
    let ops = [profile(kp()), trig(1.5, &[(0.4, 1, 0.0)], 16.0)];
    let mut defect: f64 = 0.0;
    for p in &ops {
        let d = auto_decompose(&assemble_operator(p, &g)).unwrap();
        for &l in d.eigenvalues() {
            let s = l.max(0.0).sqrt();
            let total = lp_cutoff(s) + (1..=lp_band_count(s)).map(|k| lp_band(k, s)).sum::<f64>();
            defect = defect.max((total - 1.0).abs());
        }
    }
    let op = TensorOperator::from_profiles(&[profile(kp())], &[g]).unwrap();
    let bands = lp_band_count(op.lambda_max().sqrt());
    let ratios: Vec<f64> = (0..20)
        .map(|seed| {
            let u = random_field(&[g], g.nyquist(), 100 + seed).unwrap();
            let mut pieces = vec![op.joint_spectral_apply(&SpectralFunction::lp_low(), &u).unwrap()];
            pieces.extend((1..=bands).map(|k| op.joint_spectral_apply(&SpectralFunction::lp_band(k), &u).unwrap()));
            let square: Vec<Complex64> = (0..g.n())
                .map(|j| Complex64::new(pieces.iter().map(|p| p.component(0)[j].norm_sqr()).sum::<f64>().sqrt(), 0.0))
                .collect();
            lq_norm(&u, 4.0) / lq_norm(&Field::from_vec_1d(g, square).unwrap(), 4.0)
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let band = 2.0;
    outcome(
        defect <= 1e-12 && lo >= 1.0 / band && hi <= band,
        format!("partition defect {defect:.1e}; q=4 ratio in [{lo:.3}, {hi:.3}] over 20 fields (band [1/{band}, {band}])"),
    )
}

fn lp_band_count(s_max: f64) -> i32 {
    displab_core::operator1d::lp_band_count(s_max)
}

fn gaussian_heat_bound() -> Outcome {
    let g = Grid1D::new(256, 16.0).unwrap();
    let profiles = [
        ("KP", profile(kp())),
        ("three-step", profile(ProfileSpec::PiecewiseConstant { breakpoints: vec![2.0, 7.0, 11.0], values: vec![1.0, 2.5, 1.5], period: 16.0 })),
    ];
    let times = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, p) in profiles {
        let d = auto_decompose(&assemble_operator(&p, &g)).unwrap();
        let kernels: Vec<_> = times.iter().map(|&t| heat_kernel(&d, t).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples: Vec<(f64, f64, f64)> = (0..4000)
            .map(|_| {
                let (i, j, ti) = (rng.gen_range(0..g.n()), rng.gen_range(0..g.n()), rng.gen_range(0..times.len()));
                let r = g.periodic_offset(g.point(i), g.point(j));
                (kernels[ti][(i, j)], r * r, times[ti])
            })
            .collect();
        let c_big = 1.5 * samples.iter().map(|&(k, _, t)| k * t.sqrt()).fold(0.0, f64::max);
        let mut implied: Vec<f64> = samples
            .iter()
            .filter(|&&(k, r2, _)| k > 0.0 && r2 > 0.0)
            .map(|&(k, r2, t)| t * (c_big / (k * t.sqrt())).ln() / r2)
            .collect();
        implied.sort_by(f64::total_cmp);
        let c_small = implied[implied.len() / 100];
        let hold = samples.iter().filter(|&&(k, r2, t)| k <= c_big / t.sqrt() * (-c_small * r2 / t).exp()).count() as f64
            / samples.len() as f64;
        pass &= c_big > 0.0 && c_small > 0.0 && hold >= 0.99;
        detail.push(format!("{label}: C {c_big:.3}, c {c_small:.3}, {:.1}% hold", 100.0 * hold));
    }
    outcome(pass, detail.join("; "))
}

fn determinism(out: &Path) -> Outcome {
    let mut same = true;
    for name in ["commutator_scaling", "bochner_riesz_uniform", "nls_mass"] {
        let bytes: Vec<Vec<Vec<u8>>> = ["first", "second"]
            .iter()
            .map(|run| {
                let dir = out.join(run);
                run_template(name, &[], &dir);
                ["", "_summary", "_manifest"]
                    .iter()
                    .map(|s| std::fs::read(dir.join(format!("{name}{s}.{}", if s.is_empty() { "csv" } else { "json" }))).unwrap())
                    .collect()
            })
            .collect();
        same &= bytes[0] == bytes[1];
    }
    outcome(same, "commutator_scaling, bochner_riesz_uniform, nls_mass: csv, summary and manifest byte-identical".into())
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |i: u32| tmp.path().join(format!("c{i}"));
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "oracle equivalence", Box::new(|| oracle_equivalence(&dir(1)))),
        (2, "cosine-family consistency", Box::new(cosine_consistency)),
        (3, "free decay exponents", Box::new(|| decay_exponents(&dir(3)))),
        (4, "BV uniform dispersion", Box::new(|| bv_uniform(&dir(4)))),
        (5, "Kronig-Penney window", Box::new(|| kronig_penney(&dir(5)))),
        (6, "Knapp sweep", Box::new(|| knapp(&dir(6)))),
        (7, "conservation suite", Box::new(conservation)),
        (8, "commutator scaling", Box::new(|| commutator(&dir(8)))),
        (9, "Littlewood-Paley partition and square function", Box::new(littlewood_paley)),
        (10, "Gaussian heat bound", Box::new(gaussian_heat_bound)),
        (11, "determinism", Box::new(|| determinism(&dir(11)))),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in &criteria {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} {name}: {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass && !KNOWN_RED.contains(id) {
            unexpected.push(*id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
