mod common;

use approx::assert_abs_diff_eq;
use inertia_market::case::builtin_illustrative_case;
use inertia_market::clearing::{clear, ClearingOptions};
use inertia_market::schedule::{GeneratorSchedule, Schedule};
use inertia_market::stochastic::{
    empirical_cost, empirical_violation_rates, realize_dispatch, realized_cost, sample_scenarios, Family, SamplingMode,
};
use inertia_market::Error;

#[test]
fn zero_sigma_draws_equal_the_mean() {
    let mut case = builtin_illustrative_case();
    case.uncertainty.sigma_p = 0.0;
    case.uncertainty.sigma_h = 0.0;
    let s = sample_scenarios(&case, 50, 3, SamplingMode::System, 1).unwrap();
    assert!(s.omega_p.iter().all(|&w| w == case.uncertainty.mu_p));
    assert!(s.omega_h.iter().all(|&w| w == case.uncertainty.mu_h));
}

#[test]
fn sample_moments_converge() {
    let case = builtin_illustrative_case();
    let s = sample_scenarios(&case, 100_000, 11, SamplingMode::System, 1).unwrap();
    let draws: Vec<f64> = (0..s.n).map(|k| s.system_error(k, 5)).collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    assert!((var - 1.0).abs() < 0.02, "variance {var}");
}

#[test]
fn draws_are_reproducible_and_thread_independent() {
    let case = builtin_illustrative_case();
    let a = sample_scenarios(&case, 3000, 42, SamplingMode::System, 1).unwrap();
    let b = sample_scenarios(&case, 3000, 42, SamplingMode::System, 1).unwrap();
    let c = sample_scenarios(&case, 3000, 42, SamplingMode::System, 4).unwrap();
    let d = sample_scenarios(&case, 3000, 43, SamplingMode::System, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_ne!(a.omega_p, d.omega_p);
    // Scenario k does not depend on how many scenarios are drawn.
    let short = sample_scenarios(&case, 10, 42, SamplingMode::System, 1).unwrap();
    assert_eq!(short.omega_p[..], a.omega_p[..10 * case.horizon]);
}

#[test]
fn per_farm_errors_add_up() {
    let mut case = builtin_illustrative_case();
    let mut w2 = case.wind[0].clone();
    w2.name = "W2".into();
    case.wind.push(w2);
    let s = sample_scenarios(&case, 40_000, 5, SamplingMode::PerFarm, 1).unwrap();
    let mut mean = 0.0;
    for k in 0..s.n {
        let total = s.wind_error(k, 0, 0) + s.wind_error(k, 0, 1);
        assert_abs_diff_eq!(total, s.system_error(k, 0), epsilon = 1e-12);
        mean += total / s.n as f64;
    }
    assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
}

#[test]
fn no_samples_is_an_error() {
    let case = builtin_illustrative_case();
    assert!(matches!(
        sample_scenarios(&case, 0, 1, SamplingMode::System, 1),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn realized_dispatch_keeps_balance() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let s = sample_scenarios(&case, 200, 9, SamplingMode::System, 1).unwrap();
    for k in 0..s.n {
        for t in 0..case.horizon {
            let rt = realize_dispatch(&case, &r.schedule, &s, k, t);
            assert!(rt.imbalance.abs() < 1e-6, "k={k} t={t} {}", rt.imbalance);
        }
    }
}

#[test]
fn zero_error_realizes_the_schedule() {
    let case = common::without_uncertainty(builtin_illustrative_case());
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let s = sample_scenarios(&case, 1, 0, SamplingMode::System, 1).unwrap();
    for t in 0..case.horizon {
        let rt = realize_dispatch(&case, &r.schedule, &s, 0, t);
        for (p, g) in rt.p.iter().zip(&r.schedule.generators) {
            assert_eq!(*p, g.p[t]);
        }
        assert_eq!(rt.wind[0], case.wind[0].forecast[t]);
    }
}

#[test]
fn mean_realized_output_follows_participation() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let s = sample_scenarios(&case, 10_000, 21, SamplingMode::System, 1).unwrap();
    let t = 18;
    for (gi, g) in r.schedule.generators.iter().enumerate() {
        let mean: f64 = (0..s.n).map(|k| realize_dispatch(&case, &r.schedule, &s, k, t).p[gi]).sum::<f64>() / s.n as f64;
        let expected = g.p[t] + g.alpha[t] * 0.5;
        let radius = 4.0 * g.alpha[t] / (s.n as f64).sqrt();
        assert!((mean - expected).abs() <= radius + 1e-9, "{}: {mean} vs {expected}", g.name);
    }
}

#[test]
fn limit_held_at_median_margin_is_violated_half_the_time() {
    let mut case = common::single_generator(10.0);
    case.uncertainty.sigma_p = 1.0;
    case.generators[0].eps_g = 0.5;
    let r = clear(&common::single_generator(5.0), 3, &ClearingOptions::default()).unwrap();
    // The margin Φ⁻¹(1 − 0.5)·σ + μ is zero, so full output with full
    // participation sits exactly on the limit.
    let schedule = Schedule {
        generators: vec![GeneratorSchedule {
            name: "G1".into(),
            p: vec![10.0],
            alpha: vec![1.0],
            u: vec![1.0],
        }],
        storage: vec![],
    };
    let s = sample_scenarios(&case, 20_000, 8, SamplingMode::System, 1).unwrap();
    let v = empirical_violation_rates(&case, &r.built, &schedule, &s, 1);
    let upper = v.families.iter().find(|f| f.family == Family::GenUpper).unwrap();
    let radius = 3.0 * (0.25f64 / s.n as f64).sqrt();
    assert!((upper.frequency - 0.5).abs() < radius, "{}", upper.frequency);
}

#[test]
fn deterministic_case_has_no_violations() {
    let case = common::without_uncertainty(builtin_illustrative_case());
    let r = clear(&case, 4, &ClearingOptions::default()).unwrap();
    let s = sample_scenarios(&case, 500, 1, SamplingMode::System, 1).unwrap();
    let v = empirical_violation_rates(&case, &r.built, &r.schedule, &s, 1);
    assert!(v.pass);
    for f in &v.families {
        assert_eq!(f.frequency, 0.0, "{:?}", f.family);
    }
}

#[test]
fn zero_error_cost_is_the_objective() {
    let case = common::without_uncertainty(builtin_illustrative_case());
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let s = sample_scenarios(&case, 20, 1, SamplingMode::System, 1).unwrap();
    let c = empirical_cost(&case, &r.schedule, &s, 1);
    assert_abs_diff_eq!(c.mean, r.total_cost(), epsilon = 1e-9 * r.total_cost());
    assert_abs_diff_eq!(c.std_error, 0.0, epsilon = 1e-9);
}

#[test]
fn cost_without_participation_is_constant() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let mut schedule = r.schedule.clone();
    for g in &mut schedule.generators {
        g.alpha.iter_mut().for_each(|a| *a = 0.0);
    }
    for e in &mut schedule.storage {
        e.alpha_d.iter_mut().for_each(|a| *a = 0.0);
        e.alpha_c.iter_mut().for_each(|a| *a = 0.0);
    }
    let s = sample_scenarios(&case, 50, 4, SamplingMode::System, 1).unwrap();
    let first = realized_cost(&case, &schedule, &s, 0);
    for k in 1..s.n {
        assert_eq!(realized_cost(&case, &schedule, &s, k), first);
    }
}

#[test]
fn reports_do_not_depend_on_threads() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let s = sample_scenarios(&case, 5000, 2, SamplingMode::System, 1).unwrap();
    let a = empirical_violation_rates(&case, &r.built, &r.schedule, &s, 1);
    let b = empirical_violation_rates(&case, &r.built, &r.schedule, &s, 3);
    assert_eq!(a, b);
    assert_eq!(empirical_cost(&case, &r.schedule, &s, 1), empirical_cost(&case, &r.schedule, &s, 3));
}
