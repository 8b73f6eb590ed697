mod common;

use approx::assert_abs_diff_eq;
use inertia_market::case::{builtin_illustrative_case, market_case_config};
use inertia_market::clearing::{clear, ClearingOptions};
use inertia_market::equilibrium::verify_equilibrium;
use inertia_market::pricing::{extract_prices, settlement, PriceSeries, Service, SettlementOptions};
use inertia_market::program::QuadraticProgram;
use inertia_market::qp::{solve_qp, SolverSettings};
use inertia_market::reformulation::{build_program, BuildOptions, ProgramKind};
use inertia_market::schedule::Schedule;
use inertia_market::Error;

#[test]
fn single_generator_energy_price() {
    let case = common::single_generator(5.0);
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let lambda = r.prices.energy[0][0];
    assert_abs_diff_eq!(lambda, 5.01, epsilon = 1e-6);
    assert_abs_diff_eq!(r.prices.inertia[0], 0.0, epsilon = 1e-9);
    assert!(r.equilibrium.pass, "{:?}", r.equilibrium.failing_agents);
    let g = &r.settlement.resources[0];
    assert_abs_diff_eq!(g.energy_revenue, 5.01 * 5.0, epsilon = 1e-5);
    assert_abs_diff_eq!(g.cost, 10.0 + 25.0 + 0.025, epsilon = 1e-6);
}

#[test]
fn case_one_commits_all_units() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 1, &ClearingOptions::default()).unwrap();
    assert!(r.miqp.commitment.iter().all(|&u| u == 1));
    assert!(r.equilibrium.pass);
    // With the commitment fixed the inertia row only holds constants.
    assert!(r.prices.inertia.iter().all(|&c| c.abs() < 1e-9));
    assert_abs_diff_eq!(r.settlement.total_cost(), r.total_cost(), epsilon = 1e-6);
}

#[test]
fn generator_inertia_form_uses_commitment_price() {
    // At χ = 0 the generator inertia form is (c0 + κ − μ⁺P_max + μ⁻P_min − ρ⁺)/(H·P_max) = 0.
    let case = builtin_illustrative_case();
    let r = clear(&case, 1, &ClearingOptions::default()).unwrap();
    let inertia: Vec<_> = r
        .forms
        .entries
        .iter()
        .filter(|e| e.service == Service::Inertia && case.generators.iter().any(|g| g.name == e.resource))
        .collect();
    assert_eq!(inertia.len(), 4 * 24);
    for e in inertia {
        assert!(e.mismatch() < 1e-6, "{e:?}");
    }
}

#[test]
fn settlement_balances_energy_payments() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 4, &ClearingOptions::default()).unwrap();
    let paid: f64 = (0..case.horizon)
        .map(|t| r.prices.energy[0][t] * (case.total_load(t) - case.total_wind(t)))
        .sum();
    let earned = r.settlement.generators.energy_revenue + r.settlement.storage.energy_revenue;
    assert_abs_diff_eq!(paid, earned, epsilon = 1e-6 * paid.abs());
    for s in &r.settlement.resources {
        assert_abs_diff_eq!(s.profit, s.revenue - s.cost, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(r.settlement.wind.revenue, 0.0);
    assert_abs_diff_eq!(r.settlement.total_cost(), r.total_cost(), epsilon = 1e-6);
}

#[test]
fn wind_energy_payment_is_optional() {
    let case = builtin_illustrative_case();
    let mut options = ClearingOptions::default();
    options.settlement = SettlementOptions { pay_wind_energy: true };
    let r = clear(&case, 3, &options).unwrap();
    let expected: f64 = (0..case.horizon).map(|t| r.prices.energy[0][t] * case.wind[0].forecast[t]).sum();
    assert_abs_diff_eq!(r.settlement.wind.energy_revenue, expected, epsilon = 1e-9);
    assert_abs_diff_eq!(r.settlement.wind.inertia_revenue, 0.0);
}

#[test]
fn zero_prices_and_dispatch_settle_to_zero() {
    let case = builtin_illustrative_case();
    let cfg = market_case_config(6).unwrap();
    let built = build_program(&case, &cfg, ProgramKind::Proposed, &BuildOptions::default()).unwrap();
    let zero = vec![0.0; built.program.num_vars()];
    let schedule = Schedule::from_primal(&case, &built.program, &zero).unwrap();
    let prices = PriceSeries {
        nodes: vec!["system".into()],
        energy: vec![vec![0.0; 24]],
        reserve: vec![0.0; 24],
        inertia: vec![0.0; 24],
        inertia_slack: vec![0.0; 24],
        commitment_units: vec![],
        commitment: vec![],
    };
    let report = settlement(&case, &built, &schedule, &prices, &SettlementOptions::default()).unwrap();
    for r in &report.resources {
        assert_eq!((r.revenue, r.cost, r.profit), (0.0, 0.0, 0.0), "{}", r.name);
    }
}

#[test]
fn perturbed_energy_price_breaks_equilibrium() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 3, &ClearingOptions::default()).unwrap();
    let mut prices = r.prices.clone();
    prices.energy[0][10] += 1.0;
    let report = verify_equilibrium(&case, &r.built, &r.pricing_program, r.pricing_solution(), &prices, 1e-5).unwrap();
    assert!(!report.pass);
    assert!(report.failing_agents.iter().any(|a| a == "G1"), "{:?}", report.failing_agents);
    assert!(report.max_deviation_gain > 1e-3);
}

#[test]
fn extraction_requires_rows_and_optimality() {
    let mut qp = QuadraticProgram::new();
    let x = qp.add_var("x");
    qp.add_linear(x, 1.0);
    qp.add_ineq("floor", vec![(x, -1.0)], 0.0);
    let sol = solve_qp(&qp, &SolverSettings::default()).unwrap();
    assert!(matches!(extract_prices(&sol, &qp), Err(Error::MissingRow(_))));

    let mut bad = sol.clone();
    bad.status = inertia_market::qp::QpStatus::MaxIter;
    assert!(matches!(extract_prices(&bad, &qp), Err(Error::NotOptimal(_))));
}

#[test]
fn slack_inertia_rows_have_zero_price() {
    let case = builtin_illustrative_case();
    let r = clear(&case, 5, &ClearingOptions::default()).unwrap();
    for t in 0..case.horizon {
        if r.prices.inertia_slack[t] > 1e-4 {
            assert!(r.prices.inertia[t].abs() < 1e-6, "t={t}");
        }
        assert!(r.prices.inertia[t] > -1e-6);
    }
    assert!(r.prices.inertia_complementarity() <= 1e-6);
}
