#![allow(dead_code)]

use inertia_market::case::SystemCase;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn from_value(v: Value) -> SystemCase {
    SystemCase::from_json(&v.to_string()).expect("fixture case is valid")
}

fn generator(name: &str, h: f64, p_max: f64, p_min: f64, c: [f64; 3]) -> Value {
    json!({
        "name": name, "node": "1", "H_g": h, "P_max": p_max, "P_min": p_min,
        "c0": c[0], "c1": c[1], "c2": c[2], "eps_g": 0.05
    })
}

fn storage(name: &str, c_d: f64, c_c: f64) -> Value {
    json!({
        "name": name, "node": "1", "H_e_max": 11.0, "P_d_max": 10.0, "P_c_max": 5.0,
        "E_max": 10.0, "E_min": 0.5, "E_init": 5.25, "c_d": c_d, "c_c": c_c, "k": 0.9,
        "eps_d": 0.05, "eps_c": 0.05
    })
}

/// G1 of the illustrative case alone for one period, no uncertainty and no
/// inertia requirement.
pub fn single_generator(load: f64) -> SystemCase {
    from_value(json!({
        "horizon": 1,
        "period_hours": 1.0,
        "generators": [generator("G1", 6.0, 10.0, 1.0, [10.0, 5.0, 0.001])],
        "storage": [],
        "wind": [],
        "load": {"1": [load]},
        "uncertainty": {"mu_p": 0.0, "sigma_p": 0.0, "mu_h": 0.0, "sigma_h": 0.0},
        "inertia": {"f0": 50.0, "rocof_max": 0.5, "df_max": 0.55, "H_min_override": 0.0}
    }))
}

/// Two generators, one storage unit and one wind farm over three periods:
/// six commitment binaries.
pub fn random_small_case(seed: u64) -> SystemCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens = Vec::new();
    for (i, h) in [6.0, 8.0].into_iter().enumerate() {
        let p_max = rng.gen_range(8.0..14.0);
        gens.push(generator(
            &format!("G{}", i + 1),
            h,
            p_max,
            rng.gen_range(0.5..2.0),
            [rng.gen_range(5.0..120.0), rng.gen_range(4.0..30.0), rng.gen_range(0.0..0.01)],
        ));
    }
    let forecast: Vec<f64> = (0..3).map(|_| rng.gen_range(2.0..8.0)).collect();
    let h_w: Vec<f64> = (0..3).map(|_| rng.gen_range(2.0..3.5)).collect();
    let load: Vec<f64> = (0..3).map(|_| rng.gen_range(10.0..22.0)).collect();
    from_value(json!({
        "horizon": 3,
        "period_hours": 1.0,
        "generators": gens,
        "storage": [storage("ES1", rng.gen_range(3.0..8.0), rng.gen_range(8.0..12.0))],
        "wind": [{
            "name": "W1", "node": "1", "P_w_max": 10.0, "forecast": forecast,
            "H_w_forecast": h_w, "eps_w": 0.05
        }],
        "load": {"1": load},
        "uncertainty": {"mu_p": 0.5, "sigma_p": 1.0, "mu_h": 0.5, "sigma_h": 1.0},
        "inertia": {"f0": 50.0, "rocof_max": 0.5, "df_max": 0.55, "H_min_override": rng.gen_range(1.0..3.0)}
    }))
}

/// `case` with every forecast error removed.
pub fn without_uncertainty(mut case: SystemCase) -> SystemCase {
    case.uncertainty.mu_p = 0.0;
    case.uncertainty.sigma_p = 0.0;
    case.uncertainty.mu_h = 0.0;
    case.uncertainty.sigma_h = 0.0;
    case
}
