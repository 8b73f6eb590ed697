//! Inertia physics: turbine inertia, equivalent system inertia and the
//! minimum inertia requirement.

use serde::{Deserialize, Serialize};

use crate::case::{InertiaSpec, SystemCase, TurbineSpec};
use crate::error::{Error, Result};

const MW_TO_W: f64 = 1e6;

/// Moment of inertia of a three-blade rotor, `J = m·r²/9` in kg·m².
pub fn turbine_moment_of_inertia(m: f64, r: f64) -> Result<f64> {
    if !(m > 0.0) || !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "rotor mass and radius must be positive (m={m}, r={r})"
        )));
    }
    Ok(m * r * r / 9.0)
}

/// Inertia constant `H = J·φ²/(2·P_b_max)` in seconds, with `P_b_max` in W.
pub fn turbine_inertia_constant(j: f64, phi: f64, p_b_max: f64) -> Result<f64> {
    if !(j > 0.0) || !(phi > 0.0) || !(p_b_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "J, phi and P_b_max must be positive (J={j}, phi={phi}, P_b_max={p_b_max})"
        )));
    }
    Ok(j * phi * phi / (2.0 * p_b_max))
}

/// Farm inertia constant from turbine data. Identical turbines give the farm
/// the per-turbine constant.
pub fn farm_inertia_constant(turbine: &TurbineSpec) -> Result<f64> {
    if turbine.count == 0 {
        return Err(Error::InvalidInput("turbine count must be at least 1".into()));
    }
    let j = turbine_moment_of_inertia(turbine.m, turbine.r)?;
    turbine_inertia_constant(j, turbine.phi, turbine.p_b_max * MW_TO_W)
}

/// Equivalent system inertia at period `t` in seconds.
///
/// The wind contribution uses the expected inertia constant
/// `H_w_forecast − μ_h`.
pub fn equivalent_inertia(
    case: &SystemCase,
    commitment: &[Vec<bool>],
    h_e: &[Vec<f64>],
    t: usize,
) -> Result<f64> {
    if commitment.len() != case.generators.len() {
        return Err(Error::Dimension(format!(
            "commitment has {} rows, case has {} generators",
            commitment.len(),
            case.generators.len()
        )));
    }
    if h_e.len() != case.storage.len() {
        return Err(Error::Dimension(format!(
            "H_e has {} rows, case has {} storage units",
            h_e.len(),
            case.storage.len()
        )));
    }
    if t >= case.horizon
        || commitment.iter().any(|row| row.len() <= t)
        || h_e.iter().any(|row| row.len() <= t)
    {
        return Err(Error::Dimension(format!("period {t} outside the provided series")));
    }

    let mut total = 0.0;
    for (g, u) in case.generators.iter().zip(commitment) {
        if u[t] {
            total += g.h_g * g.p_max;
        }
    }
    for (e, h) in case.storage.iter().zip(h_e) {
        total += h[t] * e.p_d_max;
    }
    for w in &case.wind {
        total += (w.h_w_forecast[t] - case.uncertainty.mu_h) * w.p_w_max;
    }
    let p_sys = case.p_sys();
    if p_sys <= 0.0 {
        return Err(Error::InvalidInput("installed capacity is zero".into()));
    }
    Ok(total / p_sys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HminBreakdown {
    pub rocof_term: f64,
    pub nadir_term: Option<f64>,
    pub h_min: f64,
    /// Set when the nadir branch was requested but could not be evaluated.
    pub diagnostic: Option<String>,
}

/// Minimum inertia requirement. The RoCoF branch is always evaluated, the
/// nadir branch only when its control parameters are given. An explicit
/// override takes precedence over both.
pub fn min_inertia_requirement(inertia: &InertiaSpec, p_sys: f64) -> Result<HminBreakdown> {
    if inertia.rocof_max == 0.0 {
        return Err(Error::InvalidInput("rocof_max is zero".into()));
    }
    if p_sys == 0.0 {
        return Err(Error::InvalidInput("P_sys is zero".into()));
    }
    let p_im = inertia.p_im_max_abs.map(f64::abs);
    let rocof_term = match p_im {
        Some(p) => p * inertia.f0 / (2.0 * inertia.rocof_max * p_sys),
        None => 0.0,
    };

    let mut diagnostic = None;
    let nadir_term = match (&inertia.nadir_params, p_im) {
        (Some(np), Some(p)) => {
            // T·(R_g − F_g)·[(Δf·(D + R_g) − |P|) / (|P|·exp(−ς·f0·t_nadir))]^(−2)
            let base = (inertia.df_max * (np.d + np.r_g) - p)
                / (p * (-np.varsigma * inertia.f0 * np.t_nadir).exp());
            let value = np.t * (np.r_g - np.f_g) * base.powi(-2);
            if base <= 0.0 || !value.is_finite() || value < 0.0 {
                diagnostic = Some(format!(
                    "nadir requirement infeasible for the given control parameters (base {base})"
                ));
                None
            } else {
                Some(value)
            }
        }
        (Some(_), None) => {
            diagnostic = Some("nadir term needs P_im_max_abs".into());
            None
        }
        _ => None,
    };

    let h_min = match inertia.h_min_override {
        Some(h) => h,
        None => nadir_term.map_or(rocof_term, |n| rocof_term.max(n)),
    };
    Ok(HminBreakdown {
        rocof_term,
        nadir_term,
        h_min,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{builtin_illustrative_case, NadirParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(p_im: f64, rocof: f64) -> InertiaSpec {
        InertiaSpec {
            f0: 50.0,
            rocof_max: rocof,
            df_max: 0.55,
            p_im_max_abs: Some(p_im),
            nadir_params: None,
            h_min_override: None,
        }
    }

    #[test]
    fn moment_of_inertia_examples() {
        assert_eq!(turbine_moment_of_inertia(9.0, 3.0).unwrap(), 9.0);
        assert_eq!(turbine_moment_of_inertia(1.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(turbine_moment_of_inertia(3.6e5, 45.0).unwrap(), 8.1e7, max_relative = 1e-14);
        assert!(turbine_moment_of_inertia(0.0, 3.0).is_err());
        assert!(turbine_moment_of_inertia(1.0, -3.0).is_err());
    }

    #[test]
    fn inertia_constant_examples() {
        assert_eq!(turbine_inertia_constant(9.0, 2.0, 18.0).unwrap(), 1.0);
        assert_eq!(turbine_inertia_constant(1.0, 1.0, 0.5).unwrap(), 1.0);
        assert_relative_eq!(turbine_inertia_constant(8.1e7, 1.2, 2e6).unwrap(), 29.16, max_relative = 1e-14);
        assert!(turbine_inertia_constant(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn farm_constant_converts_megawatts() {
        let tb = TurbineSpec {
            m: 3.6e5,
            r: 45.0,
            phi: 1.2,
            p_b_max: 2.0,
            count: 30,
        };
        assert_relative_eq!(farm_inertia_constant(&tb).unwrap(), 29.16, max_relative = 1e-14);
    }

    fn single_gen_case() -> SystemCase {
        let mut case = builtin_illustrative_case();
        case.generators.truncate(1);
        case.storage.clear();
        case.wind.clear();
        case
    }

    #[test]
    fn equivalent_inertia_single_generator() {
        let case = single_gen_case();
        assert_eq!(equivalent_inertia(&case, &[vec![true; 24]], &[], 0).unwrap(), 6.0);
        assert_eq!(equivalent_inertia(&case, &[vec![false; 24]], &[], 0).unwrap(), 0.0);
    }

    #[test]
    fn equivalent_inertia_illustrative_matches_direct_sum() {
        let case = builtin_illustrative_case();
        let u = vec![vec![true; 24]; 4];
        let h = vec![vec![0.0; 24]; 2];
        for t in 0..24 {
            let direct = (6.0 * 10.0 * 3.0 + 10.0 * 10.0 + (case.wind[0].h_w_forecast[t] - 0.5) * 20.0) / 80.0;
            assert_relative_eq!(equivalent_inertia(&case, &u, &h, t).unwrap(), direct, max_relative = 1e-14);
        }
        assert!(equivalent_inertia(&case, &u[..3], &h, 0).is_err());
        assert!(equivalent_inertia(&case, &u, &h, 24).is_err());
    }

    #[test]
    fn rocof_branch_reproduces_table_value() {
        let b = min_inertia_requirement(&spec(5.6, 0.5), 80.0).unwrap();
        assert!((b.rocof_term - 3.5).abs() <= 1e-12);
        assert_eq!(b.h_min, b.rocof_term);
        assert!(b.nadir_term.is_none());
        assert_eq!(min_inertia_requirement(&spec(0.0, 0.5), 80.0).unwrap().rocof_term, 0.0);
    }

    #[test]
    fn override_wins() {
        let mut s = spec(100.0, 0.5);
        s.h_min_override = Some(3.5);
        let b = min_inertia_requirement(&s, 80.0).unwrap();
        assert_eq!(b.h_min, 3.5);
        assert!(b.rocof_term > 3.5);
    }

    #[test]
    fn zero_denominators_are_errors() {
        assert!(min_inertia_requirement(&spec(5.6, 0.0), 80.0).is_err());
        assert!(min_inertia_requirement(&spec(5.6, 0.5), 0.0).is_err());
    }

    #[test]
    fn nadir_branch() {
        let mut s = spec(5.6, 0.5);
        let np = NadirParams {
            t: 8.0,
            d: 1.0,
            r_g: 20.0,
            f_g: 5.0,
            varsigma: 0.01,
            t_nadir: 2.0,
        };
        s.nadir_params = Some(np.clone());
        let b = min_inertia_requirement(&s, 80.0).unwrap();
        let base = (0.55 * 21.0 - 5.6) / (5.6 * (-0.01f64 * 50.0 * 2.0).exp());
        let expected = 8.0 * 15.0 / (base * base);
        assert_relative_eq!(b.nadir_term.unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(b.h_min, b.rocof_term.max(expected), max_relative = 1e-14);

        s.nadir_params = Some(NadirParams { d: 0.0, r_g: 1.0, ..np });
        let b = min_inertia_requirement(&s, 80.0).unwrap();
        assert!(b.nadir_term.is_none());
        assert!(b.diagnostic.is_some());
        assert_eq!(b.h_min, b.rocof_term);
    }

    proptest! {
        #[test]
        fn rocof_homogeneity(p in 0.1f64..50.0, psys in 1.0f64..500.0, rocof in 0.05f64..2.0, s in 0.1f64..10.0) {
            let base = min_inertia_requirement(&spec(p, rocof), psys).unwrap().rocof_term;
            let scaled_p = min_inertia_requirement(&spec(s * p, rocof), psys).unwrap().rocof_term;
            let scaled_sys = min_inertia_requirement(&spec(p, rocof), s * psys).unwrap().rocof_term;
            let scaled_rocof = min_inertia_requirement(&spec(p, s * rocof), psys).unwrap().rocof_term;
            prop_assert!((scaled_p - s * base).abs() <= 1e-12 * scaled_p.abs().max(1.0));
            prop_assert!((scaled_sys - base / s).abs() <= 1e-12 * base.max(1.0));
            prop_assert!((scaled_rocof - base / s).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn inertia_constant_scale_invariant(j in 1.0f64..1e9, phi in 0.1f64..5.0, p in 1.0f64..1e7, s in 1e-3f64..1e3) {
            let a = turbine_inertia_constant(j, phi, p).unwrap();
            let b = turbine_inertia_constant(s * j, phi, s * p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn equivalent_inertia_monotone(mask in 0u8..16, extra in 0usize..4, h1 in 0.0f64..11.0, dh in 0.0f64..5.0, t in 0usize..24) {
            let case = builtin_illustrative_case();
            let u: Vec<Vec<bool>> = (0..4).map(|g| vec![mask & (1 << g) != 0; 24]).collect();
            let mut u2 = u.clone();
            u2[extra] = vec![true; 24];
            let h = vec![vec![h1; 24], vec![0.0; 24]];
            let h2 = vec![vec![h1 + dh; 24], vec![0.0; 24]];
            let base = equivalent_inertia(&case, &u, &h, t).unwrap();
            prop_assert!(equivalent_inertia(&case, &u2, &h, t).unwrap() >= base);
            prop_assert!(equivalent_inertia(&case, &u, &h2, t).unwrap() >= base);
        }
    }
}
