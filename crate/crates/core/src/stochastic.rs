//! Monte Carlo validation of a cleared schedule: forecast-error scenarios,
//! real-time dispatch through participation factors, empirical
//! chance-constraint violation rates and realized cost.
//!
//! Scenario `k` is drawn from its own ChaCha8 stream (`seed`, stream `k`),
//! so each scenario is the same whatever the thread count. Reductions run in
//! fixed chunks summed in chunk order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::case::SystemCase;
use crate::error::{Error, Result};
use crate::parallel;
use crate::reformulation::{es_power_inertia_coeff, BuiltProgram, MarginMode, VarianceMode};
use crate::schedule::Schedule;

const CHUNK: usize = 1024;
const VIOLATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// One `N(μ_p, σ_p²)` system error per period, shared out over the farms
    /// by capacity.
    #[default]
    System,
    /// One `N(μ_p, σ_p²)` error per farm and period; the system error is
    /// their sum.
    PerFarm,
}

impl SamplingMode {
    /// The sampling that matches a clearing's variance assumption.
    pub fn for_variance(mode: VarianceMode) -> Self {
        match mode {
            VarianceMode::PerSystem => SamplingMode::System,
            VarianceMode::Aggregated => SamplingMode::PerFarm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub n: usize,
    pub seed: u64,
    pub mode: SamplingMode,
    pub horizon: usize,
    pub farms: usize,
    /// System error `Ω`, indexed `[k·T + t]`, in MW.
    pub omega_p: Vec<f64>,
    /// Per-farm wind error, indexed `[(k·T + t)·W + w]`, in MW.
    pub omega_w: Vec<f64>,
    /// Per-farm inertia-constant error, same layout, in s.
    pub omega_h: Vec<f64>,
}

impl ScenarioSet {
    pub fn system_error(&self, k: usize, t: usize) -> f64 {
        self.omega_p[k * self.horizon + t]
    }

    pub fn wind_error(&self, k: usize, t: usize, w: usize) -> f64 {
        self.omega_w[(k * self.horizon + t) * self.farms + w]
    }

    pub fn inertia_error(&self, k: usize, t: usize, w: usize) -> f64 {
        self.omega_h[(k * self.horizon + t) * self.farms + w]
    }
}

struct Draw {
    omega_p: Vec<f64>,
    omega_w: Vec<f64>,
    omega_h: Vec<f64>,
}

fn draw_scenario(case: &SystemCase, seed: u64, k: usize, mode: SamplingMode) -> Draw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let unc = &case.uncertainty;
    let nw = case.wind.len();
    let capacity: f64 = case.wind.iter().map(|w| w.p_w_max).sum();
    let mut normal = |mu: f64, sigma: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        mu + sigma * z
    };
    let mut d = Draw {
        omega_p: Vec::with_capacity(case.horizon),
        omega_w: Vec::with_capacity(case.horizon * nw),
        omega_h: Vec::with_capacity(case.horizon * nw),
    };
    for _ in 0..case.horizon {
        match mode {
            SamplingMode::System => {
                let omega = normal(unc.mu_p, unc.sigma_p);
                d.omega_p.push(omega);
                for w in &case.wind {
                    let share = if capacity > 0.0 { w.p_w_max / capacity } else { 1.0 / nw as f64 };
                    d.omega_w.push(omega * share);
                }
            }
            SamplingMode::PerFarm => {
                let mut omega = 0.0;
                for _ in 0..nw {
                    let e = normal(unc.mu_p, unc.sigma_p);
                    omega += e;
                    d.omega_w.push(e);
                }
                d.omega_p.push(omega);
            }
        }
        for _ in 0..nw {
            d.omega_h.push(normal(unc.mu_h, unc.sigma_h));
        }
    }
    d
}

/// Draws `n` scenarios of the forecast errors of `case`.
pub fn sample_scenarios(case: &SystemCase, n: usize, seed: u64, mode: SamplingMode, threads: usize) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let draws = parallel::map_indexed(threads, n, |k| draw_scenario(case, seed, k, mode));
    let mut set = ScenarioSet {
        n,
        seed,
        mode,
        horizon: case.horizon,
        farms: case.wind.len(),
        omega_p: Vec::with_capacity(n * case.horizon),
        omega_w: Vec::with_capacity(n * case.horizon * case.wind.len()),
        omega_h: Vec::with_capacity(n * case.horizon * case.wind.len()),
    };
    for d in draws {
        set.omega_p.extend(d.omega_p);
        set.omega_w.extend(d.omega_w);
        set.omega_h.extend(d.omega_h);
    }
    Ok(set)
}

/// Real-time operating point of one scenario and period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedPeriod {
    pub p: Vec<f64>,
    pub pd: Vec<f64>,
    pub pc: Vec<f64>,
    pub wind: Vec<f64>,
    pub h_w: Vec<f64>,
    /// Supply minus demand.
    pub imbalance: f64,
}

pub fn realize_dispatch(case: &SystemCase, schedule: &Schedule, scenarios: &ScenarioSet, k: usize, t: usize) -> RealizedPeriod {
    let omega = scenarios.system_error(k, t);
    let p: Vec<f64> = schedule.generators.iter().map(|g| g.p[t] + g.alpha[t] * omega).collect();
    let pd: Vec<f64> = schedule.storage.iter().map(|e| e.pd[t] + e.alpha_d[t] * omega).collect();
    let pc: Vec<f64> = schedule.storage.iter().map(|e| e.pc[t] + e.alpha_c[t] * omega).collect();
    let wind: Vec<f64> = case
        .wind
        .iter()
        .enumerate()
        .map(|(w, f)| f.forecast[t] - scenarios.wind_error(k, t, w))
        .collect();
    let h_w: Vec<f64> = case
        .wind
        .iter()
        .enumerate()
        .map(|(w, f)| f.h_w_forecast[t] - scenarios.inertia_error(k, t, w))
        .collect();
    let supply = p.iter().sum::<f64>() + pd.iter().sum::<f64>() - pc.iter().sum::<f64>() + wind.iter().sum::<f64>();
    RealizedPeriod {
        imbalance: supply - case.total_load(t),
        p,
        pd,
        pc,
        wind,
        h_w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GenUpper,
    GenLower,
    EsDischarge,
    EsCharge,
    Inertia,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::GenUpper,
        Family::GenLower,
        Family::EsDischarge,
        Family::EsCharge,
        Family::Inertia,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::GenUpper => "gen-upper",
            Family::GenLower => "gen-lower",
            Family::EsDischarge => "es-discharge",
            Family::EsCharge => "es-charge",
            Family::Inertia => "inertia",
        }
    }

    /// Families whose paper-verbatim back-off `Φ⁻¹(1−ε)σ − μ` is smaller
    /// than the exact one-sided quantile when `μ > 0`.
    fn undercut_by_verbatim_margins(&self) -> bool {
        !matches!(self, Family::GenLower)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub constraints: usize,
    /// Constraint with the highest violation frequency, as `resource,period`.
    pub worst: String,
    pub frequency: f64,
    pub eps: f64,
    /// `3·sqrt(ε(1−ε)/n)`.
    pub radius: f64,
    pub limit: f64,
    /// Reported but excluded from the overall verdict.
    pub exempt: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub n: usize,
    pub seed: u64,
    pub families: Vec<FamilyReport>,
    pub pass: bool,
}

struct Check {
    family: Family,
    label: String,
    eps: f64,
}

fn checks(case: &SystemCase, built: &BuiltProgram, schedule: &Schedule) -> Vec<Check> {
    let mut out = Vec::new();
    for t in 0..case.horizon {
        for (g, s) in case.generators.iter().zip(&schedule.generators) {
            if s.u[t] > 0.5 {
                for family in [Family::GenUpper, Family::GenLower] {
                    out.push(Check {
                        family,
                        label: format!("{},{}", g.name, t + 1),
                        eps: g.eps_g,
                    });
                }
            }
        }
        for e in &case.storage {
            out.push(Check {
                family: Family::EsDischarge,
                label: format!("{},{}", e.name, t + 1),
                eps: e.eps_d,
            });
            out.push(Check {
                family: Family::EsCharge,
                label: format!("{},{}", e.name, t + 1),
                eps: e.eps_c,
            });
        }
        let eps = if built.config.wind_inertia && !case.wind.is_empty() {
            case.wind.iter().map(|w| w.eps_w).fold(f64::INFINITY, f64::min)
        } else {
            // The row is deterministic; any violation counts against the
            // tightest tolerance in the case.
            case.generators.iter().map(|g| g.eps_g).fold(0.5, f64::min)
        };
        out.push(Check {
            family: Family::Inertia,
            label: format!("system,{}", t + 1),
            eps,
        });
    }
    out
}

/// Whether each check is violated in scenario `k`, in the order of
/// [`checks`].
fn violations(case: &SystemCase, built: &BuiltProgram, schedule: &Schedule, scenarios: &ScenarioSet, k: usize, hits: &mut [u32]) {
    let mut c = 0;
    let requirement = built.inertia_requirement;
    for t in 0..case.horizon {
        let r = realize_dispatch(case, schedule, scenarios, k, t);
        for (gi, (g, s)) in case.generators.iter().zip(&schedule.generators).enumerate() {
            if s.u[t] > 0.5 {
                hits[c] += (r.p[gi] > g.p_max * s.u[t] + VIOLATION_TOL) as u32;
                hits[c + 1] += (r.p[gi] < g.p_min * s.u[t] - VIOLATION_TOL) as u32;
                c += 2;
            }
        }
        for (ei, (e, s)) in case.storage.iter().zip(&schedule.storage).enumerate() {
            let a = es_power_inertia_coeff(case, e) * s.h_e[t];
            hits[c] += (r.pd[ei] + a > e.p_d_max + VIOLATION_TOL) as u32;
            hits[c + 1] += (r.pc[ei] + a > e.p_c_max + VIOLATION_TOL) as u32;
            c += 2;
        }
        let mut inertia: f64 = case
            .generators
            .iter()
            .zip(&schedule.generators)
            .map(|(g, s)| g.h_g * g.p_max * s.u[t])
            .sum::<f64>()
            + case
                .storage
                .iter()
                .zip(&schedule.storage)
                .map(|(e, s)| e.p_d_max * s.h_e[t])
                .sum::<f64>();
        if built.config.wind_inertia {
            inertia += case.wind.iter().zip(&r.h_w).map(|(w, h)| h * w.p_w_max).sum::<f64>();
        }
        hits[c] += (inertia < requirement - VIOLATION_TOL * requirement.abs().max(1.0)) as u32;
        c += 1;
    }
}

fn chunks(n: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(CHUNK).map(|s| (s, (s + CHUNK).min(n))).collect()
}

/// Counts scenarios violating each physical limit of the chance-constrained
/// families. A family passes when every member's frequency stays within
/// `ε + 3·sqrt(ε(1−ε)/n)`.
pub fn empirical_violation_rates(
    case: &SystemCase,
    built: &BuiltProgram,
    schedule: &Schedule,
    scenarios: &ScenarioSet,
    threads: usize,
) -> ViolationReport {
    let list = checks(case, built, schedule);
    let parts = parallel::map(threads, &chunks(scenarios.n), |&(lo, hi)| {
        let mut hits = vec![0u32; list.len()];
        for k in lo..hi {
            violations(case, built, schedule, scenarios, k, &mut hits);
        }
        hits
    });
    let mut counts = vec![0u64; list.len()];
    for part in parts {
        for (c, h) in counts.iter_mut().zip(part) {
            *c += h as u64;
        }
    }
    let n = scenarios.n as f64;
    let verbatim = built.options.margin_mode == MarginMode::PaperVerbatim;
    let mut families = Vec::new();
    for family in Family::ALL {
        let mut report = FamilyReport {
            family,
            constraints: 0,
            worst: String::new(),
            frequency: 0.0,
            eps: 0.0,
            radius: 0.0,
            limit: 0.0,
            exempt: verbatim && family.undercut_by_verbatim_margins(),
            pass: true,
        };
        let mut worst_excess = f64::NEG_INFINITY;
        for (check, &count) in list.iter().zip(&counts) {
            if check.family != family {
                continue;
            }
            report.constraints += 1;
            let freq = count as f64 / n;
            let radius = 3.0 * (check.eps * (1.0 - check.eps) / n).sqrt();
            let limit = check.eps + radius;
            report.pass &= freq <= limit;
            if freq - limit > worst_excess {
                worst_excess = freq - limit;
                report.worst = check.label.clone();
                report.frequency = freq;
                report.eps = check.eps;
                report.radius = radius;
                report.limit = limit;
            }
        }
        families.push(report);
    }
    let pass = families.iter().all(|f| f.pass || f.exempt);
    ViolationReport {
        n: scenarios.n,
        seed: scenarios.seed,
        families,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl CostReport {
    /// `|mean − analytic|` in standard errors; zero when both agree exactly.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let d = (self.mean - analytic).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Realized operating cost of scenario `k`.
pub fn realized_cost(case: &SystemCase, schedule: &Schedule, scenarios: &ScenarioSet, k: usize) -> f64 {
    let dt = case.period_hours;
    let mut cost = 0.0;
    for t in 0..case.horizon {
        let r = realize_dispatch(case, schedule, scenarios, k, t);
        for ((g, s), p) in case.generators.iter().zip(&schedule.generators).zip(&r.p) {
            cost += dt * (g.c0 * s.u[t] + g.c1 * p + g.c2 * p * p);
        }
        for ((e, pd), pc) in case.storage.iter().zip(&r.pd).zip(&r.pc) {
            cost += dt * (e.c_d * pd + e.c_c * pc);
        }
    }
    cost
}

/// Mean realized cost over the scenarios with its standard error.
pub fn empirical_cost(case: &SystemCase, schedule: &Schedule, scenarios: &ScenarioSet, threads: usize) -> CostReport {
    let mean_est = realized_cost(case, schedule, scenarios, 0);
    // Sums are taken around a shift to keep the variance accurate.
    let parts = parallel::map(threads, &chunks(scenarios.n), |&(lo, hi)| {
        (lo..hi).fold((0.0, 0.0), |(s, ss), k| {
            let d = realized_cost(case, schedule, scenarios, k) - mean_est;
            (s + d, ss + d * d)
        })
    });
    let (s, ss) = parts.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = scenarios.n as f64;
    let mean = s / n;
    let var = if scenarios.n > 1 { ((ss - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    CostReport {
        n: scenarios.n,
        mean: mean_est + mean,
        std_error: (var / n).sqrt(),
    }
}
