//! Deterministic equivalent of the chance-constrained unit commitment.
//!
//! Variables are laid out period by period. Period indices in the API are
//! zero-based; variable names and row labels use one-based periods, e.g.
//! `P[G1,3]` and `gen-upper[G1,3]` for the third period.

use serde::{Deserialize, Serialize};

use crate::case::{
    market_case_config, EsInertia, GeneratorSpec, MarketCaseConfig, StorageSpec, SystemCase,
};
use crate::error::{Error, Result};
use crate::inertia::{min_inertia_requirement, HminBreakdown};
use crate::program::QuadraticProgram;
use crate::quantile::inverse_normal_cdf;

/// Side convention for the quantile back-offs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginMode {
    /// One margin `Φ⁻¹(1−ε)σ − μ` on both sides of every limit and
    /// `H_w + δ̂_w` in the inertia row.
    #[default]
    PaperVerbatim,
    /// Exact one-sided quantiles: `Φ⁻¹(1−ε)σ + μ` on limits the error pushes
    /// towards, `Φ⁻¹(1−ε)σ − μ` on the generator lower limit, and
    /// `H_w − Φ⁻¹(1−ε)σ_h − μ_h` for wind inertia.
    SymmetricMargins,
}

/// How the system-wide forecast error is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// A single `N(μ_p, σ_p²)` system error.
    #[default]
    PerSystem,
    /// Independent per-farm errors summed over the wind farms.
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgramKind {
    Benchmark,
    Proposed,
    Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildOptions {
    pub margin_mode: MarginMode,
    pub variance_mode: VarianceMode,
    /// Adds `e[T] ≥ E_init` for every storage unit.
    pub terminal_energy: bool,
}

pub mod names {
    //! Variable names and row labels.

    pub fn p(g: &str, t: usize) -> String {
        format!("P[{g},{}]", t + 1)
    }
    pub fn alpha(g: &str, t: usize) -> String {
        format!("alpha[{g},{}]", t + 1)
    }
    pub fn u(g: &str, t: usize) -> String {
        format!("u[{g},{}]", t + 1)
    }
    pub fn pd(e: &str, t: usize) -> String {
        format!("Pd[{e},{}]", t + 1)
    }
    pub fn pc(e: &str, t: usize) -> String {
        format!("Pc[{e},{}]", t + 1)
    }
    pub fn alpha_d(e: &str, t: usize) -> String {
        format!("alpha_d[{e},{}]", t + 1)
    }
    pub fn alpha_c(e: &str, t: usize) -> String {
        format!("alpha_c[{e},{}]", t + 1)
    }
    pub fn h_e(e: &str, t: usize) -> String {
        format!("H_e[{e},{}]", t + 1)
    }
    pub fn energy(e: &str, t: usize) -> String {
        format!("e[{e},{}]", t + 1)
    }
    pub fn theta(n: &str, t: usize) -> String {
        format!("theta[{n},{}]", t + 1)
    }
    /// `tag[item,t]`.
    pub fn row(tag: &str, item: &str, t: usize) -> String {
        format!("{tag}[{item},{}]", t + 1)
    }
    /// `tag[t]` for system-wide rows.
    pub fn sys(tag: &str, t: usize) -> String {
        format!("{tag}[{}]", t + 1)
    }
    pub fn line(from: &str, to: &str) -> String {
        format!("{from}-{to}")
    }
}

/// `Φ⁻¹(1−ε)·σ − μ`.
pub fn safety_margin(eps: f64, sigma: f64, mu: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(inverse_normal_cdf(1.0 - eps)? * sigma - mu)
}

/// Per-period expected generator cost as a quadratic form in `(P, α, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenCostForm {
    pub u: f64,
    pub p: f64,
    pub alpha: f64,
    pub pp: f64,
    pub p_alpha: f64,
    pub alpha_alpha: f64,
}

impl GenCostForm {
    pub fn evaluate(&self, p: f64, alpha: f64, u: f64) -> f64 {
        self.u * u
            + self.p * p
            + self.alpha * alpha
            + self.pp * p * p
            + self.p_alpha * p * alpha
            + self.alpha_alpha * alpha * alpha
    }
}

/// `c0·u + c1·(P + μα) + c2·(P² + 2μαP + α²(σ² + μ²))`.
pub fn expected_generation_cost_terms(gen: &GeneratorSpec, mu_p: f64, sigma_p: f64) -> GenCostForm {
    GenCostForm {
        u: gen.c0,
        p: gen.c1,
        alpha: gen.c1 * mu_p,
        pp: gen.c2,
        p_alpha: 2.0 * gen.c2 * mu_p,
        alpha_alpha: gen.c2 * (sigma_p * sigma_p + mu_p * mu_p),
    }
}

/// Per-period expected storage cost, linear in `(P_d, P_c, α_d, α_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageCostForm {
    pub pd: f64,
    pub pc: f64,
    pub alpha_d: f64,
    pub alpha_c: f64,
}

impl StorageCostForm {
    pub fn evaluate(&self, pd: f64, pc: f64, alpha_d: f64, alpha_c: f64) -> f64 {
        self.pd * pd + self.pc * pc + self.alpha_d * alpha_d + self.alpha_c * alpha_c
    }
}

pub fn expected_storage_cost_terms(es: &StorageSpec, mu_p: f64) -> StorageCostForm {
    StorageCostForm {
        pd: es.c_d,
        pc: es.c_c,
        alpha_d: es.c_d * mu_p,
        alpha_c: es.c_c * mu_p,
    }
}

/// Mean and standard deviation of the system forecast error.
pub fn error_moments(case: &SystemCase, mode: VarianceMode) -> (f64, f64) {
    let u = &case.uncertainty;
    match mode {
        VarianceMode::PerSystem => (u.mu_p, u.sigma_p),
        VarianceMode::Aggregated => {
            let n = case.wind.len() as f64;
            (n * u.mu_p, n.sqrt() * u.sigma_p)
        }
    }
}

/// Safety margins `δ̂` plus the effective back-offs each row uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyMargins {
    pub delta_g: Vec<f64>,
    pub delta_d: Vec<f64>,
    pub delta_c: Vec<f64>,
    pub delta_w: Vec<f64>,
    pub gen_upper: Vec<f64>,
    pub gen_lower: Vec<f64>,
    pub es_discharge: Vec<f64>,
    pub es_charge: Vec<f64>,
}

pub fn safety_margins(case: &SystemCase, options: &BuildOptions) -> Result<SafetyMargins> {
    let (mu, sigma) = error_moments(case, options.variance_mode);
    let unc = &case.uncertainty;
    let upper = |eps: f64| -> Result<f64> {
        match options.margin_mode {
            MarginMode::PaperVerbatim => safety_margin(eps, sigma, mu),
            MarginMode::SymmetricMargins => safety_margin(eps, sigma, -mu),
        }
    };
    let mut m = SafetyMargins {
        delta_g: vec![],
        delta_d: vec![],
        delta_c: vec![],
        delta_w: vec![],
        gen_upper: vec![],
        gen_lower: vec![],
        es_discharge: vec![],
        es_charge: vec![],
    };
    for g in &case.generators {
        m.delta_g.push(safety_margin(g.eps_g, sigma, mu)?);
        m.gen_upper.push(upper(g.eps_g)?);
        m.gen_lower.push(safety_margin(g.eps_g, sigma, mu)?);
    }
    for e in &case.storage {
        m.delta_d.push(safety_margin(e.eps_d, sigma, mu)?);
        m.delta_c.push(safety_margin(e.eps_c, sigma, mu)?);
        m.es_discharge.push(upper(e.eps_d)?);
        m.es_charge.push(upper(e.eps_c)?);
    }
    for w in &case.wind {
        m.delta_w.push(safety_margin(w.eps_w, unc.sigma_h, unc.mu_h)?);
    }
    Ok(m)
}

/// Expected wind contribution to the inertia row at period `t`, in MW·s,
/// after the safety back-off.
pub fn wind_inertia_term(case: &SystemCase, options: &BuildOptions, margins: &SafetyMargins, t: usize) -> Result<f64> {
    let unc = &case.uncertainty;
    match options.variance_mode {
        VarianceMode::Aggregated => {
            if case.wind.is_empty() {
                return Ok(0.0);
            }
            let eps = case.wind.iter().map(|w| w.eps_w).fold(f64::INFINITY, f64::min);
            let z = inverse_normal_cdf(1.0 - eps)?;
            let spread = case
                .wind
                .iter()
                .map(|w| (unc.sigma_h * w.p_w_max).powi(2))
                .sum::<f64>()
                .sqrt();
            let base: f64 = case.wind.iter().map(|w| (w.h_w_forecast[t] - unc.mu_h) * w.p_w_max).sum();
            Ok(base - z * spread)
        }
        VarianceMode::PerSystem => {
            let mut total = 0.0;
            for (w, &dw) in case.wind.iter().zip(&margins.delta_w) {
                let h = match options.margin_mode {
                    MarginMode::PaperVerbatim => w.h_w_forecast[t] + dw,
                    MarginMode::SymmetricMargins => {
                        let z = inverse_normal_cdf(1.0 - w.eps_w)?;
                        w.h_w_forecast[t] - (z * unc.sigma_h + unc.mu_h)
                    }
                };
                total += h * w.p_w_max;
            }
            Ok(total)
        }
    }
}

/// Coefficient of `H_e` in the storage power-headroom rows.
pub fn es_power_inertia_coeff(case: &SystemCase, es: &StorageSpec) -> f64 {
    2.0 * case.inertia.rocof_max * es.p_d_max / case.inertia.f0
}

/// Coefficient of `H_e` in the storage energy rows.
pub fn es_energy_inertia_coeff(case: &SystemCase, es: &StorageSpec) -> f64 {
    2.0 * case.inertia.df_max * es.p_d_max / case.inertia.f0
}

#[derive(Debug, Clone)]
pub struct BuiltProgram {
    pub program: QuadraticProgram,
    pub kind: ProgramKind,
    /// The capabilities actually modelled; the benchmark forces case 1.
    pub config: MarketCaseConfig,
    pub options: BuildOptions,
    pub margins: SafetyMargins,
    pub h_min: HminBreakdown,
    /// Inertia requirement in MW·s, `P_sys·H_min`.
    pub inertia_requirement: f64,
    /// Right-hand side of each `inertia-req` row before the sign flip:
    /// `P_sys·H_min − wind term`.
    pub inertia_rhs: Vec<f64>,
    pub diagnostics: Vec<String>,
}

pub fn build_program(
    case: &SystemCase,
    config: &MarketCaseConfig,
    kind: ProgramKind,
    options: &BuildOptions,
) -> Result<BuiltProgram> {
    if let Some(d) = crate::case::validate(case)
        .into_iter()
        .find(|d| d.severity == crate::case::Severity::Error)
    {
        return Err(Error::validation(d.field, d.message));
    }
    let config = match kind {
        ProgramKind::Benchmark => market_case_config(1)?,
        _ => *config,
    };
    let network = match kind {
        ProgramKind::Network => Some(case.network.as_ref().ok_or_else(|| {
            Error::InvalidInput("network program requested but the case has no network".into())
        })?),
        _ => None,
    };

    let margins = safety_margins(case, options)?;
    let (mu, sigma) = error_moments(case, options.variance_mode);
    let p_sys = case.p_sys();
    let h_min = min_inertia_requirement(&case.inertia, p_sys)?;
    let requirement = p_sys * h_min.h_min;
    let dt = case.period_hours;
    let t_len = case.horizon;
    let nodes = case.nodes();

    let mut qp = QuadraticProgram::new();
    let mut diagnostics = Vec::new();
    if let Some(msg) = &h_min.diagnostic {
        diagnostics.push(msg.clone());
    }
    let mut inertia_rhs = Vec::with_capacity(t_len);

    for t in 0..t_len {
        let mut balance: Vec<(String, usize, f64)> = Vec::new();
        let mut reserve = Vec::new();
        let mut inertia = Vec::new();

        for (gi, g) in case.generators.iter().enumerate() {
            let p = qp.add_var(names::p(&g.name, t));
            let a = qp.add_var(names::alpha(&g.name, t));
            let u = qp.add_binary(names::u(&g.name, t));
            let cost = expected_generation_cost_terms(g, mu, sigma);
            qp.add_linear(u, dt * cost.u);
            qp.add_linear(p, dt * cost.p);
            qp.add_linear(a, dt * cost.alpha);
            qp.add_quad(p, p, 2.0 * dt * cost.pp);
            qp.add_quad(p, a, dt * cost.p_alpha);
            qp.add_quad(a, a, 2.0 * dt * cost.alpha_alpha);

            let name = &g.name;
            qp.add_ineq(
                names::row("gen-upper", name, t),
                vec![(p, 1.0), (u, -g.p_max), (a, margins.gen_upper[gi])],
                0.0,
            );
            qp.add_ineq(
                names::row("gen-lower", name, t),
                vec![(p, -1.0), (u, g.p_min), (a, margins.gen_lower[gi])],
                0.0,
            );
            qp.add_ineq(names::row("reserve-gen-upper", name, t), vec![(a, 1.0), (u, -1.0)], 0.0);
            qp.add_ineq(names::row("reserve-gen-lower", name, t), vec![(a, -1.0)], 0.0);

            balance.push((g.node.clone(), p, 1.0));
            reserve.push((a, 1.0));
            if g.h_g * g.p_max != 0.0 {
                inertia.push((u, -g.h_g * g.p_max));
            }
        }

        for (ei, e) in case.storage.iter().enumerate() {
            let pd = qp.add_var(names::pd(&e.name, t));
            let pc = qp.add_var(names::pc(&e.name, t));
            let ad = qp.add_var(names::alpha_d(&e.name, t));
            let ac = qp.add_var(names::alpha_c(&e.name, t));
            let he = qp.add_var(names::h_e(&e.name, t));
            let en = qp.add_var(names::energy(&e.name, t));
            let cost = expected_storage_cost_terms(e, mu);
            qp.add_linear(pd, dt * cost.pd);
            qp.add_linear(pc, dt * cost.pc);
            qp.add_linear(ad, dt * cost.alpha_d);
            qp.add_linear(ac, dt * cost.alpha_c);

            let name = &e.name;
            let a_pow = es_power_inertia_coeff(case, e);
            let b_en = es_energy_inertia_coeff(case, e);
            qp.add_ineq(
                names::row("es-discharge-upper", name, t),
                vec![(pd, 1.0), (he, a_pow), (ad, margins.es_discharge[ei])],
                e.p_d_max,
            );
            qp.add_ineq(names::row("es-discharge-lower", name, t), vec![(pd, -1.0)], 0.0);
            qp.add_ineq(
                names::row("es-charge-upper", name, t),
                vec![(pc, 1.0), (he, a_pow), (ac, margins.es_charge[ei])],
                e.p_c_max,
            );
            qp.add_ineq(names::row("es-charge-lower", name, t), vec![(pc, -1.0)], 0.0);
            qp.add_ineq(names::row("es-energy-upper", name, t), vec![(en, 1.0), (he, b_en)], e.e_max);
            qp.add_ineq(names::row("es-energy-lower", name, t), vec![(en, -1.0), (he, b_en)], -e.e_min);

            match config.es_inertia {
                EsInertia::Optimized => {
                    qp.add_ineq(names::row("es-inertia-upper", name, t), vec![(he, 1.0)], e.h_e_max);
                    qp.add_ineq(names::row("es-inertia-lower", name, t), vec![(he, -1.0)], 0.0);
                }
                EsInertia::Off => {
                    qp.add_eq(names::row("pin-es-inertia", name, t), vec![(he, 1.0)], 0.0);
                }
                EsInertia::Fixed(h) => {
                    qp.add_eq(names::row("pin-es-inertia", name, t), vec![(he, 1.0)], h);
                }
            }
            if config.es_reserve {
                qp.add_ineq(names::row("reserve-es-discharge-upper", name, t), vec![(ad, 1.0)], 1.0);
                qp.add_ineq(names::row("reserve-es-discharge-lower", name, t), vec![(ad, -1.0)], 0.0);
                qp.add_ineq(names::row("reserve-es-charge-upper", name, t), vec![(ac, 1.0)], 1.0);
                qp.add_ineq(names::row("reserve-es-charge-lower", name, t), vec![(ac, -1.0)], 0.0);
            } else {
                qp.add_eq(names::row("pin-reserve-es-discharge", name, t), vec![(ad, 1.0)], 0.0);
                qp.add_eq(names::row("pin-reserve-es-charge", name, t), vec![(ac, 1.0)], 0.0);
            }

            let mut flow = vec![
                (en, 1.0),
                (pd, dt / e.k),
                (ad, dt * mu / e.k),
                (pc, -dt * e.k),
                (ac, -dt * mu * e.k),
            ];
            let rhs = if t == 0 {
                e.e_init
            } else {
                flow.push((qp.var(&names::energy(name, t - 1))?, -1.0));
                0.0
            };
            flow.retain(|&(_, v)| v != 0.0);
            qp.add_eq(names::row("energy-balance", name, t), flow, rhs);
            if options.terminal_energy && t + 1 == t_len {
                qp.add_ineq(format!("terminal-energy[{name}]"), vec![(en, -1.0)], -e.e_init);
            }

            balance.push((e.node.clone(), pd, 1.0));
            balance.push((e.node.clone(), pc, -1.0));
            reserve.push((ad, 1.0));
            reserve.push((ac, -1.0));
            if e.p_d_max != 0.0 {
                inertia.push((he, -e.p_d_max));
            }
        }

        match network {
            None => {
                let rhs = case.total_load(t) - case.total_wind(t);
                let coeffs = balance.iter().map(|&(_, j, v)| (j, v)).collect();
                qp.add_eq(names::sys("power-balance", t), coeffs, rhs);
            }
            Some(net) => {
                let theta: Vec<usize> = nodes.iter().map(|n| qp.add_var(names::theta(n, t))).collect();
                let pos = |n: &str| nodes.iter().position(|m| m == n).expect("validated node");
                let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
                for (node, j, v) in &balance {
                    rows[pos(node)].push((*j, *v));
                }
                for line in &net.lines {
                    let (i, k) = (pos(&line.from), pos(&line.to));
                    // Flow i→k leaves node i and enters node k.
                    rows[i].push((theta[i], -line.b));
                    rows[i].push((theta[k], line.b));
                    rows[k].push((theta[k], -line.b));
                    rows[k].push((theta[i], line.b));
                    let tag = names::line(&line.from, &line.to);
                    qp.add_ineq(
                        names::row("line-flow-upper", &tag, t),
                        vec![(theta[i], line.b), (theta[k], -line.b)],
                        line.s,
                    );
                    qp.add_ineq(
                        names::row("line-flow-lower", &tag, t),
                        vec![(theta[i], -line.b), (theta[k], line.b)],
                        line.s,
                    );
                }
                for (ni, node) in nodes.iter().enumerate() {
                    let wind: f64 = case.wind.iter().filter(|w| &w.node == node).map(|w| w.forecast[t]).sum();
                    let coeffs = merge(std::mem::take(&mut rows[ni]));
                    qp.add_eq(names::row("nodal-balance", node, t), coeffs, case.node_load(node, t) - wind);
                }
                qp.add_eq(names::sys("ref-angle", t), vec![(theta[pos(&net.ref_node)], 1.0)], 0.0);
            }
        }

        qp.add_eq(names::sys("reserve-adequacy", t), reserve, 1.0);

        let wind_term = if config.wind_inertia {
            wind_inertia_term(case, options, &margins, t)?
        } else {
            0.0
        };
        let rhs = requirement - wind_term;
        inertia_rhs.push(rhs);
        qp.add_ineq(names::sys("inertia-req", t), inertia, -rhs);

        let reachable = max_inertia_supply(case, &config);
        if reachable + 1e-9 < rhs {
            diagnostics.push(format!(
                "period {}: inertia requirement {rhs:.6} MW·s exceeds the reachable {reachable:.6} MW·s",
                t + 1
            ));
        }
    }

    Ok(BuiltProgram {
        program: qp,
        kind,
        config,
        options: *options,
        margins,
        h_min,
        inertia_requirement: requirement,
        inertia_rhs,
        diagnostics,
    })
}

fn merge(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, v) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    out
}

/// Upper bound on the synchronous plus storage inertia in MW·s with every
/// generator committed.
fn max_inertia_supply(case: &SystemCase, config: &MarketCaseConfig) -> f64 {
    let gens: f64 = case.generators.iter().map(|g| g.h_g * g.p_max).sum();
    let es: f64 = case
        .storage
        .iter()
        .map(|e| {
            let h = match config.es_inertia {
                EsInertia::Off => 0.0,
                EsInertia::Fixed(h) => h,
                EsInertia::Optimized => {
                    let a = es_power_inertia_coeff(case, e);
                    let b = es_energy_inertia_coeff(case, e);
                    let mut h = e.h_e_max;
                    if a > 0.0 {
                        h = h.min(e.p_d_max / a).min(e.p_c_max / a);
                    }
                    if b > 0.0 {
                        h = h.min((e.e_max - e.e_min) / (2.0 * b));
                    }
                    h
                }
            };
            h * e.p_d_max
        })
        .sum();
    gens + es
}
