//! Energy, reserve, inertia and commitment prices from the fixed-commitment
//! program, their resource-side closed forms, and settlement.
//!
//! Sign conventions: with the Lagrangian of [`crate::program`], the energy
//! price is `λ = −y` of the balance row, the reserve price `γ = −y` of the
//! reserve-adequacy row, the inertia price `χ = z` of the inertia row in
//! $ per MW·s, and the commitment price `κ = y` of the commitment-fix row.

use serde::{Deserialize, Serialize};

use crate::case::{GeneratorSpec, StorageSpec, SystemCase};
use crate::error::{Error, Result};
use crate::program::{QuadraticProgram, RowRef};
use crate::qp::QpSolution;
use crate::reformulation::{
    error_moments, es_energy_inertia_coeff, es_power_inertia_coeff, names, BuiltProgram,
    MarginMode, VarianceMode,
};
use crate::quantile::inverse_normal_cdf;
use crate::schedule::Schedule;

/// Node name used for the single energy price of a single-bus run.
pub const SYSTEM_NODE: &str = "system";

/// Outputs below this are treated as not providing the service.
const ACTIVE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    /// Nodes of the energy prices, or just [`SYSTEM_NODE`].
    pub nodes: Vec<String>,
    /// `energy[node][t]`.
    pub energy: Vec<Vec<f64>>,
    pub reserve: Vec<f64>,
    pub inertia: Vec<f64>,
    /// Slack `h − Gx ≥ 0` of each inertia row, in MW·s.
    pub inertia_slack: Vec<f64>,
    pub commitment_units: Vec<String>,
    /// `commitment[unit][t]`.
    pub commitment: Vec<Vec<f64>>,
}

impl PriceSeries {
    pub fn horizon(&self) -> usize {
        self.reserve.len()
    }

    pub fn is_networked(&self) -> bool {
        self.nodes.first().map_or(false, |n| n != SYSTEM_NODE)
    }

    /// Energy price seen by a resource located at `node`.
    pub fn energy_at(&self, node: &str, t: usize) -> f64 {
        if !self.is_networked() {
            return self.energy[0][t];
        }
        let k = self.nodes.iter().position(|n| n == node).expect("resource node has a balance row");
        self.energy[k][t]
    }

    /// `max_t χ_t·slack_t`.
    pub fn inertia_complementarity(&self) -> f64 {
        self.inertia
            .iter()
            .zip(&self.inertia_slack)
            .fold(0.0, |m, (c, s)| m.max((c * s).abs()))
    }
}

/// Splits `tag[a,b]` into `("tag", ["a", "b"])`.
pub(crate) fn parse_label(label: &str) -> Option<(&str, Vec<&str>)> {
    let open = label.find('[')?;
    let inner = label[open + 1..].strip_suffix(']')?;
    Some((&label[..open], inner.split(',').collect()))
}

fn period_of(arg: &str) -> Option<usize> {
    arg.parse::<usize>().ok().filter(|&t| t >= 1).map(|t| t - 1)
}

/// Collects `(item, t) → dual` for every row with the given tag. Items are
/// returned in order of first appearance.
fn tagged(program: &QuadraticProgram, sol: &QpSolution, tag: &str, itemized: bool) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut items: Vec<String> = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = Vec::new();
    let rows = program
        .eq_rows
        .iter()
        .enumerate()
        .map(|(i, r)| (&r.label, sol.eq_duals[i]))
        .chain(program.ineq_rows.iter().enumerate().map(|(i, r)| (&r.label, sol.ineq_duals[i])));
    for (label, dual) in rows {
        let Some((t_tag, args)) = parse_label(label) else { continue };
        if t_tag != tag {
            continue;
        }
        let (item, t) = match (itemized, args.as_slice()) {
            (true, [item, t]) => (item.to_string(), period_of(t)),
            (false, [t]) => (String::new(), period_of(t)),
            _ => continue,
        };
        let Some(t) = t else { continue };
        let k = match items.iter().position(|i| *i == item) {
            Some(k) => k,
            None => {
                items.push(item);
                values.push(Vec::new());
                items.len() - 1
            }
        };
        if values[k].len() <= t {
            values[k].resize(t + 1, None);
        }
        values[k][t] = Some(dual);
    }
    (items, values)
}

fn complete(tag: &str, item: &str, series: Vec<Option<f64>>, horizon: usize) -> Result<Vec<f64>> {
    if series.len() > horizon {
        return Err(Error::Dimension(format!("`{tag}` rows extend beyond period {horizon}")));
    }
    (0..horizon)
        .map(|t| {
            series.get(t).copied().flatten().ok_or_else(|| {
                Error::MissingRow(if item.is_empty() {
                    names::sys(tag, t)
                } else {
                    names::row(tag, item, t)
                })
            })
        })
        .collect()
}

/// Reads λ, γ, χ and κ from the duals of an optimal solution.
pub fn extract_prices(solution: &QpSolution, program: &QuadraticProgram) -> Result<PriceSeries> {
    if !solution.is_optimal() {
        return Err(Error::NotOptimal(solution.status.as_str().into()));
    }
    let (_, reserve) = tagged(program, solution, "reserve-adequacy", false);
    let Some(reserve) = reserve.into_iter().next() else {
        return Err(Error::MissingRow(names::sys("reserve-adequacy", 0)));
    };
    let horizon = reserve.len();
    let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<f64>>();
    let reserve = neg(complete("reserve-adequacy", "", reserve, horizon)?);

    let (_, inertia) = tagged(program, solution, "inertia-req", false);
    let inertia = complete("inertia-req", "", inertia.into_iter().next().unwrap_or_default(), horizon)?;
    let mut inertia_slack = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let label = names::sys("inertia-req", t);
        let RowRef::Ineq(i) = program.row(&label)? else {
            return Err(Error::MissingRow(label));
        };
        let row = &program.ineq_rows[i];
        inertia_slack.push(row.rhs - row.activity(&solution.primal));
    }

    let (_, single) = tagged(program, solution, "power-balance", false);
    let (nodes, energy) = match single.into_iter().next() {
        Some(series) => (
            vec![SYSTEM_NODE.to_string()],
            vec![neg(complete("power-balance", "", series, horizon)?)],
        ),
        None => {
            let (nodes, series) = tagged(program, solution, "nodal-balance", true);
            if nodes.is_empty() {
                return Err(Error::MissingRow(names::sys("power-balance", 0)));
            }
            let energy = nodes
                .iter()
                .zip(series)
                .map(|(n, s)| complete("nodal-balance", n, s, horizon).map(neg))
                .collect::<Result<Vec<_>>>()?;
            (nodes, energy)
        }
    };

    let (units, kappa) = tagged(program, solution, "commitment-fix", true);
    let commitment = units
        .iter()
        .zip(kappa)
        .map(|(u, s)| complete("commitment-fix", u, s, horizon))
        .collect::<Result<Vec<_>>>()?;

    Ok(PriceSeries {
        nodes,
        energy,
        reserve,
        inertia,
        inertia_slack,
        commitment_units: units,
        commitment,
    })
}

/// Multipliers of a generator's own rows at one period.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeneratorDuals {
    pub mu_upper: f64,
    pub mu_lower: f64,
    pub rho_upper: f64,
    pub rho_lower: f64,
    pub kappa: f64,
}

/// `Δt·(c1 + 2c2(P + μα)) + μ⁺ − μ⁻`.
pub fn generator_energy_form(g: &GeneratorSpec, dt: f64, mu: f64, p: f64, alpha: f64, d: &GeneratorDuals) -> f64 {
    dt * (g.c1 + 2.0 * g.c2 * (p + mu * alpha)) + d.mu_upper - d.mu_lower
}

/// `Δt·(c1μ + 2c2(μP + α(σ² + μ²))) + δ⁺μ⁺ + δ⁻μ⁻ + ρ⁺ − ρ⁻`.
#[allow(clippy::too_many_arguments)]
pub fn generator_reserve_form(
    g: &GeneratorSpec,
    dt: f64,
    mu: f64,
    sigma: f64,
    p: f64,
    alpha: f64,
    delta_upper: f64,
    delta_lower: f64,
    d: &GeneratorDuals,
) -> f64 {
    dt * (g.c1 * mu + 2.0 * g.c2 * (mu * p + alpha * (sigma * sigma + mu * mu)))
        + delta_upper * d.mu_upper
        + delta_lower * d.mu_lower
        + d.rho_upper
        - d.rho_lower
}

/// `(Δt·c0 − P_max·μ⁺ + P_min·μ⁻ − ρ⁺ + κ) / (H·P_max)`; `None` when the unit
/// provides no inertia.
pub fn generator_inertia_form(g: &GeneratorSpec, dt: f64, d: &GeneratorDuals) -> Option<f64> {
    let scale = g.h_g * g.p_max;
    (scale != 0.0)
        .then(|| (dt * g.c0 - g.p_max * d.mu_upper + g.p_min * d.mu_lower - d.rho_upper + d.kappa) / scale)
}

/// Multipliers of a storage unit's own rows at one period.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StorageDuals {
    pub xi_upper: f64,
    pub xi_lower: f64,
    pub nu_upper: f64,
    pub nu_lower: f64,
    pub beta_upper: f64,
    pub beta_lower: f64,
    pub eps_upper: f64,
    pub eps_lower: f64,
    pub rho_d_upper: f64,
    pub rho_d_lower: f64,
    pub rho_c_upper: f64,
    pub rho_c_lower: f64,
    /// Dual of the energy-balance row.
    pub eta: f64,
    pub pin_alpha_d: f64,
    pub pin_alpha_c: f64,
    pub pin_h: f64,
}

/// `Δt·c_d + ξ⁺ − ξ⁻ + η·Δt/k`.
pub fn storage_discharge_energy_form(e: &StorageSpec, dt: f64, d: &StorageDuals) -> f64 {
    dt * e.c_d + d.xi_upper - d.xi_lower + d.eta * dt / e.k
}

/// `−Δt·c_c − ν⁺ + ν⁻ + η·Δt·k`.
pub fn storage_charge_energy_form(e: &StorageSpec, dt: f64, d: &StorageDuals) -> f64 {
    -dt * e.c_c - d.nu_upper + d.nu_lower + d.eta * dt * e.k
}

/// `Δt·c_d·μ + δ_d·ξ⁺ + ρ_d⁺ − ρ_d⁻ + η·Δt·μ/k`, plus the pin dual.
pub fn storage_discharge_reserve_form(e: &StorageSpec, dt: f64, mu: f64, delta_d: f64, d: &StorageDuals) -> f64 {
    dt * e.c_d * mu + delta_d * d.xi_upper + d.rho_d_upper - d.rho_d_lower + d.eta * dt * mu / e.k + d.pin_alpha_d
}

/// `−(Δt·c_c·μ + δ_c·ν⁺ + ρ_c⁺ − ρ_c⁻ − η·Δt·μ·k)`, minus the pin dual.
pub fn storage_charge_reserve_form(e: &StorageSpec, dt: f64, mu: f64, delta_c: f64, d: &StorageDuals) -> f64 {
    -(dt * e.c_c * mu + delta_c * d.nu_upper + d.rho_c_upper - d.rho_c_lower - d.eta * dt * mu * e.k + d.pin_alpha_c)
}

/// `(a(ξ⁺ + ν⁺) + b(β⁺ + β⁻) + ε⁺ − ε⁻) / P_d_max`, plus the pin dual.
pub fn storage_inertia_form(case: &SystemCase, e: &StorageSpec, d: &StorageDuals) -> Option<f64> {
    if e.p_d_max == 0.0 {
        return None;
    }
    let a = es_power_inertia_coeff(case, e);
    let b = es_energy_inertia_coeff(case, e);
    Some(
        (a * (d.xi_upper + d.nu_upper) + b * (d.beta_upper + d.beta_lower) + d.eps_upper - d.eps_lower + d.pin_h)
            / e.p_d_max,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Service {
    Energy,
    Reserve,
    Inertia,
}

impl Service {
    pub fn as_str(&self) -> &'static str {
        match self {
            Service::Energy => "energy",
            Service::Reserve => "reserve",
            Service::Inertia => "inertia",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Unit,
    Discharge,
    Charge,
}

impl Leg {
    pub fn as_str(&self) -> &'static str {
        match self {
            Leg::Unit => "unit",
            Leg::Discharge => "discharge",
            Leg::Charge => "charge",
        }
    }
}

/// One closed-form price next to the system dual it should reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormPrice {
    pub resource: String,
    pub leg: Leg,
    pub service: Service,
    pub period: usize,
    pub form: f64,
    pub system: f64,
    /// The resource provides the service at this period.
    pub active: bool,
}

impl FormPrice {
    pub fn mismatch(&self) -> f64 {
        (self.form - self.system).abs()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourcePrices {
    pub entries: Vec<FormPrice>,
    pub diagnostics: Vec<String>,
}

impl ResourcePrices {
    /// Largest mismatch over the entries where the resource is active.
    pub fn max_active_mismatch(&self) -> f64 {
        self.entries.iter().filter(|e| e.active).fold(0.0, |m, e| m.max(e.mismatch()))
    }

    pub fn active_count(&self, service: Service) -> usize {
        self.entries.iter().filter(|e| e.active && e.service == service).count()
    }
}

/// Looks up duals by label; absent rows contribute zero.
struct Duals<'a> {
    program: &'a QuadraticProgram,
    solution: &'a QpSolution,
}

impl Duals<'_> {
    fn get(&self, label: &str) -> f64 {
        match self.program.row(label) {
            Ok(RowRef::Eq(i)) => self.solution.eq_duals[i],
            Ok(RowRef::Ineq(i)) => self.solution.ineq_duals[i],
            Err(_) => 0.0,
        }
    }

    fn generator(&self, name: &str, t: usize) -> GeneratorDuals {
        GeneratorDuals {
            mu_upper: self.get(&names::row("gen-upper", name, t)),
            mu_lower: self.get(&names::row("gen-lower", name, t)),
            rho_upper: self.get(&names::row("reserve-gen-upper", name, t)),
            rho_lower: self.get(&names::row("reserve-gen-lower", name, t)),
            kappa: self.get(&names::row("commitment-fix", name, t)),
        }
    }

    fn storage(&self, name: &str, t: usize) -> StorageDuals {
        let r = |tag: &str| self.get(&names::row(tag, name, t));
        StorageDuals {
            xi_upper: r("es-discharge-upper"),
            xi_lower: r("es-discharge-lower"),
            nu_upper: r("es-charge-upper"),
            nu_lower: r("es-charge-lower"),
            beta_upper: r("es-energy-upper"),
            beta_lower: r("es-energy-lower"),
            eps_upper: r("es-inertia-upper"),
            eps_lower: r("es-inertia-lower"),
            rho_d_upper: r("reserve-es-discharge-upper"),
            rho_d_lower: r("reserve-es-discharge-lower"),
            rho_c_upper: r("reserve-es-charge-upper"),
            rho_c_lower: r("reserve-es-charge-lower"),
            eta: r("energy-balance"),
            pin_alpha_d: r("pin-reserve-es-discharge"),
            pin_alpha_c: r("pin-reserve-es-charge"),
            pin_h: r("pin-es-inertia"),
        }
    }
}

/// Evaluates every resource-side closed form at the solution of the pricing
/// program (`built.program` with the commitment fixed).
pub fn resource_form_prices(
    case: &SystemCase,
    built: &BuiltProgram,
    program: &QuadraticProgram,
    solution: &QpSolution,
    prices: &PriceSeries,
) -> Result<ResourcePrices> {
    if !solution.is_optimal() {
        return Err(Error::NotOptimal(solution.status.as_str().into()));
    }
    let sched = Schedule::from_primal(case, program, &solution.primal)?;
    let duals = Duals { program, solution };
    let (mu, sigma) = error_moments(case, built.options.variance_mode);
    let dt = case.period_hours;
    let m = &built.margins;
    let mut out = ResourcePrices::default();
    let push = |out: &mut ResourcePrices, resource: &str, leg, service, period, form, system, active| {
        out.entries.push(FormPrice {
            resource: resource.to_string(),
            leg,
            service,
            period,
            form,
            system,
            active,
        })
    };

    for (gi, (g, s)) in case.generators.iter().zip(&sched.generators).enumerate() {
        if g.h_g * g.p_max == 0.0 {
            out.diagnostics.push(format!("{}: H_g·P_max = 0, inertia form skipped", g.name));
        }
        for t in 0..case.horizon {
            let d = duals.generator(&g.name, t);
            let (p, a, on) = (s.p[t], s.alpha[t], s.u[t] > 0.5);
            let lambda = prices.energy_at(&g.node, t);
            let e = generator_energy_form(g, dt, mu, p, a, &d);
            push(&mut out, &g.name, Leg::Unit, Service::Energy, t, e, lambda, on && p > ACTIVE);
            let r = generator_reserve_form(g, dt, mu, sigma, p, a, m.gen_upper[gi], m.gen_lower[gi], &d);
            push(&mut out, &g.name, Leg::Unit, Service::Reserve, t, r, prices.reserve[t], on && a > ACTIVE);
            if let Some(x) = generator_inertia_form(g, dt, &d) {
                push(&mut out, &g.name, Leg::Unit, Service::Inertia, t, x, prices.inertia[t], on);
            }
        }
    }

    for (ei, (e, s)) in case.storage.iter().zip(&sched.storage).enumerate() {
        if e.p_d_max == 0.0 {
            out.diagnostics.push(format!("{}: P_d_max = 0, inertia form skipped", e.name));
        }
        for t in 0..case.horizon {
            let d = duals.storage(&e.name, t);
            let lambda = prices.energy_at(&e.node, t);
            let gamma = prices.reserve[t];
            let dis = storage_discharge_energy_form(e, dt, &d);
            push(&mut out, &e.name, Leg::Discharge, Service::Energy, t, dis, lambda, s.pd[t] > ACTIVE);
            let ch = storage_charge_energy_form(e, dt, &d);
            push(&mut out, &e.name, Leg::Charge, Service::Energy, t, ch, lambda, s.pc[t] > ACTIVE);
            let rd = storage_discharge_reserve_form(e, dt, mu, m.es_discharge[ei], &d);
            push(&mut out, &e.name, Leg::Discharge, Service::Reserve, t, rd, gamma, s.alpha_d[t] > ACTIVE);
            let rc = storage_charge_reserve_form(e, dt, mu, m.es_charge[ei], &d);
            push(&mut out, &e.name, Leg::Charge, Service::Reserve, t, rc, gamma, s.alpha_c[t] > ACTIVE);
            if let Some(x) = storage_inertia_form(case, e, &d) {
                push(&mut out, &e.name, Leg::Unit, Service::Inertia, t, x, prices.inertia[t], s.h_e[t] > ACTIVE);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceClass {
    Generator,
    Storage,
    Wind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSettlement {
    pub name: String,
    pub class: ResourceClass,
    pub energy_revenue: f64,
    pub reserve_revenue: f64,
    pub inertia_revenue: f64,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub energy_revenue: f64,
    pub reserve_revenue: f64,
    pub inertia_revenue: f64,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
}

impl Totals {
    fn add(&mut self, r: &ResourceSettlement) {
        self.energy_revenue += r.energy_revenue;
        self.reserve_revenue += r.reserve_revenue;
        self.inertia_revenue += r.inertia_revenue;
        self.revenue += r.revenue;
        self.cost += r.cost;
        self.profit += r.profit;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub resources: Vec<ResourceSettlement>,
    pub generators: Totals,
    pub storage: Totals,
    pub wind: Totals,
    pub system: Totals,
    pub pay_wind_energy: bool,
}

impl SettlementReport {
    /// Total expected operating cost, equal to the clearing objective.
    pub fn total_cost(&self) -> f64 {
        self.system.cost
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementOptions {
    /// Pays wind farms `λ·forecast` in addition to the inertia payment.
    pub pay_wind_energy: bool,
}

/// Inertia each wind farm offers in the inertia row at period `t`, in MW·s.
/// The aggregated-variance margin is shared out in proportion to each farm's
/// error variance.
pub fn wind_inertia_offers(case: &SystemCase, built: &BuiltProgram, t: usize) -> Result<Vec<f64>> {
    if !built.config.wind_inertia {
        return Ok(vec![0.0; case.wind.len()]);
    }
    let unc = &case.uncertainty;
    let opts = &built.options;
    match opts.variance_mode {
        VarianceMode::PerSystem => case
            .wind
            .iter()
            .zip(&built.margins.delta_w)
            .map(|(w, &dw)| {
                let h = match opts.margin_mode {
                    MarginMode::PaperVerbatim => w.h_w_forecast[t] + dw,
                    MarginMode::SymmetricMargins => {
                        w.h_w_forecast[t] - (inverse_normal_cdf(1.0 - w.eps_w)? * unc.sigma_h + unc.mu_h)
                    }
                };
                Ok(h * w.p_w_max)
            })
            .collect(),
        VarianceMode::Aggregated => {
            if case.wind.is_empty() {
                return Ok(vec![]);
            }
            let eps = case.wind.iter().map(|w| w.eps_w).fold(f64::INFINITY, f64::min);
            let z = inverse_normal_cdf(1.0 - eps)?;
            let var: Vec<f64> = case.wind.iter().map(|w| (unc.sigma_h * w.p_w_max).powi(2)).collect();
            let total: f64 = var.iter().sum();
            let spread = total.sqrt();
            Ok(case
                .wind
                .iter()
                .zip(&var)
                .map(|(w, v)| {
                    let share = if total > 0.0 { v / total } else { 1.0 / case.wind.len() as f64 };
                    (w.h_w_forecast[t] - unc.mu_h) * w.p_w_max - z * spread * share
                })
                .collect())
        }
    }
}

/// Revenue, cost and profit of every resource at the cleared prices.
pub fn settlement(
    case: &SystemCase,
    built: &BuiltProgram,
    schedule: &Schedule,
    prices: &PriceSeries,
    options: &SettlementOptions,
) -> Result<SettlementReport> {
    let (mu, sigma) = error_moments(case, built.options.variance_mode);
    let dt = case.period_hours;
    let mut resources = Vec::new();
    for (g, s) in case.generators.iter().zip(&schedule.generators) {
        let form = crate::reformulation::expected_generation_cost_terms(g, mu, sigma);
        let mut r = ResourceSettlement::new(&g.name, ResourceClass::Generator);
        for t in 0..case.horizon {
            r.energy_revenue += prices.energy_at(&g.node, t) * s.p[t];
            r.reserve_revenue += prices.reserve[t] * s.alpha[t];
            r.inertia_revenue += prices.inertia[t] * s.u[t] * g.h_g * g.p_max;
            r.cost += dt * form.evaluate(s.p[t], s.alpha[t], s.u[t]);
        }
        resources.push(r.close());
    }
    for (e, s) in case.storage.iter().zip(&schedule.storage) {
        let form = crate::reformulation::expected_storage_cost_terms(e, mu);
        let mut r = ResourceSettlement::new(&e.name, ResourceClass::Storage);
        for t in 0..case.horizon {
            r.energy_revenue += prices.energy_at(&e.node, t) * (s.pd[t] - s.pc[t]);
            r.reserve_revenue += prices.reserve[t] * (s.alpha_d[t] - s.alpha_c[t]);
            r.inertia_revenue += prices.inertia[t] * s.h_e[t] * e.p_d_max;
            r.cost += dt * form.evaluate(s.pd[t], s.pc[t], s.alpha_d[t], s.alpha_c[t]);
        }
        resources.push(r.close());
    }
    let mut wind: Vec<ResourceSettlement> = case
        .wind
        .iter()
        .map(|w| ResourceSettlement::new(&w.name, ResourceClass::Wind))
        .collect();
    for t in 0..case.horizon {
        let offers = wind_inertia_offers(case, built, t)?;
        for ((r, w), h) in wind.iter_mut().zip(&case.wind).zip(offers) {
            r.inertia_revenue += prices.inertia[t] * h;
            if options.pay_wind_energy {
                r.energy_revenue += prices.energy_at(&w.node, t) * w.forecast[t];
            }
        }
    }
    resources.extend(wind.into_iter().map(ResourceSettlement::close));

    let mut report = SettlementReport {
        resources,
        generators: Totals::default(),
        storage: Totals::default(),
        wind: Totals::default(),
        system: Totals::default(),
        pay_wind_energy: options.pay_wind_energy,
    };
    for r in &report.resources {
        match r.class {
            ResourceClass::Generator => report.generators.add(r),
            ResourceClass::Storage => report.storage.add(r),
            ResourceClass::Wind => report.wind.add(r),
        }
        report.system.add(r);
    }
    Ok(report)
}

impl ResourceSettlement {
    fn new(name: &str, class: ResourceClass) -> Self {
        ResourceSettlement {
            name: name.to_string(),
            class,
            energy_revenue: 0.0,
            reserve_revenue: 0.0,
            inertia_revenue: 0.0,
            revenue: 0.0,
            cost: 0.0,
            profit: 0.0,
        }
    }

    fn close(mut self) -> Self {
        self.revenue = self.energy_revenue + self.reserve_revenue + self.inertia_revenue;
        self.profit = self.revenue - self.cost;
        self
    }
}
