//! System data model, case-file loading and validation.
//!
//! A case file is a single JSON document. Powers are in MW, energies in MWh,
//! costs in $ (per hour for rates), frequencies in Hz and inertia constants in
//! seconds. See `docs/case-format.md` for the full schema reference.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inertia;

pub type NodeId = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub node: NodeId,
    #[serde(rename = "H_g")]
    pub h_g: f64,
    #[serde(rename = "P_max")]
    pub p_max: f64,
    #[serde(rename = "P_min")]
    pub p_min: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub eps_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    pub name: String,
    pub node: NodeId,
    #[serde(rename = "H_e_max")]
    pub h_e_max: f64,
    #[serde(rename = "P_d_max")]
    pub p_d_max: f64,
    #[serde(rename = "P_c_max")]
    pub p_c_max: f64,
    #[serde(rename = "E_max")]
    pub e_max: f64,
    #[serde(rename = "E_min")]
    pub e_min: f64,
    #[serde(rename = "E_init")]
    pub e_init: f64,
    pub c_d: f64,
    pub c_c: f64,
    pub k: f64,
    pub eps_d: f64,
    pub eps_c: f64,
}

/// Physical turbine description used to derive the farm inertia constant.
///
/// `P_b_max` is stored in MW and converted to W before evaluating the
/// kinetic-energy formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineSpec {
    pub m: f64,
    pub r: f64,
    pub phi: f64,
    #[serde(rename = "P_b_max")]
    pub p_b_max: f64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarmSpec {
    pub name: String,
    pub node: NodeId,
    #[serde(rename = "P_w_max")]
    pub p_w_max: f64,
    pub forecast: Vec<f64>,
    #[serde(rename = "H_w_forecast")]
    pub h_w_forecast: Vec<f64>,
    pub eps_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turbine: Option<TurbineSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySpec {
    pub mu_p: f64,
    pub sigma_p: f64,
    pub mu_h: f64,
    pub sigma_h: f64,
}

/// Synchronous-machine control parameters of the frequency-nadir requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NadirParams {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "R_g")]
    pub r_g: f64,
    #[serde(rename = "F_g")]
    pub f_g: f64,
    pub varsigma: f64,
    pub t_nadir: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertiaSpec {
    pub f0: f64,
    pub rocof_max: f64,
    pub df_max: f64,
    #[serde(rename = "P_im_max_abs", default, skip_serializing_if = "Option::is_none")]
    pub p_im_max_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nadir_params: Option<NadirParams>,
    #[serde(rename = "H_min_override", default, skip_serializing_if = "Option::is_none")]
    pub h_min_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub lines: Vec<LineSpec>,
    pub ref_node: NodeId,
}

fn default_period_hours() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemCase {
    pub horizon: usize,
    #[serde(default = "default_period_hours")]
    pub period_hours: f64,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub storage: Vec<StorageSpec>,
    #[serde(default)]
    pub wind: Vec<WindFarmSpec>,
    pub load: BTreeMap<NodeId, Vec<f64>>,
    pub uncertainty: UncertaintySpec,
    pub inertia: InertiaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
}

impl SystemCase {
    /// Total installed capacity `Σ(P_g_max + P_d_max + P_w_max)`.
    pub fn p_sys(&self) -> f64 {
        let g: f64 = self.generators.iter().map(|g| g.p_max).sum();
        let d: f64 = self.storage.iter().map(|e| e.p_d_max).sum();
        let w: f64 = self.wind.iter().map(|w| w.p_w_max).sum();
        g + d + w
    }

    /// System demand at period `t`, summed over nodes.
    pub fn total_load(&self, t: usize) -> f64 {
        self.load.values().map(|series| series[t]).sum()
    }

    pub fn total_wind(&self, t: usize) -> f64 {
        self.wind.iter().map(|w| w.forecast[t]).sum()
    }

    pub fn node_load(&self, node: &str, t: usize) -> f64 {
        self.load.get(node).map_or(0.0, |series| series[t])
    }

    /// Every node referenced by a resource, a load or a line, sorted.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut set: BTreeSet<NodeId> = BTreeSet::new();
        set.extend(self.generators.iter().map(|g| g.node.clone()));
        set.extend(self.storage.iter().map(|e| e.node.clone()));
        set.extend(self.wind.iter().map(|w| w.node.clone()));
        set.extend(self.load.keys().cloned());
        if let Some(net) = &self.network {
            for line in &net.lines {
                set.insert(line.from.clone());
                set.insert(line.to.clone());
            }
            set.insert(net.ref_node.clone());
        }
        set.into_iter().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let case: SystemCase = serde_json::from_str(text)?;
        ensure_valid(&case)?;
        Ok(case)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }

    fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.field, self.message)
    }
}

/// Reads and validates a case file. Warnings are tolerated, errors are not.
pub fn load_case(path: impl AsRef<Path>) -> Result<SystemCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    SystemCase::from_json(&text)
}

fn ensure_valid(case: &SystemCase) -> Result<()> {
    match validate(case)
        .into_iter()
        .find(|d| d.severity == Severity::Error)
    {
        Some(d) => Err(Error::validation(d.field, d.message)),
        None => Ok(()),
    }
}

/// Checks every type invariant of the case; an empty list means the case is
/// clean.
pub fn validate(case: &SystemCase) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let t_len = case.horizon;
    if t_len == 0 {
        out.push(Diagnostic::error("horizon", "must be at least 1"));
    }
    if !(case.period_hours > 0.0) {
        out.push(Diagnostic::error("period_hours", "must be positive"));
    }

    let mut names = BTreeSet::new();
    let mut check_name = |out: &mut Vec<Diagnostic>, field: String, name: &str| {
        if !names.insert(name.to_string()) {
            out.push(Diagnostic::error(field, format!("duplicate resource name `{name}`")));
        }
    };

    for (i, g) in case.generators.iter().enumerate() {
        let f = |k: &str| format!("generators[{i}].{k}");
        check_name(&mut out, f("name"), &g.name);
        if g.p_min < 0.0 {
            out.push(Diagnostic::error(f("P_min"), format!("{}: must be non-negative", g.name)));
        }
        if g.p_max < g.p_min {
            out.push(Diagnostic::error(f("P_max"), format!("{}: P_max < P_min", g.name)));
        }
        if g.h_g < 0.0 {
            out.push(Diagnostic::error(f("H_g"), format!("{}: must be non-negative", g.name)));
        }
        if g.c2 < 0.0 {
            out.push(Diagnostic::error(f("c2"), format!("{}: quadratic cost must be non-negative", g.name)));
        }
        if !(g.eps_g > 0.0 && g.eps_g < 0.5) {
            out.push(Diagnostic::error(f("eps_g"), format!("{}: must lie in (0, 0.5)", g.name)));
        }
    }

    for (i, e) in case.storage.iter().enumerate() {
        let f = |k: &str| format!("storage[{i}].{k}");
        check_name(&mut out, f("name"), &e.name);
        if e.e_min > e.e_max {
            out.push(Diagnostic::error(f("E_min"), format!("{}: E_min exceeds E_max", e.name)));
        } else if e.e_init < e.e_min || e.e_init > e.e_max {
            out.push(Diagnostic::error(f("E_init"), format!("{}: E_init outside [E_min, E_max]", e.name)));
        }
        if e.p_d_max < 0.0 {
            out.push(Diagnostic::error(f("P_d_max"), format!("{}: must be non-negative", e.name)));
        }
        if e.p_c_max < 0.0 {
            out.push(Diagnostic::error(f("P_c_max"), format!("{}: must be non-negative", e.name)));
        }
        if !(e.k > 0.0 && e.k <= 1.0) {
            out.push(Diagnostic::error(f("k"), format!("{}: efficiency must lie in (0, 1]", e.name)));
        }
        if e.h_e_max < 0.0 {
            out.push(Diagnostic::error(f("H_e_max"), format!("{}: must be non-negative", e.name)));
        }
        for (key, eps) in [("eps_d", e.eps_d), ("eps_c", e.eps_c)] {
            if !(eps > 0.0 && eps < 1.0) {
                out.push(Diagnostic::error(f(key), format!("{}: must lie in (0, 1)", e.name)));
            }
        }
    }

    for (i, w) in case.wind.iter().enumerate() {
        let f = |k: &str| format!("wind[{i}].{k}");
        check_name(&mut out, f("name"), &w.name);
        if w.forecast.len() != t_len {
            out.push(Diagnostic::error(f("forecast"), format!("{}: expected {t_len} values", w.name)));
        } else if let Some(t) = w.forecast.iter().position(|&p| p < 0.0 || p > w.p_w_max) {
            out.push(Diagnostic::error(
                format!("wind[{i}].forecast[{t}]"),
                format!("{}: forecast outside [0, P_w_max]", w.name),
            ));
        }
        if w.h_w_forecast.len() != t_len {
            out.push(Diagnostic::error(f("H_w_forecast"), format!("{}: expected {t_len} values", w.name)));
        } else if w.h_w_forecast.iter().any(|&h| h < 0.0) {
            out.push(Diagnostic::error(f("H_w_forecast"), format!("{}: must be non-negative", w.name)));
        }
        if !(w.eps_w > 0.0 && w.eps_w < 1.0) {
            out.push(Diagnostic::error(f("eps_w"), format!("{}: must lie in (0, 1)", w.name)));
        }
        if let Some(tb) = &w.turbine {
            match inertia::farm_inertia_constant(tb) {
                Ok(h) => {
                    if let Some(t) = w.h_w_forecast.iter().position(|&v| (v - h).abs() > 1e-9) {
                        out.push(Diagnostic::error(
                            format!("wind[{i}].H_w_forecast[{t}]"),
                            format!("{}: turbine data gives H_w = {h} s", w.name),
                        ));
                    }
                }
                Err(err) => out.push(Diagnostic::error(f("turbine"), err.to_string())),
            }
        }
    }

    for (node, series) in &case.load {
        if series.len() != t_len {
            out.push(Diagnostic::error(format!("load.{node}"), format!("expected {t_len} values")));
        } else if series.iter().any(|&d| d < 0.0) {
            out.push(Diagnostic::error(format!("load.{node}"), "demand must be non-negative"));
        }
    }
    if case.load.is_empty() {
        out.push(Diagnostic::error("load", "at least one load node is required"));
    }

    let u = &case.uncertainty;
    if u.sigma_p < 0.0 {
        out.push(Diagnostic::error("uncertainty.sigma_p", "must be non-negative"));
    }
    if u.sigma_h < 0.0 {
        out.push(Diagnostic::error("uncertainty.sigma_h", "must be non-negative"));
    }

    let inr = &case.inertia;
    if !(inr.f0 > 0.0) {
        out.push(Diagnostic::error("inertia.f0", "must be positive"));
    }
    if !(inr.rocof_max > 0.0) {
        out.push(Diagnostic::error("inertia.rocof_max", "must be positive"));
    }
    if !(inr.df_max > 0.0) {
        out.push(Diagnostic::error("inertia.df_max", "must be positive"));
    }
    if inr.h_min_override.is_none() && inr.p_im_max_abs.is_none() {
        out.push(Diagnostic::error(
            "inertia.P_im_max_abs",
            "required when H_min_override is absent",
        ));
    }
    if let Some(h) = inr.h_min_override {
        if h < 0.0 {
            out.push(Diagnostic::error("inertia.H_min_override", "must be non-negative"));
        }
    }

    if let Some(net) = &case.network {
        validate_network(case, net, &mut out);
    }

    // Capacity adequacy only makes sense once the arrays are well formed.
    if !out.iter().any(|d| d.severity == Severity::Error) {
        let gen_cap: f64 = case.generators.iter().map(|g| g.p_max).sum();
        let es_cap: f64 = case.storage.iter().map(|e| e.p_d_max).sum();
        for t in 0..t_len {
            let net_load = case.total_load(t) - case.total_wind(t);
            if gen_cap + es_cap < net_load {
                out.push(Diagnostic::warning(
                    format!("load[{t}]"),
                    format!(
                        "net load {net_load:.3} MW exceeds dispatchable capacity {:.3} MW",
                        gen_cap + es_cap
                    ),
                ));
                break;
            }
        }
    }
    out
}

fn validate_network(case: &SystemCase, net: &NetworkSpec, out: &mut Vec<Diagnostic>) {
    for (i, line) in net.lines.iter().enumerate() {
        if !(line.b > 0.0) {
            out.push(Diagnostic::error(format!("network.lines[{i}].B"), "must be positive"));
        }
        if !(line.s > 0.0) {
            out.push(Diagnostic::error(format!("network.lines[{i}].S"), "must be positive"));
        }
        if line.from == line.to {
            out.push(Diagnostic::error(format!("network.lines[{i}]"), "line endpoints coincide"));
        }
    }

    let nodes = case.nodes();
    let mut adjacency: BTreeMap<&str, Vec<&str>> = nodes.iter().map(|n| (n.as_str(), vec![])).collect();
    for line in &net.lines {
        adjacency.entry(line.from.as_str()).or_default().push(line.to.as_str());
        adjacency.entry(line.to.as_str()).or_default().push(line.from.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([net.ref_node.as_str()]);
    seen.insert(net.ref_node.as_str());
    while let Some(n) = queue.pop_front() {
        for &m in adjacency.get(n).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    if let Some(orphan) = nodes.iter().find(|n| !seen.contains(n.as_str())) {
        out.push(Diagnostic::error(
            "network.lines",
            format!("node `{orphan}` is not connected to the reference node"),
        ));
    }

    let mut per_node: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for g in &case.generators {
        *per_node.entry(("generator", g.node.as_str())).or_default() += 1;
    }
    for e in &case.storage {
        *per_node.entry(("storage unit", e.node.as_str())).or_default() += 1;
    }
    for w in &case.wind {
        *per_node.entry(("wind farm", w.node.as_str())).or_default() += 1;
    }
    for ((kind, node), count) in per_node {
        if count > 1 {
            out.push(Diagnostic::warning(
                "network",
                format!("node `{node}` hosts {count} of kind {kind}; injections are aggregated"),
            ));
        }
    }
}

/// How storage participates in the inertia market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "H")]
pub enum EsInertia {
    Off,
    Fixed(f64),
    Optimized,
}

/// Capability switches of the six studied market cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketCaseConfig {
    pub case_id: u8,
    pub es_reserve: bool,
    pub es_inertia: EsInertia,
    pub wind_inertia: bool,
}

/// ES inertia constant used by the fixed-inertia market case.
pub const FIXED_ES_INERTIA: f64 = 8.0;

pub fn market_case_config(case_id: u8) -> Result<MarketCaseConfig> {
    let (es_reserve, es_inertia, wind_inertia) = match case_id {
        1 => (false, EsInertia::Off, false),
        2 => (true, EsInertia::Off, false),
        3 => (false, EsInertia::Fixed(FIXED_ES_INERTIA), false),
        4 => (false, EsInertia::Optimized, false),
        5 => (true, EsInertia::Optimized, false),
        6 => (true, EsInertia::Optimized, true),
        other => return Err(Error::MarketCaseOutOfRange(other)),
    };
    Ok(MarketCaseConfig {
        case_id,
        es_reserve,
        es_inertia,
        wind_inertia,
    })
}

const ILLUSTRATIVE: &str = include_str!("../cases/illustrative.json");
const THREE_NODE: &str = include_str!("../cases/three_node.json");

/// Four generators, two storage units and one wind farm over 24 hourly
/// periods, single bus.
pub fn builtin_illustrative_case() -> SystemCase {
    SystemCase::from_json(ILLUSTRATIVE).expect("built-in illustrative case is valid")
}

/// The illustrative resources (without G4) spread over a meshed three-node
/// network.
pub fn builtin_three_node_case() -> SystemCase {
    SystemCase::from_json(THREE_NODE).expect("built-in three-node case is valid")
}

/// Resolves the `--case` argument: `illustrative` and `three-node` name the
/// built-in cases, anything else is read as a path.
pub fn resolve_case(spec: &str) -> Result<SystemCase> {
    match spec {
        "illustrative" => Ok(builtin_illustrative_case()),
        "three-node" | "three_node" => Ok(builtin_three_node_case()),
        path => load_case(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illustrative_case_matches_tables() {
        let case = builtin_illustrative_case();
        assert_eq!(case.generators.len(), 4);
        assert_eq!(case.storage.len(), 2);
        assert_eq!(case.wind.len(), 1);
        assert_eq!(case.horizon, 24);
        assert!(case.network.is_none());

        let g1 = &case.generators[0];
        assert_eq!((g1.h_g, g1.p_max, g1.p_min), (6.0, 10.0, 1.0));
        assert_eq!((g1.c0, g1.c1, g1.c2), (10.0, 5.0, 0.001));
        let g4 = &case.generators[3];
        assert_eq!((g4.h_g, g4.c0, g4.c1, g4.c2), (10.0, 150.0, 30.0, 0.006));

        let es1 = &case.storage[0];
        assert_eq!((es1.h_e_max, es1.p_d_max, es1.p_c_max), (11.0, 10.0, 5.0));
        assert_eq!((es1.e_max, es1.e_min, es1.c_d, es1.c_c), (10.0, 0.5, 5.0, 10.0));
        assert_eq!(es1.e_init, 5.25);
        assert_eq!(es1.k, 0.9);
        let es2 = &case.storage[1];
        assert_eq!((es2.c_d, es2.c_c), (7.0, 12.0));

        let inr = &case.inertia;
        assert_eq!(inr.h_min_override, Some(3.5));
        assert_eq!((inr.rocof_max, inr.df_max, inr.f0), (0.5, 0.55, 50.0));
        let u = &case.uncertainty;
        assert_eq!((u.sigma_p, u.sigma_h, u.mu_p, u.mu_h), (1.0, 1.0, 0.5, 0.5));
        assert!(case.generators.iter().all(|g| g.eps_g == 0.05));
        assert!(case.storage.iter().all(|e| e.eps_d == 0.05 && e.eps_c == 0.05));

        assert_eq!(case.p_sys(), 80.0);
        assert_eq!(case.wind[0].p_w_max, 20.0);
        let peak = (0..24).map(|t| case.total_load(t)).fold(f64::MIN, f64::max);
        assert_eq!(peak, 28.14);
    }

    #[test]
    fn illustrative_case_is_clean() {
        assert!(validate(&builtin_illustrative_case()).is_empty());
        assert!(validate(&builtin_three_node_case()).is_empty());
    }

    #[test]
    fn storage_energy_bounds_are_checked() {
        let mut case = builtin_illustrative_case();
        case.storage[1].e_min = 12.0;
        let err = SystemCase::from_json(&case.to_json()).unwrap_err();
        match err {
            Error::Validation { field, message } => {
                assert_eq!(field, "storage[1].E_min");
                assert!(message.contains("ES2"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_sigma_is_one_error() {
        let mut case = builtin_illustrative_case();
        case.uncertainty.sigma_p = -1.0;
        let diags = validate(&case);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Error);
        assert_eq!(diags[0].field, "uncertainty.sigma_p");
    }

    #[test]
    fn undersized_fleet_warns() {
        let mut case = builtin_illustrative_case();
        case.storage.clear();
        case.wind.clear();
        for g in &mut case.generators {
            g.p_max = 5.0;
        }
        let diags = validate(&case);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
    }

    #[test]
    fn missing_network_means_single_bus() {
        let mut value: serde_json::Value = serde_json::from_str(ILLUSTRATIVE).unwrap();
        value.as_object_mut().unwrap().remove("network");
        value.as_object_mut().unwrap().remove("period_hours");
        let case = SystemCase::from_json(&value.to_string()).unwrap();
        assert!(case.network.is_none());
        assert_eq!(case.period_hours, 1.0);
    }

    #[test]
    fn imbalance_required_without_override() {
        let mut case = builtin_illustrative_case();
        case.inertia.h_min_override = None;
        case.inertia.p_im_max_abs = None;
        assert!(validate(&case)
            .iter()
            .any(|d| d.field == "inertia.P_im_max_abs" && d.severity == Severity::Error));
    }

    #[test]
    fn turbine_inertia_must_agree() {
        let mut case = builtin_illustrative_case();
        let tb = TurbineSpec {
            m: 3.6e5,
            r: 45.0,
            phi: 1.2,
            p_b_max: 2.0,
            count: 10,
        };
        case.wind[0].turbine = Some(tb);
        assert!(validate(&case).iter().any(|d| d.field.starts_with("wind[0].H_w_forecast")));
        case.wind[0].h_w_forecast = vec![29.16; 24];
        assert!(validate(&case).is_empty());
    }

    #[test]
    fn disconnected_node_is_rejected() {
        let mut case = builtin_three_node_case();
        case.network.as_mut().unwrap().lines.retain(|l| l.to != "3" && l.from != "3");
        assert!(validate(&case)
            .iter()
            .any(|d| d.field == "network.lines" && d.message.contains("`3`")));
    }

    #[test]
    fn market_cases_follow_overview_table() {
        let rows: Vec<_> = (1..=6).map(|id| market_case_config(id).unwrap()).collect();
        let shape: Vec<_> = rows.iter().map(|c| (c.es_reserve, c.es_inertia, c.wind_inertia)).collect();
        assert_eq!(
            shape,
            vec![
                (false, EsInertia::Off, false),
                (true, EsInertia::Off, false),
                (false, EsInertia::Fixed(8.0), false),
                (false, EsInertia::Optimized, false),
                (true, EsInertia::Optimized, false),
                (true, EsInertia::Optimized, true),
            ]
        );
        for (i, a) in rows.iter().enumerate() {
            for b in &rows[i + 1..] {
                assert_ne!((a.es_reserve, a.es_inertia, a.wind_inertia), (b.es_reserve, b.es_inertia, b.wind_inertia));
            }
        }
        assert!(matches!(market_case_config(0), Err(Error::MarketCaseOutOfRange(0))));
        assert!(matches!(market_case_config(7), Err(Error::MarketCaseOutOfRange(7))));
    }
}
