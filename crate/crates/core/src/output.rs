//! Tabular and JSON artifacts of clearings, sweeps and Monte Carlo runs.
//!
//! Numbers in tables are printed with nine significant digits in the style
//! of C's `%.9g`; JSON documents use serde's shortest round-trip floats.
//! Output is a pure function of the inputs, so identical runs produce
//! identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::case::SystemCase;
use crate::clearing::ClearingResult;
use crate::error::{Error, Result};
use crate::pricing::SYSTEM_NODE;
use crate::stochastic::{CostReport, ViolationReport};

/// Formats `x` like `printf("%.9g", x)`.
pub fn fmt_g9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

struct Table {
    text: String,
}

impl Table {
    fn new(header: &[String]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn h(s: &str) -> String {
    s.to_string()
}

/// On/off state of every generator, one row per period.
pub fn commitment_csv(case: &SystemCase, result: &ClearingResult) -> String {
    let mut header = vec![h("period")];
    header.extend(case.generators.iter().map(|g| format!("u_{} [on/off]", g.name)));
    let mut t = Table::new(&header);
    for p in 0..case.horizon {
        let mut row = vec![(p + 1).to_string()];
        row.extend(result.schedule.generators.iter().map(|g| fmt_g9(g.u[p].round())));
        t.row(&row);
    }
    t.text
}

/// Scheduled quantities, one row per resource and period.
pub fn dispatch_csv(case: &SystemCase, result: &ClearingResult) -> String {
    let header: Vec<String> = [
        "period",
        "resource",
        "node",
        "P [MW]",
        "alpha [-]",
        "Pd [MW]",
        "Pc [MW]",
        "alpha_d [-]",
        "alpha_c [-]",
        "H_e [s]",
        "e [MWh]",
        "wind [MW]",
    ]
    .iter()
    .map(|s| h(s))
    .collect();
    let mut t = Table::new(&header);
    let blank = String::new;
    for p in 0..case.horizon {
        for (g, s) in case.generators.iter().zip(&result.schedule.generators) {
            t.row(&[
                (p + 1).to_string(),
                g.name.clone(),
                g.node.clone(),
                fmt_g9(s.p[p]),
                fmt_g9(s.alpha[p]),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
            ]);
        }
        for (e, s) in case.storage.iter().zip(&result.schedule.storage) {
            t.row(&[
                (p + 1).to_string(),
                e.name.clone(),
                e.node.clone(),
                blank(),
                blank(),
                fmt_g9(s.pd[p]),
                fmt_g9(s.pc[p]),
                fmt_g9(s.alpha_d[p]),
                fmt_g9(s.alpha_c[p]),
                fmt_g9(s.h_e[p]),
                fmt_g9(s.energy[p]),
                blank(),
            ]);
        }
        for w in &case.wind {
            let mut row = vec![(p + 1).to_string(), w.name.clone(), w.node.clone()];
            row.extend(std::iter::repeat_with(blank).take(8));
            row.push(fmt_g9(w.forecast[p]));
            t.row(&row);
        }
    }
    t.text
}

/// Energy, reserve and inertia prices, one row per period.
pub fn prices_csv(result: &ClearingResult) -> String {
    let prices = &result.prices;
    let mut header = vec![h("period")];
    for n in &prices.nodes {
        if n == SYSTEM_NODE {
            header.push(h("lambda [$/MWh]"));
        } else {
            header.push(format!("lambda_{n} [$/MWh]"));
        }
    }
    header.extend([h("gamma [$/unit]"), h("chi [$/MWs]"), h("inertia_slack [MWs]")]);
    let mut t = Table::new(&header);
    for p in 0..prices.horizon() {
        let mut row = vec![(p + 1).to_string()];
        row.extend(prices.energy.iter().map(|l| fmt_g9(l[p])));
        row.push(fmt_g9(prices.reserve[p]));
        row.push(fmt_g9(prices.inertia[p]));
        row.push(fmt_g9(prices.inertia_slack[p]));
        t.row(&row);
    }
    t.text
}

/// Commitment prices `κ`, one row per period.
pub fn commitment_prices_csv(result: &ClearingResult) -> String {
    let prices = &result.prices;
    let mut header = vec![h("period")];
    header.extend(prices.commitment_units.iter().map(|u| format!("kappa_{u} [$]")));
    let mut t = Table::new(&header);
    for p in 0..prices.horizon() {
        let mut row = vec![(p + 1).to_string()];
        row.extend(prices.commitment.iter().map(|k| fmt_g9(k[p])));
        t.row(&row);
    }
    t.text
}

/// Closed-form resource prices next to the system prices.
pub fn resource_prices_csv(result: &ClearingResult) -> String {
    let header: Vec<String> = ["resource", "leg", "service", "period", "form", "system", "active"]
        .iter()
        .map(|s| h(s))
        .collect();
    let mut t = Table::new(&header);
    for e in &result.forms.entries {
        t.row(&[
            e.resource.clone(),
            e.leg.as_str().into(),
            e.service.as_str().into(),
            (e.period + 1).to_string(),
            fmt_g9(e.form),
            fmt_g9(e.system),
            e.active.to_string(),
        ]);
    }
    t.text
}

/// Writes the tables and reports of one clearing into `dir`.
pub fn write_clearing(dir: &Path, case: &SystemCase, result: &ClearingResult) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("commitment.csv"), &commitment_csv(case, result))?;
    write_file(&dir.join("dispatch.csv"), &dispatch_csv(case, result))?;
    write_file(&dir.join("prices.csv"), &prices_csv(result))?;
    write_file(&dir.join("commitment_prices.csv"), &commitment_prices_csv(result))?;
    write_file(&dir.join("resource_prices.csv"), &resource_prices_csv(result))?;
    write_json(&dir.join("settlement.json"), &result.settlement)?;
    write_json(&dir.join("equilibrium.json"), &result.equilibrium)?;
    Ok(())
}

/// Case-sweep summary: one row per metric, one column per market case.
pub fn summary_csv(results: &[ClearingResult]) -> String {
    let mut header = vec![h("metric [$]")];
    header.extend(results.iter().map(|r| format!("case {}", r.case_id)));
    let mut t = Table::new(&header);
    let mut line = |name: &str, f: &dyn Fn(&ClearingResult) -> f64| {
        let mut row = vec![h(name)];
        row.extend(results.iter().map(|r| fmt_g9(f(r))));
        t.row(&row);
    };
    line("total cost", &|r| r.total_cost());
    line("generator revenue", &|r| r.settlement.generators.revenue);
    line("generator cost", &|r| r.settlement.generators.cost);
    line("generator profit", &|r| r.settlement.generators.profit);
    line("storage revenue", &|r| r.settlement.storage.revenue);
    line("storage cost", &|r| r.settlement.storage.cost);
    line("storage profit", &|r| r.settlement.storage.profit);
    line("wind revenue", &|r| r.settlement.wind.revenue);
    line("wind profit", &|r| r.settlement.wind.profit);
    line("energy payments", &|r| r.settlement.system.energy_revenue);
    line("reserve payments", &|r| r.settlement.system.reserve_revenue);
    line("inertia payments", &|r| r.settlement.system.inertia_revenue);
    t.text
}

/// Price series of every swept case in long form.
pub fn price_series_csv(results: &[ClearingResult]) -> String {
    let header: Vec<String> = ["case", "node", "period", "lambda [$/MWh]", "gamma [$/unit]", "chi [$/MWs]"]
        .iter()
        .map(|s| h(s))
        .collect();
    let mut t = Table::new(&header);
    for r in results {
        let p = &r.prices;
        for (node, energy) in p.nodes.iter().zip(&p.energy) {
            for k in 0..p.horizon() {
                t.row(&[
                    r.case_id.to_string(),
                    node.clone(),
                    (k + 1).to_string(),
                    fmt_g9(energy[k]),
                    fmt_g9(p.reserve[k]),
                    fmt_g9(p.inertia[k]),
                ]);
            }
        }
    }
    t.text
}

pub fn violations_csv(report: &ViolationReport) -> String {
    let header: Vec<String> = [
        "family",
        "constraints",
        "worst",
        "frequency",
        "eps",
        "radius",
        "limit",
        "exempt",
        "pass",
    ]
    .iter()
    .map(|s| h(s))
    .collect();
    let mut t = Table::new(&header);
    for f in &report.families {
        t.row(&[
            f.family.as_str().into(),
            f.constraints.to_string(),
            // The label holds a comma; quote it.
            format!("\"{}\"", f.worst),
            fmt_g9(f.frequency),
            fmt_g9(f.eps),
            fmt_g9(f.radius),
            fmt_g9(f.limit),
            f.exempt.to_string(),
            f.pass.to_string(),
        ]);
    }
    t.text
}

pub fn empirical_cost_csv(report: &CostReport, analytic: f64) -> String {
    let mut s = String::from("samples,mean [$],std_error [$],analytic [$],z\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{}",
        report.n,
        fmt_g9(report.mean),
        fmt_g9(report.std_error),
        fmt_g9(analytic),
        fmt_g9(report.z_score(analytic))
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (5.01, "5.01"),
            (1.0 / 3.0, "0.333333333"),
            (-2.5, "-2.5"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (9881.05504, "9881.05504"),
            (0.9999999999, "1"),
            (2.733135688723949e-13, "2.73313569e-13"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g9(x), want, "{x}");
        }
    }

    #[test]
    fn g9_rounding_carries_into_exponent() {
        assert_eq!(fmt_g9(999999999.5), "1e+09");
        assert_eq!(fmt_g9(f64::INFINITY), "inf");
    }
}
