//! Competitive-equilibrium check of a cleared market.
//!
//! Variables are split into agents by the resource named in their label
//! (`P[G1,3]` belongs to `G1`, voltage angles to `network`). Rows that span
//! several agents are the market-clearing rows; their multipliers are
//! replaced by the prices under test. Every agent then faces its own
//! profit-maximization problem: minimize its cost minus price revenue subject
//! to its own rows, with the commitment fixed. The market outcome is an
//! equilibrium when the cleared quantities satisfy every agent's KKT system
//! and no agent can improve on them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::case::SystemCase;
use crate::error::{Error, Result};
use crate::pricing::{parse_label, resource_form_prices, PriceSeries};
use crate::program::QuadraticProgram;
use crate::qp::{kkt_residuals, solve_qp, QpSolution, Residuals, SolverSettings};
use crate::reformulation::BuiltProgram;

/// Agent owning the angle variables of a network run.
pub const NETWORK_AGENT: &str = "network";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub agent: String,
    /// KKT residuals of the cleared quantities in the agent's problem.
    pub residuals: Residuals,
    /// Agent objective (cost minus revenue) at the cleared quantities.
    pub objective: f64,
    /// Objective improvement available by deviating; infinite when the agent
    /// problem could not be solved.
    pub deviation_gain: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub tol: f64,
    pub agents: Vec<AgentReport>,
    pub max_residual: f64,
    pub max_deviation_gain: f64,
    /// Largest gap between a price and the closed form of a resource that
    /// provides the service.
    pub max_price_mismatch: f64,
    pub failing_agents: Vec<String>,
    pub diagnostics: Vec<String>,
    pub pass: bool,
}

fn agent_of(var: &str) -> Option<String> {
    let (tag, args) = parse_label(var)?;
    if tag == "theta" {
        return Some(NETWORK_AGENT.to_string());
    }
    (args.len() == 2).then(|| args[0].to_string())
}

/// Multiplier the price series implies for a market-clearing row, in the
/// sign convention of the program's Lagrangian.
fn coupling_dual(tag: &str, args: &[&str], prices: &PriceSeries) -> Option<f64> {
    let t = args.last()?.parse::<usize>().ok()?.checked_sub(1)?;
    match tag {
        "power-balance" => Some(-*prices.energy.first()?.get(t)?),
        "nodal-balance" => {
            let k = prices.nodes.iter().position(|n| n == args[0])?;
            Some(-*prices.energy[k].get(t)?)
        }
        "reserve-adequacy" => Some(-*prices.reserve.get(t)?),
        "inertia-req" => Some(*prices.inertia.get(t)?),
        _ => None,
    }
}

struct Agent {
    vars: Vec<usize>,
    eq_rows: Vec<usize>,
    ineq_rows: Vec<usize>,
}

/// Checks that the cleared quantities in `solution` and `prices` form a
/// competitive equilibrium at tolerance `tol`.
pub fn verify_equilibrium(
    case: &SystemCase,
    built: &BuiltProgram,
    program: &QuadraticProgram,
    solution: &QpSolution,
    prices: &PriceSeries,
    tol: f64,
) -> Result<EquilibriumReport> {
    if !solution.is_optimal() {
        return Err(Error::NotOptimal(solution.status.as_str().into()));
    }
    let n = program.num_vars();
    let mut diagnostics = Vec::new();
    let mut owner: Vec<Option<String>> = Vec::with_capacity(n);
    let mut agents: BTreeMap<String, Agent> = BTreeMap::new();
    for j in 0..n {
        let a = agent_of(program.var_name(j));
        match &a {
            Some(name) => agents
                .entry(name.clone())
                .or_insert_with(|| Agent {
                    vars: vec![],
                    eq_rows: vec![],
                    ineq_rows: vec![],
                })
                .vars
                .push(j),
            None => diagnostics.push(format!("variable `{}` has no owning agent", program.var_name(j))),
        }
        owner.push(a);
    }

    // Linear price terms each agent sees through the market-clearing rows.
    let mut price_terms = vec![0.0; n];
    let mut assign = |rows: &[crate::program::Row], duals: &[f64], is_eq: bool, agents: &mut BTreeMap<String, Agent>, diagnostics: &mut Vec<String>| {
        for (i, row) in rows.iter().enumerate() {
            let mut touched: Vec<&String> = row.coeffs.iter().filter_map(|&(j, _)| owner[j].as_ref()).collect();
            touched.sort();
            touched.dedup();
            let parsed = parse_label(&row.label);
            let coupling = parsed
                .as_ref()
                .and_then(|(tag, args)| coupling_dual(tag, args, prices))
                .or_else(|| {
                    (touched.len() > 1).then(|| {
                        diagnostics.push(format!("row `{}` spans several agents; priced at its own dual", row.label));
                        duals[i]
                    })
                });
            match coupling {
                Some(m) => {
                    for &(j, a) in &row.coeffs {
                        price_terms[j] += m * a;
                    }
                }
                None => {
                    if let Some(name) = touched.first() {
                        let agent = agents.get_mut(*name).expect("agent exists");
                        if is_eq {
                            agent.eq_rows.push(i);
                        } else {
                            agent.ineq_rows.push(i);
                        }
                    }
                }
            }
        }
    };
    assign(&program.eq_rows, &solution.eq_duals, true, &mut agents, &mut diagnostics);
    assign(&program.ineq_rows, &solution.ineq_duals, false, &mut agents, &mut diagnostics);

    let cross_terms = program
        .quad
        .iter()
        .filter(|&&(i, j, v)| v != 0.0 && owner[i] != owner[j])
        .count();
    if cross_terms > 0 {
        diagnostics.push(format!("{cross_terms} objective terms couple different agents and are split"));
    }

    let settings = SolverSettings::default();
    let mut reports = Vec::with_capacity(agents.len());
    for (name, agent) in &agents {
        let mut local = vec![usize::MAX; n];
        let mut sub = QuadraticProgram::new();
        for &j in &agent.vars {
            local[j] = sub.add_var(program.var_name(j));
            sub.add_linear(local[j], program.linear[j] + price_terms[j]);
        }
        for &(i, j, v) in &program.quad {
            if local[i] != usize::MAX && local[j] != usize::MAX {
                sub.add_quad(local[i], local[j], v);
            }
        }
        let restrict = |row: &crate::program::Row| -> Vec<(usize, f64)> {
            row.coeffs.iter().map(|&(j, a)| (local[j], a)).collect()
        };
        for &i in &agent.eq_rows {
            let row = &program.eq_rows[i];
            sub.add_eq(row.label.clone(), restrict(row), row.rhs);
        }
        for &i in &agent.ineq_rows {
            let row = &program.ineq_rows[i];
            sub.add_ineq(row.label.clone(), restrict(row), row.rhs);
        }
        let x: Vec<f64> = agent.vars.iter().map(|&j| solution.primal[j]).collect();
        let y: Vec<f64> = agent.eq_rows.iter().map(|&i| solution.eq_duals[i]).collect();
        let z: Vec<f64> = agent.ineq_rows.iter().map(|&i| solution.ineq_duals[i]).collect();
        let residuals = kkt_residuals(&sub, &x, &y, &z)?;
        let objective = sub.objective(&x);
        let best = solve_qp(&sub, &settings)?;
        let deviation_gain = if best.is_optimal() {
            (objective - best.objective).max(0.0)
        } else {
            diagnostics.push(format!("{name}: profit-maximization problem is {}", best.status.as_str()));
            f64::INFINITY
        };
        let pass = residuals.max() <= tol && deviation_gain <= tol * objective.abs().max(1.0);
        reports.push(AgentReport {
            agent: name.clone(),
            residuals,
            objective,
            deviation_gain,
            pass,
        });
    }

    let forms = resource_form_prices(case, built, program, solution, prices)?;
    diagnostics.extend(forms.diagnostics.iter().cloned());
    let max_price_mismatch = forms.max_active_mismatch();
    let max_residual = reports.iter().fold(0.0, |m: f64, r| m.max(r.residuals.max()));
    let max_deviation_gain = reports.iter().fold(0.0, |m: f64, r| m.max(r.deviation_gain));
    let failing_agents: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| r.agent.clone()).collect();
    let pass = failing_agents.is_empty() && max_price_mismatch <= tol;
    Ok(EquilibriumReport {
        tol,
        agents: reports,
        max_residual,
        max_deviation_gain,
        max_price_mismatch,
        failing_agents,
        diagnostics,
        pass,
    })
}
