//! Convex QP solver: presolve, primal-dual interior point, postsolve.

pub mod ldl;

mod ipm;
mod presolve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::program::{QuadraticProgram, RowRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

impl QpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::Unbounded => "unbounded",
            QpStatus::MaxIter => "max-iter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub regularization: f64,
    /// Re-solve with a perturbed objective and flag rows whose dual moves.
    pub check_degeneracy: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-8,
            max_iterations: 200,
            regularization: 1e-10,
            check_degeneracy: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Qx + q + Aᵀy + Gᵀz‖∞`
    pub stationarity: f64,
    /// `max(‖Ax − b‖∞, ‖(Gx − h)₊‖∞)`
    pub primal_feasibility: f64,
    /// `‖(−z)₊‖∞`
    pub dual_feasibility: f64,
    /// `max |zᵢ·(Gx − h)ᵢ|`
    pub complementarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub mu: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub status: QpStatus,
    pub primal: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Rows whose dual is not uniquely determined.
    pub degenerate_rows: Vec<String>,
    /// Reason reported by presolve when it proves infeasibility.
    pub message: Option<String>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }

    pub fn dual(&self, program: &QuadraticProgram, label: &str) -> Result<f64> {
        Ok(match program.row(label)? {
            RowRef::Eq(i) => self.eq_duals[i],
            RowRef::Ineq(i) => self.ineq_duals[i],
        })
    }

    pub fn value(&self, program: &QuadraticProgram, name: &str) -> Result<f64> {
        Ok(self.primal[program.var(name)?])
    }

    /// Dual objective `−½xᵀQx − bᵀy − hᵀz + c`.
    pub fn dual_objective(&self, program: &QuadraticProgram) -> f64 {
        let qx = program.q_times(&self.primal);
        let quad: f64 = 0.5 * qx.iter().zip(&self.primal).map(|(a, b)| a * b).sum::<f64>();
        let by: f64 = program.eq_rows.iter().zip(&self.eq_duals).map(|(r, y)| r.rhs * y).sum();
        let hz: f64 = program.ineq_rows.iter().zip(&self.ineq_duals).map(|(r, z)| r.rhs * z).sum();
        program.constant - quad - by - hz
    }
}

/// Recomputes all KKT residuals from scratch.
pub fn kkt_residuals(program: &QuadraticProgram, x: &[f64], y: &[f64], z: &[f64]) -> Result<Residuals> {
    if x.len() != program.num_vars() || y.len() != program.eq_rows.len() || z.len() != program.ineq_rows.len() {
        return Err(Error::Dimension(format!(
            "point has ({}, {}, {}) entries, program needs ({}, {}, {})",
            x.len(),
            y.len(),
            z.len(),
            program.num_vars(),
            program.eq_rows.len(),
            program.ineq_rows.len()
        )));
    }
    let mut grad = program.gradient(x);
    let mut res = Residuals::default();
    for (row, &yi) in program.eq_rows.iter().zip(y) {
        for &(j, a) in &row.coeffs {
            grad[j] += a * yi;
        }
        res.primal_feasibility = res.primal_feasibility.max((row.activity(x) - row.rhs).abs());
    }
    for (row, &zi) in program.ineq_rows.iter().zip(z) {
        for &(j, a) in &row.coeffs {
            grad[j] += a * zi;
        }
        let slack = row.activity(x) - row.rhs;
        res.primal_feasibility = res.primal_feasibility.max(slack.max(0.0));
        res.dual_feasibility = res.dual_feasibility.max((-zi).max(0.0));
        res.complementarity = res.complementarity.max((zi * slack).abs());
    }
    res.stationarity = grad.iter().fold(0.0, |m, g| m.max(g.abs()));
    Ok(res)
}

pub fn solve_qp(program: &QuadraticProgram, settings: &SolverSettings) -> Result<QpSolution> {
    solve_qp_with_log(program, settings, &mut |_| {})
}

pub fn solve_qp_with_log(
    program: &QuadraticProgram,
    settings: &SolverSettings,
    log: &mut dyn FnMut(&IterationLog),
) -> Result<QpSolution> {
    if !program.binaries.is_empty() {
        return Err(Error::InvalidInput(format!(
            "program still has {} binary variables; fix or relax them first",
            program.binaries.len()
        )));
    }
    if !(settings.tolerance > 0.0) {
        return Err(Error::InvalidInput("solver tolerance must be positive".into()));
    }
    let mut sol = solve_inner(program, settings, log);
    if settings.check_degeneracy && sol.is_optimal() {
        flag_sensitive_duals(program, settings, &mut sol);
    }
    Ok(sol)
}

fn solve_inner(program: &QuadraticProgram, settings: &SolverSettings, log: &mut dyn FnMut(&IterationLog)) -> QpSolution {
    let n = program.num_vars();
    let pre = match presolve::presolve(program) {
        Ok(p) => p,
        Err(msg) => {
            return QpSolution {
                status: QpStatus::Infeasible,
                primal: vec![0.0; n],
                eq_duals: vec![0.0; program.eq_rows.len()],
                ineq_duals: vec![0.0; program.ineq_rows.len()],
                objective: f64::INFINITY,
                residuals: Residuals::default(),
                iterations: 0,
                degenerate_rows: vec![],
                message: Some(msg),
            };
        }
    };
    let r = ipm::solve(&pre.reduced, settings, log);
    let (x, y, z) = pre.postsolve(program, &r.x, &r.y, &r.z);
    let residuals = kkt_residuals(program, &x, &y, &z).expect("postsolve keeps dimensions");
    let objective = match r.status {
        QpStatus::Infeasible => f64::INFINITY,
        QpStatus::Unbounded => f64::NEG_INFINITY,
        _ => program.objective(&x),
    };
    let label = |r: &RowRef| match *r {
        RowRef::Eq(i) => program.eq_rows[i].label.clone(),
        RowRef::Ineq(i) => program.ineq_rows[i].label.clone(),
    };
    let mut degenerate_rows: Vec<String> = pre.degenerate.iter().map(label).collect();
    degenerate_rows.sort();
    degenerate_rows.dedup();
    QpSolution {
        status: r.status,
        primal: x,
        eq_duals: y,
        ineq_duals: z,
        objective,
        residuals,
        iterations: r.iterations,
        degenerate_rows,
        message: None,
    }
}

/// Perturbs the linear objective by a deterministic pattern of relative size
/// 1e-6 and flags rows whose dual moves by more than 1e-4 (relative).
fn flag_sensitive_duals(program: &QuadraticProgram, settings: &SolverSettings, sol: &mut QpSolution) {
    let mut perturbed = program.clone();
    for (j, c) in perturbed.linear.iter_mut().enumerate() {
        let pattern = ((j * 7919) % 13) as f64 / 13.0 - 0.5;
        *c += 1e-6 * pattern * c.abs().max(1.0);
    }
    let other = solve_inner(&perturbed, settings, &mut |_| {});
    if !other.is_optimal() {
        return;
    }
    let moved = |a: f64, b: f64| (a - b).abs() > 1e-4 * a.abs().max(1.0);
    for (i, row) in program.eq_rows.iter().enumerate() {
        if moved(sol.eq_duals[i], other.eq_duals[i]) {
            sol.degenerate_rows.push(row.label.clone());
        }
    }
    for (i, row) in program.ineq_rows.iter().enumerate() {
        if moved(sol.ineq_duals[i], other.ineq_duals[i]) {
            sol.degenerate_rows.push(row.label.clone());
        }
    }
    sol.degenerate_rows.sort();
    sol.degenerate_rows.dedup();
}
