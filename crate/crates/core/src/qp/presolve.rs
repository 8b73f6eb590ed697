//! Fixed-variable elimination and dual recovery.
//!
//! Variables are fixed by singleton equality rows, by a singleton upper and
//! lower bound that meet, or by forcing rows whose minimum activity already
//! equals the right-hand side. Rows that lose all their free variables are
//! dropped after a feasibility check. Duals of eliminated rows are recovered
//! from stationarity in reverse elimination order.

use crate::program::{QuadraticProgram, RowRef};

pub(crate) struct Reduced {
    pub n: usize,
    pub quad: Vec<(usize, usize, f64)>,
    pub c: Vec<f64>,
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub g: Vec<Vec<(usize, f64)>>,
    pub h: Vec<f64>,
}

enum Elim {
    Eq { var: usize, row: usize },
    Pair { var: usize, upper: usize, lower: usize },
    Forcing { row: usize, vars: Vec<(usize, usize)> },
}

pub(crate) struct Presolved {
    pub reduced: Reduced,
    fixed: Vec<Option<f64>>,
    col_map: Vec<Option<usize>>,
    kept_eq: Vec<usize>,
    kept_ineq: Vec<usize>,
    log: Vec<Elim>,
    pub degenerate: Vec<RowRef>,
}

const FEAS_TOL: f64 = 1e-9;

fn tol(scale: f64) -> f64 {
    FEAS_TOL * scale.abs().max(1.0)
}

pub(crate) fn presolve(p: &QuadraticProgram) -> Result<Presolved, String> {
    let n = p.num_vars();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut lb = vec![f64::NEG_INFINITY; n];
    let mut ub = vec![f64::INFINITY; n];
    let mut lb_row: Vec<Option<usize>> = vec![None; n];
    let mut ub_row: Vec<Option<usize>> = vec![None; n];
    let mut eq_done = vec![false; p.eq_rows.len()];
    let mut ineq_done = vec![false; p.ineq_rows.len()];
    let mut log = Vec::new();
    let mut degenerate = Vec::new();

    let split = |coeffs: &[(usize, f64)], rhs: f64, fixed: &[Option<f64>]| {
        let mut free = Vec::new();
        let mut r = rhs;
        for &(j, a) in coeffs {
            match fixed[j] {
                Some(v) => r -= a * v,
                None if a != 0.0 => free.push((j, a)),
                None => {}
            }
        }
        (free, r)
    };

    loop {
        let mut changed = false;
        for (ri, row) in p.eq_rows.iter().enumerate() {
            if eq_done[ri] {
                continue;
            }
            let (free, r) = split(&row.coeffs, row.rhs, &fixed);
            match free.len() {
                0 => {
                    if r.abs() > tol(row.rhs) {
                        return Err(format!("row {} cannot hold (residual {r:e})", row.label));
                    }
                    eq_done[ri] = true;
                    degenerate.push(RowRef::Eq(ri));
                }
                1 => {
                    let (j, a) = free[0];
                    let v = r / a;
                    if v < lb[j] - tol(v) || v > ub[j] + tol(v) {
                        return Err(format!(
                            "row {} fixes {} at {v} outside [{}, {}]",
                            row.label,
                            p.var_name(j),
                            lb[j],
                            ub[j]
                        ));
                    }
                    fixed[j] = Some(v);
                    eq_done[ri] = true;
                    log.push(Elim::Eq { var: j, row: ri });
                    changed = true;
                }
                _ => {
                    let (lo, hi) = activity_range(&free, &lb, &ub);
                    if lo > r + tol(r) || hi < r - tol(r) {
                        return Err(format!("row {} is out of reach of the variable bounds", row.label));
                    }
                }
            }
        }
        for (ri, row) in p.ineq_rows.iter().enumerate() {
            if ineq_done[ri] {
                continue;
            }
            let (free, r) = split(&row.coeffs, row.rhs, &fixed);
            match free.len() {
                0 => {
                    if r < -tol(row.rhs) {
                        return Err(format!("row {} cannot hold (violation {:e})", row.label, -r));
                    }
                    ineq_done[ri] = true;
                    if r <= tol(row.rhs) {
                        degenerate.push(RowRef::Ineq(ri));
                    }
                }
                1 => {
                    let (j, a) = free[0];
                    let v = r / a;
                    if a > 0.0 && v < ub[j] {
                        ub[j] = v;
                        ub_row[j] = Some(ri);
                    } else if a < 0.0 && v > lb[j] {
                        lb[j] = v;
                        lb_row[j] = Some(ri);
                    }
                    if lb[j].is_finite() && ub[j] < lb[j] - tol(lb[j]) {
                        return Err(format!("bounds on {} cross: [{}, {}]", p.var_name(j), lb[j], ub[j]));
                    }
                    if lb[j].is_finite() && ub[j].is_finite() && ub[j] - lb[j] <= tol(lb[j]) {
                        let (upper, lower) = (ub_row[j].unwrap(), lb_row[j].unwrap());
                        fixed[j] = Some(if ub[j] >= lb[j] { lb[j] } else { 0.5 * (lb[j] + ub[j]) });
                        ineq_done[upper] = true;
                        ineq_done[lower] = true;
                        log.push(Elim::Pair { var: j, upper, lower });
                        changed = true;
                    }
                }
                _ => {
                    let (lo, _) = activity_range(&free, &lb, &ub);
                    if lo > r + tol(r) {
                        return Err(format!("row {} is out of reach of the variable bounds", row.label));
                    }
                    if lo >= r - tol(r) {
                        let mut vars = Vec::with_capacity(free.len());
                        for &(j, a) in &free {
                            let (v, src) = if a > 0.0 { (lb[j], lb_row[j]) } else { (ub[j], ub_row[j]) };
                            let src = src.expect("finite bound has a source row");
                            fixed[j] = Some(v);
                            ineq_done[src] = true;
                            vars.push((j, src));
                        }
                        ineq_done[ri] = true;
                        log.push(Elim::Forcing { row: ri, vars });
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    for e in &log {
        match e {
            Elim::Forcing { row, vars } => {
                degenerate.push(RowRef::Ineq(*row));
                degenerate.extend(vars.iter().map(|&(_, b)| RowRef::Ineq(b)));
            }
            Elim::Pair { .. } | Elim::Eq { .. } => {}
        }
    }

    let mut col_map = vec![None; n];
    let mut kept = 0;
    for j in 0..n {
        if fixed[j].is_none() {
            col_map[j] = Some(kept);
            kept += 1;
        }
    }
    let x_fixed: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();

    let mut c = vec![0.0; kept];
    for j in 0..n {
        if let Some(cj) = col_map[j] {
            c[cj] = p.linear[j];
        }
    }
    let mut quad = Vec::new();
    for &(i, j, q) in &p.quad {
        match (col_map[i], col_map[j]) {
            (Some(a), Some(b)) => quad.push((a.min(b), a.max(b), q)),
            (Some(a), None) => c[a] += q * x_fixed[j],
            (None, Some(b)) => c[b] += q * x_fixed[i],
            (None, None) => {}
        }
    }

    let reduce_rows = |rows: &[crate::program::Row], done: &[bool]| {
        let mut kept_idx = Vec::new();
        let mut mats = Vec::new();
        let mut rhs = Vec::new();
        for (ri, row) in rows.iter().enumerate() {
            if done[ri] {
                continue;
            }
            let mut r = row.rhs;
            let mut coeffs = Vec::new();
            for &(j, a) in &row.coeffs {
                match col_map[j] {
                    Some(cj) if a != 0.0 => coeffs.push((cj, a)),
                    Some(_) => {}
                    None => r -= a * x_fixed[j],
                }
            }
            kept_idx.push(ri);
            mats.push(coeffs);
            rhs.push(r);
        }
        (kept_idx, mats, rhs)
    };
    let (kept_eq, a, b) = reduce_rows(&p.eq_rows, &eq_done);
    let (kept_ineq, g, h) = reduce_rows(&p.ineq_rows, &ineq_done);

    Ok(Presolved {
        reduced: Reduced { n: kept, quad, c, a, b, g, h },
        fixed,
        col_map,
        kept_eq,
        kept_ineq,
        log,
        degenerate,
    })
}

fn activity_range(free: &[(usize, f64)], lb: &[f64], ub: &[f64]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for &(j, a) in free {
        if a > 0.0 {
            lo += a * lb[j];
            hi += a * ub[j];
        } else {
            lo += a * ub[j];
            hi += a * lb[j];
        }
    }
    (lo, hi)
}

impl Presolved {
    /// Expands a reduced primal-dual point back to the original program.
    pub fn postsolve(&self, p: &QuadraticProgram, x_r: &[f64], y_r: &[f64], z_r: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = p.num_vars();
        let mut x = vec![0.0; n];
        for j in 0..n {
            x[j] = match (self.fixed[j], self.col_map[j]) {
                (Some(v), _) => v,
                (None, Some(c)) => x_r[c],
                (None, None) => unreachable!(),
            };
        }
        let mut y = vec![0.0; p.eq_rows.len()];
        let mut z = vec![0.0; p.ineq_rows.len()];
        for (k, &ri) in self.kept_eq.iter().enumerate() {
            y[ri] = y_r[k];
        }
        for (k, &ri) in self.kept_ineq.iter().enumerate() {
            z[ri] = z_r[k];
        }
        if self.log.is_empty() {
            return (x, y, z);
        }

        let mut cols: Vec<Vec<(RowRef, f64)>> = vec![Vec::new(); n];
        for (ri, row) in p.eq_rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((RowRef::Eq(ri), a));
            }
        }
        for (ri, row) in p.ineq_rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((RowRef::Ineq(ri), a));
            }
        }
        let grad = p.gradient(&x);
        let residual = |j: usize, y: &[f64], z: &[f64]| -> f64 {
            let mut g = grad[j];
            for &(r, a) in &cols[j] {
                g += a * match r {
                    RowRef::Eq(i) => y[i],
                    RowRef::Ineq(i) => z[i],
                };
            }
            g
        };

        for e in self.log.iter().rev() {
            match e {
                Elim::Eq { var, row } => {
                    let a = coeff(&p.eq_rows[*row].coeffs, *var);
                    y[*row] = 0.0;
                    let g = residual(*var, &y, &z);
                    y[*row] = -g / a;
                }
                Elim::Pair { var, upper, lower } => {
                    z[*upper] = 0.0;
                    z[*lower] = 0.0;
                    let g = residual(*var, &y, &z);
                    if g <= 0.0 {
                        z[*upper] = -g / coeff(&p.ineq_rows[*upper].coeffs, *var);
                    } else {
                        z[*lower] = -g / coeff(&p.ineq_rows[*lower].coeffs, *var);
                    }
                }
                Elim::Forcing { row, vars } => {
                    z[*row] = 0.0;
                    for &(_, b) in vars {
                        z[b] = 0.0;
                    }
                    let gs: Vec<f64> = vars.iter().map(|&(j, _)| residual(j, &y, &z)).collect();
                    let mut zf: f64 = 0.0;
                    for (&(j, _), &g) in vars.iter().zip(&gs) {
                        zf = zf.max(-g / coeff(&p.ineq_rows[*row].coeffs, j));
                    }
                    z[*row] = zf;
                    for (&(j, b), &g) in vars.iter().zip(&gs) {
                        let af = coeff(&p.ineq_rows[*row].coeffs, j);
                        let cb = coeff(&p.ineq_rows[b].coeffs, j);
                        z[b] = (-(g + af * zf) / cb).max(0.0);
                    }
                }
            }
        }
        (x, y, z)
    }
}

fn coeff(coeffs: &[(usize, f64)], j: usize) -> f64 {
    coeffs.iter().filter(|&&(k, _)| k == j).map(|&(_, a)| a).sum()
}
