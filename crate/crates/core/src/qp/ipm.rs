//! Mehrotra predictor-corrector interior-point method.
//!
//! Each Newton step solves the augmented quasi-definite system
//!
//! ```text
//! [ Q + δI   Aᵀ    Gᵀ        ] [dx]   [r1]
//! [ A       −δI    0         ] [dy] = [r2]
//! [ G        0    −S/Z − δI  ] [dz]   [r3]
//! ```
//!
//! followed by iterative refinement against the unregularized matrix.
//! Keeping `S/Z` on the diagonal instead of forming `GᵀZS⁻¹G` avoids the
//! huge scalings of nearly active rows close to the optimum.

use super::ldl::{self, Ldl, UpperCsc};
use super::presolve::Reduced;
use super::{IterationLog, QpStatus, SolverSettings};

pub(crate) struct IpmResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub status: QpStatus,
    pub iterations: usize,
}

struct Kkt {
    n: usize,
    me: usize,
    mat: UpperCsc,
    order_pos: Vec<usize>,
    q_pos: Vec<usize>,
    a_pos: Vec<Vec<(usize, f64)>>,
    g_pos: Vec<Vec<(usize, f64)>>,
    diag_pos: Vec<usize>,
    signs: Vec<f64>,
}

impl Kkt {
    fn new(p: &Reduced) -> Self {
        let n = p.n;
        let me = p.a.len();
        let mi = p.g.len();
        let dim = n + me + mi;
        let mut pattern: Vec<(usize, usize)> = Vec::new();
        for &(i, j, _) in &p.quad {
            pattern.push((i, j));
        }
        for (r, row) in p.a.iter().enumerate() {
            for &(j, _) in row {
                pattern.push((n + r, j));
            }
        }
        for (r, row) in p.g.iter().enumerate() {
            for &(j, _) in row {
                pattern.push((n + me + r, j));
            }
        }
        let order = ldl::fill_reducing_order(&UpperCsc::from_pattern(dim, pattern.iter().copied()));
        let mut pos = vec![0; dim];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mat = UpperCsc::from_pattern(dim, pattern.iter().map(|&(i, j)| (pos[i], pos[j])));
        let at = |i: usize, j: usize| mat.position(pos[i], pos[j]);

        let q_pos = p.quad.iter().map(|&(i, j, _)| at(i, j)).collect();
        let block = |rows: &[Vec<(usize, f64)>], base: usize| -> Vec<Vec<(usize, f64)>> {
            rows.iter()
                .enumerate()
                .map(|(r, row)| row.iter().map(|&(j, a)| (at(base + r, j), a)).collect())
                .collect()
        };
        let a_pos = block(&p.a, n);
        let g_pos = block(&p.g, n + me);
        let diag_pos = (0..dim).map(|i| at(i, i)).collect();
        let mut signs = vec![0.0; dim];
        for i in 0..dim {
            signs[pos[i]] = if i < n { 1.0 } else { -1.0 };
        }
        Kkt {
            n,
            me,
            mat,
            order_pos: pos,
            q_pos,
            a_pos,
            g_pos,
            diag_pos,
            signs,
        }
    }

    /// Fills the unregularized matrix with `−winv` in the inequality block.
    fn assemble(&mut self, p: &Reduced, winv: &[f64]) {
        let vals = &mut self.mat.vals;
        vals.iter_mut().for_each(|v| *v = 0.0);
        for (&(_, _, q), &pos) in p.quad.iter().zip(&self.q_pos) {
            vals[pos] += q;
        }
        for row in self.a_pos.iter().chain(&self.g_pos) {
            for &(pos, a) in row {
                vals[pos] += a;
            }
        }
        let base = self.n + self.me;
        for (r, &w) in winv.iter().enumerate() {
            vals[self.diag_pos[base + r]] -= w;
        }
    }

    fn permute(&self, v: &[f64], out: &mut [f64]) {
        for (i, &x) in v.iter().enumerate() {
            out[self.order_pos[i]] = x;
        }
    }

    fn unpermute(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[self.order_pos[i]];
        }
    }
}

struct Solver<'a> {
    p: &'a Reduced,
    kkt: Kkt,
    /// Regularized copy of the KKT matrix that gets factored.
    shifted: UpperCsc,
    factor: Ldl,
    b: Vec<f64>,
    x: Vec<f64>,
    r: Vec<f64>,
    trial: Vec<f64>,
    r_trial: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(p: &'a Reduced) -> Self {
        let kkt = Kkt::new(p);
        let dim = kkt.mat.dim();
        Solver {
            p,
            shifted: kkt.mat.clone(),
            factor: Ldl::analyze(&kkt.mat),
            kkt,
            b: vec![0.0; dim],
            x: vec![0.0; dim],
            r: vec![0.0; dim],
            trial: vec![0.0; dim],
            r_trial: vec![0.0; dim],
        }
    }

    fn factorize(&mut self, winv: &[f64], reg: f64) {
        self.kkt.assemble(self.p, winv);
        self.shifted.vals.copy_from_slice(&self.kkt.mat.vals);
        for (i, &pos) in self.kkt.diag_pos.iter().enumerate() {
            self.shifted.vals[pos] += if i < self.kkt.n { reg } else { -reg };
        }
        self.factor.factor(&self.shifted, &self.kkt.signs, 1e-13, 1e-7);
    }

    /// `r = b − K x` against the unregularized matrix; returns `‖r‖∞`.
    fn residual(mat: &UpperCsc, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
        mat.sym_matvec(x, r);
        let mut norm = 0.0f64;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
            norm = norm.max(ri.abs());
        }
        norm
    }

    /// Solves with iterative refinement; `rhs` and `out` are in natural order.
    fn solve(&mut self, rhs: &[f64], out: &mut [f64]) {
        self.kkt.permute(rhs, &mut self.b);
        self.x.copy_from_slice(&self.b);
        self.factor.solve(&mut self.x);
        let bnorm = inf_norm(&self.b).max(1.0);
        let mut rnorm = Self::residual(&self.kkt.mat, &self.b, &self.x, &mut self.r);
        // Refinement stops as soon as a correction fails to reduce the
        // residual, which happens when the unregularized matrix is singular.
        for _ in 0..1 {
            if rnorm <= 1e-12 * bnorm {
                break;
            }
            self.factor.solve(&mut self.r);
            for ((t, a), d) in self.trial.iter_mut().zip(&self.x).zip(&self.r) {
                *t = a + d;
            }
            let n_trial = Self::residual(&self.kkt.mat, &self.b, &self.trial, &mut self.r_trial);
            if !(n_trial < rnorm) {
                break;
            }
            std::mem::swap(&mut self.x, &mut self.trial);
            std::mem::swap(&mut self.r, &mut self.r_trial);
            rnorm = n_trial;
        }
        self.kkt.unpermute(&self.x, out);
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn row_times(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect()
}

fn rows_t_times(rows: &[Vec<(usize, f64)>], y: &[f64], out: &mut [f64]) {
    for (r, &yr) in rows.iter().zip(y) {
        if yr != 0.0 {
            for &(j, a) in r {
                out[j] += a * yr;
            }
        }
    }
}

fn q_times(p: &Reduced, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.n];
    for &(i, j, q) in &p.quad {
        out[i] += q * x[j];
        if i != j {
            out[j] += q * x[i];
        }
    }
    out
}

/// Largest step keeping `v + a·dv ≥ 0`, unbounded if nothing blocks.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for (&x, &d) in v.iter().zip(dv) {
        if d < 0.0 {
            a = a.min(-x / d);
        }
    }
    a
}

pub(crate) fn solve(p: &Reduced, settings: &SolverSettings, log: &mut dyn FnMut(&IterationLog)) -> IpmResult {
    let n = p.n;
    let me = p.a.len();
    let mi = p.g.len();
    let reg = settings.regularization;
    let tol = settings.tolerance;

    let mut solver = Solver::new(p);

    // Initial point from the least-squares system with unit scaling.
    solver.factorize(&vec![1.0; mi], reg);
    let mut rhs0 = vec![0.0; n + me + mi];
    for j in 0..n {
        rhs0[j] = -p.c[j];
    }
    rhs0[n..n + me].copy_from_slice(&p.b);
    rhs0[n + me..].copy_from_slice(&p.h);
    let mut sol = vec![0.0; n + me + mi];
    solver.solve(&rhs0, &mut sol);
    let mut x = sol[..n].to_vec();
    let mut y = sol[n..n + me].to_vec();
    let gx = row_times(&p.g, &x);
    let mut s: Vec<f64> = gx.iter().zip(&p.h).map(|(g, h)| h - g).collect();
    let mut z: Vec<f64> = s.iter().map(|v| -v).collect();
    let shift = |v: &mut Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        if mi > 0 && lo <= 1e-8 {
            let d = 1.0 - lo.min(0.0);
            v.iter_mut().for_each(|e| *e += d);
        }
    };
    shift(&mut s);
    shift(&mut z);

    let mut rhs = vec![0.0; n + me + mi];
    let mut aff = vec![0.0; n + me + mi];
    let mut ds_a = vec![0.0; mi];
    let mut ds = vec![0.0; mi];
    let mut status = QpStatus::MaxIter;
    let mut iterations = 0;
    for it in 0..=settings.max_iterations {
        iterations = it;
        // Residuals.
        let mut rd = q_times(p, &x);
        for j in 0..n {
            rd[j] += p.c[j];
        }
        rows_t_times(&p.a, &y, &mut rd);
        rows_t_times(&p.g, &z, &mut rd);
        let ax = row_times(&p.a, &x);
        let rp: Vec<f64> = ax.iter().zip(&p.b).map(|(a, b)| a - b).collect();
        let gx = row_times(&p.g, &x);
        let rg: Vec<f64> = (0..mi).map(|i| gx[i] + s[i] - p.h[i]).collect();
        let mu = if mi > 0 { dot(&s, &z) / mi as f64 } else { 0.0 };
        let comp = (0..mi).fold(0.0f64, |m, i| m.max((z[i] * (gx[i] - p.h[i])).abs()));
        let (nd, np) = (inf_norm(&rd), inf_norm(&rp).max(inf_norm(&rg)));
        log(&IterationLog {
            iteration: it,
            mu,
            primal_residual: np,
            dual_residual: nd,
            complementarity: comp,
        });
        if nd <= tol && np <= tol && comp <= tol && s.iter().zip(&z).all(|(a, b)| a * b <= tol) {
            status = QpStatus::Optimal;
            break;
        }
        if primal_infeasible(p, &y, &z) {
            status = QpStatus::Infeasible;
            break;
        }
        if dual_infeasible(p, &x) {
            status = QpStatus::Unbounded;
            break;
        }
        if it == settings.max_iterations {
            break;
        }

        let winv: Vec<f64> = (0..mi).map(|i| s[i] / z[i]).collect();
        solver.factorize(&winv, reg);

        // Z·ds + S·dz = −rsz and G·dx + ds = −rg give
        // G·dx − (S/Z)·dz = −rg + rsz/z.
        let mut newton = |solver: &mut Solver, rsz: &[f64], sol: &mut [f64], ds: &mut [f64]| {
            for j in 0..n {
                rhs[j] = -rd[j];
            }
            for r in 0..me {
                rhs[n + r] = -rp[r];
            }
            for i in 0..mi {
                rhs[n + me + i] = -rg[i] + rsz[i] / z[i];
            }
            solver.solve(&rhs, sol);
            let dz = &sol[n + me..];
            for i in 0..mi {
                ds[i] = -(rsz[i] + s[i] * dz[i]) / z[i];
            }
        };

        let rsz: Vec<f64> = (0..mi).map(|i| s[i] * z[i]).collect();
        newton(&mut solver, &rsz, &mut aff, &mut ds_a);
        let dz_a = &aff[n + me..];
        let a_aff = max_step(&s, &ds_a).min(max_step(&z, dz_a)).min(1.0);
        let mu_aff = if mi > 0 {
            (0..mi).map(|i| (s[i] + a_aff * ds_a[i]) * (z[i] + a_aff * dz_a[i])).sum::<f64>() / mi as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };
        let rsz: Vec<f64> = (0..mi).map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu).collect();
        newton(&mut solver, &rsz, &mut sol, &mut ds);
        let (dx, rest) = sol.split_at(n);
        let (dy, dz) = rest.split_at(me);
        let alpha = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for r in 0..me {
            y[r] += alpha * dy[r];
        }
        for i in 0..mi {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
    }
    IpmResult {
        x,
        y,
        z,
        status,
        iterations,
    }
}

/// Farkas certificate from the normalized dual iterate: `Aᵀy + Gᵀz ≈ 0`,
/// `z ≥ 0`, `bᵀy + hᵀz < 0`.
fn primal_infeasible(p: &Reduced, y: &[f64], z: &[f64]) -> bool {
    let scale = inf_norm(y).max(inf_norm(z));
    if scale < 1e6 {
        return false;
    }
    let yn: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let zn: Vec<f64> = z.iter().map(|v| v / scale).collect();
    let value = dot(&p.b, &yn) + dot(&p.h, &zn);
    if value >= -1e-6 {
        return false;
    }
    let mut r = vec![0.0; p.n];
    rows_t_times(&p.a, &yn, &mut r);
    rows_t_times(&p.g, &zn, &mut r);
    inf_norm(&r) <= 1e-6 * -value
}

/// Unbounded ray from the normalized primal iterate: `Qd ≈ 0`, `Ad ≈ 0`,
/// `Gd ≤ 0`, `cᵀd < 0`.
fn dual_infeasible(p: &Reduced, x: &[f64]) -> bool {
    let scale = inf_norm(x);
    if scale < 1e8 {
        return false;
    }
    let d: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let value = dot(&p.c, &d);
    if value >= -1e-6 {
        return false;
    }
    let lim = 1e-6 * -value;
    inf_norm(&q_times(p, &d)) <= lim
        && inf_norm(&row_times(&p.a, &d)) <= lim
        && row_times(&p.g, &d).iter().all(|&v| v <= lim)
}
