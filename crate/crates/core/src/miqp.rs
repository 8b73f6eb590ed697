//! Branch-and-bound over the commitment binaries, plus an exhaustive
//! enumeration oracle for small programs.
//!
//! The search is best-first on the relaxation bound. Nodes are taken from the
//! queue in batches of fixed size and solved independently, so the explored
//! tree does not depend on how many threads evaluate a batch. Branching
//! picks the fractional binary with the largest pseudocost product score.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::program::QuadraticProgram;
use crate::qp::{solve_qp, QpSolution, SolverSettings};

/// Hard cap on the number of binaries `exhaustive_solve` accepts.
pub const EXHAUSTIVE_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiqpStatus {
    Optimal,
    NodeLimit,
    TimeLimit,
}

impl MiqpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MiqpStatus::Optimal => "optimal",
            MiqpStatus::NodeLimit => "node-limit",
            MiqpStatus::TimeLimit => "time-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiqpSettings {
    /// Relative gap `(incumbent − bound)/max(|incumbent|, 1)` at which the
    /// search stops.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    /// Wall-clock limit. Off by default because it makes results depend on
    /// machine speed.
    pub time_limit: Option<Duration>,
    pub qp: SolverSettings,
    pub threads: usize,
    /// Nodes evaluated per round. Part of the search definition, not a
    /// performance knob: changing it may change the explored tree.
    pub batch_size: usize,
    pub integrality_tol: f64,
    /// Run the diving and local-search heuristics at the root.
    pub heuristics: bool,
}

impl Default for MiqpSettings {
    fn default() -> Self {
        MiqpSettings {
            gap_tol: 1e-6,
            node_limit: Some(2000),
            time_limit: None,
            qp: SolverSettings::default(),
            threads: 1,
            batch_size: 4,
            integrality_tol: 1e-6,
            heuristics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiqpSolution {
    pub status: MiqpStatus,
    /// One entry per binary, in the program's binary order.
    pub commitment: Vec<u8>,
    /// Solution of the program with the commitment fixed by
    /// `commitment-fix` rows.
    pub relaxed_solution: QpSolution,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLog {
    pub node: usize,
    pub bound: f64,
    pub incumbent: f64,
    pub gap: f64,
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Evaluates a full commitment with `commitment-fix` rows.
pub fn evaluate_commitment(program: &QuadraticProgram, commitment: &[u8], qp: &SolverSettings) -> Result<QpSolution> {
    let u: Vec<f64> = commitment.iter().map(|&v| v as f64).collect();
    solve_qp(&program.fix_commitment(&u)?, qp)
}

/// Relaxation with some binaries fixed: `Some(v)` pins the binary at `v`,
/// `None` relaxes it to `[0, 1]`.
fn node_program(base: &QuadraticProgram, fixing: &[Option<u8>]) -> QuadraticProgram {
    let mut p = base.clone();
    p.binaries.clear();
    for (&j, f) in base.binaries.iter().zip(fixing) {
        let suffix = {
            let name = base.var_name(j);
            name.strip_prefix('u').unwrap_or(name).to_string()
        };
        match f {
            Some(v) => {
                p.add_eq(format!("branch-fix{suffix}"), vec![(j, 1.0)], *v as f64);
            }
            None => {
                p.add_ineq(format!("relax-upper{suffix}"), vec![(j, 1.0)], 1.0);
                p.add_ineq(format!("relax-lower{suffix}"), vec![(j, -1.0)], 0.0);
            }
        }
    }
    p
}

struct Node {
    bound: f64,
    id: usize,
    fixing: Vec<Option<u8>>,
    /// Binary, direction and distance moved by the branch that created the
    /// node, used to update pseudocosts once it is solved.
    branch: Option<(usize, u8, f64)>,
}

/// Average objective increase per unit change of each binary, by direction.
struct Pseudocosts {
    sum: [Vec<f64>; 2],
    count: [Vec<u32>; 2],
}

impl Pseudocosts {
    fn new(nb: usize) -> Self {
        Pseudocosts {
            sum: [vec![0.0; nb], vec![0.0; nb]],
            count: [vec![0; nb], vec![0; nb]],
        }
    }

    fn record(&mut self, k: usize, dir: u8, distance: f64, gain: f64) {
        if distance > 0.0 && gain.is_finite() {
            self.sum[dir as usize][k] += gain.max(0.0) / distance;
            self.count[dir as usize][k] += 1;
        }
    }

    /// Estimate for binary `k`; unobserved binaries get the mean of the
    /// observed ones.
    fn estimate(&self, k: usize, dir: u8) -> f64 {
        let d = dir as usize;
        if self.count[d][k] > 0 {
            return self.sum[d][k] / self.count[d][k] as f64;
        }
        let n: u32 = self.count[d].iter().sum();
        if n == 0 {
            1.0
        } else {
            self.sum[d].iter().sum::<f64>() / n as f64
        }
    }

    /// Product score of branching on `k` at value `v`.
    fn score(&self, k: usize, v: f64) -> f64 {
        let down = self.estimate(k, 0) * v;
        let up = self.estimate(k, 1) * (1.0 - v);
        down.max(1e-6) * up.max(1e-6)
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest node,
    // compares greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    commitment: Vec<u8>,
    solution: QpSolution,
}

struct Search<'a> {
    program: &'a QuadraticProgram,
    settings: &'a MiqpSettings,
    incumbent: Option<Incumbent>,
    evaluations: usize,
}

impl<'a> Search<'a> {
    fn incumbent_value(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.solution.objective)
    }

    /// Offers a candidate; returns whether it became the incumbent.
    fn offer(&mut self, commitment: Vec<u8>, solution: QpSolution) -> bool {
        if !solution.is_optimal() || !(solution.objective < self.incumbent_value()) {
            return false;
        }
        self.incumbent = Some(Incumbent { commitment, solution });
        true
    }

    fn evaluate_many(&mut self, candidates: Vec<Vec<u8>>) -> Vec<Option<QpSolution>> {
        self.evaluations += candidates.len();
        let (program, qp) = (self.program, &self.settings.qp);
        parallel::map(self.settings.threads, &candidates, |c| evaluate_commitment(program, c, qp).ok())
    }

    fn try_candidates(&mut self, candidates: Vec<Vec<u8>>) {
        let sols = self.evaluate_many(candidates.clone());
        for (c, s) in candidates.into_iter().zip(sols) {
            if let Some(s) = s {
                self.offer(c, s);
            }
        }
    }

    /// First-improvement 1-flip descent from the incumbent. Flips are
    /// evaluated in batches; the first improving flip of a batch in index
    /// order is accepted.
    fn local_search(&mut self, max_evaluations: usize) {
        let nb = self.program.binaries.len();
        let batch = self.settings.batch_size.max(1);
        let mut budget = max_evaluations;
        let mut start = 0;
        let mut since_improvement = 0;
        while budget > 0 && since_improvement < nb {
            let Some(inc) = &self.incumbent else { return };
            let base = inc.commitment.clone();
            let count = batch.min(budget).min(nb);
            let flips: Vec<usize> = (0..count).map(|k| (start + k) % nb).collect();
            let candidates: Vec<Vec<u8>> = flips
                .iter()
                .map(|&k| {
                    let mut c = base.clone();
                    c[k] ^= 1;
                    c
                })
                .collect();
            budget -= count;
            let sols = self.evaluate_many(candidates.clone());
            let mut accepted = None;
            for (pos, (c, s)) in candidates.into_iter().zip(sols).enumerate() {
                if let Some(s) = s {
                    if self.offer(c, s) {
                        accepted = Some(pos);
                        break;
                    }
                }
            }
            match accepted {
                Some(pos) => {
                    start = (flips[pos] + 1) % nb;
                    since_improvement = 0;
                }
                None => {
                    start = (start + count) % nb;
                    since_improvement += count;
                }
            }
        }
    }

    /// Dives from a relaxation: fixes every near-integral binary to its
    /// rounded value and the most fractional one upwards, and repeats.
    fn dive(&mut self, root_u: &[f64]) {
        let nb = root_u.len();
        let mut fixing: Vec<Option<u8>> = vec![None; nb];
        let mut u = root_u.to_vec();
        for _ in 0..nb {
            let mut frac_best: Option<(usize, f64)> = None;
            for k in 0..nb {
                if fixing[k].is_some() {
                    continue;
                }
                let d = (u[k] - u[k].round()).abs();
                if d <= 0.1 {
                    fixing[k] = Some(u[k].round() as u8);
                } else if frac_best.map_or(true, |(_, b)| d > b + 1e-12) {
                    frac_best = Some((k, d));
                }
            }
            match frac_best {
                None => break,
                Some((k, _)) => fixing[k] = Some(1),
            }
            if fixing.iter().all(Option::is_some) {
                break;
            }
            self.evaluations += 1;
            let p = node_program(self.program, &fixing);
            match solve_qp(&p, &self.settings.qp) {
                Ok(s) if s.is_optimal() => {
                    u = self.program.binaries.iter().map(|&j| s.primal[j]).collect();
                }
                _ => return,
            }
        }
        let commitment: Vec<u8> = fixing
            .iter()
            .zip(&u)
            .map(|(f, &v)| f.unwrap_or(if v > 0.5 { 1 } else { 0 }))
            .collect();
        self.try_candidates(vec![commitment]);
    }
}

fn binary_values(program: &QuadraticProgram, sol: &QpSolution) -> Vec<f64> {
    program.binaries.iter().map(|&j| sol.primal[j]).collect()
}

pub fn solve_miqp(program: &QuadraticProgram, settings: &MiqpSettings) -> Result<MiqpSolution> {
    solve_miqp_seeded(program, settings, &[], &mut |_| {})
}

/// Branch-and-bound with optional seed commitments tried before the search
/// and a search-log callback invoked after every batch.
pub fn solve_miqp_seeded(
    program: &QuadraticProgram,
    settings: &MiqpSettings,
    seeds: &[Vec<u8>],
    log: &mut dyn FnMut(&SearchLog),
) -> Result<MiqpSolution> {
    if !(settings.gap_tol >= 0.0) {
        return Err(Error::InvalidInput("gap tolerance must be non-negative".into()));
    }
    let nb = program.binaries.len();
    for s in seeds {
        if s.len() != nb {
            return Err(Error::Dimension(format!("seed has {} entries, program has {nb} binaries", s.len())));
        }
    }
    let started = Instant::now();
    let itol = settings.integrality_tol;
    let mut search = Search {
        program,
        settings,
        incumbent: None,
        evaluations: 0,
    };
    search.try_candidates(seeds.to_vec());

    let root = solve_qp(&node_program(program, &vec![None; nb]), &settings.qp)?;
    if !root.is_optimal() {
        if let Some(inc) = search.incumbent {
            // The relaxation failed numerically but a seed is feasible.
            return Ok(finish(inc, MiqpStatus::NodeLimit, f64::NEG_INFINITY, 1));
        }
        return Err(Error::Infeasible(format!(
            "root relaxation is {}",
            root.status.as_str()
        )));
    }
    let root_u = binary_values(program, &root);
    let root_bound = root.objective;
    if settings.heuristics && nb > 0 {
        let ceil: Vec<u8> = root_u.iter().map(|&v| (v > itol) as u8).collect();
        let round: Vec<u8> = root_u.iter().map(|&v| (v >= 0.5) as u8).collect();
        let mut cands = vec![ceil];
        if cands[0] != round {
            cands.push(round);
        }
        search.try_candidates(cands);
        search.dive(&root_u);
        search.local_search(8 * nb);
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    heap.push(Node {
        bound: root_bound,
        id: next_id,
        fixing: vec![None; nb],
        branch: None,
    });
    let mut pseudo = Pseudocosts::new(nb);
    next_id += 1;
    // The root itself is re-evaluated as the first node so that the search
    // loop owns all branching decisions.
    let mut cached_root = Some(root);
    let mut nodes = 0;
    let mut status = MiqpStatus::Optimal;
    let mut best_bound;

    loop {
        let inc = search.incumbent_value();
        best_bound = heap.peek().map_or(inc, |n| n.bound.min(inc));
        if heap.is_empty() || (inc.is_finite() && relative_gap(inc, best_bound) <= settings.gap_tol) {
            break;
        }
        if settings.node_limit.is_some_and(|l| nodes >= l) {
            status = MiqpStatus::NodeLimit;
            break;
        }
        if settings.time_limit.is_some_and(|l| started.elapsed() >= l) {
            status = MiqpStatus::TimeLimit;
            break;
        }
        let mut batch = Vec::new();
        while batch.len() < settings.batch_size.max(1) {
            match heap.peek() {
                Some(n) if !(inc.is_finite() && relative_gap(inc, n.bound) <= settings.gap_tol) => {
                    batch.push(heap.pop().expect("peeked"));
                }
                _ => break,
            }
        }

        let results: Vec<Option<QpSolution>> = if let Some(r) = cached_root.take() {
            let mut out = vec![Some(r)];
            let rest = parallel::map(settings.threads, &batch[1..], |n| {
                solve_qp(&node_program(program, &n.fixing), &settings.qp).ok()
            });
            out.extend(rest);
            out
        } else {
            parallel::map(settings.threads, &batch, |n| {
                solve_qp(&node_program(program, &n.fixing), &settings.qp).ok()
            })
        };
        nodes += batch.len();

        let mut integral = Vec::new();
        for (node, sol) in batch.into_iter().zip(results) {
            let Some(sol) = sol.filter(QpSolution::is_optimal) else {
                continue;
            };
            if let Some((k, dir, distance)) = node.branch {
                pseudo.record(k, dir, distance, sol.objective - node.bound);
            }
            let bound = sol.objective.max(node.bound);
            let inc = search.incumbent_value();
            if inc.is_finite() && relative_gap(inc, bound) <= settings.gap_tol {
                continue;
            }
            let u = binary_values(program, &sol);
            let mut fixing = node.fixing.clone();
            let mut moved = false;
            if inc.is_finite() {
                let prunable = |v: f64| relative_gap(inc, v) <= settings.gap_tol;
                match reduced_cost_fixing(program, &mut fixing, &sol, prunable) {
                    None => continue,
                    Some(fixed) => moved = fixed.iter().any(|&k| (u[k] - fixing[k].unwrap() as f64).abs() > itol),
                }
            }
            let mut pick: Option<(usize, f64)> = None;
            for (k, &v) in u.iter().enumerate() {
                if fixing[k].is_some() {
                    continue;
                }
                if (v - v.round()).abs() <= itol {
                    continue;
                }
                let score = pseudo.score(k, v);
                if pick.map_or(true, |(_, b)| score > b) {
                    pick = Some((k, score));
                }
            }
            match pick {
                None if moved => {
                    // The relaxation disagrees with the new fixings; solve
                    // the restricted node again.
                    heap.push(Node {
                        bound,
                        id: next_id,
                        fixing,
                        branch: None,
                    });
                    next_id += 1;
                }
                None => {
                    integral.push(u.iter().map(|v| v.round() as u8).collect::<Vec<u8>>());
                }
                Some((k, _)) => {
                    for v in [0u8, 1] {
                        let mut fixing = fixing.clone();
                        fixing[k] = Some(v);
                        let distance = if v == 0 { u[k] } else { 1.0 - u[k] };
                        heap.push(Node {
                            bound,
                            id: next_id,
                            fixing,
                            branch: Some((k, v, distance)),
                        });
                        next_id += 1;
                    }
                }
            }
        }
        search.try_candidates(integral);
        let inc = search.incumbent_value();
        log(&SearchLog {
            node: nodes,
            bound: best_bound,
            incumbent: inc,
            gap: relative_gap(inc, best_bound),
        });
    }

    let Some(inc) = search.incumbent else {
        return Err(Error::Infeasible("no commitment satisfies the constraints".into()));
    };
    let bound = best_bound.min(inc.solution.objective);
    Ok(finish(inc, status, bound, nodes))
}

/// Reduced-cost fixing at a solved node. For a convex relaxation with value
/// `f`, every point of the node with `u_k = 1` costs at least `f + z_k` where
/// `z_k` is the multiplier of `−u_k ≤ 0`, and symmetrically for `u_k ≤ 1`.
/// Binaries whose opposite value is prunable get fixed. Returns the newly
/// fixed indices, or `None` when both values of some binary are prunable.
fn reduced_cost_fixing(
    program: &QuadraticProgram,
    fixing: &mut [Option<u8>],
    sol: &QpSolution,
    prunable: impl Fn(f64) -> bool,
) -> Option<Vec<usize>> {
    let base = program.ineq_rows.len();
    let mut row = base;
    let mut fixed = Vec::new();
    for k in 0..fixing.len() {
        if fixing[k].is_some() {
            continue;
        }
        let (z_upper, z_lower) = (sol.ineq_duals[row], sol.ineq_duals[row + 1]);
        row += 2;
        let (no_one, no_zero) = (prunable(sol.objective + z_lower), prunable(sol.objective + z_upper));
        match (no_zero, no_one) {
            (true, true) => return None,
            (true, false) => fixing[k] = Some(1),
            (false, true) => fixing[k] = Some(0),
            (false, false) => continue,
        }
        fixed.push(k);
    }
    Some(fixed)
}

fn finish(inc: Incumbent, status: MiqpStatus, bound: f64, nodes: usize) -> MiqpSolution {
    let objective = inc.solution.objective;
    MiqpSolution {
        status,
        commitment: inc.commitment,
        relaxed_solution: inc.solution,
        objective,
        best_bound: bound,
        gap: relative_gap(objective, bound),
        nodes_explored: nodes,
    }
}

/// Commitment vector number `k` of `2^n` in lexicographic order.
fn assignment(n: usize, k: usize) -> Vec<u8> {
    (0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect()
}

/// Solves every commitment and returns the cheapest feasible one; ties go
/// to the lexicographically smallest commitment.
pub fn exhaustive_solve(program: &QuadraticProgram, qp: &SolverSettings, threads: usize) -> Result<MiqpSolution> {
    let nb = program.binaries.len();
    if nb > EXHAUSTIVE_CAP {
        return Err(Error::TooManyBinaries {
            cap: EXHAUSTIVE_CAP,
            found: nb,
        });
    }
    let total = 1usize << nb;
    let results = parallel::map_indexed(threads, total, |k| {
        evaluate_commitment(program, &assignment(nb, k), qp).ok().filter(QpSolution::is_optimal)
    });
    let mut best: Option<(usize, QpSolution)> = None;
    for (k, r) in results.into_iter().enumerate() {
        if let Some(s) = r {
            if best.as_ref().map_or(true, |(_, b)| s.objective < b.objective) {
                best = Some((k, s));
            }
        }
    }
    let (k, sol) = best.ok_or_else(|| Error::Infeasible(format!("all {total} commitments are infeasible")))?;
    let objective = sol.objective;
    Ok(MiqpSolution {
        status: MiqpStatus::Optimal,
        commitment: assignment(nb, k),
        relaxed_solution: sol,
        objective,
        best_bound: objective,
        gap: 0.0,
        nodes_explored: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-unit commitment over a few periods: `P ≤ P_max·u`,
    /// `P ≥ P_min·u`, `ΣP = d_t`, cost `c0·u + c1·P + c2·P²`.
    fn toy(seed: u64, periods: usize) -> QuadraticProgram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut qp = QuadraticProgram::new();
        let units: Vec<(f64, f64, f64, f64, f64)> = (0..2)
            .map(|_| {
                let p_max = rng.gen_range(5.0..15.0);
                let p_min = rng.gen_range(0.0..0.4) * p_max;
                (p_max, p_min, rng.gen_range(0.0..60.0), rng.gen_range(1.0..20.0), rng.gen_range(0.0..0.05))
            })
            .collect();
        let cap: f64 = units.iter().map(|u| u.0).sum();
        for t in 0..periods {
            let demand = rng.gen_range(0.1..0.95) * cap;
            let mut balance = Vec::new();
            for (g, &(p_max, p_min, c0, c1, c2)) in units.iter().enumerate() {
                let p = qp.add_var(format!("P[G{g},{t}]"));
                let u = qp.add_binary(format!("u[G{g},{t}]"));
                qp.add_linear(p, c1);
                qp.add_quad(p, p, 2.0 * c2);
                qp.add_linear(u, c0);
                qp.add_ineq(format!("upper[G{g},{t}]"), vec![(p, 1.0), (u, -p_max)], 0.0);
                qp.add_ineq(format!("lower[G{g},{t}]"), vec![(p, -1.0), (u, p_min)], 0.0);
                balance.push((p, 1.0));
            }
            qp.add_eq(format!("balance[{t}]"), balance, demand);
        }
        qp
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn matches_enumeration_on_toy() {
        for seed in 0..8 {
            let qp = toy(seed, 3);
            let bb = solve_miqp(&qp, &MiqpSettings::default()).unwrap();
            let ex = exhaustive_solve(&qp, &SolverSettings::default(), 1).unwrap();
            assert_eq!(bb.status, MiqpStatus::Optimal);
            assert!(close(bb.objective, ex.objective), "seed {seed}: {} vs {}", bb.objective, ex.objective);
            assert!(bb.gap <= 1e-6);
        }
    }

    #[test]
    fn integral_root_needs_no_branching() {
        let mut qp = QuadraticProgram::new();
        let x = qp.add_var("x[A,1]");
        let u = qp.add_binary("u[A,1]");
        qp.add_linear(x, 1.0);
        qp.add_linear(u, 3.0);
        qp.add_ineq("must-run[A,1]", vec![(u, -1.0)], -1.0);
        qp.add_ineq("cap[A,1]", vec![(x, 1.0), (u, -2.0)], 0.0);
        qp.add_ineq("floor[A,1]", vec![(x, -1.0)], -1.0);
        let s = solve_miqp(&qp, &MiqpSettings::default()).unwrap();
        assert_eq!(s.commitment, vec![1]);
        assert!(s.nodes_explored <= 1);
        assert!((s.objective - 4.0).abs() < 1e-7);
    }

    #[test]
    fn commitment_fix_labels_are_kept() {
        let qp = toy(3, 2);
        let s = solve_miqp(&qp, &MiqpSettings::default()).unwrap();
        let fixed = qp.fix_commitment(&s.commitment.iter().map(|&v| v as f64).collect::<Vec<_>>()).unwrap();
        assert_eq!(fixed.eq_rows.len(), s.relaxed_solution.eq_duals.len());
        assert!(fixed.has_row("commitment-fix[G1,1]"));
    }

    #[test]
    fn exhaustive_without_binaries_solves_once() {
        let mut qp = QuadraticProgram::new();
        let x = qp.add_var("x");
        qp.add_quad(x, x, 2.0);
        qp.add_linear(x, -2.0);
        let s = exhaustive_solve(&qp, &SolverSettings::default(), 1).unwrap();
        assert_eq!(s.nodes_explored, 1);
        assert!(s.commitment.is_empty());
        assert!((s.objective + 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_commitments_are_reported() {
        let mut qp = QuadraticProgram::new();
        let x = qp.add_var("x");
        let u = qp.add_binary("u[A,1]");
        qp.add_ineq("cap", vec![(x, 1.0), (u, -1.0)], 0.0);
        qp.add_ineq("need", vec![(x, -1.0)], -2.0);
        assert!(matches!(
            exhaustive_solve(&qp, &SolverSettings::default(), 1),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(solve_miqp(&qp, &MiqpSettings::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn enumeration_is_capped() {
        let mut qp = QuadraticProgram::new();
        for i in 0..=EXHAUSTIVE_CAP {
            qp.add_binary(format!("u[A,{i}]"));
        }
        assert!(matches!(
            exhaustive_solve(&qp, &SolverSettings::default(), 1),
            Err(Error::TooManyBinaries { .. })
        ));
    }

    #[test]
    fn search_is_deterministic() {
        let qp = toy(11, 3);
        let a = solve_miqp(&qp, &MiqpSettings::default()).unwrap();
        let b = solve_miqp(&qp, &MiqpSettings::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_must_match_binary_count() {
        let qp = toy(1, 2);
        let r = solve_miqp_seeded(&qp, &MiqpSettings::default(), &[vec![1, 0]], &mut |_| {});
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn thread_count_does_not_change_enumeration() {
        let qp = toy(5, 2);
        let a = exhaustive_solve(&qp, &SolverSettings::default(), 1).unwrap();
        let b = exhaustive_solve(&qp, &SolverSettings::default(), 3).unwrap();
        assert_eq!(a.commitment, b.commitment);
        assert_eq!(a.objective, b.objective);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn branch_and_bound_matches_enumeration(seed in 0u64..1_000_000) {
            let qp = toy(seed, 3);
            let ex = exhaustive_solve(&qp, &SolverSettings::default(), 1);
            let bb = solve_miqp(&qp, &MiqpSettings::default());
            match (ex, bb) {
                (Ok(ex), Ok(bb)) => prop_assert!(close(ex.objective, bb.objective), "{} vs {}", ex.objective, bb.objective),
                (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => {}
                (ex, bb) => prop_assert!(false, "enumeration {:?} vs search {:?}", ex.map(|s| s.objective), bb.map(|s| s.objective)),
            }
        }
    }
}
