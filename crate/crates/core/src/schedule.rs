//! Per-resource time series read back from a solved program.

use serde::{Deserialize, Serialize};

use crate::case::SystemCase;
use crate::error::Result;
use crate::program::QuadraticProgram;
use crate::reformulation::names;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSchedule {
    pub name: String,
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSchedule {
    pub name: String,
    pub pd: Vec<f64>,
    pub pc: Vec<f64>,
    pub alpha_d: Vec<f64>,
    pub alpha_c: Vec<f64>,
    pub h_e: Vec<f64>,
    pub energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub generators: Vec<GeneratorSchedule>,
    pub storage: Vec<StorageSchedule>,
}

impl Schedule {
    /// Reads the dispatch of every resource from primal values `x` of a
    /// program built for `case`.
    pub fn from_primal(case: &SystemCase, program: &QuadraticProgram, x: &[f64]) -> Result<Self> {
        let t_len = case.horizon;
        let series = |f: &dyn Fn(usize) -> String| -> Result<Vec<f64>> {
            (0..t_len).map(|t| Ok(x[program.var(&f(t))?])).collect()
        };
        let mut generators = Vec::with_capacity(case.generators.len());
        for g in &case.generators {
            let n = g.name.as_str();
            generators.push(GeneratorSchedule {
                name: g.name.clone(),
                p: series(&|t| names::p(n, t))?,
                alpha: series(&|t| names::alpha(n, t))?,
                u: series(&|t| names::u(n, t))?,
            });
        }
        let mut storage = Vec::with_capacity(case.storage.len());
        for e in &case.storage {
            let n = e.name.as_str();
            storage.push(StorageSchedule {
                name: e.name.clone(),
                pd: series(&|t| names::pd(n, t))?,
                pc: series(&|t| names::pc(n, t))?,
                alpha_d: series(&|t| names::alpha_d(n, t))?,
                alpha_c: series(&|t| names::alpha_c(n, t))?,
                h_e: series(&|t| names::h_e(n, t))?,
                energy: series(&|t| names::energy(n, t))?,
            });
        }
        Ok(Schedule { generators, storage })
    }

    /// Total participation `Σ(α_g + α_d − α_c)` at period `t`.
    pub fn total_participation(&self, t: usize) -> f64 {
        let g: f64 = self.generators.iter().map(|g| g.alpha[t]).sum();
        let e: f64 = self.storage.iter().map(|e| e.alpha_d[t] - e.alpha_c[t]).sum();
        g + e
    }

    /// Scheduled dispatchable injection `Σ(P_g + P_d − P_c)` at period `t`.
    pub fn total_injection(&self, t: usize) -> f64 {
        let g: f64 = self.generators.iter().map(|g| g.p[t]).sum();
        let e: f64 = self.storage.iter().map(|e| e.pd[t] - e.pc[t]).sum();
        g + e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{builtin_illustrative_case, market_case_config};
    use crate::reformulation::{build_program, BuildOptions, ProgramKind};

    #[test]
    fn reads_named_columns() {
        let case = builtin_illustrative_case();
        let cfg = market_case_config(6).unwrap();
        let built = build_program(&case, &cfg, ProgramKind::Proposed, &BuildOptions::default()).unwrap();
        let qp = &built.program;
        let x: Vec<f64> = (0..qp.num_vars()).map(|j| j as f64).collect();
        let s = Schedule::from_primal(&case, qp, &x).unwrap();
        assert_eq!(s.generators.len(), 4);
        assert_eq!(s.storage.len(), 2);
        assert_eq!(s.generators[2].u[7], qp.var("u[G3,8]").unwrap() as f64);
        assert_eq!(s.storage[1].h_e[23], qp.var("H_e[ES2,24]").unwrap() as f64);
    }
}
