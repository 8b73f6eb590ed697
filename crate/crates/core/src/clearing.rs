//! End-to-end market clearing: commitment search, the fixed-commitment
//! pricing run, prices, settlement and the equilibrium check.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::case::{market_case_config, SystemCase};
use crate::equilibrium::{verify_equilibrium, EquilibriumReport};
use crate::error::{Error, Result};
use crate::miqp::{solve_miqp_seeded, MiqpSettings, MiqpSolution};
use crate::pricing::{extract_prices, resource_form_prices, settlement, PriceSeries, ResourcePrices, SettlementOptions, SettlementReport};
use crate::program::QuadraticProgram;
use crate::qp::QpSolution;
use crate::reformulation::{build_program, BuildOptions, BuiltProgram, ProgramKind};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkMode {
    On,
    Off,
    /// Network constraints whenever the case describes a network.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingOptions {
    pub build: BuildOptions,
    pub network: NetworkMode,
    pub miqp: MiqpSettings,
    pub settlement: SettlementOptions,
    /// Tolerance of the equilibrium check and price cross-checks.
    pub tol: f64,
}

impl Default for ClearingOptions {
    fn default() -> Self {
        ClearingOptions {
            build: BuildOptions::default(),
            network: NetworkMode::Auto,
            miqp: MiqpSettings::default(),
            settlement: SettlementOptions::default(),
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClearingResult {
    pub case_id: u8,
    pub built: BuiltProgram,
    pub miqp: MiqpSolution,
    /// `built.program` with the commitment fixed; its duals are the prices.
    pub pricing_program: QuadraticProgram,
    pub schedule: Schedule,
    pub prices: PriceSeries,
    pub forms: ResourcePrices,
    pub settlement: SettlementReport,
    pub equilibrium: EquilibriumReport,
    pub elapsed: Duration,
}

impl ClearingResult {
    pub fn pricing_solution(&self) -> &QpSolution {
        &self.miqp.relaxed_solution
    }

    pub fn kind(&self) -> ProgramKind {
        self.built.kind
    }

    pub fn total_cost(&self) -> f64 {
        self.miqp.objective
    }

    /// Commitment keyed by binary variable name.
    pub fn commitment_by_name(&self) -> HashMap<String, u8> {
        let p = &self.built.program;
        p.binaries
            .iter()
            .zip(&self.miqp.commitment)
            .map(|(&j, &v)| (p.var_name(j).to_string(), v))
            .collect()
    }
}

/// Program kind used for `case_id`: the network formulation when requested
/// and available, the benchmark for market case 1, otherwise the proposed
/// single-bus formulation.
pub fn program_kind(case: &SystemCase, case_id: u8, network: NetworkMode) -> Result<ProgramKind> {
    match network {
        NetworkMode::On if case.network.is_none() => {
            Err(Error::InvalidInput("network mode is on but the case has no network".into()))
        }
        NetworkMode::On => Ok(ProgramKind::Network),
        NetworkMode::Auto if case.network.is_some() => Ok(ProgramKind::Network),
        _ if case_id == 1 => Ok(ProgramKind::Benchmark),
        _ => Ok(ProgramKind::Proposed),
    }
}

pub fn clear(case: &SystemCase, case_id: u8, options: &ClearingOptions) -> Result<ClearingResult> {
    clear_seeded(case, case_id, options, &[])
}

/// Clears market case `case_id`. Seed commitments keyed by binary name are
/// tried as incumbents before the search; binaries a seed does not name
/// start off.
pub fn clear_seeded(
    case: &SystemCase,
    case_id: u8,
    options: &ClearingOptions,
    seeds: &[HashMap<String, u8>],
) -> Result<ClearingResult> {
    let started = Instant::now();
    let config = market_case_config(case_id)?;
    let kind = program_kind(case, case_id, options.network)?;
    let built = build_program(case, &config, kind, &options.build)?;
    let program = &built.program;
    let seeds: Vec<Vec<u8>> = seeds
        .iter()
        .map(|s| program.binaries.iter().map(|&j| s.get(program.var_name(j)).copied().unwrap_or(0)).collect())
        .collect();
    let miqp = solve_miqp_seeded(program, &options.miqp, &seeds, &mut |_| {})?;
    let u: Vec<f64> = miqp.commitment.iter().map(|&v| v as f64).collect();
    let pricing_program = program.fix_commitment(&u)?;
    let sol = &miqp.relaxed_solution;
    let schedule = Schedule::from_primal(case, &pricing_program, &sol.primal)?;
    let prices = extract_prices(sol, &pricing_program)?;
    let forms = resource_form_prices(case, &built, &pricing_program, sol, &prices)?;
    let settlement = settlement(case, &built, &schedule, &prices, &options.settlement)?;
    let equilibrium = verify_equilibrium(case, &built, &pricing_program, sol, &prices, options.tol)?;
    Ok(ClearingResult {
        case_id,
        built,
        pricing_program,
        schedule,
        prices,
        forms,
        settlement,
        equilibrium,
        miqp,
        elapsed: started.elapsed(),
    })
}

/// Clears market cases 1 to 6. Each case is seeded with the commitment of
/// the previous one, which stays feasible along the chains 1 ⊂ 2 and
/// 3 ⊂ 4 ⊂ 5 ⊂ 6 of growing capabilities.
pub fn sweep(case: &SystemCase, options: &ClearingOptions) -> Result<Vec<ClearingResult>> {
    let mut out: Vec<ClearingResult> = Vec::with_capacity(6);
    for id in 1..=6u8 {
        let seeds: Vec<HashMap<String, u8>> = match id {
            2 | 4 | 5 | 6 => vec![out[id as usize - 2].commitment_by_name()],
            _ => vec![],
        };
        out.push(clear_seeded(case, id, options, &seeds)?);
    }
    Ok(out)
}
