//! The two-cart lag experiment and the calibration over its two unstated
//! choices: Player 2's initial applied input and the terminal weights.

use serde::Serialize;

use crate::cart::{self, TerminalWeights};
use crate::compensator::{self, AugmentationMode, InitialInputMode, LagModel};
use crate::error::Result;
use crate::fne;
use crate::sim::{self, CaseComparison, CostTable};

/// Target Player 1 costs for FNE, REF, CF.
pub const REFERENCE_J1: [f64; 3] = [325.31, 492.40, 439.67];
/// Target Player 2 costs for FNE, REF, CF.
pub const REFERENCE_J2: [f64; 3] = [330.45, 492.11, 556.40];
/// Target derived percentages: REF increase, CF improvement, loss recovered.
pub const REFERENCE_PCT: [f64; 3] = [51.36, 10.71, 31.56];

/// Runs the three cases on the reference two-cart game.
pub fn run(terminal: TerminalWeights, mode: InitialInputMode) -> Result<CaseComparison> {
    run_with_tau(terminal, mode, cart::LAG_TAU)
}

pub fn run_with_tau(terminal: TerminalWeights, mode: InitialInputMode, tau: f64) -> Result<CaseComparison> {
    let game = cart::reference_game(terminal)?;
    let fne = fne::solve_fne(&game)?;
    let lag = LagModel::new(tau, cart::TwoCartParams::default().dt, mode)?;
    let aug = compensator::build_augmented_system(&game, &fne, &lag, AugmentationMode::FullLag)?;
    let cf = compensator::solve_compensator(&game, &aug)?;
    sim::compare_cases(&game, &fne, &cf, lag, &cart::reference_x0())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRun {
    pub terminal: TerminalWeights,
    pub initial_input_mode: InitialInputMode,
    pub table: CostTable,
    /// Largest relative error over the six target costs.
    pub max_cost_rel_error: f64,
    /// Largest absolute error over the three percentages, in percentage points.
    pub max_pct_error: f64,
}

impl CalibrationRun {
    pub fn costs_within(&self, rel_tol: f64) -> bool {
        self.max_cost_rel_error <= rel_tol
    }

    pub fn percentages_within(&self, points: f64) -> bool {
        self.max_pct_error <= points
    }
}

fn score(terminal: TerminalWeights, mode: InitialInputMode, table: CostTable) -> CalibrationRun {
    let j1 = [table.fne[0], table.reference[0], table.cf[0]];
    let j2 = [table.fne[1], table.reference[1], table.cf[1]];
    let pct = [
        table.ref_increase_pct,
        table.cf_improvement_pct,
        table.loss_recovered_pct,
    ];
    let rel = j1
        .iter()
        .zip(REFERENCE_J1)
        .chain(j2.iter().zip(REFERENCE_J2))
        .map(|(got, want)| ((got - want) / want).abs())
        .fold(0.0_f64, f64::max);
    let pts = pct
        .iter()
        .zip(REFERENCE_PCT)
        .map(|(got, want)| (got - want).abs())
        .fold(0.0_f64, f64::max);
    CalibrationRun {
        terminal,
        initial_input_mode: mode,
        table,
        max_cost_rel_error: rel,
        max_pct_error: pts,
    }
}

/// All four combinations, best match first (by cost error, then percentages).
pub fn calibrate() -> Result<Vec<CalibrationRun>> {
    let mut runs = Vec::with_capacity(4);
    for terminal in [TerminalWeights::StageWeights, TerminalWeights::Zero] {
        for mode in [InitialInputMode::ColdStart, InitialInputMode::Matched] {
            let cmp = run(terminal, mode)?;
            runs.push(score(terminal, mode, cmp.table));
        }
    }
    runs.sort_by(|a, b| {
        a.max_cost_rel_error
            .total_cmp(&b.max_cost_rel_error)
            .then(a.max_pct_error.total_cmp(&b.max_pct_error))
    });
    Ok(runs)
}
