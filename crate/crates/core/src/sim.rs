//! Closed-loop roll-outs on the true plant and realized costs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::compensator::{CompensatorGains, LagModel};
use crate::error::{Error, Result};
use crate::fne::FneSolution;
use crate::game::{GameDefinition, Player};
use crate::linalg::{self, Mat, Vector};

/// States beyond this norm abort a roll-out.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    /// Both players apply their Nash feedback, no lag.
    Fne,
    /// Lagged Player 2, Player 1 keeps its Nash feedback.
    Ref,
    /// Lagged Player 2, Player 1 applies compensated feedback.
    Cf,
    /// Player 2 adds an explicit deviation sequence to its Nash command.
    Deviated,
    /// Lagged Player 2, Player 1 applies an arbitrary affine policy.
    Affine,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Fne => "fne",
            CaseKind::Ref => "ref",
            CaseKind::Cf => "cf",
            CaseKind::Deviated => "deviated",
            CaseKind::Affine => "affine",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PolicyCase<'a> {
    Fne {
        fne: &'a FneSolution,
    },
    Ref {
        fne: &'a FneSolution,
        lag: LagModel,
    },
    Cf {
        fne: &'a FneSolution,
        gains: &'a CompensatorGains,
        lag: LagModel,
    },
}

impl PolicyCase<'_> {
    pub fn kind(&self) -> CaseKind {
        match self {
            PolicyCase::Fne { .. } => CaseKind::Fne,
            PolicyCase::Ref { .. } => CaseKind::Ref,
            PolicyCase::Cf { .. } => CaseKind::Cf,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub kind: CaseKind,
    /// `x_k`, `k = 0..N`.
    pub x: Vec<Vector>,
    pub u1: Vec<Vector>,
    pub u2_applied: Vec<Vector>,
    /// `u*₂,k = −K*₂,k x_k`.
    pub u2_intended: Vec<Vector>,
    /// `w_k = B₂(u₂,k − u*₂,k)`.
    pub w: Vec<Vector>,
    pub j1: f64,
    pub j2: f64,
    /// Stage terms `x_kᵀQᵢx_k + uᵢ,kᵀRᵢuᵢ,k` for `k = 0..N−1`.
    pub stage_costs1: Vec<f64>,
    pub stage_costs2: Vec<f64>,
    pub terminal_cost1: f64,
    pub terminal_cost2: f64,
}

impl SimulationResult {
    pub fn horizon(&self) -> usize {
        self.u1.len()
    }

    pub fn cost(&self, player: Player) -> f64 {
        match player {
            Player::One => self.j1,
            Player::Two => self.j2,
        }
    }

    /// Execution error `e_k = u₂,k − u*₂,k`.
    pub fn execution_error(&self) -> Vec<Vector> {
        self.u2_applied
            .iter()
            .zip(&self.u2_intended)
            .map(|(a, i)| a - i)
            .collect()
    }

    /// Augmented states `[x_k; w_k]` for `k = 0..N−1`.
    pub fn augmented_states(&self) -> Vec<Vector> {
        let n = self.x[0].len();
        self.w
            .iter()
            .zip(&self.x)
            .map(|(w, x)| {
                let mut z = Vector::zeros(2 * n);
                z.rows_mut(0, n).copy_from(x);
                z.rows_mut(n, n).copy_from(w);
                z
            })
            .collect()
    }
}

/// How Player 2's applied input is produced from its intended command.
enum Execution<'a> {
    Exact,
    Lagged(LagModel),
    Offset(&'a [Vector]),
}

fn rollout(
    game: &GameDefinition,
    fne: &FneSolution,
    kind: CaseKind,
    execution: Execution<'_>,
    x0: &Vector,
    mut player1: impl FnMut(usize, &Vector, &Vector) -> Vector,
) -> Result<SimulationResult> {
    let horizon = game.horizon();
    let n = game.state_dim();
    if x0.len() != n {
        return Err(Error::dim("initial state", n, x0.len()));
    }
    if fne.horizon() != horizon {
        return Err(Error::dim("equilibrium horizon", horizon, fne.horizon()));
    }
    let (b1, b2) = (game.b(Player::One), game.b(Player::Two));
    let (q1, q2) = (game.q(Player::One), game.q(Player::Two));
    let (r1, r2) = (game.r(Player::One), game.r(Player::Two));

    let mut x = Vec::with_capacity(horizon + 1);
    let mut u1 = Vec::with_capacity(horizon);
    let mut u2_applied: Vec<Vector> = Vec::with_capacity(horizon);
    let mut u2_intended: Vec<Vector> = Vec::with_capacity(horizon);
    let mut w = Vec::with_capacity(horizon);
    let mut stage_costs1 = Vec::with_capacity(horizon);
    let mut stage_costs2 = Vec::with_capacity(horizon);
    x.push(x0.clone());

    for k in 0..horizon {
        let xk = &x[k];
        let intended = -(&fne.k2[k] * xk);
        let applied = match &execution {
            Execution::Exact => intended.clone(),
            Execution::Offset(du) => &intended + &du[k],
            Execution::Lagged(lag) => match k {
                0 => lag.initial_input(&intended),
                _ => lag.step(&u2_applied[k - 1], &u2_intended[k - 1]),
            },
        };
        let wk = b2 * (&applied - &intended);
        let u1k = player1(k, xk, &wk);
        stage_costs1.push(linalg::quad_form(q1, xk) + linalg::quad_form(r1, &u1k));
        stage_costs2.push(linalg::quad_form(q2, xk) + linalg::quad_form(r2, &applied));
        let next = game.a() * xk + b1 * &u1k + b2 * &applied;
        let norm = next.norm();
        if norm.is_nan() || norm > DIVERGENCE_NORM {
            return Err(Error::Divergence { stage: k + 1, norm });
        }
        x.push(next);
        u1.push(u1k);
        u2_applied.push(applied);
        u2_intended.push(intended);
        w.push(wk);
    }

    let terminal_cost1 = linalg::quad_form(game.q_terminal(Player::One), &x[horizon]);
    let terminal_cost2 = linalg::quad_form(game.q_terminal(Player::Two), &x[horizon]);
    let j1 = linalg::compensated_sum(stage_costs1.iter().copied().chain([terminal_cost1]));
    let j2 = linalg::compensated_sum(stage_costs2.iter().copied().chain([terminal_cost2]));
    Ok(SimulationResult {
        kind,
        x,
        u1,
        u2_applied,
        u2_intended,
        w,
        j1,
        j2,
        stage_costs1,
        stage_costs2,
        terminal_cost1,
        terminal_cost2,
    })
}

/// Simulates one of the three policy cases from `x0`.
///
/// Within a stage: read `x_k`, form Player 2's intended command, obtain the
/// applied command through the lag state, form `w_k`, apply Player 1's input,
/// advance the state.
pub fn simulate(game: &GameDefinition, case: PolicyCase<'_>, x0: &Vector) -> Result<SimulationResult> {
    match case {
        PolicyCase::Fne { fne } => rollout(game, fne, CaseKind::Fne, Execution::Exact, x0, |k, x, _| {
            -(&fne.k1[k] * x)
        }),
        PolicyCase::Ref { fne, lag } => {
            rollout(game, fne, CaseKind::Ref, Execution::Lagged(lag), x0, |k, x, _| {
                -(&fne.k1[k] * x)
            })
        }
        PolicyCase::Cf { fne, gains, lag } => {
            if gains.horizon() != game.horizon() {
                return Err(Error::dim("compensator horizon", game.horizon(), gains.horizon()));
            }
            rollout(game, fne, CaseKind::Cf, Execution::Lagged(lag), x0, |k, x, w| {
                gains.control(k, x, w)
            })
        }
    }
}

/// Player 1 on its Nash feedback, Player 2 applying `u*₂,k + Δu₂,k`.
pub fn simulate_with_deviation(
    game: &GameDefinition,
    fne: &FneSolution,
    du2: &[Vector],
    x0: &Vector,
) -> Result<SimulationResult> {
    if du2.len() != game.horizon() {
        return Err(Error::dim("deviation sequence", game.horizon(), du2.len()));
    }
    let m2 = game.input_dim(Player::Two);
    if let Some(bad) = du2.iter().find(|d| d.len() != m2) {
        return Err(Error::dim("deviation entry", m2, bad.len()));
    }
    rollout(
        game,
        fne,
        CaseKind::Deviated,
        Execution::Offset(du2),
        x0,
        |k, x, _| -(&fne.k1[k] * x),
    )
}

/// Lagged Player 2, Player 1 applying `u₁ = −K̃_k x − L̃_k w`.
pub fn simulate_affine_policy(
    game: &GameDefinition,
    fne: &FneSolution,
    lag: LagModel,
    k_gains: &[Mat],
    l_gains: &[Mat],
    x0: &Vector,
) -> Result<SimulationResult> {
    let horizon = game.horizon();
    if k_gains.len() != horizon || l_gains.len() != horizon {
        return Err(Error::dim(
            "policy gains",
            horizon,
            format!("{} / {}", k_gains.len(), l_gains.len()),
        ));
    }
    rollout(
        game,
        fne,
        CaseKind::Affine,
        Execution::Lagged(lag),
        x0,
        |k, x, w| -(&k_gains[k] * x) - &l_gains[k] * w,
    )
}

/// Recomputes `Jᵢ` from the stored trajectory.
pub fn evaluate_cost(game: &GameDefinition, result: &SimulationResult, player: Player) -> Result<f64> {
    let horizon = game.horizon();
    let u = match player {
        Player::One => &result.u1,
        Player::Two => &result.u2_applied,
    };
    if result.x.len() != horizon + 1 || u.len() != horizon {
        return Err(Error::dim(
            "trajectory length",
            format!("{} states / {horizon} inputs", horizon + 1),
            format!("{} states / {} inputs", result.x.len(), u.len()),
        ));
    }
    let (q, r) = (game.q(player), game.r(player));
    let stages = result
        .x
        .iter()
        .zip(u)
        .map(|(x, u)| linalg::quad_form(q, x) + linalg::quad_form(r, u));
    let terminal = linalg::quad_form(game.q_terminal(player), &result.x[horizon]);
    Ok(linalg::compensated_sum(stages.chain([terminal])))
}

/// Costs of the three cases and the derived percentages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostTable {
    pub fne: [f64; 2],
    #[serde(rename = "ref")]
    pub reference: [f64; 2],
    pub cf: [f64; 2],
    /// `(J₁ᴿᴱᶠ − J₁ᶠᴺᴱ)/J₁ᶠᴺᴱ`, in percent.
    pub ref_increase_pct: f64,
    /// `(J₁ᴿᴱᶠ − J₁ᶜᶠ)/J₁ᴿᴱᶠ`, in percent.
    pub cf_improvement_pct: f64,
    /// `(J₁ᴿᴱᶠ − J₁ᶜᶠ)/(J₁ᴿᴱᶠ − J₁ᶠᴺᴱ)`, in percent.
    pub loss_recovered_pct: f64,
}

impl CostTable {
    pub fn from_costs(fne: [f64; 2], reference: [f64; 2], cf: [f64; 2]) -> Self {
        let [j_fne, j_ref, j_cf] = [fne[0], reference[0], cf[0]];
        CostTable {
            fne,
            reference,
            cf,
            ref_increase_pct: 100.0 * (j_ref - j_fne) / j_fne,
            cf_improvement_pct: 100.0 * (j_ref - j_cf) / j_ref,
            loss_recovered_pct: 100.0 * (j_ref - j_cf) / (j_ref - j_fne),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseComparison {
    pub fne: SimulationResult,
    pub reference: SimulationResult,
    pub compensated: SimulationResult,
    pub table: CostTable,
}

/// Runs FNE, REF and CF from the same initial state and lag model.
pub fn compare_cases(
    game: &GameDefinition,
    fne: &FneSolution,
    cf: &CompensatorGains,
    lag: LagModel,
    x0: &Vector,
) -> Result<CaseComparison> {
    let nominal = simulate(game, PolicyCase::Fne { fne }, x0)?;
    let reference = simulate(game, PolicyCase::Ref { fne, lag }, x0)?;
    let compensated = simulate(game, PolicyCase::Cf { fne, gains: cf, lag }, x0)?;
    let table = CostTable::from_costs(
        [nominal.j1, nominal.j2],
        [reference.j1, reference.j2],
        [compensated.j1, compensated.j2],
    );
    Ok(CaseComparison {
        fne: nominal,
        reference,
        compensated,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentages_from_target_costs() {
        let t = CostTable::from_costs([325.31, 330.45], [492.40, 492.11], [439.67, 556.40]);
        assert!((t.ref_increase_pct - 51.36).abs() < 0.005);
        assert!((t.cf_improvement_pct - 10.71).abs() < 0.005);
        assert!((t.loss_recovered_pct - 31.56).abs() < 0.005);
    }
}
