//! First-order effect of Player 2's execution deviations on Player 1's cost
//! while Player 1 keeps its Nash feedback.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fne::FneSolution;
use crate::game::{GameDefinition, Player};
use crate::linalg::{self, Mat, Vector};
use crate::sim;

/// Player 2 input deviations `Δu₂,k`, `k = 0..N−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSequence {
    du2: Vec<Vector>,
}

impl DeviationSequence {
    pub fn new(game: &GameDefinition, du2: Vec<Vector>) -> Result<Self> {
        if du2.len() != game.horizon() {
            return Err(Error::dim("deviation sequence", game.horizon(), du2.len()));
        }
        let m2 = game.input_dim(Player::Two);
        if let Some(bad) = du2.iter().find(|d| d.len() != m2) {
            return Err(Error::dim("deviation entry", m2, bad.len()));
        }
        if du2.iter().any(|d| d.iter().any(|v| !v.is_finite())) {
            return Err(Error::Domain("deviation sequence has non-finite entries".into()));
        }
        Ok(DeviationSequence { du2 })
    }

    pub fn zeros(game: &GameDefinition) -> Self {
        DeviationSequence {
            du2: vec![Vector::zeros(game.input_dim(Player::Two)); game.horizon()],
        }
    }

    /// Single nonzero entry at `stage`.
    pub fn impulse(game: &GameDefinition, stage: usize, value: Vector) -> Result<Self> {
        let mut du2 = vec![Vector::zeros(game.input_dim(Player::Two)); game.horizon()];
        if stage >= du2.len() {
            return Err(Error::Domain(format!("impulse stage {stage} beyond horizon")));
        }
        du2[stage] = value;
        DeviationSequence::new(game, du2)
    }

    pub fn entries(&self) -> &[Vector] {
        &self.du2
    }

    pub fn len(&self) -> usize {
        self.du2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.du2.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        DeviationSequence {
            du2: self.du2.iter().map(|d| d * c).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        DeviationSequence {
            du2: self
                .du2
                .iter()
                .zip(&other.du2)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }

    /// Euclidean norm of the stacked sequence.
    pub fn norm(&self) -> f64 {
        self.du2.iter().map(|d| d.norm_squared()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// `Δx_k`, `k = 0..N`.
    pub dx: Vec<Vector>,
    /// `Λ_j`, `j = 0..N−1`.
    pub lambda: Vec<Mat>,
    pub dj1_linear: f64,
    pub dj1_exact: f64,
    /// `S_k = Q₁ + K*₁,kᵀ R₁ K*₁,k`.
    pub sk: Vec<Mat>,
}

impl SensitivityReport {
    pub fn remainder(&self) -> f64 {
        self.dj1_exact - self.dj1_linear
    }
}

/// `Φ(k, j) = A_cl,k−1 ⋯ A_cl,j`, with `Φ(j, j) = I`.
pub fn transition_matrix(fne: &FneSolution, k: usize, j: usize) -> Result<Mat> {
    let horizon = fne.horizon();
    if j > k || k > horizon {
        return Err(Error::Domain(format!(
            "transition matrix needs 0 <= j <= k <= {horizon}, got k={k}, j={j}"
        )));
    }
    let n = fne.acl[0].nrows();
    Ok(fne.acl[j..k]
        .iter()
        .fold(Mat::identity(n, n), |phi, acl| acl * phi))
}

/// `Δx_{k+1} = A_cl,k Δx_k + B₂ Δu₂,k` from `Δx₀ = 0`.
pub fn state_perturbation(
    fne: &FneSolution,
    game: &GameDefinition,
    dev: &DeviationSequence,
) -> Result<Vec<Vector>> {
    let horizon = game.horizon();
    if dev.len() != horizon || fne.horizon() != horizon {
        return Err(Error::dim("deviation sequence", horizon, dev.len()));
    }
    let b2 = game.b(Player::Two);
    let mut dx = Vec::with_capacity(horizon + 1);
    dx.push(Vector::zeros(game.state_dim()));
    for (k, du) in dev.entries().iter().enumerate() {
        let next = &fne.acl[k] * &dx[k] + b2 * du;
        dx.push(next);
    }
    Ok(dx)
}

/// `S_k = Q₁ + K*₁,kᵀ R₁ K*₁,k` for `k = 0..N−1`.
pub fn stage_weights(fne: &FneSolution, game: &GameDefinition) -> Vec<Mat> {
    let (q1, r1) = (game.q(Player::One), game.r(Player::One));
    fne.k1
        .iter()
        .map(|k1| linalg::symmetrize_unchecked(&(q1 + k1.transpose() * r1 * k1)))
        .collect()
}

/// `Λ_j = Σ_{k=j+1}^{N−1} Φ(k,0)ᵀ S_k Φ(k,j+1) + Φ(N,0)ᵀ Q₁N Φ(N,j+1)`.
///
/// Accumulated backward as `Λ_{N−1} = Φ(N,0)ᵀQ₁N` and
/// `Λ_j = Φ(j+1,0)ᵀ S_{j+1} + Λ_{j+1} A_cl,j+1`.
pub fn lambda_coefficients(fne: &FneSolution, game: &GameDefinition) -> Vec<Mat> {
    let horizon = fne.horizon();
    let n = game.state_dim();
    let sk = stage_weights(fne, game);

    // Φ(k, 0) for k = 0..N
    let mut phi0 = Vec::with_capacity(horizon + 1);
    phi0.push(Mat::identity(n, n));
    for k in 0..horizon {
        let next = &fne.acl[k] * &phi0[k];
        phi0.push(next);
    }

    let mut lambda = vec![Mat::zeros(n, n); horizon];
    lambda[horizon - 1] = phi0[horizon].transpose() * game.q_terminal(Player::One);
    for j in (0..horizon - 1).rev() {
        lambda[j] = phi0[j + 1].transpose() * &sk[j + 1] + &lambda[j + 1] * &fne.acl[j + 1];
    }
    lambda
}

/// First-order change `2 Σ_j x₀ᵀ Λ_j B₂ Δu₂,j` of Player 1's cost, together
/// with the exact change from simulating both trajectories.
pub fn first_order_delta_j1(
    fne: &FneSolution,
    game: &GameDefinition,
    x0: &Vector,
    dev: &DeviationSequence,
) -> Result<SensitivityReport> {
    let dx = state_perturbation(fne, game, dev)?;
    let lambda = lambda_coefficients(fne, game);
    let b2 = game.b(Player::Two);
    let dj1_linear = 2.0
        * linalg::compensated_sum(
            lambda
                .iter()
                .zip(dev.entries())
                .map(|(l, du)| x0.dot(&(l * (b2 * du)))),
        );
    let dj1_exact = exact_delta_j1(fne, game, x0, dev)?;
    Ok(SensitivityReport {
        dx,
        lambda,
        dj1_linear,
        dj1_exact,
        sk: stage_weights(fne, game),
    })
}

/// `J₁(perturbed) − J₁(nominal)`, differenced stage by stage as
/// `(a − b)ᵀ M (a + b)` to avoid cancellation in the totals.
pub fn exact_delta_j1(
    fne: &FneSolution,
    game: &GameDefinition,
    x0: &Vector,
    dev: &DeviationSequence,
) -> Result<f64> {
    let nominal = sim::simulate_with_deviation(game, fne, DeviationSequence::zeros(game).entries(), x0)?;
    let perturbed = sim::simulate_with_deviation(game, fne, dev.entries(), x0)?;
    let diff = |m: &Mat, a: &Vector, b: &Vector| (a - b).dot(&(m * (a + b)));
    let (q1, r1) = (game.q(Player::One), game.r(Player::One));
    let horizon = game.horizon();
    let stages = (0..horizon)
        .map(|k| diff(q1, &perturbed.x[k], &nominal.x[k]) + diff(r1, &perturbed.u1[k], &nominal.u1[k]));
    let terminal = diff(
        game.q_terminal(Player::One),
        &perturbed.x[horizon],
        &nominal.x[horizon],
    );
    Ok(linalg::compensated_sum(stages.chain([terminal])))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub dj1_linear: f64,
    pub dj1_exact: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderSweep {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log|remainder|` against `log ε`.
    pub slope: f64,
}

/// Evaluates the linear and exact cost change along `ε·direction` for each
/// `ε` and fits the remainder order.
pub fn remainder_sweep(
    fne: &FneSolution,
    game: &GameDefinition,
    x0: &Vector,
    direction: &DeviationSequence,
    eps: &[f64],
) -> Result<RemainderSweep> {
    if eps.len() < 2 || eps.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::Domain(
            "sweep needs at least two positive step sizes".into(),
        ));
    }
    let mut rows = Vec::with_capacity(eps.len());
    for &e in eps {
        let report = first_order_delta_j1(fne, game, x0, &direction.scaled(e))?;
        rows.push(SweepRow {
            eps: e,
            dj1_linear: report.dj1_linear,
            dj1_exact: report.dj1_exact,
            remainder: report.remainder(),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.eps.ln(), r.remainder.abs().ln()))
        .collect();
    Ok(RemainderSweep {
        rows,
        slope: least_squares_slope(&points),
    })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    sxy / sxx
}
