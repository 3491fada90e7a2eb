//! Feedback Nash equilibrium via the coupled backward Riccati recursion.

use crate::error::{Error, Result};
use crate::game::{GameDefinition, Player};
use crate::linalg::{self, Mat};

/// Per-stage Nash gains, value matrices and closed-loop matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FneSolution {
    /// `K*₁,k`, `k = 0..N−1`.
    pub k1: Vec<Mat>,
    /// `K*₂,k`, `k = 0..N−1`.
    pub k2: Vec<Mat>,
    /// `P̃₁,k`, `k = 0..N`, with `P̃₁,N = Q₁N`.
    pub p1: Vec<Mat>,
    /// `P̃₂,k`, `k = 0..N`, with `P̃₂,N = Q₂N`.
    pub p2: Vec<Mat>,
    /// `A − B₁K*₁,k − B₂K*₂,k`.
    pub acl: Vec<Mat>,
}

impl FneSolution {
    pub fn horizon(&self) -> usize {
        self.k1.len()
    }

    pub fn gains(&self, player: Player) -> &[Mat] {
        match player {
            Player::One => &self.k1,
            Player::Two => &self.k2,
        }
    }

    pub fn riccati(&self, player: Player) -> &[Mat] {
        match player {
            Player::One => &self.p1,
            Player::Two => &self.p2,
        }
    }

    /// Max-norm residual of both stationarity conditions over all stages.
    pub fn stationarity_residual(&self, game: &GameDefinition) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.horizon() {
            for (player, gains, p) in [
                (Player::One, &self.k1, &self.p1),
                (Player::Two, &self.k2, &self.p2),
            ] {
                let b = game.b(player);
                let b_opp = game.b(player.opponent());
                let k_opp = &self.gains(player.opponent())[k];
                let h = game.r(player) + b.transpose() * &p[k + 1] * b;
                let drift = game.a() - b_opp * k_opp;
                let lhs = h * &gains[k];
                let rhs = b.transpose() * &p[k + 1] * drift;
                worst = worst.max(linalg::max_abs_diff(&lhs, &rhs));
            }
        }
        worst
    }
}

/// One step of the backward sweep.
#[derive(Debug, Clone)]
pub(crate) struct StageRecord {
    pub stage: usize,
    pub k1: Mat,
    pub k2: Mat,
    pub p1: Mat,
    pub p2: Mat,
    pub p1_next: Mat,
    pub p2_next: Mat,
    pub condition: f64,
}

/// Runs the coupled recursion from `k = N−1` down to `0`, stopping at the
/// first singular stage. Records are returned in backward order.
pub(crate) fn coupled_recursion(game: &GameDefinition) -> (Vec<StageRecord>, Option<Error>) {
    let n = game.state_dim();
    let (b1, b2) = (game.b(Player::One), game.b(Player::Two));
    let (m1, m2) = (b1.ncols(), b2.ncols());
    let a = game.a();

    let mut p1 = game.q_terminal(Player::One).clone();
    let mut p2 = game.q_terminal(Player::Two).clone();
    let mut records = Vec::with_capacity(game.horizon());

    for k in (0..game.horizon()).rev() {
        // [R₁+B₁ᵀP₁B₁   B₁ᵀP₁B₂ ] [K₁]   [B₁ᵀP₁A]
        // [B₂ᵀP₂B₁   R₂+B₂ᵀP₂B₂ ] [K₂] = [B₂ᵀP₂A]
        let p1b1 = &p1 * b1;
        let p2b2 = &p2 * b2;
        let mut lhs = Mat::zeros(m1 + m2, m1 + m2);
        lhs.view_mut((0, 0), (m1, m1))
            .copy_from(&(game.r(Player::One) + b1.transpose() * &p1b1));
        lhs.view_mut((0, m1), (m1, m2))
            .copy_from(&(p1b1.transpose() * b2));
        lhs.view_mut((m1, 0), (m2, m1))
            .copy_from(&(p2b2.transpose() * b1));
        lhs.view_mut((m1, m1), (m2, m2))
            .copy_from(&(game.r(Player::Two) + b2.transpose() * &p2b2));
        let mut rhs = Mat::zeros(m1 + m2, n);
        rhs.rows_mut(0, m1).copy_from(&(p1b1.transpose() * a));
        rhs.rows_mut(m1, m2).copy_from(&(p2b2.transpose() * a));

        let condition = linalg::condition_number(&lhs);
        let singular = Error::SingularStageSystem { stage: k, condition };
        if condition.is_nan() || condition >= linalg::SINGULAR_CONDITION {
            return (records, Some(singular));
        }
        let Some(gains) = linalg::solve(&lhs, &rhs) else {
            return (records, Some(singular));
        };
        let k1 = gains.rows(0, m1).into_owned();
        let k2 = gains.rows(m1, m2).into_owned();

        let Some(p1_new) =
            player_riccati_step(game.q(Player::One), game.r(Player::One), b1, &(a - b2 * &k2), &p1)
        else {
            return (records, Some(singular));
        };
        let Some(p2_new) =
            player_riccati_step(game.q(Player::Two), game.r(Player::Two), b2, &(a - b1 * &k1), &p2)
        else {
            return (records, Some(singular));
        };

        records.push(StageRecord {
            stage: k,
            k1,
            k2,
            p1: p1_new.clone(),
            p2: p2_new.clone(),
            p1_next: std::mem::replace(&mut p1, p1_new),
            p2_next: std::mem::replace(&mut p2, p2_new),
            condition,
        });
    }
    (records, None)
}

/// `Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA`, symmetrized.
fn player_riccati_step(q: &Mat, r: &Mat, b: &Mat, drift: &Mat, p_next: &Mat) -> Option<Mat> {
    let pa = p_next * drift;
    let bt_pa = b.transpose() * &pa;
    let h = r + b.transpose() * p_next * b;
    let gain = linalg::solve(&h, &bt_pa)?;
    let p = q + drift.transpose() * &pa - bt_pa.transpose() * gain;
    Some(linalg::symmetrize_unchecked(&p))
}

/// Computes the feedback Nash equilibrium by solving, at each stage, the two
/// coupled stationarity conditions as one stacked linear system.
pub fn solve_fne(game: &GameDefinition) -> Result<FneSolution> {
    let (records, failure) = coupled_recursion(game);
    if let Some(e) = failure {
        return Err(e);
    }
    let horizon = game.horizon();
    let mut sol = FneSolution {
        k1: Vec::with_capacity(horizon),
        k2: Vec::with_capacity(horizon),
        p1: Vec::with_capacity(horizon + 1),
        p2: Vec::with_capacity(horizon + 1),
        acl: Vec::with_capacity(horizon),
    };
    // records run k = N−1 → 0
    for rec in records.into_iter().rev() {
        sol.acl
            .push(game.a() - game.b(Player::One) * &rec.k1 - game.b(Player::Two) * &rec.k2);
        sol.k1.push(rec.k1);
        sol.k2.push(rec.k2);
        sol.p1.push(rec.p1);
        sol.p2.push(rec.p2);
    }
    sol.p1.push(game.q_terminal(Player::One).clone());
    sol.p2.push(game.q_terminal(Player::Two).clone());
    Ok(sol)
}

/// Finite-horizon LQR gains for `player` against the opponent's fixed
/// time-varying feedback `u₋ᵢ,k = −K₋ᵢ,k x_k`.
pub fn best_response_gains(
    game: &GameDefinition,
    player: Player,
    opponent_gains: &[Mat],
) -> Result<Vec<Mat>> {
    let horizon = game.horizon();
    let n = game.state_dim();
    let opponent = player.opponent();
    if opponent_gains.len() != horizon {
        return Err(Error::dim(
            "opponent gain sequence",
            horizon,
            opponent_gains.len(),
        ));
    }
    let m_opp = game.input_dim(opponent);
    if let Some(bad) = opponent_gains
        .iter()
        .find(|g| g.nrows() != m_opp || g.ncols() != n)
    {
        return Err(Error::dim(
            "opponent gain",
            format!("{m_opp}x{n}"),
            format!("{}x{}", bad.nrows(), bad.ncols()),
        ));
    }

    let b = game.b(player);
    let b_opp = game.b(opponent);
    let (q, r) = (game.q(player), game.r(player));
    let mut p = game.q_terminal(player).clone();
    let mut gains = vec![Mat::zeros(b.ncols(), n); horizon];
    for k in (0..horizon).rev() {
        let drift = game.a() - b_opp * &opponent_gains[k];
        let pa = &p * &drift;
        let h = r + b.transpose() * &p * b;
        let gain = linalg::solve(&h, &(b.transpose() * &pa)).ok_or_else(|| {
            Error::InternalConsistency(format!("best-response Hessian singular at stage {k}"))
        })?;
        let p_new = q + drift.transpose() * &pa - (b.transpose() * &pa).transpose() * &gain;
        p = linalg::symmetrize_unchecked(&p_new);
        gains[k] = gain;
    }
    Ok(gains)
}
