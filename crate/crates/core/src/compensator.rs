//! Compensated feedback for Player 1 when Player 2 executes its Nash command
//! through a first-order actuator lag.
//!
//! The lagged execution error `w_k = B₂(u₂,k − u*₂,k)` obeys
//! `w_{k+1} = α w_k + B₂(K*₂,k+1 x_{k+1} − K*₂,k x_k)`. Stacking `z = [x; w]`
//! gives a time-varying linear system on which Player 1 solves a standard
//! finite-horizon LQR problem; the resulting policy is `u₁ = −K x − L w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fne::FneSolution;
use crate::game::{GameDefinition, Player};
use crate::linalg::{self, Mat, Vector};

/// Value of Player 2's applied input at stage 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialInputMode {
    /// `u₂,₀ = 0`, so `w₀ = −B₂ u*₂,₀`.
    #[default]
    ColdStart,
    /// `u₂,₀ = u*₂,₀`, so `w₀ = 0`.
    Matched,
}

/// Discrete first-order actuator lag `u₂,k+1 = α u₂,k + (1−α) u*₂,k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagModel {
    pub tau: f64,
    pub dt: f64,
    pub alpha: f64,
    pub initial_input_mode: InitialInputMode,
}

impl LagModel {
    /// Zero-order-hold pole `α = exp(−dt/τ)`.
    pub fn new(tau: f64, dt: f64, initial_input_mode: InitialInputMode) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!(
                "lag time constant must be positive, got {tau}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!(
                "sampling period must be positive, got {dt}"
            )));
        }
        let alpha = (-dt / tau).exp();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!(
                "lag factor exp(-{dt}/{tau}) = {alpha} is outside (0, 1)"
            )));
        }
        Ok(LagModel {
            tau,
            dt,
            alpha,
            initial_input_mode,
        })
    }

    pub fn with_mode(self, initial_input_mode: InitialInputMode) -> Self {
        LagModel {
            initial_input_mode,
            ..self
        }
    }

    /// Player 2's applied input at stage 0 given its intended command.
    pub fn initial_input(&self, intended: &Vector) -> Vector {
        match self.initial_input_mode {
            InitialInputMode::ColdStart => Vector::zeros(intended.len()),
            InitialInputMode::Matched => intended.clone(),
        }
    }

    /// Next applied input from the current applied and intended inputs.
    pub fn step(&self, applied: &Vector, intended: &Vector) -> Vector {
        applied * self.alpha + intended * (1.0 - self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationMode {
    /// Exact lagged error dynamics including the drive from Player 2's
    /// changing Nash command.
    FullLag,
    /// Drive term dropped: `w_{k+1} = α w_k`.
    SlowVarying,
}

/// Choice for `K*₂,N`, which the stage `N−1` block of `Ā` refers to but the
/// equilibrium does not define.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TerminalGainConvention {
    #[default]
    Zero,
    RepeatLast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    /// `Ā_k`, 2n×2n.
    pub abar: Vec<Mat>,
    /// `B̄_k`, 2n×m₁.
    pub bbar: Vec<Mat>,
    /// `A − B₂K*₂,k`.
    pub a_eff: Vec<Mat>,
    pub qbar: Mat,
    pub qbar_terminal: Mat,
    pub mode: AugmentationMode,
    pub alpha: f64,
}

impl AugmentedSystem {
    pub fn horizon(&self) -> usize {
        self.abar.len()
    }

    pub fn state_dim(&self) -> usize {
        self.qbar.nrows() / 2
    }
}

fn block_diag_first(top_left: &Mat) -> Mat {
    let n = top_left.nrows();
    let mut out = Mat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(top_left);
    out
}

pub fn build_augmented_system(
    game: &GameDefinition,
    fne: &FneSolution,
    lag: &LagModel,
    mode: AugmentationMode,
) -> Result<AugmentedSystem> {
    build_augmented_system_with(game, fne, lag, mode, TerminalGainConvention::Zero)
}

pub fn build_augmented_system_with(
    game: &GameDefinition,
    fne: &FneSolution,
    lag: &LagModel,
    mode: AugmentationMode,
    convention: TerminalGainConvention,
) -> Result<AugmentedSystem> {
    let horizon = game.horizon();
    let n = game.state_dim();
    if fne.horizon() != horizon {
        return Err(Error::dim("equilibrium horizon", horizon, fne.horizon()));
    }
    let b1 = game.b(Player::One);
    let b2 = game.b(Player::Two);
    let eye = Mat::identity(n, n);

    let mut abar = Vec::with_capacity(horizon);
    let mut bbar = Vec::with_capacity(horizon);
    let mut a_eff = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let k2 = &fne.k2[k];
        let k2_next = if k + 1 < horizon {
            fne.k2[k + 1].clone()
        } else {
            match convention {
                TerminalGainConvention::Zero => Mat::zeros(k2.nrows(), k2.ncols()),
                TerminalGainConvention::RepeatLast => k2.clone(),
            }
        };
        let eff = game.a() - b2 * k2;
        let mut a_k = Mat::zeros(2 * n, 2 * n);
        let mut b_k = Mat::zeros(2 * n, b1.ncols());
        a_k.view_mut((0, 0), (n, n)).copy_from(&eff);
        a_k.view_mut((0, n), (n, n)).copy_from(&eye);
        b_k.rows_mut(0, n).copy_from(b1);
        match mode {
            AugmentationMode::FullLag => {
                let drive = b2 * &k2_next;
                a_k.view_mut((n, 0), (n, n)).copy_from(&(&drive * &eff - b2 * k2));
                a_k.view_mut((n, n), (n, n))
                    .copy_from(&(&eye * lag.alpha + &drive));
                b_k.rows_mut(n, n).copy_from(&(&drive * b1));
            }
            AugmentationMode::SlowVarying => {
                a_k.view_mut((n, n), (n, n)).copy_from(&(&eye * lag.alpha));
            }
        }
        abar.push(a_k);
        bbar.push(b_k);
        a_eff.push(eff);
    }

    Ok(AugmentedSystem {
        abar,
        bbar,
        a_eff,
        qbar: block_diag_first(game.q(Player::One)),
        qbar_terminal: block_diag_first(game.q_terminal(Player::One)),
        mode,
        alpha: lag.alpha,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorGains {
    /// State gains `K_k`, m₁×n.
    pub k: Vec<Mat>,
    /// Disturbance gains `L_k`, m₁×n.
    pub l: Vec<Mat>,
    /// `P̄_k`, `k = 0..N`.
    pub pbar: Vec<Mat>,
    /// `𝓗_k = R₁ + B̄_kᵀ P̄_{k+1} B̄_k`.
    pub h: Vec<Mat>,
    pub bbar: Vec<Mat>,
    pub mode: AugmentationMode,
    /// `P^{xx}_k` from the block recursion (slow-varying mode only).
    pub pxx: Vec<Mat>,
    /// `P^{xw}_k` from the block recursion (slow-varying mode only).
    pub pxw: Vec<Mat>,
}

impl CompensatorGains {
    pub fn horizon(&self) -> usize {
        self.k.len()
    }

    pub fn state_dim(&self) -> usize {
        self.pbar[0].nrows() / 2
    }

    /// `u₁ = −K_k x − L_k w`.
    pub fn control(&self, stage: usize, x: &Vector, w: &Vector) -> Vector {
        -(&self.k[stage] * x) - &self.l[stage] * w
    }
}

/// Tolerance for the block-recursion cross-check in slow-varying mode.
const BLOCK_MATCH_TOL: f64 = 1e-10;

/// Backward Riccati recursion on the augmented system and the resulting
/// compensated gains.
pub fn solve_compensator(game: &GameDefinition, aug: &AugmentedSystem) -> Result<CompensatorGains> {
    let horizon = aug.horizon();
    let n = aug.state_dim();
    if horizon != game.horizon() || n != game.state_dim() {
        return Err(Error::dim(
            "augmented system",
            format!("horizon {} / state {}", game.horizon(), game.state_dim()),
            format!("horizon {horizon} / state {n}"),
        ));
    }
    let r1 = game.r(Player::One);

    let mut pbar = vec![Mat::zeros(0, 0); horizon + 1];
    let mut h = vec![Mat::zeros(0, 0); horizon];
    let mut k_gains = vec![Mat::zeros(0, 0); horizon];
    let mut l_gains = vec![Mat::zeros(0, 0); horizon];
    pbar[horizon] = aug.qbar_terminal.clone();

    for k in (0..horizon).rev() {
        let (a, b) = (&aug.abar[k], &aug.bbar[k]);
        let p_next = &pbar[k + 1];
        let pa = p_next * a;
        let bt_pa = b.transpose() * &pa;
        let h_k = linalg::symmetrize_unchecked(&(r1 + b.transpose() * p_next * b));
        let chol = h_k
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InternalConsistency(format!("H_{k} is not positive definite")))?;
        let gain = chol.solve(&bt_pa);
        let p = &aug.qbar + a.transpose() * &pa - bt_pa.transpose() * &gain;
        pbar[k] = linalg::symmetrize_unchecked(&p);
        k_gains[k] = gain.columns(0, n).into_owned();
        l_gains[k] = gain.columns(n, n).into_owned();
        h[k] = h_k;
    }

    let (pxx, pxw) = match aug.mode {
        AugmentationMode::FullLag => (Vec::new(), Vec::new()),
        AugmentationMode::SlowVarying => {
            let (pxx, pxw) = slow_varying_blocks(game, aug)?;
            for k in 0..=horizon {
                let dxx = linalg::max_abs_diff(&pxx[k], &pbar[k].view((0, 0), (n, n)).into_owned());
                let dxw = linalg::max_abs_diff(&pxw[k], &pbar[k].view((0, n), (n, n)).into_owned());
                if dxx > BLOCK_MATCH_TOL || dxw > BLOCK_MATCH_TOL {
                    return Err(Error::InternalConsistency(format!(
                        "block recursion disagrees with augmented Riccati at stage {k} \
                         (xx {dxx:.3e}, xw {dxw:.3e})"
                    )));
                }
            }
            (pxx, pxw)
        }
    };

    Ok(CompensatorGains {
        k: k_gains,
        l: l_gains,
        pbar,
        h,
        bbar: aug.bbar.clone(),
        mode: aug.mode,
        pxx,
        pxw,
    })
}

/// `P^{xx}` and `P^{xw}` from their own recursions when the error decays
/// geometrically (`w_{k+1} = α w_k`).
pub fn slow_varying_blocks(game: &GameDefinition, aug: &AugmentedSystem) -> Result<(Vec<Mat>, Vec<Mat>)> {
    let horizon = aug.horizon();
    let n = aug.state_dim();
    let alpha = aug.alpha;
    let b1 = game.b(Player::One);
    let r1 = game.r(Player::One);
    let q1 = game.q(Player::One);

    let mut pxx = vec![Mat::zeros(n, n); horizon + 1];
    let mut pxw = vec![Mat::zeros(n, n); horizon + 1];
    pxx[horizon] = game.q_terminal(Player::One).clone();
    for k in (0..horizon).rev() {
        let a_eff = &aug.a_eff[k];
        let (xx, xw) = (&pxx[k + 1], &pxw[k + 1]);
        let h = r1 + b1.transpose() * xx * b1;
        let h_inv_bt = linalg::solve(&h, &b1.transpose())
            .ok_or_else(|| Error::InternalConsistency(format!("H_{k} singular in block recursion")))?;
        let at_xx_b = a_eff.transpose() * xx * b1;
        let cross = xx + xw * alpha;
        let next_xx = q1 + a_eff.transpose() * xx * a_eff - &at_xx_b * &h_inv_bt * xx * a_eff;
        let next_xw = a_eff.transpose() * xx + a_eff.transpose() * xw * alpha - &at_xx_b * &h_inv_bt * &cross;
        pxx[k] = linalg::symmetrize_unchecked(&next_xx);
        pxw[k] = next_xw;
    }
    Ok((pxx, pxw))
}

/// State/disturbance trajectory of an affine policy on the augmented system.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRollout {
    /// `z_k = [x_k; w_k]`, `k = 0..N`.
    pub z: Vec<Vector>,
    pub u1: Vec<Vector>,
    pub j1: f64,
}

/// `z₀ = [x₀; w₀]` with `w₀` set by the lag's initial input mode.
pub fn initial_augmented_state(
    game: &GameDefinition,
    fne: &FneSolution,
    lag: &LagModel,
    x0: &Vector,
) -> Vector {
    let n = game.state_dim();
    let intended = -(&fne.k2[0] * x0);
    let applied = lag.initial_input(&intended);
    let w0 = game.b(Player::Two) * (applied - intended);
    let mut z = Vector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(x0);
    z.rows_mut(n, n).copy_from(&w0);
    z
}

/// Rolls the policy `u₁ = −K_k x − L_k w` forward on `z_{k+1} = Ā_k z_k + B̄_k u₁`
/// and accumulates Player 1's cost.
pub fn rollout_augmented(
    game: &GameDefinition,
    aug: &AugmentedSystem,
    k_gains: &[Mat],
    l_gains: &[Mat],
    z0: &Vector,
) -> Result<AugmentedRollout> {
    let horizon = aug.horizon();
    let n = aug.state_dim();
    if k_gains.len() != horizon || l_gains.len() != horizon {
        return Err(Error::dim(
            "policy gains",
            horizon,
            format!("{} / {}", k_gains.len(), l_gains.len()),
        ));
    }
    if z0.len() != 2 * n {
        return Err(Error::dim("augmented state", 2 * n, z0.len()));
    }
    let r1 = game.r(Player::One);
    let mut z = Vec::with_capacity(horizon + 1);
    let mut u1 = Vec::with_capacity(horizon);
    let mut cost = Vec::with_capacity(horizon + 1);
    z.push(z0.clone());
    for k in 0..horizon {
        let zk = &z[k];
        let x = zk.rows(0, n).into_owned();
        let w = zk.rows(n, n).into_owned();
        let u = -(&k_gains[k] * x) - &l_gains[k] * w;
        cost.push(linalg::quad_form(&aug.qbar, zk) + linalg::quad_form(r1, &u));
        let next = &aug.abar[k] * zk + &aug.bbar[k] * &u;
        z.push(next);
        u1.push(u);
    }
    cost.push(linalg::quad_form(&aug.qbar_terminal, &z[horizon]));
    Ok(AugmentedRollout {
        z,
        u1,
        j1: linalg::compensated_sum(cost),
    })
}

/// `Σ_k (ũ_k − u*_k)ᵀ 𝓗_k (ũ_k − u*_k)` with both policies evaluated on the
/// alternative policy's augmented states. Equals `J₁(alt) − J₁(optimal)`.
pub fn gap_value(
    gains: &CompensatorGains,
    alt_k: &[Mat],
    alt_l: &[Mat],
    rollout_states: &[Vector],
) -> Result<f64> {
    let horizon = gains.horizon();
    let n = gains.state_dim();
    if alt_k.len() != horizon || alt_l.len() != horizon {
        return Err(Error::dim(
            "alternative gains",
            horizon,
            format!("{} / {}", alt_k.len(), alt_l.len()),
        ));
    }
    if rollout_states.len() < horizon {
        return Err(Error::dim("rollout states", horizon, rollout_states.len()));
    }
    let mut terms = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let z = &rollout_states[k];
        if z.len() != 2 * n {
            return Err(Error::dim("augmented state", 2 * n, z.len()));
        }
        if alt_k[k].shape() != gains.k[k].shape() || alt_l[k].shape() != gains.l[k].shape() {
            return Err(Error::dim(
                "alternative gain shape",
                format!("{:?}", gains.k[k].shape()),
                format!("{:?} / {:?}", alt_k[k].shape(), alt_l[k].shape()),
            ));
        }
        let x = z.rows(0, n).into_owned();
        let w = z.rows(n, n).into_owned();
        // ũ − u* = (K − K̃) x + (L − L̃) w
        let diff = (&gains.k[k] - &alt_k[k]) * x + (&gains.l[k] - &alt_l[k]) * w;
        terms.push(linalg::quad_form(&gains.h[k], &diff));
    }
    Ok(linalg::compensated_sum(terms))
}

/// Second-order estimate `−Σ_k ‖𝓗_k^{−½} B̄_kᵀ P̄_{k+1} [0; w_k]‖²` of the
/// Player 1 cost change obtained by compensating. Never positive.
pub fn local_gain_estimate(gains: &CompensatorGains, w_trajectory: &[Vector]) -> Result<f64> {
    let horizon = gains.horizon();
    let n = gains.state_dim();
    if w_trajectory.len() < horizon {
        return Err(Error::dim("disturbance trajectory", horizon, w_trajectory.len()));
    }
    let mut terms = Vec::with_capacity(horizon);
    for (k, w) in w_trajectory.iter().take(horizon).enumerate() {
        if w.len() != n {
            return Err(Error::dim("disturbance", n, w.len()));
        }
        let h_inv_sqrt = linalg::sym_inv_sqrt(&gains.h[k])?;
        let p_w = gains.pbar[k + 1].columns(n, n) * w;
        let v = h_inv_sqrt * gains.bbar[k].transpose() * p_w;
        terms.push(v.norm_squared());
    }
    Ok(-linalg::compensated_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_factor_from_time_constant() {
        let lag = LagModel::new(0.8, 0.015, InitialInputMode::ColdStart).unwrap();
        assert!((lag.alpha - 0.9814).abs() < 5e-5);
        let half = LagModel::new(1.0 / std::f64::consts::LN_2, 1.0, InitialInputMode::Matched).unwrap();
        assert!((half.alpha - 0.5).abs() < 1e-15);
        let fast = LagModel::new(0.015 / 40.0, 0.015, InitialInputMode::Matched).unwrap();
        assert!((fast.alpha - (-40.0_f64).exp()).abs() < 1e-30);
        assert!(fast.alpha < 5e-18 && fast.alpha > 4e-18);
    }

    #[test]
    fn lag_rejects_non_positive_parameters() {
        for (tau, dt) in [(0.0, 0.1), (-1.0, 0.1), (0.1, 0.0), (0.1, -0.5)] {
            assert!(matches!(
                LagModel::new(tau, dt, InitialInputMode::ColdStart),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn lag_step_and_initial_input() {
        let lag = LagModel::new(1.0 / std::f64::consts::LN_2, 1.0, InitialInputMode::ColdStart).unwrap();
        let intended = Vector::from_vec(vec![2.0]);
        assert_eq!(lag.initial_input(&intended)[0], 0.0);
        assert_eq!(
            lag.with_mode(InitialInputMode::Matched).initial_input(&intended)[0],
            2.0
        );
        let next = lag.step(&Vector::from_vec(vec![0.0]), &intended);
        assert!((next[0] - 1.0).abs() < 1e-15);
    }
}
