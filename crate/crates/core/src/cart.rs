//! Two equal-mass carts joined by a spring and damper, one cart per player.
//!
//! State order is `[p₁, v₁, p₂, v₂]`; the continuous model is discretized
//! with forward Euler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Dynamics, GameDefinition, PlayerWeights};
use crate::linalg::{Mat, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCartParams {
    /// Cart mass [kg].
    pub m: f64,
    /// Spring constant [N/m].
    pub k_spring: f64,
    /// Damping coefficient [N·s/m].
    pub c_damper: f64,
    /// Sampling period [s].
    pub dt: f64,
}

impl Default for TwoCartParams {
    fn default() -> Self {
        TwoCartParams {
            m: 1.0,
            k_spring: 0.12,
            c_damper: 30.0,
            dt: 0.015,
        }
    }
}

/// Reference experiment constants.
pub const HORIZON: usize = 40;
pub const LAG_TAU: f64 = 0.8;
pub const X0: [f64; 4] = [0.5, 0.0, -0.5, 0.0];

/// Continuous-time `(A_c, B₁,c, B₂,c)`.
pub fn continuous_model(params: &TwoCartParams) -> Result<Dynamics> {
    let TwoCartParams {
        m,
        k_spring: k,
        c_damper: c,
        ..
    } = *params;
    if m.is_nan() || m <= 0.0 {
        return Err(Error::Domain(format!("cart mass must be positive, got {m}")));
    }
    let (km, cm) = (k / m, c / m);
    #[rustfmt::skip]
    let a = Mat::from_row_slice(4, 4, &[
        0.0, 1.0, 0.0, 0.0,
        -km, -cm,  km,  cm,
        0.0, 0.0, 0.0, 1.0,
         km,  cm, -km, -cm,
    ]);
    Ok(Dynamics {
        a,
        b1: Mat::from_column_slice(4, 1, &[0.0, 1.0 / m, 0.0, 0.0]),
        b2: Mat::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0 / m]),
    })
}

/// Forward-Euler discretization `A = I + dt·A_c`, `Bᵢ = dt·Bᵢ,c`.
pub fn build_two_cart(params: &TwoCartParams) -> Result<Dynamics> {
    if params.dt.is_nan() || params.dt <= 0.0 {
        return Err(Error::Domain(format!(
            "sampling period must be positive, got {}",
            params.dt
        )));
    }
    let cont = continuous_model(params)?;
    Ok(Dynamics {
        a: Mat::identity(4, 4) + cont.a * params.dt,
        b1: cont.b1 * params.dt,
        b2: cont.b2 * params.dt,
    })
}

pub fn player1_state_weight() -> Mat {
    Mat::from_diagonal(&Vector::from_vec(vec![10.0, 2.0, 0.0, 0.0]))
}

pub fn player2_state_weight() -> Mat {
    Mat::from_diagonal(&Vector::from_vec(vec![0.0, 0.0, 10.0, 2.0]))
}

pub fn control_weight() -> Mat {
    Mat::from_element(1, 1, 0.05)
}

/// Terminal-weight choice for the reference experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalWeights {
    /// `Qᵢ,N = Qᵢ`.
    #[default]
    StageWeights,
    /// `Qᵢ,N = 0`.
    Zero,
}

/// The reference two-cart game with the given terminal-weight choice.
pub fn reference_game(terminal: TerminalWeights) -> Result<GameDefinition> {
    let dynamics = build_two_cart(&TwoCartParams::default())?;
    let (q1, q2) = (player1_state_weight(), player2_state_weight());
    let (q1n, q2n) = match terminal {
        TerminalWeights::StageWeights => (q1.clone(), q2.clone()),
        TerminalWeights::Zero => (Mat::zeros(4, 4), Mat::zeros(4, 4)),
    };
    GameDefinition::new(
        dynamics,
        PlayerWeights::with_terminal(q1, q1n, control_weight()),
        PlayerWeights::with_terminal(q2, q2n, control_weight()),
        HORIZON,
    )
}

pub fn reference_x0() -> Vector {
    Vector::from_row_slice(&X0)
}
