//! Game model and the well-posedness checks for the two-player LQ game.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fne::{self, FneSolution};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "player {}", self.index())
    }
}

/// Joint linear dynamics `x⁺ = A x + B₁ u₁ + B₂ u₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    pub a: Mat,
    pub b1: Mat,
    pub b2: Mat,
}

/// Stage, terminal and control weights of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerWeights {
    pub q: Mat,
    pub q_terminal: Mat,
    pub r: Mat,
}

impl PlayerWeights {
    /// Weights with the terminal weight equal to the stage weight.
    pub fn new(q: Mat, r: Mat) -> Self {
        PlayerWeights {
            q_terminal: q.clone(),
            q,
            r,
        }
    }

    pub fn with_terminal(q: Mat, q_terminal: Mat, r: Mat) -> Self {
        PlayerWeights { q, q_terminal, r }
    }

    /// Multiplies every weight by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        PlayerWeights {
            q: &self.q * c,
            q_terminal: &self.q_terminal * c,
            r: &self.r * c,
        }
    }
}

/// A finite-horizon two-player nonzero-sum LQ game. Dimensions are checked at
/// construction; definiteness is checked by [`validate_game`].
#[derive(Debug, Clone, PartialEq)]
pub struct GameDefinition {
    dynamics: Dynamics,
    player1: PlayerWeights,
    player2: PlayerWeights,
    horizon: usize,
}

impl GameDefinition {
    pub fn new(
        dynamics: Dynamics,
        player1: PlayerWeights,
        player2: PlayerWeights,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        let n = dynamics.a.nrows();
        if n == 0 || !dynamics.a.is_square() {
            return Err(Error::dim("A", "non-empty square matrix", shape(&dynamics.a)));
        }
        for (name, b) in [("B1", &dynamics.b1), ("B2", &dynamics.b2)] {
            if b.nrows() != n || b.ncols() == 0 {
                return Err(Error::dim(name, format!("{n}xm (m>0)"), shape(b)));
            }
        }
        let check = |name: &'static str, m: &Mat, size: usize| {
            if m.nrows() != size || m.ncols() != size {
                Err(Error::dim(name, format!("{size}x{size}"), shape(m)))
            } else if m.iter().any(|v| !v.is_finite()) {
                Err(Error::Domain(format!("{name} has non-finite entries")))
            } else {
                Ok(())
            }
        };
        check("A", &dynamics.a, n)?;
        check("Q1", &player1.q, n)?;
        check("Q1N", &player1.q_terminal, n)?;
        check("R1", &player1.r, dynamics.b1.ncols())?;
        check("Q2", &player2.q, n)?;
        check("Q2N", &player2.q_terminal, n)?;
        check("R2", &player2.r, dynamics.b2.ncols())?;
        if dynamics
            .b1
            .iter()
            .chain(dynamics.b2.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Domain("input matrices have non-finite entries".into()));
        }
        Ok(GameDefinition {
            dynamics,
            player1,
            player2,
            horizon,
        })
    }

    pub fn a(&self) -> &Mat {
        &self.dynamics.a
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn b(&self, player: Player) -> &Mat {
        match player {
            Player::One => &self.dynamics.b1,
            Player::Two => &self.dynamics.b2,
        }
    }

    pub fn weights(&self, player: Player) -> &PlayerWeights {
        match player {
            Player::One => &self.player1,
            Player::Two => &self.player2,
        }
    }

    pub fn q(&self, player: Player) -> &Mat {
        &self.weights(player).q
    }

    pub fn q_terminal(&self, player: Player) -> &Mat {
        &self.weights(player).q_terminal
    }

    pub fn r(&self, player: Player) -> &Mat {
        &self.weights(player).r
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Joint state dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.dynamics.a.nrows()
    }

    pub fn input_dim(&self, player: Player) -> usize {
        self.b(player).ncols()
    }

    /// Same game with one player's weights replaced.
    pub fn with_weights(&self, player: Player, weights: PlayerWeights) -> Result<Self> {
        let (p1, p2) = match player {
            Player::One => (weights, self.player2.clone()),
            Player::Two => (self.player1.clone(), weights),
        };
        GameDefinition::new(self.dynamics.clone(), p1, p2, self.horizon)
    }

    /// Same game with both terminal weights replaced.
    pub fn with_terminal_weights(&self, q1_terminal: Mat, q2_terminal: Mat) -> Result<Self> {
        let mut p1 = self.player1.clone();
        let mut p2 = self.player2.clone();
        p1.q_terminal = q1_terminal;
        p2.q_terminal = q2_terminal;
        GameDefinition::new(self.dynamics.clone(), p1, p2, self.horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        GameDefinition::new(
            self.dynamics.clone(),
            self.player1.clone(),
            self.player2.clone(),
            horizon,
        )
    }

    /// The game in coordinates `x̃ = T x`.
    pub fn transformed(&self, t: &Mat) -> Result<Self> {
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("similarity transform is singular".into()))?;
        let congruence = |m: &Mat| t_inv.transpose() * m * &t_inv;
        let dynamics = Dynamics {
            a: t * &self.dynamics.a * &t_inv,
            b1: t * &self.dynamics.b1,
            b2: t * &self.dynamics.b2,
        };
        let map = |w: &PlayerWeights| PlayerWeights {
            q: congruence(&w.q),
            q_terminal: congruence(&w.q_terminal),
            r: w.r.clone(),
        };
        GameDefinition::new(dynamics, map(&self.player1), map(&self.player2), self.horizon)
    }
}

fn shape(m: &Mat) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

/// Definiteness flags for each weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DefinitenessFlags {
    pub q1: bool,
    pub q2: bool,
    pub q1_terminal: bool,
    pub q2_terminal: bool,
    pub r1: bool,
    pub r2: bool,
}

impl DefinitenessFlags {
    pub fn all(&self) -> bool {
        self.q1 && self.q2 && self.q1_terminal && self.q2_terminal && self.r1 && self.r2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub psd_ok: DefinitenessFlags,
    pub controllable: bool,
    /// One entry per stage `k = 0..N−1`.
    pub mk_invertible: Vec<bool>,
    /// Condition number of `M_k` for each stage.
    pub mk_condition: Vec<f64>,
    /// Condition number of the stacked gain system for each stage.
    pub stage_system_condition: Vec<f64>,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.psd_ok.all() && self.controllable && self.mk_invertible.iter().all(|&b| b)
    }
}

/// Kalman rank test of `(A, [B₁ B₂])`.
pub fn is_controllable(game: &GameDefinition) -> bool {
    let n = game.state_dim();
    let b = concat_columns(game.b(Player::One), game.b(Player::Two));
    let mut blocks = Vec::with_capacity(n);
    let mut block = b;
    for _ in 0..n {
        let next = game.a() * &block;
        blocks.push(block);
        block = next;
    }
    let cols: usize = blocks.iter().map(|m| m.ncols()).sum();
    let mut ctrb = Mat::zeros(n, cols);
    let mut offset = 0;
    for b in &blocks {
        ctrb.columns_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    linalg::numerical_rank(&ctrb, n) == n
}

pub(crate) fn concat_columns(left: &Mat, right: &Mat) -> Mat {
    let mut out = Mat::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    out
}

/// `M_k = [[I, F₁, F₂], [P₁, −I, 0], [P₂, 0, −I]]` with `Fᵢ = Bᵢ Rᵢ⁻¹ Bᵢᵀ`.
pub fn coupling_matrix(f1: &Mat, f2: &Mat, p1: &Mat, p2: &Mat) -> Mat {
    let n = p1.nrows();
    let eye = Mat::identity(n, n);
    let mut m = Mat::zeros(3 * n, 3 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&eye);
    m.view_mut((0, n), (n, n)).copy_from(f1);
    m.view_mut((0, 2 * n), (n, n)).copy_from(f2);
    m.view_mut((n, 0), (n, n)).copy_from(p1);
    m.view_mut((n, n), (n, n)).copy_from(&(-&eye));
    m.view_mut((2 * n, 0), (n, n)).copy_from(p2);
    m.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(-&eye));
    m
}

/// Checks the sufficient conditions for a unique feedback Nash equilibrium:
/// weight definiteness, joint controllability and per-stage invertibility of
/// `M_k`. Never fails; unmet conditions clear the corresponding flags.
pub fn validate_game(game: &GameDefinition) -> ValidationReport {
    let horizon = game.horizon();
    let mut messages = Vec::new();

    let psd_ok = DefinitenessFlags {
        q1: linalg::is_psd(game.q(Player::One)),
        q2: linalg::is_psd(game.q(Player::Two)),
        q1_terminal: linalg::is_psd(game.q_terminal(Player::One)),
        q2_terminal: linalg::is_psd(game.q_terminal(Player::Two)),
        r1: linalg::is_pd(game.r(Player::One)),
        r2: linalg::is_pd(game.r(Player::Two)),
    };
    for (ok, what) in [
        (psd_ok.q1, "Q1 is not positive semidefinite"),
        (psd_ok.q2, "Q2 is not positive semidefinite"),
        (psd_ok.q1_terminal, "Q1N is not positive semidefinite"),
        (psd_ok.q2_terminal, "Q2N is not positive semidefinite"),
        (psd_ok.r1, "R1 is not positive definite"),
        (psd_ok.r2, "R2 is not positive definite"),
    ] {
        if !ok {
            messages.push(what.to_string());
        }
    }

    let controllable = is_controllable(game);
    if !controllable {
        messages.push("(A, [B1 B2]) is not controllable".into());
    }

    let mut mk_invertible = vec![false; horizon];
    let mut mk_condition = vec![f64::INFINITY; horizon];
    let mut stage_system_condition = vec![f64::INFINITY; horizon];

    if !(psd_ok.r1 && psd_ok.r2) {
        messages.push("M_k not evaluated: control weights are not invertible".into());
        return ValidationReport {
            psd_ok,
            controllable,
            mk_invertible,
            mk_condition,
            stage_system_condition,
            messages,
        };
    }

    messages.push("M_k evaluated with the coupled Nash Riccati matrices P~_{i,k+1} entering stage k".into());
    let f = |p: Player| {
        let r_inv = game
            .r(p)
            .clone()
            .try_inverse()
            .expect("positive definite R is invertible");
        game.b(p) * r_inv * game.b(p).transpose()
    };
    let (f1, f2) = (f(Player::One), f(Player::Two));

    let (records, failure) = fne::coupled_recursion(game);
    for rec in &records {
        stage_system_condition[rec.stage] = rec.condition;
        let cond = linalg::condition_number(&coupling_matrix(&f1, &f2, &rec.p1_next, &rec.p2_next));
        mk_condition[rec.stage] = cond;
        mk_invertible[rec.stage] = cond < linalg::SINGULAR_CONDITION;
        if !mk_invertible[rec.stage] {
            messages.push(format!(
                "M_{} is numerically singular (cond {cond:.3e})",
                rec.stage
            ));
        }
    }
    if let Some(e) = failure {
        messages.push(format!("coupled recursion stopped: {e}"));
    }

    ValidationReport {
        psd_ok,
        controllable,
        mk_invertible,
        mk_condition,
        stage_system_condition,
        messages,
    }
}

/// Convenience for callers that hold a solved equilibrium already.
pub fn coupling_matrices(game: &GameDefinition, fne: &FneSolution) -> Result<Vec<Mat>> {
    let f = |p: Player| -> Result<Mat> {
        let r_inv = game
            .r(p)
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain(format!("R{} is singular", p.index())))?;
        Ok(game.b(p) * r_inv * game.b(p).transpose())
    };
    let (f1, f2) = (f(Player::One)?, f(Player::Two)?);
    Ok((0..game.horizon())
        .map(|k| coupling_matrix(&f1, &f2, &fne.p1[k + 1], &fne.p2[k + 1]))
        .collect())
}
