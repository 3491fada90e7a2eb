#![allow(dead_code)]

use lqgame::{Dynamics, GameDefinition, Mat, PlayerWeights, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| scale * rng.random_range(-1.0..=1.0))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vector {
    Vector::from_fn(len, |_, _| scale * rng.random_range(-1.0..=1.0))
}

/// `MᵀM` with `M` of rank at most `rank`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Mat {
    let m = uniform_matrix(rng, rank, n, 1.0);
    let p = m.transpose() * m;
    (&p + p.transpose()) * 0.5
}

pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    random_psd(rng, n, n) + Mat::identity(n, n) * 0.2
}

/// Random game with `A` scaled to spectral radius about one.
pub fn random_game_with(
    rng: &mut ChaCha8Rng,
    n: usize,
    m1: usize,
    m2: usize,
    horizon: usize,
) -> GameDefinition {
    let a = uniform_matrix(rng, n, n, 1.0);
    let radius = a
        .clone()
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let a = if radius > 0.0 { a * (1.05 / radius) } else { a };
    let dynamics = Dynamics {
        a,
        b1: uniform_matrix(rng, n, m1, 1.0),
        b2: uniform_matrix(rng, n, m2, 1.0),
    };
    let rank1 = rng.random_range(1..=n);
    let rank2 = rng.random_range(1..=n);
    let p1 = PlayerWeights::with_terminal(
        random_psd(rng, n, rank1),
        random_psd(rng, n, n),
        random_pd(rng, m1),
    );
    let p2 = PlayerWeights::with_terminal(
        random_psd(rng, n, rank2),
        random_psd(rng, n, n),
        random_pd(rng, m2),
    );
    GameDefinition::new(dynamics, p1, p2, horizon).expect("consistent dimensions")
}

/// Random dimensions `n ≤ 6`, `mᵢ ≤ 3`, `N ≤ 15`.
pub fn random_game(rng: &mut ChaCha8Rng) -> GameDefinition {
    let n = rng.random_range(1..=6);
    let m1 = rng.random_range(1..=n.min(3));
    let m2 = rng.random_range(1..=n.min(3));
    let horizon = rng.random_range(1..=15);
    random_game_with(rng, n, m1, m2, horizon)
}

pub fn random_gains(rng: &mut ChaCha8Rng, rows: usize, cols: usize, horizon: usize, scale: f64) -> Vec<Mat> {
    (0..horizon)
        .map(|_| uniform_matrix(rng, rows, cols, scale))
        .collect()
}

pub fn max_diff_seq(a: &[Mat], b: &[Mat]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| lqgame::linalg::max_abs_diff(x, y))
        .fold(0.0, f64::max)
}

/// Textbook finite-horizon LQR gains for `x⁺ = A_k x + B u`.
pub fn lqr_gains(drift: &[Mat], b: &Mat, q: &Mat, r: &Mat, qn: &Mat) -> (Vec<Mat>, Vec<Mat>) {
    let horizon = drift.len();
    let mut p = vec![qn.clone(); horizon + 1];
    let mut k = vec![Mat::zeros(0, 0); horizon];
    for t in (0..horizon).rev() {
        let a = &drift[t];
        let h = r + b.transpose() * &p[t + 1] * b;
        let gain = h.try_inverse().unwrap() * b.transpose() * &p[t + 1] * a;
        let closed = a - b * &gain;
        // Joseph form: Q + KᵀRK + (A−BK)ᵀP(A−BK)
        p[t] = q + gain.transpose() * r * &gain + closed.transpose() * &p[t + 1] * &closed;
        k[t] = gain;
    }
    (k, p)
}

/// Player 1 cost with arbitrary feedback gains for both players.
pub fn feedback_cost(
    game: &GameDefinition,
    k1: &[Mat],
    k2: &[Mat],
    x0: &Vector,
    player: lqgame::Player,
) -> f64 {
    use lqgame::Player;
    let mut x = x0.clone();
    let mut cost = 0.0;
    let (q, r, qn) = (game.q(player), game.r(player), game.q_terminal(player));
    for k in 0..game.horizon() {
        let u1 = -(&k1[k] * &x);
        let u2 = -(&k2[k] * &x);
        let u = if player == Player::One { &u1 } else { &u2 };
        cost += x.dot(&(q * &x)) + u.dot(&(r * u));
        x = game.a() * &x + game.b(Player::One) * &u1 + game.b(Player::Two) * &u2;
    }
    cost + x.dot(&(qn * &x))
}

/// Player 1's cost when Player 2 adds `du` on top of its equilibrium command.
pub fn deviated_cost(game: &GameDefinition, fne: &lqgame::FneSolution, x0: &Vector, du: &[Vector]) -> f64 {
    use lqgame::Player;
    let (a, b1, b2) = (game.a(), game.b(Player::One), game.b(Player::Two));
    let (q, r) = (game.q(Player::One), game.r(Player::One));
    let mut x = x0.clone();
    let mut cost = 0.0;
    for (k, d) in du.iter().enumerate().take(game.horizon()) {
        let u1 = -(&fne.k1[k] * &x);
        let u2 = -(&fne.k2[k] * &x) + d;
        cost += x.dot(&(q * &x)) + u1.dot(&(r * &u1));
        x = a * &x + b1 * &u1 + b2 * &u2;
    }
    cost + x.dot(&(game.q_terminal(Player::One) * &x))
}
