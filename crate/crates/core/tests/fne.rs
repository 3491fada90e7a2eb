mod common;

use common::*;
use lqgame::cart::{self, TerminalWeights, TwoCartParams};
use lqgame::game::{self, Dynamics, PlayerWeights};
use lqgame::linalg::{self, Mat};
use lqgame::{best_response_gains, solve_fne, validate_game, GameDefinition, Player};
use proptest::prelude::*;

fn cart_game() -> GameDefinition {
    cart::reference_game(TerminalWeights::StageWeights).unwrap()
}

#[test]
fn cart_game_passes_validation() {
    let report = validate_game(&cart_game());
    assert!(report.psd_ok.all());
    assert!(report.controllable);
    assert_eq!(report.mk_invertible.len(), cart::HORIZON);
    assert!(report.mk_invertible.iter().all(|&b| b));
    assert!(report.all_ok(), "{:?}", report.messages);
    assert!(solve_fne(&cart_game()).is_ok());
}

#[test]
fn zero_control_weight_fails_definiteness() {
    let game = cart_game();
    let w = game.weights(Player::One).clone();
    let bad = game
        .with_weights(
            Player::One,
            PlayerWeights::with_terminal(w.q, w.q_terminal, Mat::zeros(1, 1)),
        )
        .unwrap();
    let report = validate_game(&bad);
    assert!(!report.psd_ok.r1);
    assert!(report.psd_ok.r2);
    assert!(!report.all_ok());
    assert_eq!(report.mk_invertible.len(), bad.horizon());
}

#[test]
fn zero_inputs_are_uncontrollable() {
    let game = GameDefinition::new(
        Dynamics {
            a: Mat::identity(4, 4),
            b1: Mat::zeros(4, 1),
            b2: Mat::zeros(4, 1),
        },
        PlayerWeights::new(Mat::identity(4, 4), Mat::identity(1, 1)),
        PlayerWeights::new(Mat::identity(4, 4), Mat::identity(1, 1)),
        5,
    )
    .unwrap();
    let report = validate_game(&game);
    assert!(!report.controllable);
    assert!(report.psd_ok.all());
}

#[test]
fn coupling_matrices_match_validation() {
    let game = cart_game();
    let fne = solve_fne(&game).unwrap();
    let ms = game::coupling_matrices(&game, &fne).unwrap();
    let report = validate_game(&game);
    for (m, cond) in ms.iter().zip(&report.mk_condition) {
        let c = linalg::condition_number(m);
        assert!((c - cond).abs() <= 1e-9 * cond);
    }
}

#[test]
fn valid_random_games_solve_with_small_residual() {
    let mut rng = rng(11);
    for _ in 0..40 {
        let game = random_game(&mut rng);
        let report = validate_game(&game);
        if !report.all_ok() {
            continue;
        }
        let fne = solve_fne(&game).expect("validated game solves");
        let tol = 1e-10 * (1.0 + linalg::spectral_norm(game.a()));
        let scale = fne
            .p1
            .iter()
            .chain(&fne.p2)
            .map(linalg::max_abs)
            .fold(1.0, f64::max);
        assert!(fne.stationarity_residual(&game) <= tol * scale);
        for p in fne.p1.iter().chain(&fne.p2) {
            assert_eq!(p, &p.transpose());
            assert!(linalg::is_psd(p));
        }
        assert!(fne
            .k1
            .iter()
            .chain(&fne.k2)
            .all(|k| k.iter().all(|v| v.is_finite())));
    }
}

#[test]
fn fixed_point_on_cart_game() {
    let game = cart_game();
    let fne = solve_fne(&game).unwrap();
    let br1 = best_response_gains(&game, Player::One, &fne.k2).unwrap();
    let br2 = best_response_gains(&game, Player::Two, &fne.k1).unwrap();
    assert!(max_diff_seq(&br1, &fne.k1) <= 1e-8);
    assert!(max_diff_seq(&br2, &fne.k2) <= 1e-8);
}

#[test]
fn best_response_to_absent_opponent_is_lqr() {
    let mut rng = rng(5);
    for _ in 0..10 {
        let game = random_game(&mut rng);
        let n = game.state_dim();
        let zeros = vec![Mat::zeros(game.input_dim(Player::Two), n); game.horizon()];
        let br = best_response_gains(&game, Player::One, &zeros).unwrap();
        let drift = vec![game.a().clone(); game.horizon()];
        let (lqr, _) = lqr_gains(
            &drift,
            game.b(Player::One),
            game.q(Player::One),
            game.r(Player::One),
            game.q_terminal(Player::One),
        );
        let scale = lqr.iter().map(linalg::max_abs).fold(1.0, f64::max);
        assert!(max_diff_seq(&br, &lqr) <= 1e-9 * scale);
    }
}

#[test]
fn best_response_with_zero_objective_is_zero() {
    let game = cart_game();
    let weights =
        PlayerWeights::with_terminal(Mat::zeros(4, 4), Mat::zeros(4, 4), Mat::from_element(1, 1, 0.05));
    let game = game.with_weights(Player::Two, weights).unwrap();
    let fne = solve_fne(&game).unwrap();
    let br = best_response_gains(&game, Player::Two, &fne.k1).unwrap();
    assert!(br.iter().all(|k| linalg::max_abs(k) == 0.0));
}

#[test]
fn unilateral_deviation_does_not_help() {
    let mut rng = rng(21);
    for _ in 0..20 {
        let game = random_game(&mut rng);
        let Ok(fne) = solve_fne(&game) else { continue };
        let n = game.state_dim();
        let x0 = uniform_vector(&mut rng, n, 1.0);
        for player in [Player::One, Player::Two] {
            let own = fne.gains(player);
            let base = feedback_cost(&game, &fne.k1, &fne.k2, &x0, player);
            for scale in [1e-3, 1e-1, 1.0] {
                let perturbed: Vec<Mat> = own
                    .iter()
                    .map(|k| k + uniform_matrix(&mut rng, k.nrows(), k.ncols(), scale))
                    .collect();
                let cost = match player {
                    Player::One => feedback_cost(&game, &perturbed, &fne.k2, &x0, player),
                    Player::Two => feedback_cost(&game, &fne.k1, &perturbed, &x0, player),
                };
                assert!(
                    cost >= base - 1e-9 * base.abs().max(1.0),
                    "{player}: {cost} < {base}"
                );
            }
        }
    }
}

#[test]
fn truncated_horizon_reproduces_gains() {
    let mut rng = rng(3);
    for _ in 0..10 {
        let game = random_game_with(&mut rng, 4, 2, 1, 12);
        let fne = solve_fne(&game).unwrap();
        let horizon = game.horizon();
        let scale = fne
            .k1
            .iter()
            .chain(&fne.k2)
            .map(linalg::max_abs)
            .fold(1.0, f64::max);
        for tail in [1, 5, 11] {
            let head = horizon - tail;
            // Stop early and charge the equilibrium cost-to-go as terminal weight.
            let short = game
                .with_horizon(head)
                .unwrap()
                .with_terminal_weights(fne.p1[head].clone(), fne.p2[head].clone())
                .unwrap();
            let sol = solve_fne(&short).unwrap();
            assert!(max_diff_seq(&sol.k1, &fne.k1[..head]) <= 1e-10 * scale);
            assert!(max_diff_seq(&sol.k2, &fne.k2[..head]) <= 1e-10 * scale);
            assert!(
                max_diff_seq(&sol.p1, &fne.p1[..=head]) <= 1e-10 * scale.max(linalg::max_abs(&fne.p1[0]))
            );
            // The last `tail` stages are a game of their own.
            let end = solve_fne(&game.with_horizon(tail).unwrap()).unwrap();
            assert!(max_diff_seq(&end.k1, &fne.k1[head..]) <= 1e-10 * scale);
            assert!(max_diff_seq(&end.k2, &fne.k2[head..]) <= 1e-10 * scale);
        }
    }
}

#[test]
fn decoupled_carts_have_block_diagonal_gains() {
    let params = TwoCartParams {
        k_spring: 0.0,
        c_damper: 0.0,
        ..TwoCartParams::default()
    };
    let game = GameDefinition::new(
        cart::build_two_cart(&params).unwrap(),
        PlayerWeights::new(cart::player1_state_weight(), cart::control_weight()),
        PlayerWeights::new(cart::player2_state_weight(), cart::control_weight()),
        cart::HORIZON,
    )
    .unwrap();
    let fne = solve_fne(&game).unwrap();
    for (k1, k2) in fne.k1.iter().zip(&fne.k2) {
        assert_eq!(k1[(0, 2)], 0.0);
        assert_eq!(k1[(0, 3)], 0.0);
        assert_eq!(k2[(0, 0)], 0.0);
        assert_eq!(k2[(0, 1)], 0.0);
    }
    // Each player still regulates its own cart.
    assert!(fne.k1[0][(0, 0)] > 0.0 && fne.k2[0][(0, 2)] > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrize_is_idempotent(vals in proptest::collection::vec(-10.0..10.0_f64, 9)) {
        let p = Mat::from_row_slice(3, 3, &vals);
        let once = lqgame::symmetrize(&p).unwrap();
        let twice = lqgame::symmetrize(&once).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&once, &once.transpose());
    }

    #[test]
    fn controllability_is_coordinate_free(seed in 0u64..10_000, zero_b2 in any::<bool>()) {
        let mut rng = rng(seed);
        let mut game = random_game_with(&mut rng, 4, 1, 1, 3);
        if zero_b2 {
            // A block-diagonal pair that is uncontrollable from the inputs.
            let mut a = Mat::identity(4, 4);
            a[(0, 1)] = 0.3;
            let mut b1 = Mat::zeros(4, 1);
            b1[(1, 0)] = 1.0;
            let d = Dynamics { a, b1, b2: Mat::zeros(4, 1) };
            game = GameDefinition::new(
                d,
                game.weights(Player::One).clone(),
                game.weights(Player::Two).clone(),
                3,
            ).unwrap();
        }
        let t = uniform_matrix(&mut rng, 4, 4, 1.0) + Mat::identity(4, 4) * 2.5;
        let transformed = game.transformed(&t).unwrap();
        prop_assert_eq!(game::is_controllable(&game), game::is_controllable(&transformed));
    }
}
