//! Validate the two-cart game, solve its feedback Nash equilibrium and check
//! that each player's gains are a best response to the other's.
//!
//!     cargo run --example solve_equilibrium

use lqgame::cart::{self, TerminalWeights};
use lqgame::linalg;
use lqgame::report::sig6;
use lqgame::{best_response_gains, solve_fne, validate_game, Player};

fn main() -> lqgame::Result<()> {
    let game = cart::reference_game(TerminalWeights::StageWeights)?;

    let report = validate_game(&game);
    println!("weights definite:   {}", report.psd_ok.all());
    println!("controllable:       {}", report.controllable);
    let worst = report
        .stage_system_condition
        .iter()
        .fold(0.0_f64, |a, &c| a.max(c));
    println!("worst stage cond.:  {}", sig6(worst));

    let fne = solve_fne(&game)?;
    println!("\nstage {:^44}   {:^44}", "K1 on (p1, v1, p2, v2)", "K2");
    for k in [0, 10, 20, 30, game.horizon() - 1] {
        let row = |m: &lqgame::Mat| m.iter().map(|v| format!(" {:>10}", sig6(*v))).collect::<String>();
        println!("{k:>5} {}  {}", row(&fne.k1[k]), row(&fne.k2[k]));
    }

    let br1 = best_response_gains(&game, Player::One, &fne.k2)?;
    let br2 = best_response_gains(&game, Player::Two, &fne.k1)?;
    let gap = br1
        .iter()
        .zip(&fne.k1)
        .chain(br2.iter().zip(&fne.k2))
        .map(|(a, b)| linalg::max_abs_diff(a, b))
        .fold(0.0, f64::max);
    println!("\nmax |best response - equilibrium gain| = {gap:.2e}");
    println!(
        "stationarity residual                  = {:.2e}",
        fne.stationarity_residual(&game)
    );
    Ok(())
}
