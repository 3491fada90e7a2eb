//! How much does Player 1's cost move when Player 2 deviates from its Nash
//! command? Compares the first-order prediction with the exact change and
//! fits the order of the remainder.
//!
//!     cargo run --example deviation_sensitivity

use lqgame::cart::{self, TerminalWeights};
use lqgame::report::sig6;
use lqgame::scenario::random_direction;
use lqgame::sensitivity::remainder_sweep;
use lqgame::{first_order_delta_j1, solve_fne, DeviationSequence, Vector};

fn main() -> lqgame::Result<()> {
    let game = cart::reference_game(TerminalWeights::StageWeights)?;
    let fne = solve_fne(&game)?;
    let x0 = cart::reference_x0();

    // A single push of 0.5 N at stage 5.
    let impulse = DeviationSequence::impulse(&game, 5, Vector::from_element(1, 0.5))?;
    let report = first_order_delta_j1(&fne, &game, &x0, &impulse)?;
    println!(
        "impulse at k=5: linear {}  exact {}  remainder {}",
        sig6(report.dj1_linear),
        sig6(report.dj1_exact),
        sig6(report.remainder())
    );
    println!("|dx_N| = {}", sig6(report.dx[game.horizon()].norm()));

    // A seeded unit-norm direction scaled down by decades.
    let dir = random_direction(&game, 7);
    let sweep = remainder_sweep(&fne, &game, &x0, &dir, &[1e-1, 1e-2, 1e-3, 1e-4])?;
    println!(
        "\n{:>8} {:>14} {:>14} {:>14}",
        "eps", "linear", "exact", "remainder"
    );
    for r in &sweep.rows {
        println!(
            "{:>8} {:>14} {:>14} {:>14}",
            sig6(r.eps),
            sig6(r.dj1_linear),
            sig6(r.dj1_exact),
            sig6(r.remainder)
        );
    }
    println!("log-log slope of the remainder: {}", sig6(sweep.slope));
    Ok(())
}
