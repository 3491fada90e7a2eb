//! Player 2 executes its Nash command through a first-order lag. Player 1
//! designs the compensated feedback u1 = -K x - L w on the augmented state
//! and we check how far it is from simply keeping the Nash gains.
//!
//!     cargo run --example lag_compensation

use lqgame::cart::{self, TerminalWeights};
use lqgame::compensator::{initial_augmented_state, rollout_augmented};
use lqgame::linalg::{self, Mat};
use lqgame::report::sig6;
use lqgame::{
    build_augmented_system, gap_value, solve_compensator, solve_fne, AugmentationMode, InitialInputMode,
    LagModel,
};

fn main() -> lqgame::Result<()> {
    let game = cart::reference_game(TerminalWeights::StageWeights)?;
    let fne = solve_fne(&game)?;
    let lag = LagModel::new(cart::LAG_TAU, 0.015, InitialInputMode::Matched)?;
    println!("alpha = {}", sig6(lag.alpha));

    let aug = build_augmented_system(&game, &fne, &lag, AugmentationMode::FullLag)?;
    let cf = solve_compensator(&game, &aug)?;
    println!("K0 = {:?}", cf.k[0].iter().map(|v| sig6(*v)).collect::<Vec<_>>());
    println!("L0 = {:?}", cf.l[0].iter().map(|v| sig6(*v)).collect::<Vec<_>>());

    // Cost of each policy on the augmented dynamics, and the gap between them.
    let z0 = initial_augmented_state(&game, &fne, &lag, &cart::reference_x0());
    let zeros = vec![Mat::zeros(1, 4); game.horizon()];
    let reference = rollout_augmented(&game, &aug, &fne.k1, &zeros, &z0)?;
    let compensated = rollout_augmented(&game, &aug, &cf.k, &cf.l, &z0)?;
    let gap = gap_value(&cf, &fne.k1, &zeros, &reference.z)?;
    println!("\nJ1 keeping Nash gains: {}", sig6(reference.j1));
    println!("J1 compensated:        {}", sig6(compensated.j1));
    println!(
        "difference {} = gap {}",
        sig6(reference.j1 - compensated.j1),
        sig6(gap)
    );

    // If the error is assumed to decay on its own, the state gain is the Nash gain.
    let slow = build_augmented_system(&game, &fne, &lag, AugmentationMode::SlowVarying)?;
    let slow_cf = solve_compensator(&game, &slow)?;
    let diff = slow_cf
        .k
        .iter()
        .zip(&fne.k1)
        .map(|(a, b)| linalg::max_abs_diff(a, b))
        .fold(0.0, f64::max);
    println!("\nslow-varying model: max |K - K1*| = {diff:.2e}");
    Ok(())
}
