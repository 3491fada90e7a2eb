//! The three-way comparison on the two-cart game: Nash with exact execution,
//! Nash with Player 2 lagged, and Player 1 compensating. Optionally writes the
//! trajectories as CSV.
//!
//!     cargo run --example two_cart_report -- [out_dir]

use std::path::PathBuf;

use lqgame::cart::{self, TerminalWeights};
use lqgame::report;
use lqgame::{
    build_augmented_system, compare_cases, solve_compensator, solve_fne, AugmentationMode, InitialInputMode,
    LagModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = cart::reference_game(TerminalWeights::StageWeights)?;
    let fne = solve_fne(&game)?;
    for mode in [InitialInputMode::ColdStart, InitialInputMode::Matched] {
        let lag = LagModel::new(cart::LAG_TAU, 0.015, mode)?;
        let aug = build_augmented_system(&game, &fne, &lag, AugmentationMode::FullLag)?;
        let cf = solve_compensator(&game, &aug)?;
        let cmp = compare_cases(&game, &fne, &cf, lag, &cart::reference_x0())?;
        println!("initial lag input: {mode:?}");
        print!("{}", report::format_cost_table(&cmp.table));
        println!();

        if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
            let dir = dir.join(format!("{mode:?}").to_lowercase());
            std::fs::create_dir_all(&dir)?;
            for r in [&cmp.fne, &cmp.reference, &cmp.compensated] {
                report::write_trajectory_csv(&dir.join(format!("trajectory_{}.csv", r.kind)), r)?;
            }
        }
    }
    Ok(())
}
