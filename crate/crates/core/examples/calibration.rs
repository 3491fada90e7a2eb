//! The two-cart experiment leaves two choices open: Player 2's applied input
//! before the lag has responded, and the terminal weights. Runs all four
//! combinations against the target cost table, closest first.
//!
//!     cargo run --example calibration

use lqgame::experiment::{self, REFERENCE_J1, REFERENCE_J2, REFERENCE_PCT};
use lqgame::report::{self, sig6};

fn main() -> lqgame::Result<()> {
    println!("target J1 {REFERENCE_J1:?}, J2 {REFERENCE_J2:?}, percentages {REFERENCE_PCT:?}\n");
    for run in experiment::calibrate()? {
        println!(
            "terminal {:?}, initial input {:?}: worst cost error {}%, worst percentage error {} pts",
            run.terminal,
            run.initial_input_mode,
            sig6(100.0 * run.max_cost_rel_error),
            sig6(run.max_pct_error)
        );
        print!("{}", report::format_cost_table(&run.table));
        println!();
    }
    Ok(())
}
