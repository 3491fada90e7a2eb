//! Builds a scenario from JSON with explicit matrices, runs every case and
//! prints the cost table. Pass a path to run your own scenario file instead.
//!
//!     cargo run --example custom_scenario -- [scenario.json]

use lqgame::scenario::{self, ScenarioConfig};

const INLINE: &str = r#"{
  "name": "lagged_double_integrators",
  "model": { "explicit": {
    "a":  [[1.0, 0.1, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.1], [0.0, 0.0, 0.0, 1.0]],
    "b1": [[0.0], [0.1], [0.0], [0.05]],
    "b2": [[0.0], [0.05], [0.0], [0.1]]
  } },
  "weights": {
    "q1": [[4, 0, -4, 0], [0, 0.5, 0, 0], [-4, 0, 4, 0], [0, 0, 0, 0]],
    "q2": [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0.5]],
    "r1": [[0.1]],
    "r2": [[0.2]]
  },
  "horizon": 60,
  "x0": [1.0, 0.0, -1.0, 0.5],
  "lag": { "tau": 0.4, "dt": 0.1, "initial_input_mode": "cold_start" }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = match std::env::args().nth(1) {
        Some(path) => ScenarioConfig::load(path.as_ref())?,
        None => ScenarioConfig::from_json_str(INLINE)?,
    };
    let (_, validation) = scenario::validate(&config)?;
    println!("validation ok: {}", validation.all_ok());
    let outcome = scenario::run_scenario(&config, &config.cases(), None)?;
    print!("{outcome}");
    Ok(())
}
