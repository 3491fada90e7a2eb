use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use env_logger::Env;

use lqgame::experiment;
use lqgame::report::{self, sig6};
use lqgame::scenario::{self, DeviationInput, RunError, ScenarioConfig};
use lqgame::CaseKind;

#[derive(Parser)]
#[command(
    name = "lqgame",
    version,
    about = "Two-player LQ games: Nash feedback, deviation sensitivity, lag compensation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check definiteness, controllability and per-stage well-posedness.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Solve the Nash equilibrium (and compensator when a lag is configured).
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a single case and write its trajectory.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_case)]
        case: CaseKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run all configured cases and write the cost report.
    Report {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-order cost sensitivity to Player 2 deviations.
    Sensitivity {
        #[arg(long)]
        scenario: PathBuf,
        /// JSON file with {"du2": [[..], ..]}.
        #[arg(long)]
        deviation: Option<PathBuf>,
        /// Comma-separated step sizes for the remainder sweep.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
        /// Seed for the random direction used when no deviation file is given.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the scenario with all defaults made explicit.
    Export {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the two-cart experiment against the target cost table for
    /// every initial-input and terminal-weight choice.
    Calibrate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_case(s: &str) -> Result<CaseKind, String> {
    match s {
        "fne" => Ok(CaseKind::Fne),
        "ref" => Ok(CaseKind::Ref),
        "cf" => Ok(CaseKind::Cf),
        other => Err(format!("unknown case '{other}', expected fne|ref|cf")),
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Validate { scenario } => {
            let config = ScenarioConfig::load(&scenario)?;
            let game = config.build_game()?;
            let report = lqgame::validate_game(&game);
            println!("definiteness: {}", report.psd_ok.all());
            println!("controllable: {}", report.controllable);
            println!(
                "M_k invertible: {}/{}",
                report.mk_invertible.iter().filter(|&&b| b).count(),
                report.mk_invertible.len()
            );
            let worst = report
                .stage_system_condition
                .iter()
                .fold(0.0_f64, |a, &c| a.max(c));
            println!("worst stage-system condition: {}", sig6(worst));
            for m in &report.messages {
                println!("  {m}");
            }
            if !report.all_ok() {
                return Err(RunError::Validation(Box::new(report)));
            }
        }
        Command::Solve { scenario, out } => {
            let config = ScenarioConfig::load(&scenario)?;
            let (fne, cf) = scenario::solve_to_dir(&config, &out)?;
            println!("solved {} stages", fne.horizon());
            println!(
                "K1[0] = {:?}",
                fne.k1[0].iter().map(|v| sig6(*v)).collect::<Vec<_>>()
            );
            if let Some(cf) = cf {
                println!(
                    "K[0]  = {:?}",
                    cf.k[0].iter().map(|v| sig6(*v)).collect::<Vec<_>>()
                );
                println!(
                    "L[0]  = {:?}",
                    cf.l[0].iter().map(|v| sig6(*v)).collect::<Vec<_>>()
                );
            }
            report::write_run_metadata(&out, "solve")?;
        }
        Command::Simulate { scenario, case, out } => {
            let config = ScenarioConfig::load(&scenario)?;
            let outcome = scenario::run_scenario(&config, &[case], Some(&out))?;
            print!("{outcome}");
            report::write_run_metadata(&out, "simulate")?;
        }
        Command::Report { scenario, out } => {
            let config = ScenarioConfig::load(&scenario)?;
            let out = out.or_else(|| config.output_dir());
            let outcome = scenario::run_scenario(&config, &config.cases(), out.as_deref())?;
            print!("{outcome}");
            if let Some(dir) = &out {
                report::write_run_metadata(dir, "report")?;
            }
        }
        Command::Sensitivity {
            scenario,
            deviation,
            sweep,
            seed,
            out,
        } => {
            let config = ScenarioConfig::load(&scenario)?;
            let input = match deviation {
                Some(path) => DeviationInput::File(path),
                None => DeviationInput::Random { seed },
            };
            let outcome = scenario::run_sensitivity(&config, &input, sweep.as_deref(), Some(&out))?;
            let s = &outcome.summary;
            println!("dJ1 linear: {}", sig6(s.dj1_linear));
            println!("dJ1 exact:  {}", sig6(s.dj1_exact));
            println!("remainder:  {}", sig6(s.remainder));
            if let Some(sw) = &outcome.sweep {
                println!(
                    "{:>12} {:>14} {:>14} {:>14}",
                    "eps", "linear", "exact", "remainder"
                );
                for r in &sw.rows {
                    println!(
                        "{:>12} {:>14} {:>14} {:>14}",
                        sig6(r.eps),
                        sig6(r.dj1_linear),
                        sig6(r.dj1_exact),
                        sig6(r.remainder)
                    );
                }
                println!("log-log slope: {}", sig6(sw.slope));
            }
            report::write_run_metadata(&out, "sensitivity")?;
        }
        Command::Export { scenario, out } => {
            let config = ScenarioConfig::load(&scenario)?;
            fs::write(&out, config.normalized().to_json_string())?;
        }
        Command::Calibrate { out } => {
            let runs = experiment::calibrate()?;
            for r in &runs {
                println!(
                    "terminal={:?} init={:?}: max cost error {}%, max percentage error {} pts",
                    r.terminal,
                    r.initial_input_mode,
                    sig6(100.0 * r.max_cost_rel_error),
                    sig6(r.max_pct_error)
                );
                print!("{}", report::format_cost_table(&r.table));
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                report::write_json(&dir.join("calibration.json"), &runs)?;
                report::write_run_metadata(&dir, "calibrate")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("LQGAME_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
