//! Scenario files and the end-to-end workflows behind the `lqgame` binary.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "model": { "two_cart": { "m": 1.0, "k_spring": 0.12, "c_damper": 30.0, "dt": 0.015 } },
//!   "weights": { "q1": [[...]], "q2": [[...]], "r1": [[0.05]], "r2": [[0.05]] },
//!   "horizon": 40,
//!   "x0": [0.5, 0.0, -0.5, 0.0],
//!   "lag": { "tau": 0.8, "dt": 0.015, "initial_input_mode": "matched" },
//!   "cases": ["fne", "ref", "cf"]
//! }
//! ```
//!
//! `model` may instead be `{ "explicit": { "a": .., "b1": .., "b2": .. } }`.
//! Matrices are row-major nested arrays. `q1n`/`q2n` default to `q1`/`q2`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cart::{self, TwoCartParams};
use crate::compensator::{self, AugmentationMode, CompensatorGains, InitialInputMode, LagModel};
use crate::error::Error;
use crate::fne::{self, FneSolution};
use crate::game::{self, Dynamics, GameDefinition, Player, PlayerWeights, ValidationReport};
use crate::linalg::{self, Mat, Vector};
use crate::report;
use crate::sensitivity::{self, DeviationSequence, RemainderSweep};
use crate::sim::{self, CaseKind, CostTable, PolicyCase, SimulationResult};

type Rows = Vec<Vec<f64>>;

/// Scenarios shipped with the crate, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("two_cart_paper", include_str!("../scenarios/two_cart_paper.json")),
    (
        "two_cart_fne_only",
        include_str!("../scenarios/two_cart_fne_only.json"),
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoCart(TwoCartParams),
    Explicit { a: Rows, b1: Rows, b2: Rows },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub q1: Rows,
    pub q2: Rows,
    pub r1: Rows,
    pub r2: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1n: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2n: Option<Rows>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagSpec {
    pub tau: f64,
    pub dt: f64,
    #[serde(default)]
    pub initial_input_mode: InitialInputMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub trajectories: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelSpec,
    pub weights: WeightSpec,
    pub horizon: usize,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<LagSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<CaseKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// Failure of a workflow, carrying its process exit status.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {}", .0.messages.join("; "))]
    Validation(Box<ValidationReport>),
    #[error("solver error: {0}")]
    Solver(Error),
    #[error("simulation diverged: {0}")]
    Divergence(Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) => 2,
            RunError::Validation(_) => 3,
            RunError::Solver(_) => 4,
            RunError::Divergence(_) => 5,
            RunError::Io(_) => 1,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => RunError::Divergence(e),
            Error::Dimension { .. } | Error::Domain(_) => RunError::Parse(e.to_string()),
            _ => RunError::Solver(e),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self, RunError> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| RunError::Parse(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    /// Reads a scenario file, falling back to a bundled scenario of that name.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        if !path.exists() {
            let name = path.to_string_lossy();
            if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name) {
                debug!("using bundled scenario {name}");
                return Self::from_json_str(text);
            }
        }
        let text =
            fs::read_to_string(path).map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, text)| Self::from_json_str(text).ok())
    }

    fn check(&self) -> Result<(), RunError> {
        if let (ModelSpec::TwoCart(p), Some(lag)) = (&self.model, &self.lag) {
            let tol = 1e-12 * p.dt.abs().max(lag.dt.abs());
            if (p.dt - lag.dt).abs() > tol {
                return Err(RunError::Parse(format!(
                    "model dt {} and lag dt {} disagree",
                    p.dt, lag.dt
                )));
            }
        }
        if self.horizon == 0 {
            return Err(RunError::Parse("horizon must be at least 1".into()));
        }
        let cases = self.cases();
        if self.lag.is_none() && cases.iter().any(|c| matches!(c, CaseKind::Ref | CaseKind::Cf)) {
            return Err(RunError::Parse("cases ref and cf need a lag block".into()));
        }
        if cases
            .iter()
            .any(|c| matches!(c, CaseKind::Deviated | CaseKind::Affine))
        {
            return Err(RunError::Parse("cases must be a subset of fne, ref, cf".into()));
        }
        Ok(())
    }

    /// Requested cases; all three when a lag is given, otherwise FNE only.
    pub fn cases(&self) -> Vec<CaseKind> {
        match &self.cases {
            Some(c) => c.clone(),
            None if self.lag.is_some() => vec![CaseKind::Fne, CaseKind::Ref, CaseKind::Cf],
            None => vec![CaseKind::Fne],
        }
    }

    pub fn build_game(&self) -> Result<GameDefinition, RunError> {
        let dynamics = match &self.model {
            ModelSpec::TwoCart(p) => cart::build_two_cart(p)?,
            ModelSpec::Explicit { a, b1, b2 } => Dynamics {
                a: linalg::from_rows(a)?,
                b1: linalg::from_rows(b1)?,
                b2: linalg::from_rows(b2)?,
            },
        };
        let w = &self.weights;
        let q1 = linalg::from_rows(&w.q1)?;
        let q2 = linalg::from_rows(&w.q2)?;
        let q1n = w
            .q1n
            .as_ref()
            .map(|r| linalg::from_rows(r))
            .transpose()?
            .unwrap_or_else(|| q1.clone());
        let q2n = w
            .q2n
            .as_ref()
            .map(|r| linalg::from_rows(r))
            .transpose()?
            .unwrap_or_else(|| q2.clone());
        let p1 = PlayerWeights::with_terminal(q1, q1n, linalg::from_rows(&w.r1)?);
        let p2 = PlayerWeights::with_terminal(q2, q2n, linalg::from_rows(&w.r2)?);
        let game = GameDefinition::new(dynamics, p1, p2, self.horizon)?;
        if self.x0.len() != game.state_dim() {
            return Err(RunError::Parse(format!(
                "x0 has {} entries, the state has {}",
                self.x0.len(),
                game.state_dim()
            )));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(RunError::Parse("x0 must be finite".into()));
        }
        Ok(game)
    }

    pub fn x0(&self) -> Vector {
        Vector::from_row_slice(&self.x0)
    }

    pub fn lag_model(&self) -> Result<Option<LagModel>, RunError> {
        self.lag
            .map(|l| LagModel::new(l.tau, l.dt, l.initial_input_mode))
            .transpose()
            .map_err(RunError::from)
    }

    /// Copy with every default made explicit.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        out.weights.q1n.get_or_insert_with(|| self.weights.q1.clone());
        out.weights.q2n.get_or_insert_with(|| self.weights.q2.clone());
        out.cases = Some(self.cases());
        out
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.as_ref().and_then(|o| o.dir.clone())
    }

    fn write_trajectories(&self) -> bool {
        self.output.as_ref().is_none_or(|o| o.trajectories)
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub game: GameDefinition,
    pub validation: ValidationReport,
    pub fne: FneSolution,
    pub compensator: Option<CompensatorGains>,
    pub results: Vec<SimulationResult>,
    pub table: Option<CostTable>,
}

impl ScenarioOutcome {
    pub fn result(&self, kind: CaseKind) -> Option<&SimulationResult> {
        self.results.iter().find(|r| r.kind == kind)
    }

    pub fn cost_rows(&self) -> Vec<(String, f64, f64)> {
        self.results
            .iter()
            .map(|r| (r.kind.name().to_string(), r.j1, r.j2))
            .collect()
    }
}

impl fmt::Display for ScenarioOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => f.write_str(&report::format_cost_table(t)),
            None => f.write_str(&report::format_cost_rows(&self.cost_rows())),
        }
    }
}

/// Validates the game, failing with the report when a condition is unmet.
pub fn validate(config: &ScenarioConfig) -> Result<(GameDefinition, ValidationReport), RunError> {
    let game = config.build_game()?;
    if config.x0.len() != game.state_dim() {
        return Err(RunError::Parse(format!(
            "x0 has {} entries, state dimension is {}",
            config.x0.len(),
            game.state_dim()
        )));
    }
    let report = game::validate_game(&game);
    if !report.all_ok() {
        return Err(RunError::Validation(Box::new(report)));
    }
    Ok((game, report))
}

/// Solves the equilibrium and, when a lag is configured, the compensator.
pub fn solve(
    config: &ScenarioConfig,
) -> Result<
    (
        GameDefinition,
        ValidationReport,
        FneSolution,
        Option<CompensatorGains>,
    ),
    RunError,
> {
    let (game, report) = validate(config)?;
    let fne = fne::solve_fne(&game)?;
    info!("equilibrium solved over {} stages", game.horizon());
    let cf = match config.lag_model()? {
        Some(lag) => {
            let aug = compensator::build_augmented_system(&game, &fne, &lag, AugmentationMode::FullLag)?;
            Some(compensator::solve_compensator(&game, &aug)?)
        }
        None => None,
    };
    Ok((game, report, fne, cf))
}

/// Validate, solve and simulate the requested cases, writing the cost report
/// and per-case trajectories into `out_dir` when given.
pub fn run_scenario(
    config: &ScenarioConfig,
    cases: &[CaseKind],
    out_dir: Option<&Path>,
) -> Result<ScenarioOutcome, RunError> {
    let (game, validation, fne, cf) = solve(config)?;
    let lag = config.lag_model()?;
    let x0 = config.x0();
    let mut results = Vec::with_capacity(cases.len());
    for &kind in cases {
        let case = match (kind, lag, cf.as_ref()) {
            (CaseKind::Fne, _, _) => PolicyCase::Fne { fne: &fne },
            (CaseKind::Ref, Some(lag), _) => PolicyCase::Ref { fne: &fne, lag },
            (CaseKind::Cf, Some(lag), Some(gains)) => PolicyCase::Cf {
                fne: &fne,
                gains,
                lag,
            },
            _ => {
                return Err(RunError::Parse(format!(
                    "case {kind} cannot run without a lag block"
                )))
            }
        };
        let result = sim::simulate(&game, case, &x0)?;
        info!("case {kind}: J1 = {}, J2 = {}", result.j1, result.j2);
        results.push(result);
    }

    let costs = |k: CaseKind| results.iter().find(|r| r.kind == k).map(|r| [r.j1, r.j2]);
    let table = match (costs(CaseKind::Fne), costs(CaseKind::Ref), costs(CaseKind::Cf)) {
        (Some(a), Some(b), Some(c)) => Some(CostTable::from_costs(a, b, c)),
        _ => None,
    };

    let outcome = ScenarioOutcome {
        game,
        validation,
        fne,
        compensator: cf,
        results,
        table,
    };
    if let Some(dir) = out_dir {
        write_outcome(config, &outcome, dir)?;
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct CostReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a str>,
    cases: Vec<CaseCost>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<&'a CostTable>,
}

#[derive(Serialize)]
struct CaseCost {
    case: CaseKind,
    j1: f64,
    j2: f64,
}

fn write_outcome(config: &ScenarioConfig, outcome: &ScenarioOutcome, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    let costs = CostReport {
        scenario: config.name.as_deref(),
        cases: outcome
            .results
            .iter()
            .map(|r| CaseCost {
                case: r.kind,
                j1: r.j1,
                j2: r.j2,
            })
            .collect(),
        table: outcome.table.as_ref(),
    };
    report::write_json(&dir.join("costs.json"), &costs)?;
    if config.write_trajectories() {
        for r in &outcome.results {
            report::write_trajectory_csv(&dir.join(format!("trajectory_{}.csv", r.kind)), r)?;
        }
    }
    Ok(())
}

/// Source of the deviation for the sensitivity workflow.
#[derive(Debug, Clone)]
pub enum DeviationInput {
    /// JSON file `{"du2": [[..], ..]}` with one row per stage.
    File(PathBuf),
    /// Seeded uniform direction on `[−1, 1]`, scaled to unit norm.
    Random {
        seed: u64,
    },
    Zero,
}

#[derive(Debug, Deserialize, Serialize)]
struct DeviationFile {
    du2: Rows,
}

pub fn load_deviation(game: &GameDefinition, input: &DeviationInput) -> Result<DeviationSequence, RunError> {
    match input {
        DeviationInput::File(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))?;
            let file: DeviationFile =
                serde_json::from_str(&text).map_err(|e| RunError::Parse(e.to_string()))?;
            let du2 = file.du2.into_iter().map(Vector::from_vec).collect();
            DeviationSequence::new(game, du2).map_err(|e| RunError::Parse(e.to_string()))
        }
        DeviationInput::Random { seed } => Ok(random_direction(game, *seed)),
        DeviationInput::Zero => Ok(DeviationSequence::zeros(game)),
    }
}

/// Unit-norm deviation direction drawn from a seeded generator.
pub fn random_direction(game: &GameDefinition, seed: u64) -> DeviationSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m2 = game.input_dim(Player::Two);
    let du2: Vec<Vector> = (0..game.horizon())
        .map(|_| Vector::from_fn(m2, |_, _| rng.random_range(-1.0..=1.0)))
        .collect();
    let seq = DeviationSequence::new(game, du2).expect("generated deviation is well formed");
    let norm = seq.norm();
    seq.scaled(1.0 / norm)
}

pub fn write_deviation(path: &Path, dev: &DeviationSequence) -> std::io::Result<()> {
    let file = DeviationFile {
        du2: dev
            .entries()
            .iter()
            .map(|d| d.iter().copied().collect())
            .collect(),
    };
    report::write_json(path, &file)
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivitySummary {
    pub dj1_linear: f64,
    pub dj1_exact: f64,
    pub remainder: f64,
    pub deviation_norm: f64,
    pub dx_norms: Vec<f64>,
    pub dx: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SensitivityOutcome {
    pub summary: SensitivitySummary,
    pub sweep: Option<RemainderSweep>,
}

/// First-order sensitivity of Player 1's cost, optionally with a remainder
/// sweep over `sweep_eps` along the same deviation direction.
pub fn run_sensitivity(
    config: &ScenarioConfig,
    deviation: &DeviationInput,
    sweep_eps: Option<&[f64]>,
    out_dir: Option<&Path>,
) -> Result<SensitivityOutcome, RunError> {
    let (game, _) = validate(config)?;
    let fne = fne::solve_fne(&game)?;
    let x0 = config.x0();
    let dev = load_deviation(&game, deviation)?;
    let report = sensitivity::first_order_delta_j1(&fne, &game, &x0, &dev)?;
    let summary = SensitivitySummary {
        dj1_linear: report.dj1_linear,
        dj1_exact: report.dj1_exact,
        remainder: report.remainder(),
        deviation_norm: dev.norm(),
        dx_norms: report.dx.iter().map(|d| d.norm()).collect(),
        dx: report.dx.iter().map(|d| d.iter().copied().collect()).collect(),
    };
    let sweep = match sweep_eps {
        Some(eps) => Some(sensitivity::remainder_sweep(&fne, &game, &x0, &dev, eps)?),
        None => None,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        report::write_json(&dir.join("sensitivity.json"), &summary)?;
        if let Some(s) = &sweep {
            report::write_json(&dir.join("sweep.json"), s)?;
            let mut w = csv::Writer::from_path(dir.join("sweep.csv")).map_err(std::io::Error::other)?;
            w.write_record(["eps", "dj1_linear", "dj1_exact", "remainder"])
                .map_err(std::io::Error::other)?;
            for r in &s.rows {
                w.write_record([r.eps, r.dj1_linear, r.dj1_exact, r.remainder].map(|v| v.to_string()))
                    .map_err(std::io::Error::other)?;
            }
            w.flush()?;
        }
    }
    Ok(SensitivityOutcome { summary, sweep })
}

pub fn solve_to_dir(
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<(FneSolution, Option<CompensatorGains>), RunError> {
    let (_, _, fne, cf) = solve(config)?;
    fs::create_dir_all(out_dir)?;
    report::write_gains(&out_dir.join("gains.json"), &fne, cf.as_ref())?;
    Ok((fne, cf))
}

/// Helper for explicit-model scenarios.
pub fn explicit_model(dynamics: &Dynamics) -> ModelSpec {
    ModelSpec::Explicit {
        a: linalg::to_rows(&dynamics.a),
        b1: linalg::to_rows(&dynamics.b1),
        b2: linalg::to_rows(&dynamics.b2),
    }
}

pub fn weight_spec(game: &GameDefinition) -> WeightSpec {
    let rows = |m: &Mat| linalg::to_rows(m);
    WeightSpec {
        q1: rows(game.q(Player::One)),
        q2: rows(game.q(Player::Two)),
        r1: rows(game.r(Player::One)),
        r2: rows(game.r(Player::Two)),
        q1n: Some(rows(game.q_terminal(Player::One))),
        q2n: Some(rows(game.q_terminal(Player::Two))),
    }
}
