//! Two-player finite-horizon discrete-time LQ games.
//!
//! - [`fne`]: feedback Nash equilibrium from the coupled Riccati recursion.
//! - [`sensitivity`]: first-order change of Player 1's cost when Player 2
//!   deviates from its Nash command.
//! - [`compensator`]: Player 1's optimal affine policy `u₁ = −Kx − Lw` when
//!   Player 2 executes through a first-order lag.
//! - [`sim`]: closed-loop roll-outs and realized costs.
//! - [`scenario`]: JSON scenarios and the workflows behind the `lqgame` binary.

pub mod cart;
pub mod compensator;
pub mod error;
pub mod experiment;
pub mod fne;
pub mod game;
pub mod linalg;
pub mod report;
pub mod scenario;
pub mod sensitivity;
pub mod sim;

pub use compensator::{
    build_augmented_system, gap_value, local_gain_estimate, solve_compensator, AugmentationMode,
    AugmentedSystem, CompensatorGains, InitialInputMode, LagModel,
};
pub use error::{Error, Result};
pub use fne::{best_response_gains, solve_fne, FneSolution};
pub use game::{validate_game, Dynamics, GameDefinition, Player, PlayerWeights, ValidationReport};
pub use linalg::{symmetrize, Mat, Vector};
pub use sensitivity::{
    first_order_delta_j1, lambda_coefficients, state_perturbation, transition_matrix, DeviationSequence,
    SensitivityReport,
};
pub use sim::{compare_cases, evaluate_cost, simulate, CaseKind, PolicyCase, SimulationResult};
