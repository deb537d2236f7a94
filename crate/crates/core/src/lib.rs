//! Two-player pursuit-evasion around a moving obstacle whose velocity only
//! the evader knows exactly.
//!
//! The pursuer plans against the nominal obstacle and can add a risk term
//! built from relevance-weighted constraint sensitivities (desensitization).
//! The evader either plays its own game against the true obstacle or tries
//! to lure a pure-pursuit model of the pursuer into the obstacle.
//!
//! Module map:
//! - [`game`]: state, dynamics, constraints, termination
//! - [`sensitivity`]: constraint sensitivities, relevance, risk, RCS fields
//! - [`trajopt`]: horizon best responses
//! - [`solver`]: per-step games for each player
//! - [`sim`]: closed-loop receding-horizon runs
//! - [`io`]: scenarios, presets, CSV, CLI

pub mod error;
pub mod game;
pub mod io;
pub mod sensitivity;
pub mod sim;
pub mod solver;
pub mod trajopt;

pub use error::{Error, Result};
pub use game::{ControlSequence, GameState, Outcome, OutcomeKind, ScenarioConfig};
pub use sim::{run, run_batch, SimulationTrace};
