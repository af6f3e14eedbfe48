//! Scenario runner: builds sessions from a [`Scenario`], runs seeded trials
//! (possibly in parallel), and emits one CSV row per trial plus a JSON
//! summary.
//!
//! Randomness: trial `i` of a scenario with seed `s` draws everything from
//! ChaCha20 (`rand_chacha`) seeded with `s` and switched to stream `i`, so
//! rows do not depend on scheduling or on how many trials run.

mod bounds_cmd;
mod error;
mod scenario;

pub use bounds_cmd::{bounds_grid, run_bounds, BoundsOutput, GridRow};
pub use error::{CliError, CliResult};
pub use scenario::{
    run_scenario, write_csv, AttackChoice, ProtocolChoice, Scenario, ScenarioOutput, Summary, TrialRow,
};
