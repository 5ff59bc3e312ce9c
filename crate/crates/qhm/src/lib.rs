//! Scenario runner for the quantum heat machine models in `qhm-core`.

pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod validate;
