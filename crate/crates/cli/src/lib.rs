//! Experiment runner: declarative sweeps over the RIS uplink model, written
//! as long-format CSV with a JSON sidecar.
//!
//! - [`spec`]: experiment files (TOML or JSON) and sweep expansion
//! - [`builtin`]: ready-made experiments at desk and paper scale
//! - [`run`]: execution and output

pub mod builtin;
pub mod error;
pub mod run;
pub mod spec;

pub use builtin::{builtin, Scale, BUILTINS};
pub use error::{ExperimentError, Result};
pub use run::{execute, run, Outputs, Row, RunSummary};
pub use spec::{Design, ExperimentSpec, Kind, Param};
