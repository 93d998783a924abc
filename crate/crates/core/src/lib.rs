//! Analysis toolkit for RIS-aided massive MIMO uplinks under Rician fading.
//!
//! - [`channel`]: array responses, scenarios and channel sampling
//! - [`phase`]: continuous and discrete RIS phase vectors
//! - [`moments`]: closed-form channel moments
//! - [`rate`]: closed-form ergodic rates and their limits
//! - [`montecarlo`]: simulation estimators used to validate the closed forms
//! - [`ga`]: genetic-algorithm phase optimization
//! - [`geometry`]: scenarios built from a physical layout

pub mod channel;
pub mod error;
pub mod ga;
pub mod geometry;
pub mod moments;
pub mod montecarlo;
pub mod phase;
pub mod rate;

pub use channel::{AnglePair, Fading, RisBsAngles, Scenario};
pub use error::{Error, Result};
pub use ga::{ga_optimize, GaConfig, GaResult, Objective};
pub use moments::{MomentEvaluator, MomentSet};
pub use montecarlo::McEstimate;
pub use phase::{PhaseDomain, PhaseVector};
pub use rate::{ergodic_rate, RateReport};
