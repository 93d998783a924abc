//! Experiment descriptions: a base system, a one-parameter sweep with an
//! optional series parameter, the phase designs to compare and the
//! optimizer/simulation settings.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ris_core::channel::{dbm_to_mw, Fading, Scenario};
use ris_core::ga::GaConfig;
use ris_core::geometry::{scenario_from_geometry, Layout, SystemParams};
use ris_core::phase::PhaseDomain;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

/// What is computed at every sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// Closed-form and simulated rates per design.
    Rates,
    /// Closed-form and simulated channel moments under random phases.
    Moments,
    /// Simulated condition number of the cascaded channel per design.
    Condition,
}

/// How the RIS phases are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// GA maximizing the sum rate.
    MaxSum,
    /// GA maximizing the minimum user rate.
    MaxMin,
    /// Uniformly random phases, averaged over draws.
    Random,
    /// Phases aligned to user 0.
    Aligned,
}

impl Design {
    pub fn label(self) -> &'static str {
        match self {
            Design::MaxSum => "max_sum",
            Design::MaxMin => "max_min",
            Design::Random => "random",
            Design::Aligned => "aligned",
        }
    }
}

/// A sweepable field of the system, layout or optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Param {
    M,
    N,
    K,
    Delta,
    Epsilon,
    RisBsExponent,
    UserRisExponent,
    PowerDbm,
    Sigma2Dbm,
    /// Phase resolution; 0 means continuous.
    Bits,
    MutationProb,
    MaxGenerations,
}

const PARAMS: [(Param, &str); 12] = [
    (Param::M, "M"),
    (Param::N, "N"),
    (Param::K, "K"),
    (Param::Delta, "delta"),
    (Param::Epsilon, "epsilon"),
    (Param::RisBsExponent, "ris_bs_exponent"),
    (Param::UserRisExponent, "user_ris_exponent"),
    (Param::PowerDbm, "power_dbm"),
    (Param::Sigma2Dbm, "sigma2_dbm"),
    (Param::Bits, "bits"),
    (Param::MutationProb, "mutation_prob"),
    (Param::MaxGenerations, "max_generations"),
];

impl Param {
    pub fn name(self) -> &'static str {
        PARAMS.iter().find(|(p, _)| *p == self).map(|(_, n)| *n).expect("listed")
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PARAMS.iter().find(|(_, n)| *n == s).map(|(p, _)| *p).ok_or_else(|| {
            let known: Vec<&str> = PARAMS.iter().map(|(_, n)| *n).collect();
            format!("unknown sweep parameter '{s}' (known: {})", known.join(", "))
        })
    }
}

impl TryFrom<String> for Param {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Param> for String {
    fn from(p: Param) -> String {
        p.name().to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub parameter: Param,
    pub values: Vec<f64>,
}

/// System parameters as written in a spec file; powers in dBm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemDoc {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub power_dbm: f64,
    pub sigma2_dbm: f64,
    pub spacing_ratio: f64,
    pub fading: Fading,
    /// When set, every user transmits `scaled_power_mw / M` (mW) instead of
    /// `power_dbm`.
    pub scaled_power_mw: Option<f64>,
}

impl Default for SystemDoc {
    fn default() -> Self {
        Self {
            m: 64,
            n: 16,
            k: 4,
            delta: 1.0,
            epsilon: 10.0,
            power_dbm: 30.0,
            sigma2_dbm: -104.0,
            spacing_ratio: 0.5,
            fading: Fading::Rician,
            scaled_power_mw: None,
        }
    }
}

impl SystemDoc {
    /// Linear-unit parameters.
    pub fn params(&self) -> SystemParams {
        let power = match self.scaled_power_mw {
            Some(total) => total / self.m as f64,
            None => dbm_to_mw(self.power_dbm),
        };
        SystemParams {
            m: self.m,
            n: self.n,
            k: self.k,
            delta: self.delta,
            epsilon: self.epsilon,
            power,
            sigma2: dbm_to_mw(self.sigma2_dbm),
            spacing_ratio: self.spacing_ratio,
            fading: self.fading,
        }
    }
}

/// Simulation budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    /// Channel draws per rate estimate; 0 skips simulation.
    pub samples: usize,
    /// Channel draws per moment estimate.
    pub moment_samples: usize,
    /// Channel draws per condition-number estimate.
    pub condition_samples: usize,
    /// Phase draws averaged by the closed-form random design.
    pub random_draws: usize,
    /// Phase draws of the simulated random design (`samples` split across them).
    pub random_mc_draws: usize,
    /// Independent random phase vectors in a moments experiment.
    pub moment_phase_draws: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            moment_samples: 10_000,
            condition_samples: 2_000,
            random_draws: 100,
            random_mc_draws: 20,
            moment_phase_draws: 2,
        }
    }
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: Kind,
    /// Ignored by moments experiments, which always use random phases.
    #[serde(default)]
    pub designs: Vec<Design>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Seed of the frozen random angles.
    #[serde(default = "default_seed")]
    pub angle_seed: u64,
    #[serde(default)]
    pub system: SystemDoc,
    #[serde(default)]
    pub layout: Layout,
    pub sweep: SweepDoc,
    #[serde(default)]
    pub series: Option<SweepDoc>,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub mc: McConfig,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// One fully resolved sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub index: usize,
    pub value: f64,
    pub series_value: Option<f64>,
    pub system: SystemDoc,
    pub layout: Layout,
    pub ga: GaConfig,
}

impl Point {
    pub fn scenario(&self, angle_seed: u64) -> Result<Scenario> {
        scenario_from_geometry(&self.layout, &self.system.params(), angle_seed)
            .map_err(|e| ExperimentError::Config(format!("sweep point {}: {e}", self.describe())))
    }

    pub fn domain(&self) -> PhaseDomain {
        self.ga.domain
    }

    fn describe(&self) -> String {
        match self.series_value {
            Some(s) => format!("value={} series={s}", self.value),
            None => format!("value={}", self.value),
        }
    }
}

fn config(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

fn as_count(param: Param, value: f64) -> Result<usize> {
    if value.is_finite() && value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(config(format!("{param} must be a non-negative integer, got {value}")))
    }
}

/// Writes `value` into the field named by `param`.
pub fn apply(param: Param, value: f64, system: &mut SystemDoc, layout: &mut Layout, ga: &mut GaConfig) -> Result<()> {
    match param {
        Param::M => system.m = as_count(param, value)?,
        Param::N => system.n = as_count(param, value)?,
        Param::K => system.k = as_count(param, value)?,
        Param::Delta => system.delta = value,
        Param::Epsilon => system.epsilon = value,
        Param::RisBsExponent => layout.ris_bs_exponent = value,
        Param::UserRisExponent => layout.user_ris_exponent = value,
        Param::PowerDbm => {
            system.power_dbm = value;
            system.scaled_power_mw = None;
        }
        Param::Sigma2Dbm => system.sigma2_dbm = value,
        Param::Bits => {
            let bits = as_count(param, value)?;
            ga.domain = if bits == 0 {
                PhaseDomain::Continuous
            } else {
                PhaseDomain::Discrete { bits: bits as u32 }
            };
        }
        Param::MutationProb => ga.mutation_prob = value,
        Param::MaxGenerations => ga.max_generations = as_count(param, value)?,
    }
    Ok(())
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config(format!("invalid TOML spec: {e}")))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config(format!("invalid JSON spec: {e}")))
    }

    /// Reads a spec; `.json` files are parsed as JSON, anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read spec '{}': {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ExperimentError::Runtime(e.to_string()))
    }

    /// Sweep points ordered by (series value, sweep value).
    pub fn points(&self) -> Result<Vec<Point>> {
        if self.sweep.values.is_empty() {
            return Err(config("sweep.values must not be empty"));
        }
        let series: Vec<Option<f64>> = match &self.series {
            None => vec![None],
            Some(s) if s.values.is_empty() => return Err(config("series.values must not be empty")),
            Some(s) if s.parameter == self.sweep.parameter => {
                return Err(config(format!("series parameter '{}' duplicates the sweep parameter", s.parameter)))
            }
            Some(s) => {
                let mut v = s.values.clone();
                v.sort_by(f64::total_cmp);
                v.into_iter().map(Some).collect()
            }
        };
        let mut sweep_values = self.sweep.values.clone();
        sweep_values.sort_by(f64::total_cmp);
        let mut points = Vec::new();
        for sv in series {
            for &value in &sweep_values {
                let mut system = self.system.clone();
                let mut layout = self.layout.clone();
                let mut ga = self.ga.clone();
                if let (Some(s), Some(v)) = (&self.series, sv) {
                    apply(s.parameter, v, &mut system, &mut layout, &mut ga)?;
                }
                apply(self.sweep.parameter, value, &mut system, &mut layout, &mut ga)?;
                points.push(Point {
                    index: points.len(),
                    value,
                    series_value: sv,
                    system,
                    layout,
                    ga,
                });
            }
        }
        Ok(points)
    }

    /// Checks everything that can be checked without running: names,
    /// budgets, and that every sweep point yields a valid scenario.
    pub fn validate(&self) -> Result<Vec<Point>> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(config(format!(
                "name must be non-empty and contain only letters, digits, '-' or '_', got '{}'",
                self.name
            )));
        }
        if self.kind != Kind::Moments && self.designs.is_empty() {
            return Err(config("designs must list at least one phase design"));
        }
        let mc = &self.mc;
        if mc.samples != 0 && mc.samples < 100 {
            return Err(config(format!("mc.samples must be 0 or at least 100, got {}", mc.samples)));
        }
        if self.designs.contains(&Design::Random) {
            if mc.random_draws == 0 {
                return Err(config("mc.random_draws must be at least 1"));
            }
            if mc.samples != 0 && (mc.random_mc_draws < 2 || mc.random_mc_draws > mc.samples) {
                return Err(config(format!(
                    "mc.random_mc_draws must be between 2 and mc.samples, got {}",
                    mc.random_mc_draws
                )));
            }
        }
        if self.kind == Kind::Moments && (mc.moment_samples < 2 || mc.moment_phase_draws == 0) {
            return Err(config("mc.moment_samples must be at least 2 and mc.moment_phase_draws at least 1"));
        }
        if self.kind == Kind::Condition && mc.condition_samples < 2 {
            return Err(config("mc.condition_samples must be at least 2"));
        }
        let points = self.points()?;
        for p in &points {
            let s = p.scenario(self.angle_seed)?;
            p.ga.validate().map_err(|e| config(format!("ga at sweep point {}: {e}", p.describe())))?;
            if self.kind == Kind::Condition && s.k > s.m.min(s.n) {
                return Err(config(format!(
                    "condition experiments need K <= min(M, N) (sweep point {})",
                    p.describe()
                )));
            }
            if let Some(total) = p.system.scaled_power_mw {
                if !(total.is_finite() && total > 0.0) {
                    return Err(config(format!("system.scaled_power_mw must be positive, got {total}")));
                }
            }
        }
        Ok(points)
    }
}
