//! Ready-made experiments. Each comes at two scales: `desk`, sized to finish
//! in minutes on a single core, and `paper`, with full sweeps and budgets.

use std::fmt;
use std::str::FromStr;

use ris_core::ga::GaConfig;
use ris_core::geometry::Layout;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::spec::{Design, ExperimentSpec, Kind, McConfig, Param, SweepDoc, SystemDoc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(ExperimentError::Config(format!("scale must be 'desk' or 'paper', got '{s}'"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

/// Names and one-line descriptions of the built-in experiments.
pub const BUILTINS: [(&str, &str); 8] = [
    ("fig3-moments", "closed-form vs simulated channel moments against N, two random phase vectors"),
    ("fig4-rician-sweep", "rates of the GA and random designs against the Rician factor delta"),
    ("fig5-pathloss-sweep", "rates against the RIS-BS path-loss exponent"),
    ("fig6-condition", "condition number of the cascaded channel against N"),
    ("fig7-antennas", "rates against the number of BS antennas M, for two RIS sizes"),
    ("fig8-power-scaling", "rates with transmit power scaled as E/M, against M"),
    ("fig9-users", "rates against the number of users K, for two RIS sizes"),
    ("fig10-discrete", "rates with 1-3 bit phase shifters against N"),
];

fn pick<T>(scale: Scale, desk: T, paper: T) -> T {
    match scale {
        Scale::Desk => desk,
        Scale::Paper => paper,
    }
}

fn sweep(parameter: Param, values: &[f64]) -> SweepDoc {
    SweepDoc {
        parameter,
        values: values.to_vec(),
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

fn base(name: &str, kind: Kind, scale: Scale, designs: &[Design], sweep: SweepDoc) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        kind,
        designs: designs.to_vec(),
        seed: 1,
        angle_seed: 1,
        system: SystemDoc::default(),
        layout: Layout::default(),
        sweep,
        series: None,
        ga: GaConfig::default(),
        mc: McConfig {
            samples: pick(scale, 5_000, 20_000),
            moment_samples: pick(scale, 4_000, 20_000),
            condition_samples: pick(scale, 1_000, 5_000),
            random_draws: pick(scale, 50, 200),
            random_mc_draws: pick(scale, 20, 50),
            moment_phase_draws: 2,
        },
        output: None,
    }
}

const ALL_DESIGNS: [Design; 3] = [Design::MaxSum, Design::MaxMin, Design::Random];

/// The built-in experiment `name` at `scale`.
pub fn builtin(name: &str, scale: Scale) -> Result<ExperimentSpec> {
    let spec = match name {
        "fig3-moments" => base(
            name,
            Kind::Moments,
            scale,
            &[],
            sweep(
                Param::N,
                pick(scale, &[4.0, 16.0, 36.0, 64.0, 100.0][..], &[4.0, 16.0, 36.0, 64.0, 100.0, 144.0, 196.0, 256.0]),
            ),
        ),
        "fig4-rician-sweep" => base(
            name,
            Kind::Rates,
            scale,
            &ALL_DESIGNS,
            sweep(Param::Delta, &pick(scale, logspace(-2.0, 2.0, 5), logspace(-2.0, 2.0, 13))),
        ),
        "fig5-pathloss-sweep" => base(
            name,
            Kind::Rates,
            scale,
            &ALL_DESIGNS,
            sweep(
                Param::RisBsExponent,
                pick(scale, &[2.0, 2.4, 2.8, 3.2, 3.6][..], &[2.0, 2.2, 2.4, 2.6, 2.8, 3.0, 3.2, 3.4, 3.6]),
            ),
        ),
        "fig6-condition" => base(
            name,
            Kind::Condition,
            scale,
            &[Design::Random, Design::MaxMin],
            sweep(
                Param::N,
                pick(scale, &[4.0, 16.0, 36.0, 64.0][..], &[4.0, 9.0, 16.0, 25.0, 36.0, 49.0, 64.0, 100.0, 144.0]),
            ),
        ),
        "fig7-antennas" => {
            let mut spec = base(
                name,
                Kind::Rates,
                scale,
                &ALL_DESIGNS,
                sweep(
                    Param::M,
                    pick(scale, &[16.0, 64.0, 256.0, 1024.0][..], &[16.0, 64.0, 144.0, 256.0, 576.0, 1024.0, 2025.0, 4096.0]),
                ),
            );
            spec.series = Some(sweep(Param::N, &[16.0, 64.0]));
            spec.mc.samples = pick(scale, 2_000, 5_000);
            spec
        }
        "fig8-power-scaling" => {
            let mut spec = base(
                name,
                Kind::Rates,
                scale,
                &[Design::MaxSum, Design::Random],
                sweep(
                    Param::M,
                    pick(scale, &[16.0, 64.0, 256.0, 1024.0][..], &[16.0, 64.0, 144.0, 256.0, 576.0, 1024.0, 2025.0, 4096.0]),
                ),
            );
            spec.system.scaled_power_mw = Some(1e5);
            spec.series = Some(sweep(Param::N, &[16.0, 64.0]));
            spec.mc.samples = pick(scale, 2_000, 5_000);
            spec
        }
        "fig9-users" => {
            let mut spec = base(
                name,
                Kind::Rates,
                scale,
                &ALL_DESIGNS,
                sweep(Param::K, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            );
            spec.series = Some(sweep(Param::N, &[16.0, 64.0]));
            spec
        }
        "fig10-discrete" => {
            let mut spec = base(
                name,
                Kind::Rates,
                scale,
                &[Design::MaxSum, Design::MaxMin],
                sweep(Param::N, pick(scale, &[16.0, 64.0][..], &[16.0, 36.0, 64.0, 100.0, 144.0])),
            );
            spec.series = Some(sweep(Param::Bits, &[0.0, 1.0, 2.0, 3.0]));
            spec
        }
        _ => {
            let known: Vec<&str> = BUILTINS.iter().map(|(n, _)| *n).collect();
            return Err(ExperimentError::Config(format!(
                "unknown builtin '{name}' (known: {})",
                known.join(", ")
            )));
        }
    };
    Ok(spec)
}
