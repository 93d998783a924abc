use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{wrap_angle, TWO_PI};
use crate::error::{Error, Result};

/// Largest supported discrete resolution.
pub const MAX_BITS: u32 = 24;

/// Feasible set for each RIS phase shift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseDomain {
    /// Any value in `[0, 2π)`.
    #[default]
    Continuous,
    /// One of the `2^bits` values `t · 2π / 2^bits`.
    Discrete { bits: u32 },
}

impl PhaseDomain {
    pub fn validate(self) -> Result<()> {
        match self {
            PhaseDomain::Discrete { bits } if bits == 0 || bits > MAX_BITS => Err(Error::Domain(format!(
                "discrete resolution must be between 1 and {MAX_BITS} bits, got {bits}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn levels(self) -> Option<u64> {
        match self {
            PhaseDomain::Continuous => None,
            PhaseDomain::Discrete { bits } => Some(1u64 << bits),
        }
    }

    /// Draws one phase uniformly from the domain.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            PhaseDomain::Continuous => wrap_angle(rng.random::<f64>() * TWO_PI),
            PhaseDomain::Discrete { bits } => grid_value(rng.random_range(0..(1u64 << bits)), bits),
        }
    }

    pub fn contains(self, theta: f64) -> bool {
        match self {
            PhaseDomain::Continuous => (0.0..TWO_PI).contains(&theta),
            PhaseDomain::Discrete { bits } => {
                let idx = (theta * (1u64 << bits) as f64 / TWO_PI).round();
                idx >= 0.0 && idx < (1u64 << bits) as f64 && grid_value(idx as u64, bits) == theta
            }
        }
    }
}

/// Grid point `index · 2π / 2^bits`.
pub fn grid_value(index: u64, bits: u32) -> f64 {
    index as f64 * TWO_PI / (1u64 << bits) as f64
}

/// Rounds `theta` to the nearest `bits`-bit grid point; exact ties go to
/// the smaller phase.
pub fn quantize(theta: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits;
    let t = wrap_angle(theta) * levels as f64 / TWO_PI;
    let idx = (t - 0.5).ceil() as u64 % levels;
    grid_value(idx, bits)
}

/// RIS phase shifts `θ_1..θ_N` together with their feasible set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    theta: Vec<f64>,
    domain: PhaseDomain,
}

impl PhaseVector {
    /// Continuous phases, wrapped into `[0, 2π)`.
    pub fn continuous(theta: Vec<f64>) -> Self {
        Self {
            theta: theta.into_iter().map(wrap_angle).collect(),
            domain: PhaseDomain::Continuous,
        }
    }

    /// Discrete phases from grid indices.
    pub fn from_indices(indices: &[u64], bits: u32) -> Result<Self> {
        let domain = PhaseDomain::Discrete { bits };
        domain.validate()?;
        let levels = 1u64 << bits;
        if let Some(bad) = indices.iter().find(|&&i| i >= levels) {
            return Err(Error::Domain(format!("grid index {bad} out of range for {bits} bits")));
        }
        Ok(Self {
            theta: indices.iter().map(|&i| grid_value(i, bits)).collect(),
            domain,
        })
    }

    /// Checks `theta` against `domain`. Continuous values are wrapped;
    /// discrete values must sit on the grid (within 1e-9 rad) and are snapped.
    pub fn new(theta: Vec<f64>, domain: PhaseDomain) -> Result<Self> {
        domain.validate()?;
        match domain {
            PhaseDomain::Continuous => {
                if theta.iter().any(|t| !t.is_finite()) {
                    return Err(Error::Domain("phase shifts must be finite".into()));
                }
                Ok(Self::continuous(theta))
            }
            PhaseDomain::Discrete { bits } => {
                let theta = theta
                    .into_iter()
                    .map(|t| {
                        let snapped = quantize(t, bits);
                        let diff = (wrap_angle(t) - snapped).abs();
                        if diff.min(TWO_PI - diff) < 1e-9 {
                            Ok(snapped)
                        } else {
                            Err(Error::Domain(format!("phase {t} is not on the {bits}-bit grid")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self { theta, domain })
            }
        }
    }

    /// Projects arbitrary phases onto `domain` (nearest grid point when discrete).
    pub fn project(theta: &[f64], domain: PhaseDomain) -> Result<Self> {
        domain.validate()?;
        let theta = match domain {
            PhaseDomain::Continuous => theta.iter().map(|&t| wrap_angle(t)).collect(),
            PhaseDomain::Discrete { bits } => theta.iter().map(|&t| quantize(t, bits)).collect(),
        };
        Ok(Self { theta, domain })
    }

    pub fn zeros(n: usize, domain: PhaseDomain) -> Self {
        Self {
            theta: vec![0.0; n],
            domain,
        }
    }

    /// Independent uniform draws from `domain`.
    pub fn random<R: Rng + ?Sized>(n: usize, domain: PhaseDomain, rng: &mut R) -> Self {
        Self {
            theta: (0..n).map(|_| domain.sample(rng)).collect(),
            domain,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn domain(&self) -> PhaseDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn satisfies_domain(&self) -> bool {
        self.theta.iter().all(|&t| self.domain.contains(t))
    }

    pub(crate) fn from_parts_unchecked(theta: Vec<f64>, domain: PhaseDomain) -> Self {
        debug_assert!(theta.iter().all(|&t| domain.contains(t)));
        Self { theta, domain }
    }
}
