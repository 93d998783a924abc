//! Scenarios derived from a physical layout: BS and RIS positions, users on
//! a half circle, distance-based path loss and seeded random angles.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_mw, path_loss, AnglePair, Fading, RisBsAngles, Scenario, TWO_PI};
use crate::error::{Error, Result};
use crate::montecarlo::substream;

/// Stream used for angle generation, kept apart from simulation streams.
const ANGLE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Layout {
    /// BS position (x, y, z) in meters.
    pub bs: [f64; 3],
    /// RIS position (x, y, z) in meters.
    pub ris: [f64; 3],
    /// Center (x, y) of the users' half circle.
    pub user_center: [f64; 2],
    pub user_radius: f64,
    pub user_height: f64,
    pub ris_bs_exponent: f64,
    pub user_ris_exponent: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            bs: [0.0, 0.0, 25.0],
            ris: [5.0, 100.0, 30.0],
            user_center: [5.0, 100.0],
            user_radius: 5.0,
            user_height: 1.6,
            ris_bs_exponent: 2.8,
            user_ris_exponent: 2.8,
        }
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl Layout {
    /// User positions, equally spaced on the half circle facing the BS
    /// (`y ≤ center_y`); a single user sits at the midpoint.
    pub fn user_positions(&self, k: usize) -> Result<Vec<[f64; 3]>> {
        if !(self.user_radius.is_finite() && self.user_radius > 0.0) {
            return Err(Error::Domain(format!("user radius must be positive, got {}", self.user_radius)));
        }
        if k == 0 {
            return Err(Error::Domain("need at least one user".into()));
        }
        Ok((0..k)
            .map(|i| {
                let psi = PI + PI * (i as f64 + 0.5) / k as f64;
                [
                    self.user_center[0] + self.user_radius * psi.cos(),
                    self.user_center[1] + self.user_radius * psi.sin(),
                    self.user_height,
                ]
            })
            .collect())
    }

    pub fn ris_bs_distance(&self) -> f64 {
        distance(self.bs, self.ris)
    }

    pub fn beta(&self) -> Result<f64> {
        path_loss(self.ris_bs_distance(), self.ris_bs_exponent)
    }

    pub fn user_distances(&self, k: usize) -> Result<Vec<f64>> {
        Ok(self.user_positions(k)?.into_iter().map(|u| distance(u, self.ris)).collect())
    }

    pub fn alphas(&self, k: usize) -> Result<Vec<f64>> {
        self.user_distances(k)?
            .into_iter()
            .map(|d| path_loss(d, self.user_ris_exponent))
            .collect()
    }
}

/// Angles drawn uniformly from `[0, 2π)`: the RIS–BS pair first
/// (`φ_r^a, φ_r^e, φ_t^a, φ_t^e`), then each user's (azimuth, elevation).
///
/// Users are drawn in order from one stream, so the first `K` users of a
/// larger draw equal a direct draw of `K` users.
pub fn random_angles(k: usize, seed: u64) -> (RisBsAngles, Vec<AnglePair>) {
    let mut rng = substream(seed, ANGLE_STREAM);
    let mut next = || rng.random::<f64>() * TWO_PI;
    let bs_arrival = AnglePair::new(next(), next());
    let ris_departure = AnglePair::new(next(), next());
    let users = (0..k).map(|_| AnglePair::new(next(), next())).collect();
    (RisBsAngles { bs_arrival, ris_departure }, users)
}

/// Non-geometric system parameters. Powers are linear (mW).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub power: f64,
    pub sigma2: f64,
    pub spacing_ratio: f64,
    pub fading: Fading,
}

impl Default for SystemParams {
    /// M = 64, N = 16, K = 4, 30 dBm, −104 dBm noise, δ = 1, ε = 10.
    fn default() -> Self {
        Self {
            m: 64,
            n: 16,
            k: 4,
            delta: 1.0,
            epsilon: 10.0,
            power: dbm_to_mw(30.0),
            sigma2: dbm_to_mw(-104.0),
            spacing_ratio: 0.5,
            fading: Fading::Rician,
        }
    }
}

/// Builds a scenario from a layout, system parameters and an angle seed.
pub fn scenario_from_geometry(layout: &Layout, params: &SystemParams, angle_seed: u64) -> Result<Scenario> {
    let k = params.k;
    let (ris_bs_angles, user_angles) = random_angles(k, angle_seed);
    let scenario = Scenario {
        m: params.m,
        n: params.n,
        k,
        spacing_ratio: params.spacing_ratio,
        delta: params.delta,
        epsilon: vec![params.epsilon; k],
        beta: layout.beta()?,
        alpha: layout.alphas(k)?,
        p: vec![params.power; k],
        sigma2: params.sigma2,
        ris_bs_angles,
        user_angles,
        fading: params.fading,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Default layout and parameters with the given angle seed.
pub fn reference_scenario(angle_seed: u64) -> Scenario {
    scenario_from_geometry(&Layout::default(), &SystemParams::default(), angle_seed).expect("defaults are valid")
}
