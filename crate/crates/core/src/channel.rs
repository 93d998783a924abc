//! System geometry, statistical parameters and Rician channel generation.
//!
//! Both the BS and the RIS are uniform square planar arrays. Element `n`
//! (0-based) of an `X`-element array sits at grid position
//! `(x, y) = (n / sqrt(X), n % sqrt(X))`, and the same indexing is used by
//! the array-gain functional in [`crate::moments`].
//!
//! Angles are drawn from `[0, 2π)` for both azimuth and elevation when
//! generated by [`crate::geometry`]. Physically the elevation would live in
//! `[0, π]`; the wider range is kept to reproduce the reference experiments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::PhaseVector;

pub const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= TWO_PI {
        0.0
    } else {
        wrapped
    }
}

/// Converts a power in dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// An (azimuth, elevation) direction in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub azimuth: f64,
    pub elevation: f64,
}

impl AnglePair {
    /// Builds a pair with both angles wrapped into `[0, 2π)`.
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self {
            azimuth: wrap_angle(azimuth),
            elevation: wrap_angle(elevation),
        }
    }

    pub fn normalized(self) -> Self {
        Self::new(self.azimuth, self.elevation)
    }
}

/// Angles of the RIS–BS link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisBsAngles {
    /// Arrival direction at the BS from the RIS.
    pub bs_arrival: AnglePair,
    /// Departure direction from the RIS towards the BS.
    pub ris_departure: AnglePair,
}

/// Which components of the Rician channels are present.
///
/// `PureLos` is the limit of infinite Rician factors and `PureNlos` is the
/// Rayleigh case with all Rician factors zero. Using explicit flags keeps
/// `∞` out of the arithmetic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    #[default]
    Rician,
    PureLos,
    PureNlos,
}

fn default_spacing_ratio() -> f64 {
    0.5
}

/// Full description of an RIS-aided uplink. All powers and gains are linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// BS antenna count (perfect square).
    #[serde(rename = "M")]
    pub m: usize,
    /// RIS element count (perfect square).
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of single-antenna users.
    #[serde(rename = "K")]
    pub k: usize,
    /// Element spacing over carrier wavelength.
    #[serde(default = "default_spacing_ratio")]
    pub spacing_ratio: f64,
    /// Rician factor of the RIS–BS link.
    pub delta: f64,
    /// Rician factor of each user–RIS link.
    pub epsilon: Vec<f64>,
    /// Large-scale gain of the RIS–BS link.
    pub beta: f64,
    /// Large-scale gain of each user–RIS link.
    pub alpha: Vec<f64>,
    /// Transmit power of each user.
    pub p: Vec<f64>,
    /// Noise power, same unit as `p`.
    pub sigma2: f64,
    pub ris_bs_angles: RisBsAngles,
    /// Arrival direction at the RIS from each user.
    pub user_angles: Vec<AnglePair>,
    #[serde(default)]
    pub fading: Fading,
}

/// Integer square root of `x` when `x` is a perfect square.
pub fn exact_sqrt(x: usize) -> Option<usize> {
    let r = (x as f64).sqrt().round() as usize;
    (r * r == x).then_some(r)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return bad(format!(
                "M, N and K must be at least 1 (got M={}, N={}, K={})",
                self.m, self.n, self.k
            ));
        }
        if exact_sqrt(self.m).is_none() {
            return bad(format!("M={} is not a perfect square", self.m));
        }
        if exact_sqrt(self.n).is_none() {
            return bad(format!("N={} is not a perfect square", self.n));
        }
        for (name, len) in [
            ("alpha", self.alpha.len()),
            ("epsilon", self.epsilon.len()),
            ("p", self.p.len()),
            ("user_angles", self.user_angles.len()),
        ] {
            if len != self.k {
                return bad(format!("{name} has length {len}, expected K={}", self.k));
            }
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return bad(format!("spacing_ratio must be positive, got {}", self.spacing_ratio));
        }
        let non_negative = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Scenario(format!("{name} must be finite and non-negative, got {v}")))
            }
        };
        non_negative("delta", self.delta)?;
        non_negative("beta", self.beta)?;
        for k in 0..self.k {
            non_negative("epsilon", self.epsilon[k])?;
            non_negative("alpha", self.alpha[k])?;
            non_negative("p", self.p[k])?;
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        let angles = std::iter::once(self.ris_bs_angles.bs_arrival)
            .chain(std::iter::once(self.ris_bs_angles.ris_departure))
            .chain(self.user_angles.iter().copied());
        for a in angles {
            if !(a.azimuth.is_finite() && a.elevation.is_finite()) {
                return bad("angles must be finite".into());
            }
        }
        Ok(())
    }

    pub fn sqrt_m(&self) -> usize {
        exact_sqrt(self.m).expect("validated scenario")
    }

    pub fn sqrt_n(&self) -> usize {
        exact_sqrt(self.n).expect("validated scenario")
    }

    /// Rician factors used by the closed forms: both zero under `PureNlos`.
    ///
    /// Under `PureLos` the stored factors are returned unchanged; callers
    /// must branch on [`Fading::PureLos`] themselves.
    pub fn effective_delta(&self) -> f64 {
        match self.fading {
            Fading::PureNlos => 0.0,
            _ => self.delta,
        }
    }

    pub fn effective_epsilon(&self, k: usize) -> f64 {
        match self.fading {
            Fading::PureNlos => 0.0,
            _ => self.epsilon[k],
        }
    }

    /// Returns a copy with every user transmitting `power`.
    pub fn with_uniform_power(&self, power: f64) -> Self {
        Self {
            p: vec![power; self.k],
            ..self.clone()
        }
    }

    /// Pairs of users that share the same arrival direction at the RIS.
    ///
    /// The closed forms are still evaluated in that case, but callers may
    /// want to flag it since the bounded-interference assumption breaks.
    pub fn coincident_users(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for k in 0..self.k {
            for i in (k + 1)..self.k {
                let (a, b) = (self.user_angles[k], self.user_angles[i]);
                if (a.azimuth - b.azimuth).abs() < 1e-12 && (a.elevation - b.elevation).abs() < 1e-12 {
                    pairs.push((k, i));
                }
            }
        }
        pairs
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_scenario()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_scenario()
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A per-user quantity given either once for all users or per user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    All(f64),
    Each(Vec<f64>),
}

impl PerUser {
    pub fn expand(&self, k: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            PerUser::All(v) => Ok(vec![*v; k]),
            PerUser::Each(v) if v.len() == k => Ok(v.clone()),
            PerUser::Each(v) => Err(Error::Scenario(format!(
                "{name} has length {}, expected K={k}",
                v.len()
            ))),
        }
    }
}

/// Powers given in dBm; converted to milliwatts on load.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DbmBlock {
    #[serde(default)]
    pub p: Option<PerUser>,
    #[serde(default)]
    pub sigma2: Option<f64>,
}

/// On-disk form of a [`Scenario`].
///
/// Per-user fields accept a scalar or a list, and an optional `dbm` block
/// can supply `p` and `sigma2` instead of the linear values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_spacing_ratio")]
    pub spacing_ratio: f64,
    pub delta: f64,
    pub epsilon: PerUser,
    pub beta: f64,
    pub alpha: PerUser,
    #[serde(default)]
    pub p: Option<PerUser>,
    #[serde(default)]
    pub sigma2: Option<f64>,
    pub ris_bs_angles: RisBsAngles,
    pub user_angles: Vec<AnglePair>,
    #[serde(default)]
    pub fading: Fading,
    #[serde(default)]
    pub dbm: Option<DbmBlock>,
}

impl ScenarioDoc {
    pub fn into_scenario(self) -> Result<Scenario> {
        let dbm = self.dbm.unwrap_or_default();
        let p = match (self.p, dbm.p) {
            (Some(_), Some(_)) => {
                return Err(Error::Scenario("p given both linearly and in the dbm block".into()))
            }
            (Some(p), None) => p.expand(self.k, "p")?,
            (None, Some(p)) => p.expand(self.k, "dbm.p")?.into_iter().map(dbm_to_mw).collect(),
            (None, None) => return Err(Error::Scenario("missing p".into())),
        };
        let sigma2 = match (self.sigma2, dbm.sigma2) {
            (Some(_), Some(_)) => {
                return Err(Error::Scenario(
                    "sigma2 given both linearly and in the dbm block".into(),
                ))
            }
            (Some(s), None) => s,
            (None, Some(s)) => dbm_to_mw(s),
            (None, None) => return Err(Error::Scenario("missing sigma2".into())),
        };
        let scenario = Scenario {
            m: self.m,
            n: self.n,
            k: self.k,
            spacing_ratio: self.spacing_ratio,
            delta: self.delta,
            epsilon: self.epsilon.expand(self.k, "epsilon")?,
            beta: self.beta,
            alpha: self.alpha.expand(self.k, "alpha")?,
            p,
            sigma2,
            ris_bs_angles: RisBsAngles {
                bs_arrival: self.ris_bs_angles.bs_arrival.normalized(),
                ris_departure: self.ris_bs_angles.ris_departure.normalized(),
            },
            user_angles: self.user_angles.into_iter().map(AnglePair::normalized).collect(),
            fading: self.fading,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Phase of element `index` of a square planar array, in radians.
pub(crate) fn element_phase(side: usize, index: usize, spacing_ratio: f64, angles: AnglePair) -> f64 {
    let x = (index / side) as f64;
    let y = (index % side) as f64;
    TWO_PI
        * spacing_ratio
        * (x * angles.azimuth.sin() * angles.elevation.sin() + y * angles.elevation.cos())
}

/// Response of an `elements`-element uniform square planar array.
pub fn array_response(elements: usize, spacing_ratio: f64, angles: AnglePair) -> Result<DVector<Complex64>> {
    let side = exact_sqrt(elements)
        .filter(|_| elements > 0)
        .ok_or_else(|| Error::Dimension(format!("array size {elements} is not a positive perfect square")))?;
    if !(spacing_ratio.is_finite() && spacing_ratio > 0.0) {
        return Err(Error::Domain(format!("spacing ratio must be positive, got {spacing_ratio}")));
    }
    Ok(DVector::from_iterator(
        elements,
        (0..elements).map(|n| Complex64::from_polar(1.0, element_phase(side, n, spacing_ratio, angles))),
    ))
}

/// Deterministic line-of-sight parts of the user–RIS and RIS–BS channels.
#[derive(Clone, Debug, PartialEq)]
pub struct LosComponents {
    /// `h̄_k`, one N-vector per user.
    pub users: Vec<DVector<Complex64>>,
    /// `H̄2 = a_M(bs_arrival) a_N(ris_departure)^H`, M×N.
    pub ris_bs: DMatrix<Complex64>,
}

pub fn los_components(scenario: &Scenario) -> Result<LosComponents> {
    scenario.validate()?;
    let d = scenario.spacing_ratio;
    let users = scenario
        .user_angles
        .iter()
        .map(|&a| array_response(scenario.n, d, a))
        .collect::<Result<Vec<_>>>()?;
    let a_m = array_response(scenario.m, d, scenario.ris_bs_angles.bs_arrival)?;
    let a_n = array_response(scenario.n, d, scenario.ris_bs_angles.ris_departure)?;
    Ok(LosComponents {
        users,
        ris_bs: &a_m * a_n.adjoint(),
    })
}

/// One draw of the user–RIS (`h1`, N×K) and RIS–BS (`h2`, M×N) channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub h1: DMatrix<Complex64>,
    pub h2: DMatrix<Complex64>,
}

/// Draws one CN(0, 1) variate.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Reusable channel generator holding the scaled LoS parts of a scenario.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    m: usize,
    n: usize,
    k: usize,
    fading: Fading,
    h1_los: DMatrix<Complex64>,
    h1_nlos_scale: Vec<f64>,
    h2_los: DMatrix<Complex64>,
    h2_nlos_scale: f64,
}

impl ChannelSampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let los = los_components(scenario)?;
        let (m, n, k) = (scenario.m, scenario.n, scenario.k);
        let delta = scenario.effective_delta();
        let (h2_los_scale, h2_nlos_scale) = match scenario.fading {
            Fading::PureLos => (scenario.beta.sqrt(), 0.0),
            _ => (
                (scenario.beta * delta / (delta + 1.0)).sqrt(),
                (scenario.beta / (delta + 1.0)).sqrt(),
            ),
        };
        let mut h1_los = DMatrix::zeros(n, k);
        let mut h1_nlos_scale = Vec::with_capacity(k);
        for user in 0..k {
            let alpha = scenario.alpha[user];
            let eps = scenario.effective_epsilon(user);
            let (los_scale, nlos_scale) = match scenario.fading {
                Fading::PureLos => (alpha.sqrt(), 0.0),
                _ => ((alpha * eps / (eps + 1.0)).sqrt(), (alpha / (eps + 1.0)).sqrt()),
            };
            h1_los.set_column(user, &(&los.users[user] * Complex64::from(los_scale)));
            h1_nlos_scale.push(nlos_scale);
        }
        Ok(Self {
            m,
            n,
            k,
            fading: scenario.fading,
            h1_los,
            h1_nlos_scale,
            h2_los: los.ris_bs * Complex64::from(h2_los_scale),
            h2_nlos_scale,
        })
    }

    /// Whether every draw is identical (no NLoS component anywhere).
    pub fn is_deterministic(&self) -> bool {
        self.fading == Fading::PureLos
    }

    /// Draws a realization. `h2` is filled column-major first, then `h1`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        if self.is_deterministic() {
            return ChannelRealization {
                h1: self.h1_los.clone(),
                h2: self.h2_los.clone(),
            };
        }
        let mut h2 = self.h2_los.clone();
        let s2 = self.h2_nlos_scale;
        for entry in h2.iter_mut() {
            *entry += complex_gaussian(rng) * s2;
        }
        let mut h1 = self.h1_los.clone();
        for user in 0..self.k {
            let s1 = self.h1_nlos_scale[user];
            for entry in h1.column_mut(user).iter_mut() {
                *entry += complex_gaussian(rng) * s1;
            }
        }
        debug_assert_eq!(h2.shape(), (self.m, self.n));
        ChannelRealization { h1, h2 }
    }
}

/// Draws one channel realization for `scenario` from `rng`.
pub fn sample_channels<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(scenario)?.sample(rng))
}

/// Cascaded user–RIS–BS channel `G = H2 Φ H1` (M×K); column `k` is `g_k`.
pub fn cascaded_channel(realization: &ChannelRealization, phases: &PhaseVector) -> Result<DMatrix<Complex64>> {
    let n = realization.h2.ncols();
    if phases.len() != n || realization.h1.nrows() != n {
        return Err(Error::Dimension(format!(
            "phase vector has length {}, H2 has {} columns and H1 has {} rows",
            phases.len(),
            n,
            realization.h1.nrows()
        )));
    }
    let mut reflected = realization.h1.clone();
    for (row, &theta) in phases.theta().iter().enumerate() {
        let rot = Complex64::from_polar(1.0, theta);
        for entry in reflected.row_mut(row).iter_mut() {
            *entry *= rot;
        }
    }
    Ok(&realization.h2 * reflected)
}

/// Large-scale gain `1 / (1000 · distance^exponent)`.
pub fn path_loss(distance: f64, exponent: f64) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    Ok(1.0 / (1000.0 * distance.powf(exponent)))
}
