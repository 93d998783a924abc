//! Closed-form second and fourth moments of the cascaded channel.
//!
//! For user `k` with cascaded channel `g_k = H2 Φ h_k` this module evaluates
//! `E{‖g_k‖²}`, `E{‖g_k‖⁴}` and `E{|g_k^H g_i|²}` as functions of the phase
//! vector, through the array-gain functional
//!
//! ```text
//! f_c(Φ) = Σ_n exp(j(2π·d/λ·(x_n p_c + y_n q_c) + θ_n))
//! p_c = sin φ_cr^a sin φ_cr^e − sin φ_t^a sin φ_t^e
//! q_c = cos φ_cr^e − cos φ_t^e
//! ```
//!
//! The Rician expressions are written term by term with `|f|²` computed
//! once and reused. Under [`Fading::PureLos`] the limits of infinite Rician
//! factors are used instead; under [`Fading::PureNlos`] both factors are 0.

use num_complex::Complex64;

use crate::channel::{array_response, Fading, Scenario, TWO_PI};
use crate::error::{Error, Result};
use crate::phase::{quantize, PhaseDomain, PhaseVector};

/// Per-element phase `2π·d/λ·(x_n p_c + y_n q_c)` of user `c`.
pub fn steering_phases(scenario: &Scenario, user: usize) -> Result<Vec<f64>> {
    scenario.validate()?;
    check_user(scenario, user)?;
    let side = scenario.sqrt_n();
    let ua = scenario.user_angles[user];
    let ta = scenario.ris_bs_angles.ris_departure;
    let p = ua.azimuth.sin() * ua.elevation.sin() - ta.azimuth.sin() * ta.elevation.sin();
    let q = ua.elevation.cos() - ta.elevation.cos();
    Ok((0..scenario.n)
        .map(|n| {
            let x = (n / side) as f64;
            let y = (n % side) as f64;
            TWO_PI * scenario.spacing_ratio * (x * p + y * q)
        })
        .collect())
}

fn check_user(scenario: &Scenario, user: usize) -> Result<()> {
    if user >= scenario.k {
        return Err(Error::Domain(format!("user index {user} out of range for K={}", scenario.k)));
    }
    Ok(())
}

fn check_phases(scenario: &Scenario, phases: &PhaseVector) -> Result<()> {
    if phases.len() != scenario.n {
        return Err(Error::Dimension(format!(
            "phase vector has length {}, expected N={}",
            phases.len(),
            scenario.n
        )));
    }
    Ok(())
}

fn array_gain_from_steering(steering: &[f64], phases: &PhaseVector) -> Complex64 {
    steering
        .iter()
        .zip(phases.theta())
        .map(|(&z, &t)| Complex64::from_polar(1.0, z + t))
        .sum()
}

/// Array-gain functional `f_c(Φ)`.
pub fn f_c(phases: &PhaseVector, scenario: &Scenario, user: usize) -> Result<Complex64> {
    let steering = steering_phases(scenario, user)?;
    check_phases(scenario, phases)?;
    Ok(array_gain_from_steering(&steering, phases))
}

/// Phases maximizing `|f_k|`: `θ_n = −2π·d/λ·(x_n p_k + y_n q_k)`.
///
/// In a discrete domain each phase is rounded independently to its nearest
/// grid point (ties to the smaller phase).
pub fn aligned_phases(scenario: &Scenario, user: usize, domain: PhaseDomain) -> Result<PhaseVector> {
    let target: Vec<f64> = steering_phases(scenario, user)?.into_iter().map(|z| -z).collect();
    PhaseVector::project(&target, domain)
}

/// `E{‖g_k‖²}` from scalar inputs, Rician case.
#[allow(clippy::too_many_arguments)]
pub fn noise_moment_rician(m: f64, n: f64, beta: f64, alpha: f64, delta: f64, eps: f64, f2: f64) -> f64 {
    m * beta * alpha / ((delta + 1.0) * (eps + 1.0)) * (delta * eps * f2 + (delta + eps + 1.0) * n)
}

/// `E{‖g_k‖⁴}` from scalar inputs, Rician case.
#[allow(clippy::too_many_arguments)]
pub fn signal_moment_rician(m: f64, n: f64, beta: f64, alpha: f64, delta: f64, eps: f64, f2: f64) -> f64 {
    let c = beta * alpha / ((delta + 1.0) * (eps + 1.0));
    let de = delta * eps;
    let braces = m * de * de * f2 * f2
        + 2.0 * de * f2 * (2.0 * m * n * delta + m * n * eps + m * n + 2.0 * m + n * eps + n + 2.0)
        + m * n * n
            * (2.0 * delta * delta + eps * eps + 2.0 * de + 2.0 * delta + 2.0 * eps + 1.0)
        + n * n * (eps * eps + 2.0 * de + 2.0 * delta + 2.0 * eps + 1.0)
        + m * n * (2.0 * delta + 2.0 * eps + 1.0)
        + n * (2.0 * delta + 2.0 * eps + 1.0);
    m * c * c * braces
}

/// Inputs of the interference moment for an ordered user pair `(k, i)`.
#[derive(Clone, Copy, Debug)]
pub struct PairTerms {
    pub alpha_k: f64,
    pub alpha_i: f64,
    pub eps_k: f64,
    pub eps_i: f64,
    pub f_k: Complex64,
    pub f_i: Complex64,
    /// `h̄_k^H h̄_i`.
    pub los_inner: Complex64,
}

/// `E{|g_k^H g_i|²}` from scalar inputs, Rician case.
pub fn interference_moment_rician(m: f64, n: f64, beta: f64, delta: f64, t: &PairTerms) -> f64 {
    let (ek, ei) = (t.eps_k, t.eps_i);
    let fk2 = t.f_k.norm_sqr();
    let fi2 = t.f_i.norm_sqr();
    let pre = m * beta * beta * t.alpha_i * t.alpha_k / ((delta + 1.0).powi(2) * (ei + 1.0) * (ek + 1.0));
    // f_k^H f_i h̄_i^H h̄_k, with h̄_i^H h̄_k = conj(h̄_k^H h̄_i)
    let cross = (t.f_k.conj() * t.f_i * t.los_inner.conj()).re;
    let braces = m * delta * delta * ek * ei * fk2 * fi2
        + delta * ek * fk2 * (delta * m * n + n * ei + n + 2.0 * m)
        + delta * ei * fi2 * (delta * m * n + n * ek + n + 2.0 * m)
        + n * n * (m * delta * delta + delta * (ei + ek + 2.0) + (ek + 1.0) * (ei + 1.0))
        + m * n * (2.0 * delta + ei + ek + 1.0)
        + m * ek * ei * t.los_inner.norm_sqr()
        + 2.0 * m * delta * ek * ei * cross;
    pre * braces
}

/// The three closed-form moments for every user and ordered user pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSet {
    /// `E{‖g_k‖²}`.
    pub noise: Vec<f64>,
    /// `E{‖g_k‖⁴}`.
    pub signal: Vec<f64>,
    /// `E{|g_k^H g_i|²}` at `[k][i]`; the diagonal is unused and set to 0.
    pub interference: Vec<Vec<f64>>,
}

impl MomentSet {
    pub fn users(&self) -> usize {
        self.noise.len()
    }

    /// `Σ_{i≠k} E{|g_k^H g_i|²}`.
    pub fn sum_interference(&self, k: usize) -> f64 {
        self.interference[k]
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, v)| v)
            .sum()
    }
}

/// Precomputed scenario data for repeated moment evaluation.
#[derive(Clone, Debug)]
pub struct MomentEvaluator {
    scenario: Scenario,
    steering: Vec<Vec<f64>>,
    /// `h̄_k^H h̄_i`.
    los_gram: Vec<Vec<Complex64>>,
}

impl MomentEvaluator {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let steering = (0..scenario.k)
            .map(|c| steering_phases(scenario, c))
            .collect::<Result<Vec<_>>>()?;
        let los = scenario
            .user_angles
            .iter()
            .map(|&a| array_response(scenario.n, scenario.spacing_ratio, a))
            .collect::<Result<Vec<_>>>()?;
        let los_gram = los
            .iter()
            .map(|hk| los.iter().map(|hi| hk.dotc(hi)).collect())
            .collect();
        Ok(Self {
            scenario: scenario.clone(),
            steering,
            los_gram,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn los_inner(&self, k: usize, i: usize) -> Complex64 {
        self.los_gram[k][i]
    }

    /// `f_c(Φ)` for every user.
    pub fn array_gains(&self, phases: &PhaseVector) -> Result<Vec<Complex64>> {
        check_phases(&self.scenario, phases)?;
        Ok(self
            .steering
            .iter()
            .map(|z| array_gain_from_steering(z, phases))
            .collect())
    }

    pub fn evaluate(&self, phases: &PhaseVector) -> Result<MomentSet> {
        let f = self.array_gains(phases)?;
        Ok(self.moments_from_gains(&f))
    }

    fn moments_from_gains(&self, f: &[Complex64]) -> MomentSet {
        let s = &self.scenario;
        let (m, n, kk) = (s.m as f64, s.n as f64, s.k);
        let mut noise = vec![0.0; kk];
        let mut signal = vec![0.0; kk];
        let mut interference = vec![vec![0.0; kk]; kk];
        if s.fading == Fading::PureLos {
            for k in 0..kk {
                let fk2 = f[k].norm_sqr();
                let ba = s.beta * s.alpha[k];
                noise[k] = m * ba * fk2;
                signal[k] = m * m * ba * ba * fk2 * fk2;
                for i in 0..kk {
                    if i != k {
                        interference[k][i] =
                            m * m * s.beta * s.beta * s.alpha[k] * s.alpha[i] * fk2 * f[i].norm_sqr();
                    }
                }
            }
            return MomentSet {
                noise,
                signal,
                interference,
            };
        }
        let delta = s.effective_delta();
        for k in 0..kk {
            let fk2 = f[k].norm_sqr();
            let eps_k = s.effective_epsilon(k);
            noise[k] = noise_moment_rician(m, n, s.beta, s.alpha[k], delta, eps_k, fk2);
            signal[k] = signal_moment_rician(m, n, s.beta, s.alpha[k], delta, eps_k, fk2);
            for i in 0..kk {
                if i == k {
                    continue;
                }
                let terms = PairTerms {
                    alpha_k: s.alpha[k],
                    alpha_i: s.alpha[i],
                    eps_k,
                    eps_i: s.effective_epsilon(i),
                    f_k: f[k],
                    f_i: f[i],
                    los_inner: self.los_gram[k][i],
                };
                interference[k][i] = interference_moment_rician(m, n, s.beta, delta, &terms);
            }
        }
        MomentSet {
            noise,
            signal,
            interference,
        }
    }
}

/// `E{‖g_k‖²}`.
pub fn noise_moment(scenario: &Scenario, phases: &PhaseVector, user: usize) -> Result<f64> {
    check_user(scenario, user)?;
    Ok(MomentEvaluator::new(scenario)?.evaluate(phases)?.noise[user])
}

/// `E{‖g_k‖⁴}`.
pub fn signal_moment(scenario: &Scenario, phases: &PhaseVector, user: usize) -> Result<f64> {
    check_user(scenario, user)?;
    Ok(MomentEvaluator::new(scenario)?.evaluate(phases)?.signal[user])
}

/// `E{|g_k^H g_i|²}` for `k ≠ i`.
pub fn interference_moment(scenario: &Scenario, phases: &PhaseVector, k: usize, i: usize) -> Result<f64> {
    check_user(scenario, k)?;
    check_user(scenario, i)?;
    if k == i {
        return Err(Error::Domain(format!(
            "interference moment needs distinct users, got k = i = {k}; use the signal moment"
        )));
    }
    Ok(MomentEvaluator::new(scenario)?.evaluate(phases)?.interference[k][i])
}

/// Aligns to `user`, then quantizes: a convenience for discrete designs.
pub fn aligned_quantized_gain(scenario: &Scenario, user: usize, bits: u32) -> Result<f64> {
    let phases = aligned_phases(scenario, user, PhaseDomain::Discrete { bits })?;
    Ok(f_c(&phases, scenario, user)?.norm_sqr())
}

/// Nearest-grid rounding used by [`aligned_phases`], exposed for tests.
pub fn quantize_phase(theta: f64, bits: u32) -> f64 {
    quantize(theta, bits)
}
