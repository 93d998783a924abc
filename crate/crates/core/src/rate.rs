//! Closed-form ergodic rates.
//!
//! [`ergodic_rate`] is the general approximation
//! `R_k ≈ log2(1 + p_k E{‖g_k‖⁴} / (Σ_{i≠k} p_i E{|g_k^H g_i|²} + σ² E{‖g_k‖²}))`.
//! The remaining functions are its special cases and asymptotic limits,
//! written out independently so that they can serve as cross-checks.
//! All rates are in bit/s/Hz.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{Fading, Scenario};
use crate::error::{Error, Result};
use crate::moments::{MomentEvaluator, MomentSet};
use crate::phase::PhaseVector;

/// `log2(1 + num/den)`, treating `0/0` as zero rate.
pub fn rate_from_ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        return 0.0;
    }
    (num / den).ln_1p() / std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    pub min_rate: f64,
    #[serde(skip)]
    pub moments: Option<MomentSet>,
}

impl RateReport {
    pub fn from_rates(per_user_rate: Vec<f64>) -> Self {
        let sum_rate = per_user_rate.iter().sum();
        let min_rate = per_user_rate.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            per_user_rate,
            sum_rate,
            min_rate,
            moments: None,
        }
    }

    /// Evaluates the rate expression on precomputed moments.
    pub fn from_moments(scenario: &Scenario, moments: MomentSet) -> Self {
        let rates = (0..scenario.k)
            .map(|k| {
                let interference: f64 = (0..scenario.k)
                    .filter(|&i| i != k)
                    .map(|i| scenario.p[i] * moments.interference[k][i])
                    .sum();
                rate_from_ratio(
                    scenario.p[k] * moments.signal[k],
                    interference + scenario.sigma2 * moments.noise[k],
                )
            })
            .collect();
        Self {
            moments: Some(moments),
            ..Self::from_rates(rates)
        }
    }
}

/// Closed-form rate approximation for every user.
pub fn ergodic_rate(scenario: &Scenario, phases: &PhaseVector) -> Result<RateReport> {
    let moments = MomentEvaluator::new(scenario)?.evaluate(phases)?;
    Ok(RateReport::from_moments(scenario, moments))
}

/// Rate of `user` with all other users silent.
pub fn interference_free_rate(scenario: &Scenario, phases: &PhaseVector, user: usize) -> Result<f64> {
    let moments = MomentEvaluator::new(scenario)?.evaluate(phases)?;
    let k = user;
    if k >= scenario.k {
        return Err(Error::Domain(format!("user index {k} out of range for K={}", scenario.k)));
    }
    Ok(rate_from_ratio(
        scenario.p[k] * moments.signal[k],
        scenario.sigma2 * moments.noise[k],
    ))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Large-`M` limit when every user transmits `E_u / M`.
///
/// Uses the `A^(1)`, `A^(2)`, `A^(3)` coefficients; the per-user powers
/// stored in `scenario` are ignored.
pub fn power_scaling_rate(scenario: &Scenario, phases: &PhaseVector, e_u: f64) -> Result<Vec<f64>> {
    check_positive("E_u", e_u)?;
    let eval = MomentEvaluator::new(scenario)?;
    let f = eval.array_gains(phases)?;
    let s = scenario;
    let n = s.n as f64;
    let kk = s.k;
    if s.fading == Fading::PureLos {
        return Ok((0..kk)
            .map(|k| {
                let interference: f64 = (0..kk)
                    .filter(|&i| i != k)
                    .map(|i| e_u * s.beta * s.alpha[i] * f[i].norm_sqr())
                    .sum();
                rate_from_ratio(
                    e_u * s.beta * s.alpha[k] * f[k].norm_sqr(),
                    interference + s.sigma2,
                )
            })
            .collect());
    }
    let d = s.effective_delta();
    Ok((0..kk)
        .map(|k| {
            let ek = s.effective_epsilon(k);
            let fk2 = f[k].norm_sqr();
            let a3 = d * ek * fk2 + (d + ek + 1.0) * n;
            let a1 = a3 * a3
                + 2.0 * d * ek * fk2 * (n * d + 2.0)
                + n * (n * d * d + 2.0 * d + 2.0 * ek + 1.0);
            let interference: f64 = (0..kk)
                .filter(|&i| i != k)
                .map(|i| {
                    let ei = s.effective_epsilon(i);
                    let fi2 = f[i].norm_sqr();
                    let coherent = d * f[k].conj() * f[i] + eval.los_inner(k, i);
                    let a2 = ek * ei * coherent.norm_sqr()
                        + (d * d * n + 2.0 * d) * (ek * fk2 + ei * fi2)
                        + n * (n * d * d + 2.0 * d + ei + ek + 1.0);
                    e_u * s.beta * s.alpha[i] / ((d + 1.0) * (ei + 1.0)) * a2
                })
                .sum();
            let ck = s.beta * s.alpha[k] / ((d + 1.0) * (ek + 1.0));
            rate_from_ratio(e_u * ck * a1, interference + s.sigma2 * a3)
        })
        .collect())
}

/// Power-scaling limit with NLoS-only channels.
pub fn power_scaling_rayleigh_rate(scenario: &Scenario, e_u: f64) -> Result<Vec<f64>> {
    check_positive("E_u", e_u)?;
    scenario.validate()?;
    let s = scenario;
    let n = s.n as f64;
    Ok((0..s.k)
        .map(|k| {
            let interference: f64 = (0..s.k).filter(|&i| i != k).map(|i| e_u * s.beta * s.alpha[i]).sum();
            rate_from_ratio(e_u * s.beta * s.alpha[k] * (n + 1.0), interference + s.sigma2)
        })
        .collect())
}

/// Single-antenna-per-user massive MIMO without an RIS, power `E_u / M`:
/// `log2(1 + E_u γ_k / σ²)`.
pub fn non_ris_scaling_rate(gamma: f64, e_u: f64, sigma2: f64) -> f64 {
    rate_from_ratio(e_u * gamma, sigma2)
}

/// Limit rates when the RIS is aligned to `user` and `M = N² → ∞` with
/// `p_k = E_u/(M N²)` and `p_i = E_u/(M N)`.
///
/// Entry `user` holds the limit rate of the aligned user; every other entry
/// is 0 since their rate vanishes in this regime.
pub fn aligned_scaling_limit(scenario: &Scenario, user: usize, e_u: f64) -> Result<Vec<f64>> {
    scenario.validate()?;
    check_positive("E_u", e_u)?;
    let s = scenario;
    let k = user;
    if k >= s.k {
        return Err(Error::Domain(format!("user index {k} out of range for K={}", s.k)));
    }
    let d = s.effective_delta();
    if d == 0.0 {
        return Err(Error::Domain("aligned scaling limit needs delta > 0".into()));
    }
    let ek = s.effective_epsilon(k);
    let interference: f64 = (0..s.k)
        .filter(|&i| i != k)
        .map(|i| s.alpha[i] / ((s.effective_epsilon(i) + 1.0) * s.alpha[k]))
        .sum();
    let num = e_u * ek / (ek + 1.0);
    let den = e_u * interference + (1.0 + 1.0 / d) * s.sigma2 / (s.beta * s.alpha[k]);
    let mut rates = vec![0.0; s.k];
    rates[k] = rate_from_ratio(num, den);
    Ok(rates)
}

/// Large-`M`, large-`N` rate with phases redrawn uniformly at random:
/// `log2(1 + p_k α_k (2δ²+2δ+1) / Σ_{i≠k} p_i α_i δ²)`.
pub fn random_phase_limit(scenario: &Scenario) -> Result<Vec<f64>> {
    scenario.validate()?;
    let s = scenario;
    let d = s.effective_delta();
    if d == 0.0 {
        return Err(Error::Domain("random-phase limit needs delta > 0".into()));
    }
    if s.k < 2 {
        return Err(Error::Domain("random-phase limit needs at least one interferer".into()));
    }
    Ok((0..s.k)
        .map(|k| {
            let interference: f64 = (0..s.k).filter(|&i| i != k).map(|i| s.p[i] * s.alpha[i] * d * d).sum();
            rate_from_ratio(s.p[k] * s.alpha[k] * (2.0 * d * d + 2.0 * d + 1.0), interference)
        })
        .collect())
}

/// NLoS-only rate `log2(1 + p_k βα_k (M+1)(N+1) / (Σ_{i≠k} p_i βα_i (M+N) + σ²))`.
pub fn rayleigh_rate(scenario: &Scenario) -> Result<Vec<f64>> {
    scenario.validate()?;
    let s = scenario;
    let (m, n) = (s.m as f64, s.n as f64);
    Ok((0..s.k)
        .map(|k| {
            let interference: f64 = (0..s.k)
                .filter(|&i| i != k)
                .map(|i| s.p[i] * s.beta * s.alpha[i] * (m + n))
                .sum();
            rate_from_ratio(
                s.p[k] * s.beta * s.alpha[k] * (m * n + m + n + 1.0),
                interference + s.sigma2,
            )
        })
        .collect())
}

/// Which dimension of [`rayleigh_rate`] grows without bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Asymptote {
    Antennas,
    Elements,
}

/// Limits of [`rayleigh_rate`] as `M → ∞` or `N → ∞`. With `K = 1` the
/// limit is unbounded and `+∞` is returned.
pub fn rayleigh_limit(scenario: &Scenario, which: Asymptote) -> Result<Vec<f64>> {
    scenario.validate()?;
    let s = scenario;
    let gain = match which {
        Asymptote::Antennas => s.n as f64 + 1.0,
        Asymptote::Elements => s.m as f64 + 1.0,
    };
    Ok((0..s.k)
        .map(|k| {
            let interference: f64 = (0..s.k).filter(|&i| i != k).map(|i| s.p[i] * s.alpha[i]).sum();
            rate_from_ratio(s.p[k] * s.alpha[k] * gain, interference)
        })
        .collect())
}

/// LoS-only rate `log2(1 + p_k βα_k M|f_k|² / (Σ_{i≠k} p_i βα_i M|f_i|² + σ²))`.
pub fn pure_los_rate(scenario: &Scenario, phases: &PhaseVector) -> Result<Vec<f64>> {
    let f = MomentEvaluator::new(scenario)?.array_gains(phases)?;
    let s = scenario;
    let m = s.m as f64;
    Ok((0..s.k)
        .map(|k| {
            let interference: f64 = (0..s.k)
                .filter(|&i| i != k)
                .map(|i| s.p[i] * s.beta * s.alpha[i] * m * f[i].norm_sqr())
                .sum();
            rate_from_ratio(
                s.p[k] * s.beta * s.alpha[k] * m * f[k].norm_sqr(),
                interference + s.sigma2,
            )
        })
        .collect())
}

/// `|h̄_k^H h̄_i|²` for two ULA steering vectors of length `m`:
/// `sin²(π d M Δ) / sin²(π d Δ)` with `Δ = sin θ_i − sin θ_k`.
pub fn ula_interference_gain(m: usize, spacing_ratio: f64, theta_k: f64, theta_i: f64) -> f64 {
    let delta = theta_i.sin() - theta_k.sin();
    let den = (PI * spacing_ratio * delta).sin();
    let mf = m as f64;
    if den.abs() < 1e-12 {
        return mf * mf;
    }
    let num = (PI * spacing_ratio * mf * delta).sin();
    (num * num) / (den * den)
}

/// Direct-link LoS massive MIMO without an RIS, `M`-element ULA:
/// `log2(1 + p_k γ_k M / (Σ_{i≠k} p_i γ_i |h̄_k^H h̄_i|²/M + σ²))`.
pub fn non_ris_los_rate(
    gammas: &[f64],
    ula_angles: &[f64],
    m: usize,
    spacing_ratio: f64,
    powers: &[f64],
    sigma2: f64,
) -> Result<Vec<f64>> {
    let k = gammas.len();
    if ula_angles.len() != k || powers.len() != k {
        return Err(Error::Dimension(format!(
            "gammas, angles and powers must have equal length (got {k}, {}, {})",
            ula_angles.len(),
            powers.len()
        )));
    }
    let mf = m as f64;
    Ok((0..k)
        .map(|u| {
            let interference: f64 = (0..k)
                .filter(|&i| i != u)
                .map(|i| powers[i] * gammas[i] * ula_interference_gain(m, spacing_ratio, ula_angles[u], ula_angles[i]) / mf)
                .sum();
            rate_from_ratio(powers[u] * gammas[u] * mf, interference + sigma2)
        })
        .collect())
}

/// Worst-case `|f_k|²` after aligning and rounding to a `b`-bit grid:
/// `N² cos²(π / 2^b)`.
pub fn discrete_alignment_bound(n: usize, bits: u32) -> Result<f64> {
    if bits <= 1 {
        return Err(Error::Domain(format!("alignment bound needs at least 2 bits, got {bits}")));
    }
    if bits > 62 {
        return Ok((n * n) as f64);
    }
    let c = (PI / (1u64 << bits) as f64).cos();
    Ok((n as f64).powi(2) * c * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{AnglePair, RisBsAngles};
    use crate::moments::aligned_phases;
    use crate::phase::PhaseDomain;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(m: usize, n: usize, k: usize, delta: f64, eps: f64) -> Scenario {
        Scenario {
            m,
            n,
            k,
            spacing_ratio: 0.5,
            delta,
            epsilon: vec![eps; k],
            beta: 1.0,
            alpha: vec![1.0; k],
            p: vec![1.0; k],
            sigma2: 1.0,
            ris_bs_angles: RisBsAngles {
                bs_arrival: AnglePair::new(0.4, 1.3),
                ris_departure: AnglePair::new(2.2, 0.9),
            },
            user_angles: (0..k).map(|c| AnglePair::new(0.7 + 1.9 * c as f64, 1.7 + 0.8 * c as f64)).collect(),
            fading: Fading::Rician,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn trivial_single_user() {
        let mut s = scenario(1, 1, 1, 0.0, 0.0);
        s.p = vec![2.5];
        s.sigma2 = 0.3;
        let r = ergodic_rate(&s, &PhaseVector::zeros(1, PhaseDomain::Continuous)).unwrap();
        assert!(close(r.per_user_rate[0], (1.0 + 4.0 * 2.5 / 0.3f64).log2(), 1e-14));
        assert_eq!(r.sum_rate, r.per_user_rate[0]);
        assert_eq!(r.min_rate, r.per_user_rate[0]);
    }

    #[test]
    fn silent_interferers_give_interference_free_rate() {
        let mut s = scenario(16, 9, 3, 1.0, 4.0);
        s.p = vec![2.0, 0.0, 0.0];
        let phases = PhaseVector::random(9, PhaseDomain::Continuous, &mut ChaCha8Rng::seed_from_u64(1));
        let r = ergodic_rate(&s, &phases).unwrap();
        let single = interference_free_rate(&s, &phases, 0).unwrap();
        assert!(close(r.per_user_rate[0], single, 1e-14));
        assert_eq!(r.per_user_rate[1], 0.0);
    }

    #[test]
    fn report_invariants() {
        let s = scenario(16, 16, 4, 1.0, 10.0);
        let phases = PhaseVector::random(16, PhaseDomain::Continuous, &mut ChaCha8Rng::seed_from_u64(9));
        let r = ergodic_rate(&s, &phases).unwrap();
        assert!(close(r.sum_rate, r.per_user_rate.iter().sum(), 1e-14));
        assert_eq!(r.min_rate, r.per_user_rate.iter().copied().fold(f64::INFINITY, f64::min));
        assert!(r.per_user_rate.iter().all(|&x| x >= 0.0));
        assert!(r.moments.is_some());
    }

    #[test]
    fn power_scaling_collapses_without_los() {
        let mut s = scenario(64, 16, 3, 0.0, 0.0);
        s.alpha = vec![1.0, 0.5, 2.0];
        s.beta = 0.8;
        let phases = PhaseVector::random(16, PhaseDomain::Continuous, &mut ChaCha8Rng::seed_from_u64(3));
        let a = power_scaling_rate(&s, &phases, 2.0).unwrap();
        let b = power_scaling_rayleigh_rate(&s, 2.0).unwrap();
        for k in 0..3 {
            assert!(close(a[k], b[k], 1e-13), "{a:?} {b:?}");
        }
    }

    #[test]
    fn power_scaling_is_the_large_m_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let base = scenario(64, 16, 3, 1.0, 3.0);
        let phases = PhaseVector::random(16, PhaseDomain::Continuous, &mut rng);
        let e_u = 5.0;
        let limit = power_scaling_rate(&base, &phases, e_u).unwrap();
        let mut last = f64::INFINITY;
        for m in [64, 256, 1024, 4096] {
            let s = Scenario { m, ..base.with_uniform_power(e_u / m as f64) };
            let r = ergodic_rate(&s, &phases).unwrap();
            let diff = (0..3).map(|k| (r.per_user_rate[k] - limit[k]).abs()).fold(0.0, f64::max);
            assert!(diff < last, "M={m}: {diff} !< {last}");
            last = diff;
        }
        assert!(last < 1e-2, "{last}");
    }

    #[test]
    fn non_ris_scaling_examples() {
        assert!(close(non_ris_scaling_rate(2.0, 0.5, 1.0), 1.0, 1e-15));
        assert_eq!(non_ris_scaling_rate(0.0, 5.0, 1.0), 0.0);
    }

    #[test]
    fn aligned_limit_single_user_eps_large() {
        let mut s = scenario(16, 4, 1, 2.0, 1e12);
        s.beta = 0.5;
        s.sigma2 = 0.2;
        let r = aligned_scaling_limit(&s, 0, 3.0).unwrap();
        let want = (1.0 + 3.0 / ((1.0 + 0.5) * 0.2 / 0.5f64)).log2();
        assert!(close(r[0], want, 1e-10));
        assert!(matches!(aligned_scaling_limit(&scenario(4, 4, 1, 0.0, 1.0), 0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn aligned_limit_zeroes_other_users() {
        let s = scenario(16, 4, 3, 1.0, 5.0);
        let r = aligned_scaling_limit(&s, 1, 1.0).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[2], 0.0);
        assert!(r[1] > 0.0);
    }

    #[test]
    fn random_phase_limit_examples() {
        for d in [0.5, 1.0, 3.0] {
            let s = scenario(4, 4, 2, d, 1.0);
            let r = random_phase_limit(&s).unwrap();
            let want = (1.0 + (2.0 * d * d + 2.0 * d + 1.0) / (d * d)).log2();
            assert!(close(r[0], want, 1e-14));
        }
        assert!(random_phase_limit(&scenario(4, 4, 1, 1.0, 1.0)).is_err());
        assert!(random_phase_limit(&scenario(4, 4, 2, 0.0, 1.0)).is_err());
    }

    #[test]
    fn rayleigh_examples() {
        let mut s = scenario(1, 1, 2, 0.0, 0.0);
        s.sigma2 = 1e-300;
        let r = rayleigh_rate(&s).unwrap();
        assert!(close(r[0], 3f64.log2(), 1e-12));
        for (m, n) in [(1.0, 1.0), (64.0, 16.0), (9.0, 100.0)] {
            let a: f64 = m * n + m + n + 1.0;
            assert_eq!(a, (m + 1.0) * (n + 1.0));
        }
    }

    #[test]
    fn rayleigh_matches_general_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for fading in [Fading::PureNlos, Fading::Rician] {
            let mut s = scenario(64, 16, 4, 0.0, 0.0);
            s.fading = fading;
            s.alpha = vec![1.0, 0.3, 2.0, 0.9];
            s.p = vec![0.5, 1.0, 2.0, 1.5];
            let r = ergodic_rate(&s, &PhaseVector::random(16, PhaseDomain::Continuous, &mut rng)).unwrap();
            let want = rayleigh_rate(&s).unwrap();
            for k in 0..4 {
                assert!(close(r.per_user_rate[k], want[k], 1e-13));
            }
        }
    }

    #[test]
    fn rayleigh_limits_are_approached() {
        let base = scenario(16, 16, 3, 0.0, 0.0);
        let lm = rayleigh_limit(&base, Asymptote::Antennas).unwrap();
        let big_m = Scenario { m: 1 << 20, ..base.clone() };
        let r = rayleigh_rate(&big_m).unwrap();
        assert!((r[0] - lm[0]).abs() < 1e-3);
        let ln = rayleigh_limit(&base, Asymptote::Elements).unwrap();
        let big_n = Scenario { n: 1 << 20, ..base };
        let r = rayleigh_rate(&big_n).unwrap();
        assert!((r[0] - ln[0]).abs() < 1e-3);
    }

    #[test]
    fn pure_los_matches_general_formula() {
        let mut s = scenario(16, 16, 3, 1.0, 1.0);
        s.fading = Fading::PureLos;
        s.alpha = vec![1.0, 0.5, 2.0];
        let phases = PhaseVector::random(16, PhaseDomain::Continuous, &mut ChaCha8Rng::seed_from_u64(12));
        let a = ergodic_rate(&s, &phases).unwrap();
        let b = pure_los_rate(&s, &phases).unwrap();
        for k in 0..3 {
            assert!(close(a.per_user_rate[k], b[k], 1e-12));
        }
    }

    #[test]
    fn pure_los_equal_gains_reduce_to_power_ratio() {
        let mut s = scenario(4, 4, 3, 1.0, 1.0);
        s.fading = Fading::PureLos;
        s.user_angles = vec![s.user_angles[0]; 3];
        s.p = vec![1.0, 2.0, 3.0];
        s.sigma2 = 1e-300;
        let phases = aligned_phases(&s, 0, PhaseDomain::Continuous).unwrap();
        let r = pure_los_rate(&s, &phases).unwrap();
        assert!(close(r[0], (1.0 + 1.0 / 5.0f64).log2(), 1e-12));
    }

    #[test]
    fn ula_gain_examples() {
        assert_eq!(ula_interference_gain(8, 0.5, 0.3, 0.3), 64.0);
        assert!(ula_interference_gain(2, 0.5, 0.0, PI / 2.0) < 1e-28);
        let g = ula_interference_gain(16, 0.5, 0.1, 0.4);
        assert!(g > 0.0 && g < 256.0);
        let r = non_ris_los_rate(&[1.0, 1.0], &[0.3, 0.3], 8, 0.5, &[1.0, 1.0], 1.0).unwrap();
        assert!(close(r[0], (1.0 + 8.0 / 9.0f64).log2(), 1e-14));
        assert!(non_ris_los_rate(&[1.0], &[0.0, 1.0], 4, 0.5, &[1.0], 1.0).is_err());
    }

    #[test]
    fn ula_interference_vanishes_per_antenna() {
        let per_m = |m: usize| ula_interference_gain(m, 0.5, 0.0, 0.3f64.asin()) / m as f64;
        assert!(per_m(4096) < 0.01 * per_m(16));
    }

    #[test]
    fn alignment_bound_examples() {
        assert!(close(discrete_alignment_bound(16, 2).unwrap(), 128.0, 1e-15));
        assert!(discrete_alignment_bound(16, 1).is_err());
        assert!((discrete_alignment_bound(16, 20).unwrap() - 256.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn scaling_comparison(beta in 0.01f64..1.0, ak in 0.01f64..1.0, ai in 0.01f64..1.0,
                              n in 1usize..64, e_u in 0.01f64..10.0, gamma in 0.0f64..2.0) {
            let sigma2 = 0.1;
            let lhs = beta * ak * (n as f64 + 1.0) / (e_u * beta * ai + sigma2);
            let ris = rate_from_ratio(e_u * beta * ak * (n as f64 + 1.0), e_u * beta * ai + sigma2);
            let direct = non_ris_scaling_rate(gamma, e_u, sigma2);
            if lhs >= gamma / sigma2 {
                prop_assert!(ris >= direct - 1e-12);
            }
        }

        #[test]
        fn random_phase_limit_decreases_in_delta(d in 0.01f64..10.0, step in 0.01f64..5.0) {
            let a = random_phase_limit(&scenario(4, 4, 3, d, 1.0)).unwrap()[0];
            let b = random_phase_limit(&scenario(4, 4, 3, d + step, 1.0)).unwrap()[0];
            prop_assert!(b < a);
        }

        #[test]
        fn aligned_limit_increases_in_gains(d in 0.1f64..5.0, beta in 0.1f64..2.0, ak in 0.1f64..2.0, up in 1.01f64..3.0) {
            let mut s = scenario(16, 4, 3, d, 2.0);
            s.beta = beta;
            s.alpha[0] = ak;
            let base = aligned_scaling_limit(&s, 0, 1.0).unwrap()[0];
            let mut t = s.clone();
            t.alpha[0] *= up;
            prop_assert!(aligned_scaling_limit(&t, 0, 1.0).unwrap()[0] > base);
            let mut t = s.clone();
            t.beta *= up;
            prop_assert!(aligned_scaling_limit(&t, 0, 1.0).unwrap()[0] > base);
            let mut t = s;
            t.delta *= up;
            prop_assert!(aligned_scaling_limit(&t, 0, 1.0).unwrap()[0] > base);
        }
    }
}
