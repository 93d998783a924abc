//! Brute-force estimators used as an oracle for the closed forms.
//!
//! Samples are split into fixed-size chunks. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so the partition and the
//! random numbers depend only on `(seed, samples)`, never on the thread
//! count. Chunk statistics are merged in chunk order, which makes every
//! estimate bitwise reproducible.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded_channel, ChannelSampler, Scenario};
use crate::error::{Error, Result};
use crate::moments::MomentEvaluator;
use crate::phase::{PhaseDomain, PhaseVector};
use crate::rate::rate_from_ratio;

/// Samples per RNG substream.
pub const CHUNK: usize = 256;

/// Minimum sample count accepted by [`mc_ergodic_rate`].
pub const MIN_RATE_SAMPLES: usize = 100;

/// Stream offset separating phase draws from channel draws.
const PHASE_STREAM_BASE: u64 = 1 << 62;

/// Sample mean with its standard error `s / √n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Number of standard errors separating the estimate from `target`.
    /// Zero-variance estimates return 0 on exact agreement and ∞ otherwise.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Mergeable running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimate(&self) -> McEstimate {
        let std_error = if self.count > 1 {
            (self.m2.max(0.0) / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error,
            samples: self.count,
        }
    }
}

/// RNG for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `samples` draws of `body` in parallel chunks, each pushing `width`
/// statistics, and merges the chunk accumulators in order.
fn run_chunks<F>(samples: usize, seed: u64, stream_base: u64, width: usize, body: F) -> Vec<Accumulator>
where
    F: Fn(&mut ChaCha8Rng, &mut [Accumulator]) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<Accumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, stream_base + c as u64);
            let mut acc = vec![Accumulator::default(); width];
            let len = CHUNK.min(samples - c * CHUNK);
            for _ in 0..len {
                body(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![Accumulator::default(); width];
    for chunk in &partial {
        for (t, a) in total.iter_mut().zip(chunk) {
            t.merge(a);
        }
    }
    total
}

fn check_samples(samples: usize, min: usize) -> Result<()> {
    if samples < min {
        return Err(Error::Domain(format!("need at least {min} samples, got {samples}")));
    }
    Ok(())
}

/// Instantaneous per-user rates of one cascaded channel `G` (M×K).
pub fn instantaneous_rates(scenario: &Scenario, g: &DMatrix<Complex64>) -> Vec<f64> {
    let gram = g.adjoint() * g;
    let kk = scenario.k;
    (0..kk)
        .map(|k| {
            let norm2 = gram[(k, k)].re;
            let interference: f64 = (0..kk)
                .filter(|&i| i != k)
                .map(|i| scenario.p[i] * gram[(k, i)].norm_sqr())
                .sum();
            rate_from_ratio(scenario.p[k] * norm2 * norm2, interference + scenario.sigma2 * norm2)
        })
        .collect()
}

/// Per-user ergodic rate estimates and the estimate of their sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRateReport {
    pub per_user: Vec<McEstimate>,
    pub sum_rate: McEstimate,
}

impl McRateReport {
    fn from_accumulators(acc: &[Accumulator]) -> Self {
        let (sum, users) = acc.split_last().expect("at least one statistic");
        Self {
            per_user: users.iter().map(Accumulator::estimate).collect(),
            sum_rate: sum.estimate(),
        }
    }

    /// Smallest per-user mean rate.
    pub fn min_rate(&self) -> f64 {
        self.per_user.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min)
    }

    pub fn means(&self) -> Vec<f64> {
        self.per_user.iter().map(|e| e.mean).collect()
    }
}

fn push_rates(acc: &mut [Accumulator], rates: &[f64]) {
    let k = rates.len();
    for (a, &r) in acc[..k].iter_mut().zip(rates) {
        a.push(r);
    }
    acc[k].push(rates.iter().sum());
}

fn rate_accumulators(
    scenario: &Scenario,
    sampler: &ChannelSampler,
    phases: &PhaseVector,
    samples: usize,
    seed: u64,
    stream_base: u64,
) -> Vec<Accumulator> {
    run_chunks(samples, seed, stream_base, scenario.k + 1, |rng, acc| {
        let g = cascaded_channel(&sampler.sample(rng), phases).expect("dimensions checked");
        push_rates(acc, &instantaneous_rates(scenario, &g));
    })
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

/// Ergodic rate by averaging the instantaneous rate over channel draws.
pub fn mc_ergodic_rate(scenario: &Scenario, phases: &PhaseVector, samples: usize, seed: u64) -> Result<McRateReport> {
    check_samples(samples, MIN_RATE_SAMPLES)?;
    check_phases(scenario, phases)?;
    let sampler = ChannelSampler::new(scenario)?;
    let acc = rate_accumulators(scenario, &sampler, phases, samples, seed, 0);
    Ok(McRateReport::from_accumulators(&acc))
}

/// Empirical counterparts of the closed-form moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McMoments {
    /// `‖g_k‖²`.
    pub noise: Vec<McEstimate>,
    /// `‖g_k‖⁴`.
    pub signal: Vec<McEstimate>,
    /// `|g_k^H g_i|²` at `[k][i]`; diagonal entries are zero placeholders.
    pub interference: Vec<Vec<McEstimate>>,
    /// `Σ_{i≠k} |g_k^H g_i|²`.
    pub sum_interference: Vec<McEstimate>,
}

pub fn mc_moments(scenario: &Scenario, phases: &PhaseVector, samples: usize, seed: u64) -> Result<McMoments> {
    check_samples(samples, 2)?;
    check_phases(scenario, phases)?;
    let sampler = ChannelSampler::new(scenario)?;
    let kk = scenario.k;
    let sums = 2 * kk + kk * kk;
    let acc = run_chunks(samples, seed, 0, sums + kk, |rng, acc| {
        let g = cascaded_channel(&sampler.sample(rng), phases).expect("dimensions checked");
        let gram = g.adjoint() * &g;
        for k in 0..kk {
            let n2 = gram[(k, k)].re;
            acc[k].push(n2);
            acc[kk + k].push(n2 * n2);
            let mut total = 0.0;
            for i in 0..kk {
                if i != k {
                    let v = gram[(k, i)].norm_sqr();
                    acc[2 * kk + k * kk + i].push(v);
                    total += v;
                }
            }
            acc[sums + k].push(total);
        }
    });
    let zero = McEstimate {
        mean: 0.0,
        std_error: 0.0,
        samples,
    };
    Ok(McMoments {
        noise: acc[..kk].iter().map(Accumulator::estimate).collect(),
        signal: acc[kk..2 * kk].iter().map(Accumulator::estimate).collect(),
        interference: (0..kk)
            .map(|k| {
                (0..kk)
                    .map(|i| if i == k { zero } else { acc[2 * kk + k * kk + i].estimate() })
                    .collect()
            })
            .collect(),
        sum_interference: acc[sums..].iter().map(Accumulator::estimate).collect(),
    })
}

/// Condition-number statistics of `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    /// Mean of `σ_max / σ_min` over full-rank samples.
    pub estimate: McEstimate,
    /// Samples with `σ_min < 1e-12 σ_max`, excluded from the mean.
    pub rank_deficient: usize,
}

/// Relative threshold below which a sample counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Ratio of the largest to the smallest singular value, or `None` when the
/// matrix is numerically rank deficient.
pub fn condition_number(g: &DMatrix<Complex64>) -> Option<f64> {
    let sv = g.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max.is_nan() || max <= 0.0 || min < RANK_TOLERANCE * max {
        None
    } else {
        Some(max / min)
    }
}

pub fn mc_condition_number(scenario: &Scenario, phases: &PhaseVector, samples: usize, seed: u64) -> Result<ConditionStats> {
    check_samples(samples, 2)?;
    check_phases(scenario, phases)?;
    if scenario.k > scenario.m.min(scenario.n) {
        return Err(Error::Domain(format!(
            "condition number needs K <= min(M, N), got K={} M={} N={}",
            scenario.k, scenario.m, scenario.n
        )));
    }
    let sampler = ChannelSampler::new(scenario)?;
    let acc = run_chunks(samples, seed, 0, 1, |rng, acc| {
        let g = cascaded_channel(&sampler.sample(rng), phases).expect("dimensions checked");
        if let Some(c) = condition_number(&g) {
            acc[0].push(c);
        }
    });
    let estimate = acc[0].estimate();
    let rank_deficient = samples - acc[0].count();
    if estimate.samples < 2 {
        return Err(Error::Domain(format!(
            "only {} of {samples} samples were full rank",
            estimate.samples
        )));
    }
    Ok(ConditionStats {
        estimate,
        rank_deficient,
    })
}

/// Ergodic rate averaged over `phase_draws` independent uniform phase
/// vectors from `domain`.
///
/// Each draw contributes the mean over its own `samples_per_draw` channel
/// realizations; the standard error is taken across draws, which accounts
/// for the clustering of samples under a shared phase vector.
pub fn mc_random_phase_rate(
    scenario: &Scenario,
    domain: PhaseDomain,
    phase_draws: usize,
    samples_per_draw: usize,
    seed: u64,
) -> Result<McRateReport> {
    check_samples(phase_draws, 2)?;
    check_samples(samples_per_draw, 1)?;
    domain.validate()?;
    let sampler = ChannelSampler::new(scenario)?;
    let chunks_per_draw = samples_per_draw.div_ceil(CHUNK) as u64;
    let draw_means: Vec<Vec<f64>> = (0..phase_draws)
        .into_par_iter()
        .map(|d| {
            let mut prng = substream(seed, PHASE_STREAM_BASE + d as u64);
            let phases = PhaseVector::random(scenario.n, domain, &mut prng);
            let acc = rate_accumulators(scenario, &sampler, &phases, samples_per_draw, seed, d as u64 * chunks_per_draw);
            acc.iter().map(|a| a.estimate().mean).collect()
        })
        .collect();
    let mut acc = vec![Accumulator::default(); scenario.k + 1];
    for means in &draw_means {
        for (a, &m) in acc.iter_mut().zip(means) {
            a.push(m);
        }
    }
    Ok(McRateReport::from_accumulators(&acc))
}

/// Closed-form rate averaged over random phase vectors.
pub fn random_phase_closed_form(scenario: &Scenario, domain: PhaseDomain, phase_draws: usize, seed: u64) -> Result<Vec<f64>> {
    check_samples(phase_draws, 1)?;
    domain.validate()?;
    let eval = MomentEvaluator::new(scenario)?;
    let rates: Vec<Vec<f64>> = (0..phase_draws)
        .into_par_iter()
        .map(|d| {
            let mut prng = substream(seed, PHASE_STREAM_BASE + d as u64);
            let phases = PhaseVector::random(scenario.n, domain, &mut prng);
            let m = eval.evaluate(&phases).expect("dimensions checked");
            crate::rate::RateReport::from_moments(scenario, m).per_user_rate
        })
        .collect();
    let mut mean = vec![0.0; scenario.k];
    for r in &rates {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    Ok(mean.into_iter().map(|m| m / phase_draws as f64).collect())
}

/// Empirical `E|f_c|²` and `E|f_c|⁴` over uniformly random phases.
pub fn mc_array_gain_moments(
    scenario: &Scenario,
    user: usize,
    domain: PhaseDomain,
    draws: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_samples(draws, 2)?;
    domain.validate()?;
    let eval = MomentEvaluator::new(scenario)?;
    if user >= scenario.k {
        return Err(Error::Domain(format!("user index {user} out of range for K={}", scenario.k)));
    }
    let acc = run_chunks(draws, seed, PHASE_STREAM_BASE, 2, |rng, acc| {
        let phases = PhaseVector::random(scenario.n, domain, rng);
        let f2 = eval.array_gains(&phases).expect("dimensions checked")[user].norm_sqr();
        acc[0].push(f2);
        acc[1].push(f2 * f2);
    });
    Ok((acc[0].estimate(), acc[1].estimate()))
}
