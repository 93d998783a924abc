//! Genetic-algorithm search over RIS phase vectors.
//!
//! Each generation keeps the `N_e` best individuals, breeds `N_c` children
//! from `2N_c` parents by two-point crossover and derives `N_m` mutants by
//! uniform mutation. Parents are drawn by stochastic universal sampling on
//! rank-scaled fitness. Fitness is the closed-form sum rate or minimum
//! rate, so only statistical CSI is needed.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::moments::MomentEvaluator;
use crate::phase::{PhaseDomain, PhaseVector};
use crate::rate::RateReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    SumRate,
    MinRate,
}

impl Objective {
    pub fn of(self, report: &RateReport) -> f64 {
        match self {
            Objective::SumRate => report.sum_rate,
            Objective::MinRate => report.min_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    /// `N_t`.
    pub population: usize,
    /// `N_e`.
    pub elites: usize,
    /// `N_c`: number of children, bred from `2 N_c` parents.
    pub crossover_pairs: usize,
    /// `N_m`.
    pub mutation_parents: usize,
    /// `p_m`.
    pub mutation_prob: f64,
    /// `N_max`.
    pub max_generations: usize,
    /// `ξ`, in bit/s/Hz.
    pub stall_tolerance: f64,
    /// Generations over which the change of mean fitness is measured.
    pub stall_window: usize,
    pub objective: Objective,
    pub domain: PhaseDomain,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 200,
            elites: 10,
            crossover_pairs: 152,
            mutation_parents: 38,
            mutation_prob: 0.1,
            max_generations: 500,
            stall_tolerance: 1e-4,
            stall_window: 20,
            objective: Objective::SumRate,
            domain: PhaseDomain::Continuous,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.elites + self.crossover_pairs + self.mutation_parents != self.population {
            return bad(format!(
                "population ({}) must equal elites + crossover_pairs + mutation_parents ({} + {} + {})",
                self.population, self.elites, self.crossover_pairs, self.mutation_parents
            ));
        }
        if self.population < 2 {
            return bad(format!("population must be at least 2, got {}", self.population));
        }
        if !(self.mutation_prob > 0.0 && self.mutation_prob <= 1.0) {
            return bad(format!("mutation_prob must be in (0, 1], got {}", self.mutation_prob));
        }
        if self.max_generations == 0 {
            return bad("max_generations must be at least 1".into());
        }
        if !(self.stall_tolerance >= 0.0 && self.stall_tolerance.is_finite()) {
            return bad(format!("stall_tolerance must be finite and non-negative, got {}", self.stall_tolerance));
        }
        if self.stall_window == 0 {
            return bad("stall_window must be at least 1".into());
        }
        self.domain.validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub phases: PhaseVector,
    pub raw_fitness: f64,
    pub scaled_fitness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best raw fitness in the population.
    pub best: f64,
    /// Mean raw fitness of the population.
    pub mean: f64,
    pub population: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Mean fitness changed by less than the tolerance over the window.
    Stalled,
    MaxGenerations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    /// Best individual ever evaluated.
    pub best: Individual,
    /// Entry 0 describes the initial population.
    pub history: Vec<GenerationStats>,
    pub stop: StopReason,
}

/// Rank-based scaling: the `r`-th best gets `1/√r`, normalized to sum to
/// `2 N_c`. Ties keep their input order.
pub fn fitness_scale(raw: &[f64], crossover_pairs: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let mut f = vec![0.0; raw.len()];
    for (rank, &idx) in order.iter().enumerate() {
        f[idx] = 1.0 / ((rank + 1) as f64).sqrt();
    }
    let total: f64 = f.iter().sum();
    let scale = 2.0 * crossover_pairs as f64 / total;
    f.iter().map(|v| v * scale).collect()
}

/// Stochastic universal sampling: `count` equally spaced pointers with one
/// random offset over slots proportional to `weights`.
pub fn sus_select<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "selection weights must have a positive sum");
    let step = 1.0 / count as f64;
    let offset = rng.random::<f64>() * step;
    let last_positive = weights.iter().rposition(|&w| w > 0.0).expect("positive sum");
    let mut picks = Vec::with_capacity(count);
    let mut idx = 0;
    let mut edge = weights[0] / total;
    for j in 0..count {
        let pointer = offset + j as f64 * step;
        while pointer >= edge && idx < last_positive {
            idx += 1;
            edge += weights[idx] / total;
        }
        picks.push(idx);
    }
    picks
}

/// Splices `a[0..i1] ++ b[i1..i2] ++ a[i2..]`.
pub fn splice(a: &[f64], b: &[f64], i1: usize, i2: usize) -> Vec<f64> {
    let mut child = a.to_vec();
    child[i1..i2].copy_from_slice(&b[i1..i2]);
    child
}

/// One child from two parents.
///
/// With `N ≥ 3`, two distinct cut points are drawn from `1..N`; if the first
/// exceeds the second, both the cut points and the parents are swapped.
/// With `N = 2` a single cut at 1 is used and with `N = 1` the first parent
/// is copied.
pub fn crossover_pair<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> Vec<f64> {
    let n = a.len();
    match n {
        0 | 1 => a.to_vec(),
        2 => splice(a, b, 1, 2),
        _ => {
            let i1 = rng.random_range(1..n);
            let mut i2 = rng.random_range(1..n - 1);
            if i2 >= i1 {
                i2 += 1;
            }
            if i1 > i2 {
                splice(b, a, i2, i1)
            } else {
                splice(a, b, i1, i2)
            }
        }
    }
}

/// Pairs consecutive parents `(0,1), (2,3), …` into `parents.len()/2` children.
pub fn crossover<R: Rng + ?Sized>(parents: &[&PhaseVector], rng: &mut R) -> Result<Vec<PhaseVector>> {
    if !parents.len().is_multiple_of(2) {
        return Err(Error::Domain(format!("crossover needs an even number of parents, got {}", parents.len())));
    }
    parents
        .chunks(2)
        .map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            if a.is_empty() || a.len() != b.len() {
                return Err(Error::Domain(format!(
                    "crossover needs equal non-empty parents, got lengths {} and {}",
                    a.len(),
                    b.len()
                )));
            }
            let child = crossover_pair(a.theta(), b.theta(), rng);
            Ok(PhaseVector::from_parts_unchecked(child, a.domain()))
        })
        .collect()
}

/// Replaces each gene independently with probability `p_m` by a uniform
/// draw from `domain`.
pub fn mutate<R: Rng + ?Sized>(parent: &PhaseVector, p_m: f64, domain: PhaseDomain, rng: &mut R) -> PhaseVector {
    let theta = parent
        .theta()
        .iter()
        .map(|&t| if rng.random::<f64>() < p_m { domain.sample(rng) } else { t })
        .collect();
    PhaseVector::from_parts_unchecked(theta, domain)
}

/// Fitness of each phase vector under `objective`, evaluated in parallel.
pub fn evaluate_population(
    scenario: &Scenario,
    eval: &MomentEvaluator,
    population: &[PhaseVector],
    objective: Objective,
) -> Vec<f64> {
    population
        .par_iter()
        .map(|phases| {
            let moments = eval.evaluate(phases).expect("dimensions checked");
            objective.of(&RateReport::from_moments(scenario, moments))
        })
        .collect()
}

fn stats(generation: usize, raw: &[f64]) -> GenerationStats {
    GenerationStats {
        generation,
        best: raw.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: raw.iter().sum::<f64>() / raw.len() as f64,
        population: raw.len(),
    }
}

/// Runs the GA. All randomness comes from one stream seeded with `seed`.
pub fn ga_optimize(scenario: &Scenario, config: &GaConfig, seed: u64) -> Result<GaResult> {
    config.validate()?;
    let eval = MomentEvaluator::new(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = config.domain;
    let n = scenario.n;

    let mut population: Vec<PhaseVector> = (0..config.population)
        .map(|_| PhaseVector::random(n, domain, &mut rng))
        .collect();
    let mut raw = evaluate_population(scenario, &eval, &population, config.objective);
    let mut history = vec![stats(0, &raw)];
    let mut best = best_individual(&population, &raw, config.crossover_pairs);
    let mut stop = StopReason::MaxGenerations;

    for generation in 1..=config.max_generations {
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
        // slot of individual i is scaled[i] / (2 N_c); the normalization
        // constant does not matter to the wheel, so N_c = 0 is harmless
        let slots = fitness_scale(&raw, config.crossover_pairs.max(1));

        let mut next = Vec::with_capacity(config.population);
        next.extend(order.iter().take(config.elites).map(|&i| population[i].clone()));

        let mut parents = sus_select(&slots, 2 * config.crossover_pairs, &mut rng);
        parents.shuffle(&mut rng);
        let parent_refs: Vec<&PhaseVector> = parents.iter().map(|&i| &population[i]).collect();
        next.extend(crossover(&parent_refs, &mut rng)?);

        for i in sus_select(&slots, config.mutation_parents, &mut rng) {
            next.push(mutate(&population[i], config.mutation_prob, domain, &mut rng));
        }
        debug_assert_eq!(next.len(), config.population);

        population = next;
        raw = evaluate_population(scenario, &eval, &population, config.objective);
        history.push(stats(generation, &raw));
        let candidate = best_individual(&population, &raw, config.crossover_pairs);
        if candidate.raw_fitness > best.raw_fitness {
            best = candidate;
        }

        if generation >= config.stall_window {
            let change = (history[generation].mean - history[generation - config.stall_window].mean).abs();
            if change < config.stall_tolerance {
                stop = StopReason::Stalled;
                break;
            }
        }
    }

    Ok(GaResult { best, history, stop })
}

fn best_individual(population: &[PhaseVector], raw: &[f64], crossover_pairs: usize) -> Individual {
    let scaled = fitness_scale(raw, crossover_pairs.max(1));
    let idx = (0..raw.len()).fold(0, |b, i| if raw[i] > raw[b] { i } else { b });
    Individual {
        phases: population[idx].clone(),
        raw_fitness: raw[idx],
        scaled_fitness: scaled[idx],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::tests::small_scenario;
    use crate::moments::{aligned_phases, f_c};
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_config() -> GaConfig {
        GaConfig {
            population: 40,
            elites: 2,
            crossover_pairs: 30,
            mutation_parents: 8,
            max_generations: 60,
            ..GaConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        GaConfig::default().validate().unwrap();
        let bad = GaConfig { elites: 11, ..GaConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = GaConfig { mutation_prob: 0.0, ..GaConfig::default() };
        assert!(bad.validate().is_err());
        let bad = GaConfig { domain: PhaseDomain::Discrete { bits: 0 }, ..GaConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = GaConfig {
            objective: Objective::MinRate,
            domain: PhaseDomain::Discrete { bits: 2 },
            ..GaConfig::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<GaConfig>(&text).unwrap(), cfg);
        let partial: GaConfig = toml::from_str("max_generations = 7").unwrap();
        assert_eq!(partial.max_generations, 7);
        assert_eq!(partial.population, 200);
    }

    #[test]
    fn scaling_examples() {
        let s = fitness_scale(&[0.3, 0.9], 1);
        let norm = 2.0 / (1.0 + 0.5f64.sqrt());
        assert!((s[1] - norm).abs() < 1e-15);
        assert!((s[0] - norm * 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s.iter().sum::<f64>() - 2.0).abs() < 1e-12);

        let tied = fitness_scale(&[1.0; 4], 2);
        assert!(tied.windows(2).all(|w| w[0] > w[1]));

        let raw: Vec<f64> = (0..200).map(|i| (i * 7919 % 200) as f64).collect();
        assert!((fitness_scale(&raw, 152).iter().sum::<f64>() - 304.0).abs() < 1e-9);
    }

    #[test]
    fn sus_examples() {
        let mut r = rng(1);
        assert_eq!(sus_select(&[0.0, 5.0, 0.0], 6, &mut r), vec![1; 6]);
        let mut picks = sus_select(&[1.0; 8], 8, &mut r);
        picks.sort();
        assert_eq!(picks, (0..8).collect::<Vec<_>>());
        assert!(sus_select(&[1.0], 0, &mut r).is_empty());
    }

    #[test]
    fn sus_frequencies_follow_slots() {
        let weights = [4.0, 1.0, 2.0, 0.5, 2.5];
        let total: f64 = weights.iter().sum();
        let mut r = rng(2);
        let count = 10;
        let trials = 1000;
        let mut hits = [0usize; 5];
        for _ in 0..trials {
            let picks = sus_select(&weights, count, &mut r);
            for (i, h) in hits.iter_mut().enumerate() {
                let c = picks.iter().filter(|&&p| p == i).count();
                let expected = weights[i] / total * count as f64;
                assert!(c as f64 >= expected.floor() && c as f64 <= expected.ceil());
                *h += c;
            }
        }
        for i in 0..5 {
            let freq = hits[i] as f64 / (trials * count) as f64;
            assert!((freq - weights[i] / total).abs() < 0.02, "{i}: {freq}");
        }
    }

    #[test]
    fn splice_example() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(splice(&a, &b, 1, 3), vec![1.0, 20.0, 30.0, 4.0]);
    }

    #[test]
    fn crossover_small_and_identical() {
        let mut r = rng(3);
        assert_eq!(crossover_pair(&[1.0, 2.0], &[3.0, 4.0], &mut r), vec![1.0, 4.0]);
        assert_eq!(crossover_pair(&[1.0], &[3.0], &mut r), vec![1.0]);
        let same = [0.5, 1.5, 2.5, 3.5, 4.5];
        assert_eq!(crossover_pair(&same, &same, &mut r), same.to_vec());
        let a = PhaseVector::continuous(vec![0.1; 4]);
        assert!(crossover(&[&a, &a, &a], &mut r).is_err());
        let empty = PhaseVector::continuous(vec![]);
        assert!(crossover(&[&empty, &empty], &mut r).is_err());
    }

    #[test]
    fn crossover_cut_points_are_two_sided() {
        // every child must take a contiguous, non-empty, proper middle block
        let a = [0.0; 6];
        let b = [1.0; 6];
        let mut r = rng(4);
        for _ in 0..1000 {
            let child = crossover_pair(&a, &b, &mut r);
            let from_other: Vec<usize> = (0..6).filter(|&i| child[i] != child[0]).collect();
            assert!(!from_other.is_empty());
            assert!(from_other.windows(2).all(|w| w[1] == w[0] + 1));
            assert!(*from_other.last().unwrap() <= 5 && from_other[0] >= 1);
        }
    }

    #[test]
    fn mutation_examples() {
        let mut r = rng(5);
        let parent = PhaseVector::random(32, PhaseDomain::Continuous, &mut r);
        let same = mutate(&parent, 0.0, PhaseDomain::Continuous, &mut r);
        assert_eq!(same, parent);
        let d1 = PhaseDomain::Discrete { bits: 1 };
        let coarse = mutate(&PhaseVector::zeros(64, d1), 1.0, d1, &mut r);
        assert!(coarse.theta().iter().all(|&t| t == 0.0 || t == std::f64::consts::PI));
        assert!(coarse.satisfies_domain());
    }

    #[test]
    fn mutation_frequency() {
        let mut r = rng(6);
        let parent = PhaseVector::continuous(vec![10.0; 10_000]);
        let child = mutate(&parent, 0.1, PhaseDomain::Continuous, &mut r);
        let changed = child.theta().iter().zip(parent.theta()).filter(|(a, b)| a != b).count();
        assert!((changed as f64 / 1e4 - 0.1).abs() < 0.02, "{changed}");
    }

    #[test]
    fn single_user_converges_to_alignment() {
        let mut s = small_scenario();
        s.k = 1;
        s.n = 16;
        s.epsilon.truncate(1);
        s.alpha.truncate(1);
        s.p.truncate(1);
        s.user_angles.truncate(1);
        let cfg = GaConfig {
            max_generations: 200,
            stall_tolerance: 0.0,
            ..GaConfig::default()
        };
        let res = ga_optimize(&s, &cfg, 7).unwrap();
        let f = f_c(&res.best.phases, &s, 0).unwrap().norm();
        assert!(f >= 0.99 * 16.0, "|f| = {f}");
        let aligned = aligned_phases(&s, 0, PhaseDomain::Continuous).unwrap();
        assert!((f_c(&aligned, &s, 0).unwrap().norm() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn single_element_every_phase_is_optimal() {
        let mut s = small_scenario();
        s.n = 1;
        let res = ga_optimize(&s, &small_config(), 8).unwrap();
        let any = crate::rate::ergodic_rate(&s, &PhaseVector::continuous(vec![2.0])).unwrap();
        assert!((res.best.raw_fitness - any.sum_rate).abs() < 1e-12);
    }

    #[test]
    fn no_ris_bs_los_stalls_immediately() {
        let mut s = small_scenario();
        s.delta = 0.0;
        let cfg = small_config();
        let res = ga_optimize(&s, &cfg, 9).unwrap();
        assert_eq!(res.stop, StopReason::Stalled);
        assert_eq!(res.history.len(), cfg.stall_window + 1);
        let first = res.history[0].mean;
        assert!(res.history.iter().all(|h| (h.mean - first).abs() < 1e-12));
    }

    #[test]
    fn elitism_and_determinism() {
        let s = small_scenario();
        for objective in [Objective::SumRate, Objective::MinRate] {
            for domain in [PhaseDomain::Continuous, PhaseDomain::Discrete { bits: 2 }] {
                let cfg = GaConfig { objective, domain, ..small_config() };
                let a = ga_optimize(&s, &cfg, 10).unwrap();
                let b = ga_optimize(&s, &cfg, 10).unwrap();
                assert_eq!(a, b);
                assert!(a.history.windows(2).all(|w| w[1].best >= w[0].best));
                assert!(a.history.iter().all(|h| h.population == cfg.population));
                assert!(a.best.phases.satisfies_domain());
                assert_eq!(a.best.phases.domain(), domain);
                assert_eq!(a.best.raw_fitness, a.history.last().unwrap().best);
                let report = crate::rate::ergodic_rate(&s, &a.best.phases).unwrap();
                assert!((objective.of(&report) - a.best.raw_fitness).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn crossover_genes_come_from_parents(seed in any::<u64>(), n in 1usize..20) {
            let mut r = rng(seed);
            let a = PhaseVector::random(n, PhaseDomain::Continuous, &mut r);
            let b = PhaseVector::random(n, PhaseDomain::Continuous, &mut r);
            let child = crossover_pair(a.theta(), b.theta(), &mut r);
            prop_assert_eq!(child.len(), n);
            for i in 0..n {
                prop_assert!(child[i] == a.theta()[i] || child[i] == b.theta()[i]);
            }
        }

        #[test]
        fn scaled_fitness_sums_to_twice_pairs(raw in prop::collection::vec(-10.0f64..10.0, 1..50), pairs in 1usize..100) {
            let s = fitness_scale(&raw, pairs);
            prop_assert!(s.iter().all(|&v| v > 0.0));
            prop_assert!((s.iter().sum::<f64>() - 2.0 * pairs as f64).abs() < 1e-9 * pairs as f64);
        }

        #[test]
        fn population_stays_in_domain(seed in any::<u64>(), bits in 1u32..4) {
            let mut r = rng(seed);
            let domain = PhaseDomain::Discrete { bits };
            let parent = PhaseVector::random(9, domain, &mut r);
            let other = PhaseVector::random(9, domain, &mut r);
            let kids = crossover(&[&parent, &other], &mut r).unwrap();
            prop_assert!(kids[0].satisfies_domain());
            prop_assert!(mutate(&parent, 0.5, domain, &mut r).satisfies_domain());
        }
    }
}
