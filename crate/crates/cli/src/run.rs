//! Executes an experiment and writes a long-format CSV plus a JSON sidecar.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use ris_core::ga::{ga_optimize, GaConfig, Objective, StopReason};
use ris_core::moments::{aligned_phases, MomentEvaluator};
use ris_core::montecarlo::{
    mc_condition_number, mc_ergodic_rate, mc_moments, mc_random_phase_rate, random_phase_closed_form, substream,
    Accumulator, McEstimate, McRateReport,
};
use ris_core::phase::PhaseVector;
use ris_core::rate::ergodic_rate;
use ris_core::Scenario;
use serde::Serialize;

use crate::error::{ExperimentError, Result};
use crate::spec::{Design, ExperimentSpec, Kind, Point};

pub const RATE_UNIT: &str = "bit/s/Hz";

/// Stream offset for phase draws made by the runner itself.
const RUNNER_PHASE_STREAM: u64 = 1 << 61;

/// One CSV record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub parameter: String,
    pub value: f64,
    pub series: String,
    pub series_value: Option<f64>,
    pub metric: &'static str,
    pub design: String,
    pub user: Option<usize>,
    pub closed_form: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_std_err: Option<f64>,
    pub unit: &'static str,
}

/// Outcome of one GA run, recorded in the sidecar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaRun {
    pub value: f64,
    pub series_value: Option<f64>,
    pub design: &'static str,
    pub generations: usize,
    pub stop: StopReason,
    pub best_fitness: f64,
}

/// Contents of the JSON sidecar.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub version: &'static str,
    pub seed: u64,
    pub angle_seed: u64,
    pub points: usize,
    pub rows: usize,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub ga_runs: Vec<GaRun>,
    pub spec: ExperimentSpec,
}

#[derive(Default)]
struct PointOutput {
    rows: Vec<Row>,
    warnings: Vec<String>,
    ga_runs: Vec<GaRun>,
}

fn runtime(e: ris_core::Error) -> ExperimentError {
    ExperimentError::Runtime(e.to_string())
}

/// Seed for sub-task `task` of point `index`; independent of thread scheduling.
fn derive_seed(seed: u64, index: usize, task: u64) -> u64 {
    substream(seed, index as u64).next_u64() ^ substream(seed ^ 0x9e37_79b9_7f4a_7c15, task).next_u64()
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    point: &'a Point,
    scenario: Scenario,
    out: PointOutput,
}

impl Ctx<'_> {
    fn push(
        &mut self,
        metric: &'static str,
        design: &str,
        user: Option<usize>,
        closed_form: Option<f64>,
        mc: Option<McEstimate>,
        unit: &'static str,
    ) {
        let spec = self.spec;
        self.out.rows.push(Row {
            experiment: spec.name.clone(),
            parameter: spec.sweep.parameter.to_string(),
            value: self.point.value,
            series: spec.series.as_ref().map(|s| s.parameter.to_string()).unwrap_or_default(),
            series_value: self.point.series_value,
            metric,
            design: design.to_string(),
            user,
            closed_form,
            mc_mean: mc.map(|e| e.mean),
            mc_std_err: mc.map(|e| e.std_error).filter(|se| se.is_finite()),
            unit,
        });
    }

    fn seed(&self, task: u64) -> u64 {
        derive_seed(self.spec.seed, self.point.index, task)
    }

    /// Phases for a deterministic design; `None` for the random design.
    fn design_phases(&mut self, design: Design, task: u64) -> Result<Option<PhaseVector>> {
        let objective = match design {
            Design::MaxSum => Objective::SumRate,
            Design::MaxMin => Objective::MinRate,
            Design::Aligned => {
                return aligned_phases(&self.scenario, 0, self.point.domain()).map(Some).map_err(runtime)
            }
            Design::Random => return Ok(None),
        };
        let config = GaConfig {
            objective,
            ..self.point.ga.clone()
        };
        let result = ga_optimize(&self.scenario, &config, self.seed(task)).map_err(runtime)?;
        self.out.ga_runs.push(GaRun {
            value: self.point.value,
            series_value: self.point.series_value,
            design: design.label(),
            generations: result.history.len() - 1,
            stop: result.stop,
            best_fitness: result.best.raw_fitness,
        });
        Ok(Some(result.best.phases))
    }

    fn push_rates(&mut self, design: Design, cf: Option<&[f64]>, mc: Option<&McRateReport>) {
        let label = design.label();
        let cf_sum = cf.map(|r| r.iter().sum());
        let cf_min = cf.map(|r| r.iter().copied().fold(f64::INFINITY, f64::min));
        self.push("sum_rate", label, None, cf_sum, mc.map(|m| m.sum_rate), RATE_UNIT);
        // No standard error: the minimum of means is not a sample mean.
        let mc_min = mc.map(|m| McEstimate {
            mean: m.min_rate(),
            std_error: f64::NAN,
            samples: m.sum_rate.samples,
        });
        self.push("min_rate", label, None, cf_min, mc_min, RATE_UNIT);
        for u in 0..self.scenario.k {
            self.push("user_rate", label, Some(u), cf.map(|r| r[u]), mc.map(|m| m.per_user[u]), RATE_UNIT);
        }
    }

    fn run_rates(&mut self) -> Result<()> {
        let mc = self.spec.mc.clone();
        for (task, &design) in self.spec.designs.iter().enumerate() {
            let task = task as u64 * 4;
            match self.design_phases(design, task)? {
                Some(phases) => {
                    let cf = ergodic_rate(&self.scenario, &phases).map_err(runtime)?;
                    let sim = if mc.samples > 0 {
                        Some(mc_ergodic_rate(&self.scenario, &phases, mc.samples, self.seed(task + 1)).map_err(runtime)?)
                    } else {
                        None
                    };
                    self.push_rates(design, Some(&cf.per_user_rate), sim.as_ref());
                }
                None => {
                    let domain = self.point.domain();
                    let cf = random_phase_closed_form(&self.scenario, domain, mc.random_draws, self.seed(task + 2))
                        .map_err(runtime)?;
                    let sim = if mc.samples > 0 {
                        let per_draw = mc.samples / mc.random_mc_draws;
                        Some(
                            mc_random_phase_rate(&self.scenario, domain, mc.random_mc_draws, per_draw, self.seed(task + 3))
                                .map_err(runtime)?,
                        )
                    } else {
                        None
                    };
                    self.push_rates(design, Some(&cf), sim.as_ref());
                }
            }
        }
        Ok(())
    }

    fn run_moments(&mut self) -> Result<()> {
        let mc = self.spec.mc.clone();
        let eval = MomentEvaluator::new(&self.scenario).map_err(runtime)?;
        for d in 0..mc.moment_phase_draws {
            let mut rng = substream(self.seed(0), RUNNER_PHASE_STREAM + d as u64);
            let phases = PhaseVector::random(self.scenario.n, self.point.domain(), &mut rng);
            let cf = eval.evaluate(&phases).map_err(runtime)?;
            let sim = mc_moments(&self.scenario, &phases, mc.moment_samples, self.seed(1 + d as u64)).map_err(runtime)?;
            let label = format!("random-{d}");
            for u in 0..self.scenario.k {
                self.push("noise_moment", &label, Some(u), Some(cf.noise[u]), Some(sim.noise[u]), "");
                self.push("signal_moment", &label, Some(u), Some(cf.signal[u]), Some(sim.signal[u]), "");
                self.push(
                    "sum_interference",
                    &label,
                    Some(u),
                    Some(cf.sum_interference(u)),
                    Some(sim.sum_interference[u]),
                    "",
                );
            }
        }
        Ok(())
    }

    fn run_condition(&mut self) -> Result<()> {
        let mc = self.spec.mc.clone();
        for (task, &design) in self.spec.designs.iter().enumerate() {
            let task = task as u64 * 4;
            let (estimate, deficient) = match self.design_phases(design, task)? {
                Some(phases) => {
                    let stats = mc_condition_number(&self.scenario, &phases, mc.condition_samples, self.seed(task + 1))
                        .map_err(runtime)?;
                    (stats.estimate, stats.rank_deficient)
                }
                None => {
                    // Cluster means over independent phase vectors, as for rates.
                    let draws = mc.random_mc_draws.max(2);
                    let per_draw = (mc.condition_samples / draws).max(2);
                    let mut acc = Accumulator::default();
                    let mut deficient = 0;
                    for d in 0..draws {
                        let mut rng = substream(self.seed(task + 2), RUNNER_PHASE_STREAM + d as u64);
                        let phases = PhaseVector::random(self.scenario.n, self.point.domain(), &mut rng);
                        let stats = mc_condition_number(&self.scenario, &phases, per_draw, self.seed(task + 3 + 4 * d as u64))
                            .map_err(runtime)?;
                        acc.push(stats.estimate.mean);
                        deficient += stats.rank_deficient;
                    }
                    (acc.estimate(), deficient)
                }
            };
            if deficient > 0 {
                self.out.warnings.push(format!(
                    "{} at {}={}: {deficient} rank-deficient samples excluded",
                    design.label(),
                    self.spec.sweep.parameter,
                    self.point.value
                ));
            }
            self.push("condition_number", design.label(), None, None, Some(estimate), "");
        }
        Ok(())
    }
}

fn run_point(spec: &ExperimentSpec, point: &Point) -> Result<PointOutput> {
    let scenario = point.scenario(spec.angle_seed)?;
    let mut ctx = Ctx {
        spec,
        point,
        scenario,
        out: PointOutput::default(),
    };
    for (a, b) in ctx.scenario.coincident_users() {
        ctx.out.warnings.push(format!(
            "users {a} and {b} share arrival angles at {}={}",
            spec.sweep.parameter, point.value
        ));
    }
    match spec.kind {
        Kind::Rates => ctx.run_rates()?,
        Kind::Moments => ctx.run_moments()?,
        Kind::Condition => ctx.run_condition()?,
    }
    Ok(ctx.out)
}

/// Runs every sweep point (in parallel) and returns rows ordered by
/// (series value, sweep value).
pub fn execute(spec: &ExperimentSpec) -> Result<(Vec<Row>, RunSummary)> {
    let start = Instant::now();
    let points = spec.validate()?;
    let outputs: Vec<PointOutput> = points
        .par_iter()
        .map(|p| run_point(spec, p))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut ga_runs = Vec::new();
    for o in outputs {
        rows.extend(o.rows);
        warnings.extend(o.warnings);
        ga_runs.extend(o.ga_runs);
    }
    let summary = RunSummary {
        name: spec.name.clone(),
        version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
        angle_seed: spec.angle_seed,
        points: points.len(),
        rows: rows.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings,
        ga_runs,
        spec: spec.clone(),
    };
    Ok((rows, summary))
}

/// Paths of the files written by [`run`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outputs {
    pub csv: PathBuf,
    pub json: PathBuf,
}

fn output_error(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Config(format!("output: cannot write to '{}': {e}", path.display()))
}

/// Runs `spec` and writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
///
/// The files are created before any computation so that an unusable output
/// location fails fast.
pub fn run(spec: &ExperimentSpec, dir: &Path) -> Result<(Outputs, RunSummary)> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    let outputs = Outputs {
        csv: dir.join(format!("{}.csv", spec.name)),
        json: dir.join(format!("{}.json", spec.name)),
    };
    let csv_file = File::create(&outputs.csv).map_err(|e| output_error(&outputs.csv, e))?;
    let json_file = File::create(&outputs.json).map_err(|e| output_error(&outputs.json, e))?;

    let (rows, summary) = execute(spec)?;

    let write_err = |e: &dyn std::fmt::Display| ExperimentError::Runtime(format!("writing results: {e}"));
    let mut writer = csv::Writer::from_writer(csv_file);
    for row in &rows {
        writer.serialize(row).map_err(|e| write_err(&e))?;
    }
    writer.flush().map_err(|e| write_err(&e))?;
    serde_json::to_writer_pretty(json_file, &summary).map_err(|e| write_err(&e))?;
    Ok((outputs, summary))
}
