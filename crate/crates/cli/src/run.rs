//! `run`: every seed of one config, per-seed and aggregate CSVs, summary JSON.

use std::fs::{self, File};
use std::io::BufWriter;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::{info, warn};
use serde::Serialize;

use qhm_core::experiment::{aggregate, initial_point, run_seeds, EvalEvery, Trajectory, TrajectoryConfig};
use qhm_core::schedules::{ScheduleSet, StepPlan};
use qhm_core::{BoundReport, FiniteSumProblem, OptimizerKind};

use crate::config::RunConfig;
use crate::output::{self, AGGREGATE_CSV, DATASET_CSV, SUMMARY_JSON};
use crate::CliError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Stat {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub steps_done: usize,
    pub epochs_done: usize,
    pub final_loss: Option<f64>,
    pub final_full_grad_norm: Option<f64>,
    pub final_min_full_grad_norm: Option<f64>,
    pub diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_step: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub total_steps: usize,
    pub epochs: usize,
    /// Across seeds, over the last row each seed wrote.
    pub final_loss: Option<Stat>,
    pub final_full_grad_norm: Option<Stat>,
    pub final_min_full_grad_norm: Option<Stat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub config_hash: String,
    pub diverged: bool,
    pub metrics: Metrics,
    pub seeds: Vec<SeedSummary>,
    pub bounds: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds_note: Option<String>,
    pub warnings: Vec<String>,
    pub wall_time_seconds: f64,
    pub timestamp_unix: u64,
}

/// What a caller (the sweep) needs from a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config_hash: String,
    pub diverged: bool,
    pub final_min_full_grad_norm: Option<f64>,
    pub final_loss: Option<f64>,
}

/// `max_seed f(x0) - f_star`: the theorem bounds hold for each starting point,
/// so the largest gap covers every seed.
pub fn initial_gap(cfg: &RunConfig, problem: &dyn FiniteSumProblem) -> Result<Option<f64>, CliError> {
    let Some(floor) = problem.constants().loss_floor() else { return Ok(None) };
    let init = cfg.init.to_init();
    let mut worst = f64::NEG_INFINITY;
    for &seed in &cfg.seeds {
        let x0 = initial_point(problem.dim(), seed, &init).map_err(|e| CliError::Runtime(e.to_string()))?;
        worst = worst.max(problem.loss(&x0) - floor);
    }
    Ok(Some(worst.max(0.0)))
}

/// Bound report for the plan, or the reason there is none.
pub fn bound_report(
    cfg: &RunConfig,
    set: &ScheduleSet,
    plan: &StepPlan,
    problem: &dyn FiniteSumProblem,
) -> Result<(Option<BoundReport>, Option<String>), CliError> {
    if cfg.optimizer == OptimizerKind::Shb {
        return Ok((
            None,
            Some("bounds are stated for the QHM family; convert SHB to NSHB hyperparameters with `qhm convert`".into()),
        ));
    }
    let gap = initial_gap(cfg, problem)?;
    let constants = problem.constants();
    match BoundReport::build(set, plan, Some(&constants), gap) {
        Ok(r) => Ok((Some(r), None)),
        Err(e) => Ok((None, Some(e.to_string()))),
    }
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let validated = cfg.validate()?;
    let (set, plan) = (validated.set, validated.plan);
    let problem = cfg.problem.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let hash = cfg.hash_hex();

    let mut warnings: Vec<String> = set.warnings();
    for name in cfg.ignored_schedules() {
        warnings.push(format!("schedules.{name} is ignored by optimizer {:?}", cfg.optimizer));
    }
    if !plan.clamped_epochs.is_empty() {
        warnings.push(format!(
            "batch schedule exceeds n = {} in {} epochs; those epochs ran full batch",
            plan.n,
            plan.clamped_epochs.len()
        ));
    }
    for w in &warnings {
        warn!("{w}");
    }

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    if cfg.export_dataset {
        let mut f = BufWriter::new(File::create(dir.join(DATASET_CSV))?);
        problem.write_dataset_csv(&mut f)?;
    }

    info!(
        "config {hash}: {} on {} (n = {}, dim = {}), {} epochs, {} steps, {} seeds",
        format!("{:?}", cfg.optimizer).to_lowercase(),
        problem.name(),
        problem.n(),
        problem.dim(),
        cfg.epochs,
        plan.total_steps(),
        cfg.seeds.len()
    );
    let tcfg = TrajectoryConfig {
        problem: problem.as_ref(),
        plan: &plan,
        optimizer: cfg.optimizer,
        init: cfg.init.to_init(),
        eval: EvalEvery::Epoch,
    };
    let mut runs: Vec<Trajectory> = Vec::with_capacity(cfg.seeds.len());
    for result in run_seeds(&tcfg, &cfg.seeds) {
        runs.push(result.map_err(|e| CliError::Runtime(e.to_string()))?);
    }

    for t in &runs {
        // partial rows are still written for a diverged seed
        output::write_seed_csv(&dir.join(output::seed_csv_name(t.seed)), &t.rows, cfg.log_every)?;
        match &t.diverged {
            Some(d) => warn!("seed {} diverged at step {} (epoch {}, loss {})", t.seed, d.step, d.epoch, d.loss),
            None => info!("seed {} done: final min grad norm {:.6e}", t.seed, t.final_min_grad_norm().unwrap_or(f64::NAN)),
        }
    }
    let refs: Vec<&Trajectory> = runs.iter().collect();
    output::write_aggregate_csv(&dir.join(AGGREGATE_CSV), &aggregate(&refs), cfg.log_every)?;

    let (mut bounds, bounds_note) = bound_report(cfg, &set, &plan, problem.as_ref())?;
    if let Some(report) = bounds.as_mut() {
        let mins: Vec<f64> =
            runs.iter().filter(|t| t.diverged.is_none()).filter_map(|t| t.min_grad_sq_before(plan.total_steps())).collect();
        if mins.len() == runs.len() {
            report.empirical_min_grad_sq = Some(mins.iter().sum::<f64>() / mins.len() as f64);
        }
    }

    let seeds: Vec<SeedSummary> = runs
        .iter()
        .map(|t| SeedSummary {
            seed: t.seed,
            steps_done: t.steps_done,
            epochs_done: t.rows.len(),
            final_loss: t.rows.last().map(|r| r.loss),
            final_full_grad_norm: t.rows.last().map(|r| r.full_grad_norm),
            final_min_full_grad_norm: t.final_min_grad_norm(),
            diverged: t.diverged.is_some(),
            divergence_step: t.diverged.as_ref().map(|d| d.step),
        })
        .collect();
    let collect = |f: fn(&SeedSummary) -> Option<f64>| Stat::of(&seeds.iter().filter_map(f).collect::<Vec<_>>());
    let metrics = Metrics {
        total_steps: plan.total_steps(),
        epochs: cfg.epochs,
        final_loss: collect(|s| s.final_loss),
        final_full_grad_norm: collect(|s| s.final_full_grad_norm),
        final_min_full_grad_norm: collect(|s| s.final_min_full_grad_norm),
    };
    let diverged = seeds.iter().any(|s| s.diverged);
    let outcome = RunOutcome {
        config_hash: hash.clone(),
        diverged,
        final_min_full_grad_norm: metrics.final_min_full_grad_norm.map(|s| s.mean),
        final_loss: metrics.final_loss.map(|s| s.mean),
    };
    let summary = Summary {
        config: cfg.clone(),
        config_hash: hash,
        diverged,
        metrics,
        seeds,
        bounds,
        bounds_note,
        warnings,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    output::write_json(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(outcome)
}
