//! Trajectory runner: drives an optimizer over an expanded plan, sampling
//! mini-batches with replacement and recording full-gradient metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{norm, OptimError, Optimizer, OptimizerKind};
use crate::problems::{sample_batch_grad, BatchSampler, FiniteSumProblem, ProblemError};
use crate::schedules::StepPlan;

/// Runs halt once `|f(x)|` exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Stream used for the starting point; mini-batch indices use stream 0.
const INIT_STREAM: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("starting point has dimension {got}, problem has dimension {expected}")]
    InitDimension { expected: usize, got: usize },
    #[error("plan has no steps")]
    EmptyPlan,
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalEvery {
    Epoch,
    Step,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `x0 = scale * N(0, I)` drawn from the run seed.
    Random { scale: f64 },
    Fixed(Vec<f64>),
}

/// One row per epoch, evaluated at the iterate reached after the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    /// Steps taken so far.
    pub step: usize,
    pub loss: f64,
    pub full_grad_norm: f64,
    /// Includes the starting point.
    pub min_full_grad_norm_so_far: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub batch: usize,
}

impl EpochRow {
    pub const COLUMNS: [&'static str; 9] = [
        "epoch",
        "step",
        "loss",
        "full_grad_norm",
        "min_full_grad_norm_so_far",
        "alpha",
        "beta",
        "gamma",
        "batch",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Divergence {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub rows: Vec<EpochRow>,
    /// `(k, ||grad f(x_k)||^2)` at every evaluated iterate, `k = 0` first.
    pub evaluations: Vec<(usize, f64)>,
    pub diverged: Option<Divergence>,
    pub final_x: Vec<f64>,
    pub steps_done: usize,
    /// Largest search-direction norm seen.
    pub max_direction_norm: f64,
}

impl Trajectory {
    /// `min ||grad f(x_k)||^2` over evaluated iterates with `k < limit`.
    pub fn min_grad_sq_before(&self, limit: usize) -> Option<f64> {
        self.evaluations.iter().filter(|(k, _)| *k < limit).map(|&(_, g)| g).reduce(f64::min)
    }

    pub fn final_min_grad_norm(&self) -> Option<f64> {
        self.rows.last().map(|r| r.min_full_grad_norm_so_far)
    }
}

#[derive(Clone)]
pub struct TrajectoryConfig<'a> {
    pub problem: &'a dyn FiniteSumProblem,
    pub plan: &'a StepPlan,
    pub optimizer: OptimizerKind,
    pub init: Init,
    pub eval: EvalEvery,
}

pub fn initial_point(dim: usize, seed: u64, init: &Init) -> Result<Vec<f64>> {
    match init {
        Init::Fixed(x) if x.len() == dim => Ok(x.clone()),
        Init::Fixed(x) => Err(ExperimentError::InitDimension { expected: dim, got: x.len() }),
        Init::Random { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(INIT_STREAM);
            Ok((0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect())
        }
    }
}

struct Evaluator<'a> {
    problem: &'a dyn FiniteSumProblem,
    grad: Vec<f64>,
}

impl Evaluator<'_> {
    /// `(f(x), ||grad f(x)||)`.
    fn eval(&mut self, x: &[f64]) -> (f64, f64) {
        self.problem.full_grad(x, &mut self.grad);
        (self.problem.loss(x), norm(&self.grad))
    }
}

fn blown_up(loss: f64) -> bool {
    !loss.is_finite() || loss.abs() > DIVERGENCE_THRESHOLD
}

/// Runs one seed to completion or divergence.
pub fn run_trajectory(cfg: &TrajectoryConfig<'_>, seed: u64) -> Result<Trajectory> {
    let problem = cfg.problem;
    let plan = cfg.plan;
    if plan.total_steps() == 0 {
        return Err(ExperimentError::EmptyPlan);
    }
    let dim = problem.dim();
    let x0 = initial_point(dim, seed, &cfg.init)?;
    let mut opt = Optimizer::new(cfg.optimizer, x0);
    let mut sampler = BatchSampler::new(seed, problem.n());
    let mut eval = Evaluator { problem, grad: vec![0.0; dim] };
    let mut g = vec![0.0; dim];

    let mut out = Trajectory {
        seed,
        rows: Vec::with_capacity(plan.steps_per_epoch.len()),
        evaluations: Vec::new(),
        diverged: None,
        final_x: Vec::new(),
        steps_done: 0,
        max_direction_norm: 0.0,
    };

    let (loss0, gn0) = eval.eval(opt.x());
    out.evaluations.push((0, gn0 * gn0));
    let mut min_norm = gn0;
    if blown_up(loss0) {
        out.diverged = Some(Divergence { step: 0, epoch: 0, loss: loss0 });
        out.final_x = opt.x().to_vec();
        return Ok(out);
    }

    let mut k = 0usize;
    'epochs: for (m, &steps) in plan.steps_per_epoch.iter().enumerate() {
        for _ in 0..steps {
            if cfg.eval == EvalEvery::Step && k > 0 {
                let (loss, gn) = eval.eval(opt.x());
                out.evaluations.push((k, gn * gn));
                min_norm = min_norm.min(gn);
                if blown_up(loss) {
                    out.diverged = Some(Divergence { step: k, epoch: m, loss });
                    break 'epochs;
                }
            }
            let h = plan.hyper(k);
            sample_batch_grad(problem, &mut sampler, opt.x(), h.batch, &mut g)?;
            let dir = match opt.step(&g, &h) {
                Ok(v) => v,
                Err(OptimError::NonFiniteGradient { .. }) => {
                    out.diverged = Some(Divergence { step: k, epoch: m, loss: f64::NAN });
                    break 'epochs;
                }
                Err(e) => return Err(e.into()),
            };
            out.max_direction_norm = out.max_direction_norm.max(dir);
            k += 1;
            if opt.x().iter().any(|v| !v.is_finite()) {
                out.diverged = Some(Divergence { step: k, epoch: m, loss: f64::NAN });
                break 'epochs;
            }
        }
        let (loss, gn) = eval.eval(opt.x());
        if cfg.eval == EvalEvery::Epoch || k == plan.total_steps() {
            out.evaluations.push((k, gn * gn));
        }
        min_norm = min_norm.min(gn);
        let h = plan.epoch_hyper[m];
        out.rows.push(EpochRow {
            epoch: m,
            step: k,
            loss,
            full_grad_norm: gn,
            min_full_grad_norm_so_far: min_norm,
            alpha: h.alpha,
            beta: h.beta,
            gamma: h.gamma,
            batch: h.batch,
        });
        if blown_up(loss) {
            out.diverged = Some(Divergence { step: k, epoch: m, loss });
            break;
        }
    }
    out.steps_done = k;
    out.final_x = opt.x().to_vec();
    Ok(out)
}

/// Runs every seed in parallel; results keep the order of `seeds`.
pub fn run_seeds(cfg: &TrajectoryConfig<'_>, seeds: &[u64]) -> Vec<Result<Trajectory>> {
    seeds.par_iter().map(|&s| run_trajectory(cfg, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Band {
    /// Mean summed in input order.
    fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Band { mean, min, max }
    }
}

/// Cross-seed statistics for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub step: usize,
    pub seeds: usize,
    pub loss: Band,
    pub full_grad_norm: Band,
    pub min_full_grad_norm_so_far: Band,
}

impl AggregateRow {
    pub const COLUMNS: [&'static str; 12] = [
        "epoch",
        "step",
        "seeds",
        "loss_mean",
        "loss_min",
        "loss_max",
        "full_grad_norm_mean",
        "full_grad_norm_min",
        "full_grad_norm_max",
        "min_full_grad_norm_so_far_mean",
        "min_full_grad_norm_so_far_min",
        "min_full_grad_norm_so_far_max",
    ];
}

/// Per-epoch mean/min/max over the runs that reached that epoch.
pub fn aggregate(runs: &[&Trajectory]) -> Vec<AggregateRow> {
    let epochs = runs.iter().map(|t| t.rows.len()).max().unwrap_or(0);
    (0..epochs)
        .map(|m| {
            let rows: Vec<&EpochRow> = runs.iter().filter_map(|t| t.rows.get(m)).collect();
            let col = |f: fn(&EpochRow) -> f64| Band::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            AggregateRow {
                epoch: m,
                step: rows[0].step,
                seeds: rows.len(),
                loss: col(|r| r.loss),
                full_grad_norm: col(|r| r.full_grad_norm),
                min_full_grad_norm_so_far: col(|r| r.min_full_grad_norm_so_far),
            }
        })
        .collect()
}
