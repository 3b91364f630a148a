//! Finite-sum objectives `f(x) = (1/n) sum_i f_i(x)` and the mini-batch
//! gradient estimator.
//!
//! Each problem declares whatever constants it can certify analytically:
//! smoothness `L`, per-sample gradient bound `G`, variance bound `sigma^2`
//! (norm-wise, `E ||grad f_xi - grad f||^2 <= sigma^2`) and the optimal value
//! `f_star`.

mod logistic;
mod quadratic;
mod sigmoid;

pub use logistic::{make_logistic, Logistic};
pub use quadratic::{make_noisy_quadratic, NoisyQuadratic};
pub use sigmoid::{make_sigmoid_sum, SigmoidSum};

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::summation::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("vector has dimension {got}, problem has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// Analytic constants of a problem; `None` when no certified value exists.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Smoothness constant of `f`.
    pub smoothness: Option<f64>,
    /// Uniform bound on every per-sample gradient norm.
    pub grad_bound: Option<f64>,
    /// Norm-wise variance bound of a single-sample gradient.
    pub sigma2: Option<f64>,
    /// Infimum (or a lower bound) of `f`.
    pub f_star: Option<f64>,
    /// Every component is non-negative, so `0` is a lower bound.
    pub nonnegative: bool,
}

impl ProblemConstants {
    /// Best available lower bound on `f`.
    pub fn loss_floor(&self) -> Option<f64> {
        self.f_star.or(if self.nonnegative { Some(0.0) } else { None })
    }
}

pub trait FiniteSumProblem: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of components `n`.
    fn n(&self) -> usize;

    fn dim(&self) -> usize;

    /// `f_i(x)`.
    fn sample_loss(&self, i: usize, x: &[f64]) -> f64;

    /// `out += scale * grad f_i(x)`.
    fn accumulate_grad(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]);

    fn constants(&self) -> ProblemConstants;

    /// Writes the generated data as CSV (header row first).
    fn write_dataset_csv(&self, w: &mut dyn Write) -> io::Result<()>;

    fn per_sample_grad(&self, i: usize, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.accumulate_grad(i, x, 1.0, out);
    }

    fn loss(&self, x: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 0..self.n() {
            acc.add(self.sample_loss(i, x));
        }
        acc.value() / self.n() as f64
    }

    fn full_grad(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let scale = 1.0 / self.n() as f64;
        for i in 0..self.n() {
            self.accumulate_grad(i, x, scale, out);
        }
    }
}

/// Convenience wrapper returning the full gradient as a new vector.
pub fn full_grad_vec(p: &dyn FiniteSumProblem, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; p.dim()];
    p.full_grad(x, &mut g);
    g
}

/// Seeded i.i.d. uniform index stream over `0..n`, drawn with replacement.
///
/// Backed by ChaCha8 with 64-bit integer range sampling, so the stream is the
/// same on every platform for a given seed.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    rng: ChaCha8Rng,
    n: usize,
    draws: u64,
}

impl BatchSampler {
    pub fn new(seed: u64, n: usize) -> Self {
        assert!(n >= 1, "sampler population must be non-empty");
        Self { rng: ChaCha8Rng::seed_from_u64(seed), n, draws: 0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of indices drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_index(&mut self) -> usize {
        self.draws += 1;
        self.rng.random_range(0..self.n as u64) as usize
    }
}

/// `(1/b) sum_{j<b} grad f_{xi_j}(x)` with `b` fresh i.i.d. indices; advances
/// the sampler by exactly `b` draws.
pub fn sample_batch_grad(
    problem: &dyn FiniteSumProblem,
    sampler: &mut BatchSampler,
    x: &[f64],
    batch: usize,
    out: &mut [f64],
) -> Result<()> {
    if batch == 0 {
        return Err(ProblemError::ZeroBatch);
    }
    check_dim(problem, x)?;
    check_dim(problem, out)?;
    out.fill(0.0);
    let scale = 1.0 / batch as f64;
    for _ in 0..batch {
        let i = sampler.next_index();
        problem.accumulate_grad(i, x, scale, out);
    }
    Ok(())
}

fn check_dim(problem: &dyn FiniteSumProblem, v: &[f64]) -> Result<()> {
    if v.len() != problem.dim() {
        Err(ProblemError::DimensionMismatch { expected: problem.dim(), got: v.len() })
    } else {
        Ok(())
    }
}

/// Problem selection as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    NoisyQuadratic { dim: usize, n: usize, seed: u64, kappa: f64 },
    SigmoidSum { dim: usize, n: usize, seed: u64 },
    Logistic { dim: usize, n: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn n(&self) -> usize {
        match *self {
            ProblemSpec::NoisyQuadratic { n, .. } | ProblemSpec::SigmoidSum { n, .. } | ProblemSpec::Logistic { n, .. } => n,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ProblemSpec::NoisyQuadratic { dim, .. }
            | ProblemSpec::SigmoidSum { dim, .. }
            | ProblemSpec::Logistic { dim, .. } => dim,
        }
    }

    pub fn build(&self) -> Result<Box<dyn FiniteSumProblem>> {
        Ok(match *self {
            ProblemSpec::NoisyQuadratic { dim, n, seed, kappa } => Box::new(make_noisy_quadratic(dim, n, seed, kappa)?),
            ProblemSpec::SigmoidSum { dim, n, seed } => Box::new(make_sigmoid_sum(dim, n, seed)?),
            ProblemSpec::Logistic { dim, n, seed } => Box::new(make_logistic(dim, n, seed)?),
        })
    }
}

pub(crate) fn require(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(ProblemError::InvalidArgument { name, reason: reason.to_string() })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn write_rows(
    w: &mut dyn Write,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
