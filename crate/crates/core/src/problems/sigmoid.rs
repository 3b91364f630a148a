use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dot, require, write_rows, FiniteSumProblem, ProblemConstants, Result};

/// `sup_z |h'(z)|` for `h(z) = (s(z) - y)^2`, `s` the logistic sigmoid and
/// `y` in `[0, 1]`; attained at `s = 2/3`.
pub const SIGMOID_SQ_GRAD_SUP: f64 = 8.0 / 27.0;

/// `sup_z |h''(z)| <= 2 sup s'^2 + 2 sup |s''| = 1/8 + 2 / (6 sqrt 3)`.
pub fn sigmoid_sq_curv_sup() -> f64 {
    0.125 + 2.0 / (6.0 * 3f64.sqrt())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Nonconvex least-squares fit of a single sigmoid unit:
/// `f_i(x) = (s(a_i^T x - t_i) - y_i)^2`.
///
/// Every component gradient is bounded by `(8/27) ||a_i||` on all of `R^d`,
/// which makes this the bounded-gradient testbed.
#[derive(Debug, Clone)]
pub struct SigmoidSum {
    features: Vec<f64>,
    offsets: Vec<f64>,
    targets: Vec<f64>,
    dim: usize,
    max_norm: f64,
    mean_sq_norm: f64,
}

/// Features `a_i ~ N(0, I)`, offsets `t_i ~ N(0, 1/4)`, targets `y_i ~ U[0, 1]`.
pub fn make_sigmoid_sum(dim: usize, n: usize, seed: u64) -> Result<SigmoidSum> {
    require(dim >= 1, "dim", "must be at least 1")?;
    require(n >= 1, "n", "must be at least 1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * dim);
    let mut offsets = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        features.extend((0..dim).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let t: f64 = StandardNormal.sample(&mut rng);
        offsets.push(0.5 * t);
        targets.push(rng.random::<f64>());
    }
    SigmoidSum::from_parts(dim, features, offsets, targets)
}

impl SigmoidSum {
    pub fn from_parts(dim: usize, features: Vec<f64>, offsets: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        require(dim >= 1, "dim", "must be at least 1")?;
        let n = offsets.len();
        require(n >= 1, "offsets", "must be non-empty")?;
        require(features.len() == n * dim, "features", "must hold n * dim entries")?;
        require(targets.len() == n, "targets", "must hold n entries")?;
        require(targets.iter().all(|y| (0.0..=1.0).contains(y)), "targets", "must lie in [0, 1]")?;
        require(
            features.iter().chain(&offsets).all(|v| v.is_finite()),
            "features",
            "entries must be finite",
        )?;
        let sq: Vec<f64> = features.chunks(dim).map(|a| dot(a, a)).collect();
        let max_norm = sq.iter().copied().fold(0.0, f64::max).sqrt();
        let mean_sq_norm = sq.iter().sum::<f64>() / n as f64;
        Ok(Self { features, offsets, targets, dim, max_norm, mean_sq_norm })
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    fn residual(&self, i: usize, x: &[f64]) -> (f64, f64) {
        let s = sigmoid(dot(self.feature(i), x) - self.offsets[i]);
        (s, s - self.targets[i])
    }
}

impl FiniteSumProblem for SigmoidSum {
    fn name(&self) -> &'static str {
        "sigmoid_sum"
    }

    fn n(&self) -> usize {
        self.offsets.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_loss(&self, i: usize, x: &[f64]) -> f64 {
        let (_, r) = self.residual(i, x);
        r * r
    }

    fn accumulate_grad(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let (s, r) = self.residual(i, x);
        let c = scale * 2.0 * r * s * (1.0 - s);
        for (o, a) in out.iter_mut().zip(self.feature(i)) {
            *o += c * a;
        }
    }

    fn constants(&self) -> ProblemConstants {
        let g = SIGMOID_SQ_GRAD_SUP * self.max_norm;
        ProblemConstants {
            smoothness: Some(sigmoid_sq_curv_sup() * self.max_norm * self.max_norm),
            grad_bound: Some(g),
            // E ||g_i - g||^2 <= E ||g_i||^2 <= (8/27)^2 mean ||a_i||^2 <= G^2
            sigma2: Some(SIGMOID_SQ_GRAD_SUP * SIGMOID_SQ_GRAD_SUP * self.mean_sq_norm),
            f_star: Some(0.0),
            nonnegative: true,
        }
    }

    fn write_dataset_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("a{j}")).collect();
        header.push("t".into());
        header.push("y".into());
        let rows = (0..self.n()).map(|i| {
            let mut r = self.feature(i).to_vec();
            r.push(self.offsets[i]);
            r.push(self.targets[i]);
            r
        });
        write_rows(w, &header, rows)
    }
}
