use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dot, require, write_rows, FiniteSumProblem, ProblemConstants, Result};

/// Margin added along the separating direction when generating data.
pub const LOGISTIC_MARGIN: f64 = 0.1;

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Binary logistic regression, `f_i(x) = log(1 + exp(-y_i z_i^T x))`.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
    max_sq_norm: f64,
    mean_sq_norm: f64,
}

/// Linearly separable data: `z ~ N(0, I)`, label `sign(w^T z)` for a random
/// unit `w`, then `z` is pushed `LOGISTIC_MARGIN` further along `y w`.
pub fn make_logistic(dim: usize, n: usize, seed: u64) -> Result<Logistic> {
    require(dim >= 1, "dim", "must be at least 1")?;
    require(n >= 1, "n", "must be at least 1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let wn = dot(&w, &w).sqrt();
    if wn > 0.0 {
        w.iter_mut().for_each(|v| *v /= wn);
    } else {
        w[0] = 1.0;
    }
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = if dot(&w, &z) >= 0.0 { 1.0 } else { -1.0 };
        z.iter_mut().zip(&w).for_each(|(zj, wj)| *zj += y * LOGISTIC_MARGIN * wj);
        features.extend(z);
        labels.push(y);
    }
    Logistic::from_parts(dim, features, labels)
}

impl Logistic {
    pub fn from_parts(dim: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        require(dim >= 1, "dim", "must be at least 1")?;
        let n = labels.len();
        require(n >= 1, "labels", "must be non-empty")?;
        require(features.len() == n * dim, "features", "must hold n * dim entries")?;
        require(labels.iter().all(|&y| y == 1.0 || y == -1.0), "labels", "must be +1 or -1")?;
        require(features.iter().all(|v| v.is_finite()), "features", "entries must be finite")?;
        let sq: Vec<f64> = features.chunks(dim).map(|z| dot(z, z)).collect();
        let max_sq_norm = sq.iter().copied().fold(0.0, f64::max);
        let mean_sq_norm = sq.iter().sum::<f64>() / n as f64;
        Ok(Self { features, labels, dim, max_sq_norm, mean_sq_norm })
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
}

impl FiniteSumProblem for Logistic {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn n(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_loss(&self, i: usize, x: &[f64]) -> f64 {
        softplus(-self.labels[i] * dot(self.feature(i), x))
    }

    fn accumulate_grad(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let y = self.labels[i];
        let c = -scale * y * sigmoid(-y * dot(self.feature(i), x));
        for (o, z) in out.iter_mut().zip(self.feature(i)) {
            *o += c * z;
        }
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            smoothness: Some(self.max_sq_norm / 4.0),
            grad_bound: Some(self.max_sq_norm.sqrt()),
            // ||grad f_i|| <= ||z_i||, so the second moment bounds the variance
            sigma2: Some(self.mean_sq_norm),
            f_star: None,
            nonnegative: true,
        }
    }

    fn write_dataset_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("z{j}")).collect();
        header.push("y".into());
        let rows = (0..self.n()).map(|i| {
            let mut r = self.feature(i).to_vec();
            r.push(self.labels[i]);
            r
        });
        write_rows(w, &header, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_loss_is_log_two() {
        let p = make_logistic(3, 40, 1).unwrap();
        assert_eq!(p.loss(&[0.0; 3]), std::f64::consts::LN_2);
    }

    #[test]
    fn origin_gradient_closed_form() {
        let p = make_logistic(3, 40, 2).unwrap();
        let mut g = [0.0; 3];
        p.full_grad(&[0.0; 3], &mut g);
        for j in 0..3 {
            let expect = -(0..p.n()).map(|i| p.label(i) * p.feature(i)[j]).sum::<f64>() / (2.0 * p.n() as f64);
            assert!((g[j] - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn data_is_separable() {
        let p = make_logistic(4, 200, 3).unwrap();
        // a long step along the mean signed feature drives the loss well below log 2
        let mut g = vec![0.0; 4];
        p.full_grad(&[0.0; 4], &mut g);
        let x: Vec<f64> = g.iter().map(|v| -10.0 * v).collect();
        assert!(p.loss(&x) < std::f64::consts::LN_2);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let p = make_logistic(5, 100, 4).unwrap();
        let alpha = 1.0 / p.constants().smoothness.unwrap();
        let mut x = vec![0.0; 5];
        let mut g = vec![0.0; 5];
        let mut prev = p.loss(&x);
        for _ in 0..100 {
            p.full_grad(&x, &mut g);
            x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= alpha * gi);
            let cur = p.loss(&x);
            assert!(cur <= prev);
            prev = cur;
        }
    }
}
