use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{require, write_rows, FiniteSumProblem, ProblemConstants, Result};
use crate::summation::CompensatedSum;

/// `f_i(x) = 1/2 (x - c_i)^T A (x - c_i)` with diagonal `A`.
///
/// The full objective is `f(c_bar) + 1/2 (x - c_bar)^T A (x - c_bar)`, so the
/// minimiser is the centre mean and `f_star = f(c_bar)` is exact.
#[derive(Debug, Clone)]
pub struct NoisyQuadratic {
    diag: Vec<f64>,
    centers: Vec<f64>,
    mean_center: Vec<f64>,
    /// `mean_i (c_ij - c_bar_j)^2` per coordinate.
    spread: Vec<f64>,
    n: usize,
}

/// Diagonal spectrum geometrically spaced from 1 to `kappa`, centres drawn
/// from a standard normal.
pub fn make_noisy_quadratic(dim: usize, n: usize, seed: u64, kappa: f64) -> Result<NoisyQuadratic> {
    require(dim >= 1, "dim", "must be at least 1")?;
    require(n >= 2, "n", "must be at least 2")?;
    require(kappa.is_finite() && kappa >= 1.0, "kappa", "must be finite and >= 1")?;
    let diag: Vec<f64> = if dim == 1 {
        vec![kappa]
    } else {
        (0..dim).map(|j| kappa.powf(j as f64 / (dim - 1) as f64)).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<f64> = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    NoisyQuadratic::from_parts(diag, centers)
}

impl NoisyQuadratic {
    /// `centers` is row-major, `n` rows of `diag.len()` entries.
    pub fn from_parts(diag: Vec<f64>, centers: Vec<f64>) -> Result<Self> {
        let dim = diag.len();
        require(dim >= 1, "diag", "must be non-empty")?;
        require(diag.iter().all(|&a| a.is_finite() && a > 0.0), "diag", "entries must be positive")?;
        require(!centers.is_empty() && centers.len() % dim == 0, "centers", "length must be a positive multiple of dim")?;
        require(centers.iter().all(|c| c.is_finite()), "centers", "entries must be finite")?;
        let n = centers.len() / dim;
        let mut mean_center = vec![0.0; dim];
        for (j, m) in mean_center.iter_mut().enumerate() {
            *m = (0..n).map(|i| centers[i * dim + j]).sum::<CompensatedSum>().value() / n as f64;
        }
        let spread = (0..dim)
            .map(|j| {
                (0..n).map(|i| (centers[i * dim + j] - mean_center[j]).powi(2)).sum::<CompensatedSum>().value()
                    / n as f64
            })
            .collect();
        Ok(Self { diag, centers, mean_center, spread, n })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn center(&self, i: usize) -> &[f64] {
        let d = self.diag.len();
        &self.centers[i * d..(i + 1) * d]
    }

    /// The minimiser `c_bar`.
    pub fn minimizer(&self) -> &[f64] {
        &self.mean_center
    }
}

impl FiniteSumProblem for NoisyQuadratic {
    fn name(&self) -> &'static str {
        "noisy_quadratic"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn sample_loss(&self, i: usize, x: &[f64]) -> f64 {
        let c = self.center(i);
        0.5 * self.diag.iter().zip(x).zip(c).map(|((a, xi), ci)| a * (xi - ci).powi(2)).sum::<f64>()
    }

    fn accumulate_grad(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let c = self.center(i);
        for j in 0..out.len() {
            out[j] += scale * self.diag[j] * (x[j] - c[j]);
        }
    }

    fn loss(&self, x: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for j in 0..self.diag.len() {
            acc.add(0.5 * self.diag[j] * ((x[j] - self.mean_center[j]).powi(2) + self.spread[j]));
        }
        acc.value()
    }

    fn full_grad(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..out.len() {
            out[j] = self.diag[j] * (x[j] - self.mean_center[j]);
        }
    }

    fn constants(&self) -> ProblemConstants {
        let l = self.diag.iter().copied().fold(0.0, f64::max);
        // grad f_i - grad f = -A (c_i - c_bar), averaged over i
        let sigma2: f64 = self.diag.iter().zip(&self.spread).map(|(a, s)| a * a * s).sum();
        let f_star = 0.5 * self.diag.iter().zip(&self.spread).map(|(a, s)| a * s).sum::<f64>();
        ProblemConstants { smoothness: Some(l), grad_bound: None, sigma2: Some(sigma2), f_star: Some(f_star), nonnegative: true }
    }

    fn write_dataset_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|j| format!("c{j}")).collect();
        header.push("a_diag".into());
        // one row per centre; the spectrum entry for coordinate j sits in row j
        let rows = (0..self.n.max(d)).map(|i| {
            let mut r = if i < self.n { self.center(i).to_vec() } else { vec![f64::NAN; d] };
            r.push(self.diag.get(i).copied().unwrap_or(f64::NAN));
            r
        });
        write_rows(w, &header, rows)
    }
}
