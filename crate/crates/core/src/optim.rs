//! Mini-batch quasi-hyperbolic momentum and its specialisations.
//!
//! The update consumes a stochastic gradient vector and never a problem
//! handle, so the same gradient stream can drive several optimizers.
//!
//! ```text
//! d_k     = (1 - beta_k) g_k + beta_k d_{k-1}
//! m_k     = (1 - gamma_k) g_k + gamma_k d_k
//! x_{k+1} = x_k - alpha_k m_k
//! ```
//!
//! `gamma = 0` is SGD and `gamma = 1` is normalized heavy ball (NSHB). The
//! two-stage form above is kept literally so that both reductions are exact
//! in floating point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("gradient has dimension {got}, parameters have dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite gradient component {value} at index {index} (step {step})")]
    NonFiniteGradient { index: usize, value: f64, step: u64 },
    #[error("invalid hyperparameter `{name}` = {value}: {reason}")]
    InvalidHyper { name: &'static str, value: f64, reason: &'static str },
}

pub type Result<T> = std::result::Result<T, OptimError>;

/// Hyperparameters of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepHyper {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub batch: usize,
}

impl StepHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(OptimError::InvalidHyper { name: "alpha", value: self.alpha, reason: "must be finite and >= 0" });
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(OptimError::InvalidHyper { name: "beta", value: self.beta, reason: "must lie in [0, 1)" });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(OptimError::InvalidHyper { name: "gamma", value: self.gamma, reason: "must lie in [0, 1]" });
        }
        Ok(())
    }
}

/// Norms of the two momentum vectors produced by a QHM step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub m_norm: f64,
    pub d_norm: f64,
}

/// QHM iterate: parameters, momentum buffer `d_{k-1}` and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct QhmState {
    pub x: Vec<f64>,
    pub d_prev: Vec<f64>,
    pub k: u64,
}

/// Iterate of the heavy-ball methods, whose buffer is `m_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub x: Vec<f64>,
    pub m_prev: Vec<f64>,
    pub k: u64,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn check_gradient(x: &[f64], g: &[f64], step: u64) -> Result<()> {
    if g.len() != x.len() {
        return Err(OptimError::DimensionMismatch { expected: x.len(), got: g.len() });
    }
    if let Some((index, &value)) = g.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(OptimError::NonFiniteGradient { index, value, step });
    }
    Ok(())
}

impl QhmState {
    /// Starts at `x0` with `d_{-1} = 0`.
    pub fn new(x0: Vec<f64>) -> Self {
        let dim = x0.len();
        Self { x: x0, d_prev: vec![0.0; dim], k: 0 }
    }

    /// In-place QHM step.
    pub fn step(&mut self, g: &[f64], h: &StepHyper) -> Result<StepDiagnostics> {
        check_gradient(&self.x, g, self.k)?;
        h.validate()?;
        let (alpha, beta, gamma) = (h.alpha, h.beta, h.gamma);
        let mut m_sq = 0.0;
        let mut d_sq = 0.0;
        for ((x, d), &gi) in self.x.iter_mut().zip(self.d_prev.iter_mut()).zip(g) {
            let dk = (1.0 - beta) * gi + beta * *d;
            let mk = (1.0 - gamma) * gi + gamma * dk;
            *x -= alpha * mk;
            *d = dk;
            m_sq += mk * mk;
            d_sq += dk * dk;
        }
        self.k += 1;
        Ok(StepDiagnostics { m_norm: m_sq.sqrt(), d_norm: d_sq.sqrt() })
    }
}

/// Pure QHM step: returns the next state and the step diagnostics.
pub fn qhm_step(state: &QhmState, g: &[f64], h: &StepHyper) -> Result<(QhmState, StepDiagnostics)> {
    let mut next = state.clone();
    let diag = next.step(g, h)?;
    Ok((next, diag))
}

/// `(1 - gamma beta) g + gamma beta d_prev`, the single-stage form of `m_k`.
pub fn combined_momentum(g: &[f64], d_prev: &[f64], beta: f64, gamma: f64) -> Vec<f64> {
    let gb = gamma * beta;
    g.iter().zip(d_prev).map(|(&gi, &di)| (1.0 - gb) * gi + gb * di).collect()
}

/// Plain SGD step `x - alpha g`.
pub fn sgd_step(x: &mut [f64], g: &[f64], alpha: f64) -> Result<()> {
    check_gradient(x, g, 0)?;
    for (xi, &gi) in x.iter_mut().zip(g) {
        *xi -= alpha * gi;
    }
    Ok(())
}

impl MomentumState {
    pub fn new(x0: Vec<f64>) -> Self {
        let dim = x0.len();
        Self { x: x0, m_prev: vec![0.0; dim], k: 0 }
    }

    /// NSHB: `m = (1 - beta) g + beta m_prev`, `x -= alpha m`.
    pub fn nshb_step(&mut self, g: &[f64], alpha: f64, beta: f64) -> Result<f64> {
        check_gradient(&self.x, g, self.k)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(OptimError::InvalidHyper { name: "beta", value: beta, reason: "must lie in [0, 1]" });
        }
        let mut m_sq = 0.0;
        for ((x, m), &gi) in self.x.iter_mut().zip(self.m_prev.iter_mut()).zip(g) {
            let mk = (1.0 - beta) * gi + beta * *m;
            *x -= alpha * mk;
            *m = mk;
            m_sq += mk * mk;
        }
        self.k += 1;
        Ok(m_sq.sqrt())
    }

    /// SHB: `m = g + beta m_prev`, `x -= alpha m`, with `beta >= 0`.
    pub fn shb_step(&mut self, g: &[f64], alpha: f64, beta: f64) -> Result<f64> {
        check_gradient(&self.x, g, self.k)?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(OptimError::InvalidHyper { name: "beta", value: beta, reason: "must be finite and >= 0" });
        }
        let mut m_sq = 0.0;
        for ((x, m), &gi) in self.x.iter_mut().zip(self.m_prev.iter_mut()).zip(g) {
            let mk = gi + beta * *m;
            *x -= alpha * mk;
            *m = mk;
            m_sq += mk * mk;
        }
        self.k += 1;
        Ok(m_sq.sqrt())
    }
}

pub fn nshb_step(state: &MomentumState, g: &[f64], alpha: f64, beta: f64) -> Result<MomentumState> {
    let mut next = state.clone();
    next.nshb_step(g, alpha, beta)?;
    Ok(next)
}

pub fn shb_step(state: &MomentumState, g: &[f64], alpha: f64, beta: f64) -> Result<MomentumState> {
    let mut next = state.clone();
    next.shb_step(g, alpha, beta)?;
    Ok(next)
}

/// SHB hyperparameters whose iterates coincide with NSHB at constant
/// `(alpha, beta)`: `(alpha (1 - beta), beta)`.
///
/// Eliminating the buffers, both methods are heavy-ball recurrences on `x`:
/// `x+ = x - a g + b (x - x-)`. SHB has `a = alpha_hat, b = beta_hat`, NSHB has
/// `a = alpha (1 - beta), b = beta`, so the momentum factors must be equal.
pub fn shb_from_nshb(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::InvalidHyper { name: "beta", value: beta, reason: "NSHB beta must lie in [0, 1)" });
    }
    Ok((alpha * (1.0 - beta), beta))
}

/// Inverse of [`shb_from_nshb`]: `(alpha / (1 - beta), beta)`. SHB with
/// `beta >= 1` has no constant NSHB counterpart.
pub fn nshb_from_shb(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::InvalidHyper { name: "beta", value: beta, reason: "SHB beta must lie in [0, 1)" });
    }
    Ok((alpha / (1.0 - beta), beta))
}

/// Per-step SHB schedule reproducing an NSHB schedule `(alpha_k, beta_k)`:
/// `alpha_hat_k = alpha_k (1 - beta_k)`,
/// `beta_hat_k = beta_k (1 - beta_{k-1}) / (1 - beta_k)` (`beta_hat_0 = beta_0`,
/// which multiplies the zero initial buffer).
pub fn shb_schedule_from_nshb(steps: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(steps.len());
    for (k, &(alpha, beta)) in steps.iter().enumerate() {
        let (alpha_hat, _) = shb_from_nshb(alpha, beta)?;
        let beta_hat = match k {
            0 => beta,
            _ => beta * (1.0 - steps[k - 1].1) / (1.0 - beta),
        };
        out.push((alpha_hat, beta_hat));
    }
    Ok(out)
}

/// The coefficient-matching rule `(alpha (1 - beta), beta / (1 - beta))`.
///
/// It equates the weights on `m_{k-1}` as if both methods shared one buffer,
/// but the SHB buffer is `1 / (1 - beta)` times the NSHB one, so these
/// hyperparameters do not reproduce NSHB iterates once `beta > 0`. Kept for
/// comparison with [`shb_from_nshb`].
pub fn shb_from_nshb_coefficient_rule(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::InvalidHyper { name: "beta", value: beta, reason: "NSHB beta must lie in [0, 1)" });
    }
    Ok((alpha * (1.0 - beta), beta / (1.0 - beta)))
}

/// Inverse of [`shb_from_nshb_coefficient_rule`]:
/// `(alpha (1 + beta), beta / (1 + beta))`.
pub fn nshb_from_shb_coefficient_rule(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(OptimError::InvalidHyper { name: "beta", value: beta, reason: "SHB beta must be finite and >= 0" });
    }
    Ok((alpha * (1.0 + beta), beta / (1.0 + beta)))
}

/// Optimizer family selectable by the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Qhm,
    Nshb,
    Shb,
    Sgd,
}

/// Optimizer state for any [`OptimizerKind`], driven by a per-step
/// [`StepHyper`].
///
/// NSHB reads `(alpha, beta)` and SHB reads `(alpha, beta)` as its own
/// `(alpha_hat, beta_hat)`; SGD reads only `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Qhm(QhmState),
    Nshb(MomentumState),
    Shb(MomentumState),
    Sgd { x: Vec<f64>, k: u64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, x0: Vec<f64>) -> Self {
        match kind {
            OptimizerKind::Qhm => Optimizer::Qhm(QhmState::new(x0)),
            OptimizerKind::Nshb => Optimizer::Nshb(MomentumState::new(x0)),
            OptimizerKind::Shb => Optimizer::Shb(MomentumState::new(x0)),
            OptimizerKind::Sgd => Optimizer::Sgd { x: x0, k: 0 },
        }
    }

    pub fn x(&self) -> &[f64] {
        match self {
            Optimizer::Qhm(s) => &s.x,
            Optimizer::Nshb(s) | Optimizer::Shb(s) => &s.x,
            Optimizer::Sgd { x, .. } => x,
        }
    }

    /// One step; returns the norm of the search direction `m_k`.
    pub fn step(&mut self, g: &[f64], h: &StepHyper) -> Result<f64> {
        match self {
            Optimizer::Qhm(s) => s.step(g, h).map(|d| d.m_norm),
            Optimizer::Nshb(s) => s.nshb_step(g, h.alpha, h.beta),
            Optimizer::Shb(s) => s.shb_step(g, h.alpha, h.beta),
            Optimizer::Sgd { x, k } => {
                check_gradient(x, g, *k)?;
                sgd_step(x, g, h.alpha)?;
                *k += 1;
                Ok(norm(g))
            }
        }
    }
}
