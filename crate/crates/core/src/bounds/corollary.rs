//! Closed-form upper bounds on the schedule sums for the covered scheduler
//! combinations.
//!
//! `T0 = ceil(n / b0)` is the step count of the first epoch. Every covered
//! batch schedule is non-decreasing, so `T_m <= T0` for all epochs, and the
//! bounds below rely on that.

use serde::Serialize;

use super::{BoundError, Result};
use crate::schedules::ScheduleKind;
use crate::schedules::ScheduleSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrCase {
    Constant { alpha_max: f64 },
    DecayingSquared { alpha_max: f64 },
    Decaying { alpha_max: f64 },
    Cosine { alpha_max: f64, alpha_min: f64 },
    Polynomial { alpha_max: f64, alpha_min: f64, power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BsCase {
    Constant { b: u64 },
    Exponential { b0: u64, delta: f64, interval: u64 },
}

impl BsCase {
    fn first_batch(&self) -> u64 {
        match *self {
            BsCase::Constant { b } => b,
            BsCase::Exponential { b0, .. } => b0,
        }
    }

    /// `T0 = ceil(n / b0)`.
    pub fn first_epoch_steps(&self, n: usize) -> f64 {
        (n as u64).div_ceil(self.first_batch()) as f64
    }
}

/// Momentum weights as seen by the `sum gamma_k beta_k` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentumCase {
    /// `gamma_k beta_k = 0` at every step.
    Zero,
    /// `gamma_k beta_k = gamma_max beta_max (lambda zeta)^floor(m/E)`, `lambda zeta < 1`.
    StepDecay { gamma_max: f64, beta_max: f64, lambda: f64, zeta: f64, interval: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary1Case {
    pub lr: LrCase,
    pub bs: BsCase,
    pub momentum: MomentumCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corollary2Lr {
    DecayingSquaredConstantBeta { alpha_max: f64, beta_max: f64 },
    DecayingIncreasingBeta { alpha_max: f64, beta_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary2Case {
    pub lr: Corollary2Lr,
    pub bs: BsCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary1Upper {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary2Upper {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Asymptotic behaviour of a bound as `K` grows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateLabel {
    pub rate: &'static str,
    /// The bound tends to zero.
    pub vanishing: bool,
    /// The bound grows without limit.
    pub diverges: bool,
}

impl RateLabel {
    fn vanishing(rate: &'static str) -> Self {
        Self { rate, vanishing: true, diverges: false }
    }

    fn floor(rate: &'static str) -> Self {
        Self { rate, vanishing: false, diverges: false }
    }

    fn diverging(rate: &'static str) -> Self {
        Self { rate, vanishing: false, diverges: true }
    }
}

fn not_covered(corollary: u8, reason: impl Into<String>) -> BoundError {
    BoundError::NotCovered { corollary, reason: reason.into() }
}

fn bs_case(kind: &ScheduleKind, corollary: u8) -> Result<BsCase> {
    match *kind {
        ScheduleKind::Constant { value } => Ok(BsCase::Constant { b: value as u64 }),
        ScheduleKind::ExponentialBs { b0, delta, interval } if delta > 1.0 => {
            Ok(BsCase::Exponential { b0, delta, interval })
        }
        ScheduleKind::ExponentialBs { .. } => Err(not_covered(corollary, "exponential batch growth needs delta > 1")),
        ref other => Err(not_covered(corollary, format!("batch schedule `{}`", other.name()))),
    }
}

fn lr_case(kind: &ScheduleKind) -> Result<LrCase> {
    match *kind {
        ScheduleKind::Constant { value } => Ok(LrCase::Constant { alpha_max: value }),
        ScheduleKind::DecayingSqLr { alpha_max } => Ok(LrCase::DecayingSquared { alpha_max }),
        ScheduleKind::DecayingLr { alpha_max } => Ok(LrCase::Decaying { alpha_max }),
        ScheduleKind::CosineLr { alpha_max, alpha_min } => Ok(LrCase::Cosine { alpha_max, alpha_min }),
        ScheduleKind::PolynomialLr { alpha_max, alpha_min, power } => {
            Ok(LrCase::Polynomial { alpha_max, alpha_min, power })
        }
        ref other => Err(not_covered(1, format!("learning-rate schedule `{}`", other.name()))),
    }
}

fn momentum_case(beta: &ScheduleKind, gamma: &ScheduleKind) -> Result<MomentumCase> {
    fn parts(kind: &ScheduleKind) -> Option<(f64, f64, Option<u64>)> {
        match *kind {
            ScheduleKind::Constant { value } => Some((value, 1.0, None)),
            ScheduleKind::StepDecay { max, ratio, interval } => Some((max, ratio, Some(interval))),
            _ => None,
        }
    }
    let (beta_max, zeta, eb) =
        parts(beta).ok_or_else(|| not_covered(1, format!("beta schedule `{}`", beta.name())))?;
    let (gamma_max, lambda, eg) =
        parts(gamma).ok_or_else(|| not_covered(1, format!("gamma schedule `{}`", gamma.name())))?;
    if beta_max == 0.0 || gamma_max == 0.0 {
        return Ok(MomentumCase::Zero);
    }
    let interval = match (eb, eg) {
        (Some(a), Some(b)) if a != b => {
            return Err(not_covered(1, "beta and gamma step decays use different intervals"))
        }
        (Some(e), _) | (None, Some(e)) => e,
        (None, None) => return Err(not_covered(1, "constant non-zero gamma*beta never decays")),
    };
    if lambda * zeta >= 1.0 {
        return Err(not_covered(1, format!("lambda*zeta = {} is not below 1", lambda * zeta)));
    }
    Ok(MomentumCase::StepDecay { gamma_max, beta_max, lambda, zeta, interval })
}

/// Reads the covered combination off a schedule set.
pub fn corollary1_case(set: &ScheduleSet) -> Result<Corollary1Case> {
    let lr = lr_case(&set.lr)?;
    if let LrCase::Decaying { .. } = lr {
        return Err(not_covered(1, "learning-rate schedule `decaying_lr`"));
    }
    Ok(Corollary1Case { lr, bs: bs_case(&set.batch, 1)?, momentum: momentum_case(&set.beta, &set.gamma)? })
}

pub fn corollary2_case(set: &ScheduleSet) -> Result<Corollary2Case> {
    let lr = match (&set.lr, &set.beta) {
        (&ScheduleKind::DecayingSqLr { alpha_max }, &ScheduleKind::Constant { value }) => {
            Corollary2Lr::DecayingSquaredConstantBeta { alpha_max, beta_max: value }
        }
        (&ScheduleKind::DecayingLr { alpha_max }, &ScheduleKind::IncreasingBeta { beta_min }) => {
            Corollary2Lr::DecayingIncreasingBeta { alpha_max, beta_min }
        }
        (lr, beta) => {
            return Err(not_covered(2, format!("learning-rate `{}` with beta `{}`", lr.name(), beta.name())))
        }
    };
    Ok(Corollary2Case { lr, bs: bs_case(&set.batch, 2)? })
}

fn check_k(k: usize) -> Result<f64> {
    if k == 0 {
        Err(BoundError::EmptyPlan)
    } else {
        Ok(k as f64)
    }
}

/// Upper bounds on `A_K`, `B_K`, `C_K` after `K` steps on `n` samples.
pub fn corollary1_upper(case: &Corollary1Case, n: usize, k: usize) -> Result<Corollary1Upper> {
    let kf = check_k(k)?;
    let t0 = case.bs.first_epoch_steps(n);
    let s = (kf + 1.0).sqrt() - 1.0;
    let lg = (kf + 1.0).ln();

    // Sum of alpha_k is bounded below by `lr_mass`, giving A <= 1 / lr_mass.
    let (a, lr_mass) = match case.lr {
        LrCase::Constant { alpha_max } => (1.0 / (alpha_max * kf), alpha_max * kf),
        LrCase::DecayingSquared { alpha_max } => (1.0 / (2.0 * alpha_max * s), 2.0 * alpha_max * s),
        LrCase::Cosine { alpha_max, alpha_min } => {
            let mass = (alpha_min + alpha_max) * kf / 2.0;
            (1.0 / mass, mass)
        }
        LrCase::Polynomial { alpha_max, alpha_min, power: p } => {
            let mass = (alpha_max + p * alpha_min) * kf / (p + 1.0);
            (1.0 / mass, mass)
        }
        LrCase::Decaying { .. } => return Err(not_covered(1, "learning-rate schedule `decaying_lr`")),
    };

    let b = match (case.bs, case.lr) {
        (BsCase::Constant { b }, lr) => {
            let b = b as f64;
            match lr {
                LrCase::Constant { alpha_max } => alpha_max / b,
                LrCase::DecayingSquared { alpha_max } => alpha_max * t0 * (1.0 + lg) / (2.0 * b * s),
                LrCase::Cosine { alpha_max, alpha_min } => {
                    (alpha_max + alpha_min) / b
                        + t0 * (alpha_max - alpha_min).powi(2) / (2.0 * b * (alpha_max + alpha_min) * kf)
                }
                LrCase::Polynomial { alpha_max, alpha_min, power: p } => {
                    ((p + 1.0) * alpha_max * alpha_max + 2.0 * p * alpha_max * alpha_min
                        + 2.0 * p * p * alpha_min * alpha_min)
                        / (b * (2.0 * p + 1.0) * (alpha_max + p * alpha_min))
                        + (p + 1.0) * (alpha_max * alpha_max - alpha_min * alpha_min) * t0
                            / ((alpha_max + p * alpha_min) * kf)
                }
                LrCase::Decaying { .. } => unreachable!(),
            }
        }
        (BsCase::Exponential { b0, delta, interval }, lr) => {
            // sum_k alpha_k^2 / b_k <= alpha_max^2 T0 E delta / (b0 (delta - 1))
            let alpha_max = lr_alpha_max(&lr);
            let noise = alpha_max * alpha_max * t0 * interval as f64 * delta / (b0 as f64 * (delta - 1.0));
            noise / lr_mass
        }
    };

    let c = match case.momentum {
        MomentumCase::Zero => 0.0,
        MomentumCase::StepDecay { gamma_max, beta_max, lambda, zeta, interval } => {
            gamma_max * beta_max * t0 * interval as f64 / (1.0 - lambda * zeta) / lr_mass
        }
    };
    Ok(Corollary1Upper { a, b, c })
}

fn lr_alpha_max(lr: &LrCase) -> f64 {
    match *lr {
        LrCase::Constant { alpha_max }
        | LrCase::DecayingSquared { alpha_max }
        | LrCase::Decaying { alpha_max }
        | LrCase::Cosine { alpha_max, .. }
        | LrCase::Polynomial { alpha_max, .. } => alpha_max,
    }
}

/// Upper bounds on `A_K`, `B'_K`, `C'_K`, `D'_K` after `K` steps on `n` samples.
pub fn corollary2_upper(case: &Corollary2Case, n: usize, k: usize) -> Result<Corollary2Upper> {
    let kf = check_k(k)?;
    let t0 = case.bs.first_epoch_steps(n);
    let s = (kf + 1.0).sqrt() - 1.0;
    let lg = (kf + 1.0).ln();
    let geometric = |b0: u64, delta: f64, interval: u64| t0 * interval as f64 * delta / (b0 as f64 * (delta - 1.0));
    Ok(match case.lr {
        Corollary2Lr::DecayingSquaredConstantBeta { alpha_max, beta_max } => {
            let mass = 2.0 * alpha_max * s;
            let b = match case.bs {
                BsCase::Constant { b } => kf * (1.0 - beta_max) / (b as f64 * mass),
                BsCase::Exponential { b0, delta, interval } => (1.0 - beta_max) * geometric(b0, delta, interval) / mass,
            };
            let c = alpha_max * t0 * (1.0 + lg) / (2.0 * s);
            Corollary2Upper { a: 1.0 / mass, b, c, d: c / (1.0 - beta_max) }
        }
        Corollary2Lr::DecayingIncreasingBeta { alpha_max, beta_min } => {
            let mass = alpha_max * lg;
            let b = match case.bs {
                BsCase::Constant { b } => {
                    t0 * (1.0 + 4.0 * (1.0 - beta_min) * (kf + 1.0).powf(0.25)) / (b as f64 * mass)
                }
                // 1 - beta_k <= 1 - beta_min along an increasing beta
                BsCase::Exponential { b0, delta, interval } => (1.0 - beta_min) * geometric(b0, delta, interval) / mass,
            };
            let c = 2.0 * alpha_max * t0 / lg;
            Corollary2Upper { a: 1.0 / mass, b, c, d: c / (1.0 - beta_min) }
        }
    })
}

pub fn corollary1_rate(case: &Corollary1Case) -> RateLabel {
    match (case.bs, case.lr) {
        (BsCase::Constant { .. }, LrCase::DecayingSquared { .. }) => RateLabel::vanishing("O(log K / sqrt(K))"),
        (BsCase::Constant { .. }, _) => RateLabel::floor("O(1/K) + O(1) noise floor"),
        (BsCase::Exponential { .. }, LrCase::DecayingSquared { .. }) => RateLabel::vanishing("O(1/sqrt(K))"),
        (BsCase::Exponential { .. }, _) => RateLabel::vanishing("O(1/K)"),
    }
}

pub fn corollary2_rate(case: &Corollary2Case) -> RateLabel {
    match (case.lr, case.bs) {
        (Corollary2Lr::DecayingSquaredConstantBeta { .. }, BsCase::Constant { .. }) => {
            RateLabel::diverging("O(sqrt(K))")
        }
        (Corollary2Lr::DecayingSquaredConstantBeta { .. }, BsCase::Exponential { .. }) => {
            RateLabel::vanishing("O(log K / sqrt(K))")
        }
        (Corollary2Lr::DecayingIncreasingBeta { .. }, BsCase::Constant { .. }) => {
            RateLabel::diverging("O(K^(1/4) / log K)")
        }
        (Corollary2Lr::DecayingIncreasingBeta { .. }, BsCase::Exponential { .. }) => {
            RateLabel::vanishing("O(1/log K)")
        }
    }
}
