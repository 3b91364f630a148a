//! Epoch-indexed hyperparameter schedules.
//!
//! Every schedule is evaluated in closed form from the epoch index `m` and the
//! total number of epochs `M`; nothing is accumulated step by step. A
//! [`ScheduleSet`] bundles one schedule per [`Target`] and is expanded into a
//! per-step [`StepPlan`] by [`expand`].

mod asymptotic;
mod plan;

pub use asymptotic::{validate_asymptotic, AsymptoticReport, Verdict};
pub use plan::{expand, expand_covering, first_thm2_violation, validate_thm2_condition, StepPlan};

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponent of the increasing-beta schedule.
pub const INCREASING_BETA_EXPONENT: f64 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("epoch {m} out of range for {total} epochs")]
    EpochOutOfRange { m: usize, total: usize },
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("schedule kind `{kind}` cannot drive the {target} target")]
    KindTargetMismatch { kind: &'static str, target: Target },
    #[error("{target} schedule leaves its range at epoch {m}: value {value}")]
    ValueOutOfRange { target: Target, m: usize, value: f64 },
    #[error("dataset size must be at least 1")]
    EmptyDataset,
    #[error("number of epochs must be at least 1")]
    NoEpochs,
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

/// Which hyperparameter a schedule drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Batch,
    Lr,
    Beta,
    Gamma,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Batch => "batch",
            Target::Lr => "lr",
            Target::Beta => "beta",
            Target::Gamma => "gamma",
        })
    }
}

/// The closed-form schedules.
///
/// JSON form is internally tagged, e.g.
/// `{"kind": "exponential_bs", "b0": 8, "delta": 2.0, "interval": 30}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    /// Same value every epoch. Valid for every target.
    Constant { value: f64 },
    /// `b0 * delta^floor(m / interval)`, rounded up to an integer.
    ExponentialBs { b0: u64, delta: f64, interval: u64 },
    /// `alpha_max / sqrt(m + 1)`.
    DecayingSqLr { alpha_max: f64 },
    /// `alpha_max / (m + 1)`.
    DecayingLr { alpha_max: f64 },
    /// `alpha_min + (alpha_max - alpha_min) / 2 * (1 + cos(m pi / (M - 1)))`,
    /// and `alpha_max` when `M = 1`.
    CosineLr { alpha_max: f64, alpha_min: f64 },
    /// `alpha_min + (alpha_max - alpha_min) * (1 - m / M)^power`.
    PolynomialLr { alpha_max: f64, alpha_min: f64, power: f64 },
    /// `max * ratio^floor(m / interval)` for beta or gamma.
    StepDecay { max: f64, ratio: f64, interval: u64 },
    /// `1 - (1 - beta_min) / (m + 1)^(3/4)`.
    IncreasingBeta { beta_min: f64 },
    /// A cosine or polynomial head over `head_epochs` epochs followed by
    /// `alpha_max / sqrt(m + 1)` with the head's `alpha_max`. Only useful for
    /// reasoning about the infinite-horizon sequence.
    Hybrid { head: Box<ScheduleKind>, head_epochs: u64 },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScheduleError {
    ScheduleError::InvalidParameter { field, reason: reason.into() }
}

fn check_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl ScheduleKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleKind::Constant { .. } => "constant",
            ScheduleKind::ExponentialBs { .. } => "exponential_bs",
            ScheduleKind::DecayingSqLr { .. } => "decaying_sq_lr",
            ScheduleKind::DecayingLr { .. } => "decaying_lr",
            ScheduleKind::CosineLr { .. } => "cosine_lr",
            ScheduleKind::PolynomialLr { .. } => "polynomial_lr",
            ScheduleKind::StepDecay { .. } => "step_decay",
            ScheduleKind::IncreasingBeta { .. } => "increasing_beta",
            ScheduleKind::Hybrid { .. } => "hybrid",
        }
    }

    fn supports(&self, target: Target) -> bool {
        use ScheduleKind::*;
        match self {
            Constant { .. } => true,
            ExponentialBs { .. } => target == Target::Batch,
            DecayingSqLr { .. } | DecayingLr { .. } | CosineLr { .. } | PolynomialLr { .. } => {
                target == Target::Lr
            }
            Hybrid { .. } => target == Target::Lr,
            StepDecay { .. } => matches!(target, Target::Beta | Target::Gamma),
            IncreasingBeta { .. } => target == Target::Beta,
        }
    }

    /// Checks the parameter constraints of this kind for `target`.
    pub fn validate(&self, target: Target) -> Result<()> {
        use ScheduleKind::*;
        if !self.supports(target) {
            return Err(ScheduleError::KindTargetMismatch { kind: self.name(), target });
        }
        match *self {
            Constant { value } => {
                check_finite("value", value)?;
                check_in_range(target, value).map_err(|reason| invalid("value", reason))?;
            }
            ExponentialBs { b0, delta, interval } => {
                if b0 < 1 {
                    return Err(invalid("b0", "must be at least 1"));
                }
                check_finite("delta", delta)?;
                if delta <= 1.0 {
                    return Err(invalid("delta", format!("must exceed 1, got {delta}")));
                }
                if interval < 1 {
                    return Err(invalid("interval", "must be at least 1"));
                }
            }
            DecayingSqLr { alpha_max } | DecayingLr { alpha_max } => {
                check_finite("alpha_max", alpha_max)?;
                if alpha_max <= 0.0 {
                    return Err(invalid("alpha_max", "must be positive"));
                }
            }
            CosineLr { alpha_max, alpha_min } => check_lr_bounds(alpha_max, alpha_min)?,
            PolynomialLr { alpha_max, alpha_min, power } => {
                check_lr_bounds(alpha_max, alpha_min)?;
                check_finite("power", power)?;
                if power <= 0.0 {
                    return Err(invalid("power", "must be positive"));
                }
            }
            StepDecay { max, ratio, interval } => {
                check_finite("max", max)?;
                check_in_range(target, max).map_err(|reason| invalid("max", reason))?;
                check_finite("ratio", ratio)?;
                if ratio <= 0.0 {
                    return Err(invalid("ratio", "must be positive"));
                }
                if interval < 1 {
                    return Err(invalid("interval", "must be at least 1"));
                }
            }
            IncreasingBeta { beta_min } => {
                check_finite("beta_min", beta_min)?;
                if !(0.0..1.0).contains(&beta_min) {
                    return Err(invalid("beta_min", "must lie in [0, 1)"));
                }
            }
            Hybrid { ref head, head_epochs } => {
                if !matches!(**head, CosineLr { .. } | PolynomialLr { .. }) {
                    return Err(invalid("head", "must be cosine_lr or polynomial_lr"));
                }
                if head_epochs < 1 {
                    return Err(invalid("head_epochs", "must be at least 1"));
                }
                head.validate(target)?;
            }
        }
        Ok(())
    }

    /// Raw closed-form value at epoch `m` of `total` epochs, without range
    /// checks. Batch values are integral.
    fn raw_value(&self, m: usize, total: usize) -> f64 {
        use ScheduleKind::*;
        let mf = m as f64;
        match *self {
            Constant { value } => value,
            ExponentialBs { b0, delta, interval } => {
                let level = (m as u64 / interval).min(i32::MAX as u64) as i32;
                let raw = b0 as f64 * delta.powi(level);
                // integral powers are exact; the tolerance only absorbs
                // rounding for fractional growth factors
                (raw * (1.0 - 1e-12)).ceil().max(b0 as f64)
            }
            DecayingSqLr { alpha_max } => alpha_max / (mf + 1.0).sqrt(),
            DecayingLr { alpha_max } => alpha_max / (mf + 1.0),
            CosineLr { alpha_max, alpha_min } => {
                if total <= 1 {
                    alpha_max
                } else {
                    let phase = mf * PI / (total as f64 - 1.0);
                    alpha_min + 0.5 * (alpha_max - alpha_min) * (1.0 + phase.cos())
                }
            }
            PolynomialLr { alpha_max, alpha_min, power } => {
                let frac = 1.0 - mf / total as f64;
                alpha_min + (alpha_max - alpha_min) * frac.max(0.0).powf(power)
            }
            StepDecay { max, ratio, interval } => {
                let level = (m as u64 / interval).min(i32::MAX as u64) as i32;
                max * ratio.powi(level)
            }
            IncreasingBeta { beta_min } => {
                1.0 - (1.0 - beta_min) / (mf + 1.0).powf(INCREASING_BETA_EXPONENT)
            }
            Hybrid { ref head, head_epochs } => {
                let head_epochs = head_epochs as usize;
                if m < head_epochs {
                    head.raw_value(m, head_epochs)
                } else {
                    head.alpha_max().unwrap_or(0.0) / (mf + 1.0).sqrt()
                }
            }
        }
    }

    /// `alpha_max` for learning-rate kinds.
    pub fn alpha_max(&self) -> Option<f64> {
        use ScheduleKind::*;
        match *self {
            DecayingSqLr { alpha_max }
            | DecayingLr { alpha_max }
            | CosineLr { alpha_max, .. }
            | PolynomialLr { alpha_max, .. } => Some(alpha_max),
            Hybrid { ref head, .. } => head.alpha_max(),
            _ => None,
        }
    }
}

fn check_lr_bounds(alpha_max: f64, alpha_min: f64) -> Result<()> {
    check_finite("alpha_max", alpha_max)?;
    check_finite("alpha_min", alpha_min)?;
    if alpha_max <= 0.0 {
        return Err(invalid("alpha_max", "must be positive"));
    }
    if !(0.0..=alpha_max).contains(&alpha_min) {
        return Err(invalid("alpha_min", "must satisfy 0 <= alpha_min <= alpha_max"));
    }
    Ok(())
}

fn check_in_range(target: Target, v: f64) -> std::result::Result<(), String> {
    let ok = match target {
        Target::Batch => v >= 1.0 && v.fract() == 0.0,
        Target::Lr => v > 0.0,
        Target::Beta => (0.0..1.0).contains(&v),
        Target::Gamma => (0.0..=1.0).contains(&v),
    };
    if ok {
        Ok(())
    } else {
        let range = match target {
            Target::Batch => "a positive integer",
            Target::Lr => "positive",
            Target::Beta => "in [0, 1)",
            Target::Gamma => "in [0, 1]",
        };
        Err(format!("{target} value {v} must be {range}"))
    }
}

/// One validated schedule bound to its target.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub target: Target,
    pub kind: ScheduleKind,
}

impl ScheduleSpec {
    pub fn new(target: Target, kind: ScheduleKind) -> Result<Self> {
        kind.validate(target)?;
        Ok(Self { target, kind })
    }

    /// Value at epoch `m` of `total` epochs.
    ///
    /// Learning rates may reach `alpha_min` (possibly 0) at the end of a
    /// cosine or polynomial sweep; every other value is checked against the
    /// target's range.
    pub fn eval_epoch(&self, m: usize, total: usize) -> Result<f64> {
        if total == 0 {
            return Err(ScheduleError::NoEpochs);
        }
        if m >= total {
            return Err(ScheduleError::EpochOutOfRange { m, total });
        }
        self.kind.validate(self.target)?;
        let v = self.kind.raw_value(m, total);
        let in_range = match self.target {
            Target::Lr => v.is_finite() && v >= 0.0,
            t => v.is_finite() && check_in_range(t, v).is_ok(),
        };
        if in_range {
            Ok(v)
        } else {
            Err(ScheduleError::ValueOutOfRange { target: self.target, m, value: v })
        }
    }

    /// Batch size at epoch `m`, before clamping to the dataset size.
    pub fn batch_at(&self, m: usize, total: usize) -> Result<u64> {
        if self.target != Target::Batch {
            return Err(ScheduleError::KindTargetMismatch { kind: self.kind.name(), target: self.target });
        }
        if total == 0 {
            return Err(ScheduleError::NoEpochs);
        }
        if m >= total {
            return Err(ScheduleError::EpochOutOfRange { m, total });
        }
        self.kind.validate(self.target)?;
        // geometric growth overflows long before the epoch index does; saturate
        let v = self.kind.raw_value(m, total);
        if v == f64::INFINITY || v >= u64::MAX as f64 {
            return Ok(u64::MAX);
        }
        check_in_range(Target::Batch, v)
            .map_err(|_| ScheduleError::ValueOutOfRange { target: self.target, m, value: v })?;
        Ok(v as u64)
    }
}

/// One schedule per hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSet {
    pub batch: ScheduleKind,
    pub lr: ScheduleKind,
    pub beta: ScheduleKind,
    pub gamma: ScheduleKind,
}

impl ScheduleSet {
    pub fn validate(&self) -> Result<()> {
        for (target, kind) in self.iter() {
            kind.validate(target)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Target, &ScheduleKind)> {
        [
            (Target::Batch, &self.batch),
            (Target::Lr, &self.lr),
            (Target::Beta, &self.beta),
            (Target::Gamma, &self.gamma),
        ]
        .into_iter()
    }

    pub fn spec(&self, target: Target) -> Result<ScheduleSpec> {
        let kind = match target {
            Target::Batch => &self.batch,
            Target::Lr => &self.lr,
            Target::Beta => &self.beta,
            Target::Gamma => &self.gamma,
        };
        ScheduleSpec::new(target, kind.clone())
    }

    /// Product of the two step-decay ratios when both momentum weights use
    /// step decay (or a constant, counted as ratio 1).
    pub fn momentum_decay_product(&self) -> Option<f64> {
        fn ratio(kind: &ScheduleKind) -> Option<f64> {
            match *kind {
                ScheduleKind::StepDecay { ratio, .. } => Some(ratio),
                ScheduleKind::Constant { .. } => Some(1.0),
                _ => None,
            }
        }
        Some(ratio(&self.beta)? * ratio(&self.gamma)?)
    }

    /// Non-fatal findings about the set.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let (ScheduleKind::StepDecay { ratio: zeta, .. }, ScheduleKind::StepDecay { ratio: lambda, .. }) =
            (&self.beta, &self.gamma)
        {
            if zeta * lambda >= 1.0 {
                out.push(format!(
                    "step-decay ratios lambda*zeta = {} >= 1: the closed-form bound on the momentum term needs lambda*zeta < 1",
                    zeta * lambda
                ));
            }
        }
        for (target, kind) in [(Target::Beta, &self.beta), (Target::Gamma, &self.gamma)] {
            if let ScheduleKind::StepDecay { ratio, .. } = kind {
                if *ratio > 1.0 {
                    out.push(format!(
                        "{target} step-decay ratio {ratio} > 1 grows the weight and eventually leaves its range"
                    ));
                }
            }
        }
        out
    }
}
