//! Table-driven classification of schedule families as infinite sequences.
//!
//! Each learning-rate kind decays like `(m + 1)^-a`, each batch kind is either
//! constant or geometric, and each momentum weight is zero, geometric or
//! bounded away from zero. Series convergence then reduces to comparing
//! exponents; nothing is summed numerically.

use serde::Serialize;

use super::{ScheduleKind, ScheduleSet, INCREASING_BETA_EXPONENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undetermined,
}

impl Verdict {
    fn all(parts: &[Verdict]) -> Verdict {
        if parts.contains(&Verdict::Fails) {
            Verdict::Fails
        } else if parts.contains(&Verdict::Undetermined) {
            Verdict::Undetermined
        } else {
            Verdict::Holds
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    /// `sum alpha = inf`, `sum gamma beta < inf`, `sum alpha^2 / b < inf`.
    pub thm1: Verdict,
    /// `sum alpha = inf`, `sum alpha^2 / (1 - beta) < inf`, `sum (1 - beta) / b < inf`.
    pub thm2: Verdict,
    pub reasons: Vec<String>,
}

impl AsymptoticReport {
    pub fn thm1_ok(&self) -> bool {
        self.thm1 == Verdict::Holds
    }

    pub fn thm2_ok(&self) -> bool {
        self.thm2 == Verdict::Holds
    }
}

/// Polynomial decay exponent `a` of the learning rate, `alpha_m ~ (m+1)^-a`.
fn lr_decay_exponent(kind: &ScheduleKind) -> Option<f64> {
    match kind {
        ScheduleKind::Constant { .. } => Some(0.0),
        ScheduleKind::DecayingSqLr { .. } => Some(0.5),
        ScheduleKind::DecayingLr { .. } => Some(1.0),
        ScheduleKind::Hybrid { .. } => Some(0.5),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BatchGrowth {
    Constant,
    Geometric,
}

fn batch_growth(kind: &ScheduleKind) -> Option<BatchGrowth> {
    match kind {
        ScheduleKind::Constant { .. } => Some(BatchGrowth::Constant),
        ScheduleKind::ExponentialBs { .. } => Some(BatchGrowth::Geometric),
        _ => None,
    }
}

/// Asymptotic class of a momentum weight.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Weight {
    Zero,
    /// Per-epoch contraction rate.
    Geometric(f64),
    /// Bounded and bounded away from zero along a subsequence.
    Persistent,
}

fn weight_class(kind: &ScheduleKind) -> Option<Weight> {
    match *kind {
        ScheduleKind::Constant { value } if value == 0.0 => Some(Weight::Zero),
        ScheduleKind::Constant { .. } => Some(Weight::Persistent),
        ScheduleKind::StepDecay { max, .. } if max == 0.0 => Some(Weight::Zero),
        ScheduleKind::StepDecay { ratio, interval, .. } => {
            Some(Weight::Geometric(ratio.powf(1.0 / interval as f64)))
        }
        ScheduleKind::IncreasingBeta { .. } => Some(Weight::Persistent),
        _ => None,
    }
}

/// Decay exponent `c` of `1 - beta_m ~ (m+1)^-c`, when `beta` stays below 1.
fn one_minus_beta_exponent(kind: &ScheduleKind) -> Option<f64> {
    match *kind {
        ScheduleKind::Constant { .. } => Some(0.0),
        // beta -> 0 so 1 - beta -> 1
        ScheduleKind::StepDecay { ratio, .. } if ratio <= 1.0 => Some(0.0),
        ScheduleKind::IncreasingBeta { .. } => Some(INCREASING_BETA_EXPONENT),
        _ => None,
    }
}

/// Classifies `set` against the asymptotic-convergence conditions of the two
/// convergence theorems. Combinations outside the table are `Undetermined`.
pub fn validate_asymptotic(set: &ScheduleSet) -> AsymptoticReport {
    let mut reasons = Vec::new();
    if let Err(e) = set.validate() {
        reasons.push(format!("invalid schedule set: {e}"));
        return AsymptoticReport { thm1: Verdict::Undetermined, thm2: Verdict::Undetermined, reasons };
    }

    let lr = lr_decay_exponent(&set.lr);
    let batch = batch_growth(&set.batch);

    // sum alpha_k = inf needs a <= 1; T_m >= 1 so epoch sums bound step sums below
    let lr_sum = match lr {
        Some(a) if a <= 1.0 => Verdict::Holds,
        Some(_) => Verdict::Fails,
        None => {
            reasons.push(format!(
                "{} is defined only for epochs below the horizon M; wrap it in a hybrid schedule to classify the infinite sequence",
                set.lr.name()
            ));
            Verdict::Undetermined
        }
    };
    if lr_sum == Verdict::Fails {
        reasons.push("sum of learning rates converges".into());
    }

    if batch == Some(BatchGrowth::Geometric) {
        reasons.push(
            "exponential batch growth is treated as unbounded; an expanded plan clamps it at the dataset size".into(),
        );
    }

    // sum alpha_k^2 / b_k: geometric batches make it a convergent geometric series
    let noise = match (lr, batch) {
        (_, Some(BatchGrowth::Geometric)) if lr.is_some() => Verdict::Holds,
        (Some(a), Some(BatchGrowth::Constant)) => {
            if 2.0 * a > 1.0 {
                Verdict::Holds
            } else {
                reasons.push("sum alpha_k^2 / b_k diverges under a constant batch size".into());
                Verdict::Fails
            }
        }
        _ => Verdict::Undetermined,
    };

    let momentum = match (weight_class(&set.beta), weight_class(&set.gamma)) {
        (Some(Weight::Zero), _) | (_, Some(Weight::Zero)) => Verdict::Holds,
        (Some(b), Some(g)) => {
            let rate = match (b, g) {
                (Weight::Geometric(r1), Weight::Geometric(r2)) => Some(r1 * r2),
                (Weight::Geometric(r), Weight::Persistent) | (Weight::Persistent, Weight::Geometric(r)) => Some(r),
                _ => None,
            };
            match rate {
                Some(r) if r < 1.0 => Verdict::Holds,
                _ => {
                    reasons.push("sum gamma_k beta_k diverges".into());
                    Verdict::Fails
                }
            }
        }
        _ => Verdict::Undetermined,
    };
    let thm1 = Verdict::all(&[lr_sum, noise, momentum]);

    let one_minus_beta = one_minus_beta_exponent(&set.beta);
    // sum alpha_k^2 / (1 - beta_k) ~ sum (m+1)^(c - 2a), with T_m bounded
    let drift = match (lr, one_minus_beta) {
        (Some(a), Some(c)) => {
            if 2.0 * a - c > 1.0 {
                Verdict::Holds
            } else {
                reasons.push("sum alpha_k^2 / (1 - beta_k) diverges".into());
                Verdict::Fails
            }
        }
        _ => Verdict::Undetermined,
    };
    // sum (1 - beta_k) / b_k: a constant batch needs 1 - beta summable, which
    // no supported beta schedule provides
    let variance = match (batch, one_minus_beta) {
        (Some(BatchGrowth::Geometric), Some(_)) => Verdict::Holds,
        (Some(BatchGrowth::Constant), Some(c)) => {
            if c > 1.0 {
                Verdict::Holds
            } else {
                reasons.push("sum (1 - beta_k) / b_k diverges under a constant batch size".into());
                Verdict::Fails
            }
        }
        _ => Verdict::Undetermined,
    };
    let thm2 = Verdict::all(&[lr_sum, drift, variance]);

    AsymptoticReport { thm1, thm2, reasons }
}
