use std::ops::Range;

use log::warn;

use super::{Result, ScheduleError, ScheduleSet, Target};
use crate::optim::StepHyper;

/// Per-step hyperparameters expanded from epoch-indexed schedules.
///
/// Epoch `m` contributes `steps_per_epoch[m]` consecutive steps that all share
/// the epoch's values. For a plan built by [`expand`] every epoch is complete:
/// `steps_per_epoch[m] == ceil(n / batch)`. A plan obtained from
/// [`StepPlan::prefix`] may end with a partial epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub batch: Vec<usize>,
    pub epoch_of_step: Vec<usize>,
    /// `T_m` for each epoch.
    pub steps_per_epoch: Vec<usize>,
    /// Per-epoch values, indexed by epoch.
    pub epoch_hyper: Vec<StepHyper>,
    /// Number of epochs the schedules were evaluated over.
    pub epochs: usize,
    /// Dataset size.
    pub n: usize,
    /// Epochs whose scheduled batch exceeded `n` and was clamped to it.
    pub clamped_epochs: Vec<usize>,
}

impl StepPlan {
    /// Total number of steps `K`.
    pub fn total_steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn hyper(&self, k: usize) -> StepHyper {
        StepHyper { alpha: self.alpha[k], beta: self.beta[k], gamma: self.gamma[k], batch: self.batch[k] }
    }

    /// Step indices belonging to epoch `m`.
    pub fn epoch_range(&self, m: usize) -> Range<usize> {
        let start: usize = self.steps_per_epoch[..m].iter().sum();
        start..start + self.steps_per_epoch[m]
    }

    /// Steps of the first epoch, `T_0`.
    pub fn first_epoch_steps(&self) -> usize {
        self.steps_per_epoch.first().copied().unwrap_or(0)
    }

    /// The first `len` steps of the plan. The last epoch kept may be partial;
    /// `steps_per_epoch` then records the steps actually present.
    pub fn prefix(&self, len: usize) -> StepPlan {
        let len = len.min(self.total_steps());
        let mut steps_per_epoch = Vec::new();
        let mut remaining = len;
        for &t in &self.steps_per_epoch {
            if remaining == 0 {
                break;
            }
            let take = t.min(remaining);
            steps_per_epoch.push(take);
            remaining -= take;
        }
        let kept = steps_per_epoch.len();
        StepPlan {
            alpha: self.alpha[..len].to_vec(),
            beta: self.beta[..len].to_vec(),
            gamma: self.gamma[..len].to_vec(),
            batch: self.batch[..len].to_vec(),
            epoch_of_step: self.epoch_of_step[..len].to_vec(),
            steps_per_epoch,
            epoch_hyper: self.epoch_hyper[..kept].to_vec(),
            epochs: self.epochs,
            n: self.n,
            clamped_epochs: self.clamped_epochs.iter().copied().filter(|&m| m < kept).collect(),
        }
    }
}

fn steps_for_batch(n: usize, batch: usize) -> usize {
    n.div_ceil(batch)
}

fn epoch_batch(set: &ScheduleSet, m: usize, epochs: usize, n: usize) -> Result<(usize, bool)> {
    let raw = set.spec(Target::Batch)?.batch_at(m, epochs)?;
    if raw > n as u64 {
        Ok((n, true))
    } else {
        Ok((raw as usize, false))
    }
}

/// Expands `set` over `epochs` epochs of a dataset with `n` samples.
///
/// Batch sizes above `n` are clamped to `n` (full batch) and reported through
/// `log::warn!` and [`StepPlan::clamped_epochs`].
pub fn expand(set: &ScheduleSet, n: usize, epochs: usize) -> Result<StepPlan> {
    if n == 0 {
        return Err(ScheduleError::EmptyDataset);
    }
    if epochs == 0 {
        return Err(ScheduleError::NoEpochs);
    }
    set.validate()?;
    let lr = set.spec(Target::Lr)?;
    let beta = set.spec(Target::Beta)?;
    let gamma = set.spec(Target::Gamma)?;

    let mut plan = StepPlan {
        alpha: Vec::new(),
        beta: Vec::new(),
        gamma: Vec::new(),
        batch: Vec::new(),
        epoch_of_step: Vec::new(),
        steps_per_epoch: Vec::with_capacity(epochs),
        epoch_hyper: Vec::with_capacity(epochs),
        epochs,
        n,
        clamped_epochs: Vec::new(),
    };
    for m in 0..epochs {
        let (b, clamped) = epoch_batch(set, m, epochs, n)?;
        if clamped {
            plan.clamped_epochs.push(m);
        }
        let hyper = StepHyper {
            alpha: lr.eval_epoch(m, epochs)?,
            beta: beta.eval_epoch(m, epochs)?,
            gamma: gamma.eval_epoch(m, epochs)?,
            batch: b,
        };
        let t = steps_for_batch(n, b);
        plan.steps_per_epoch.push(t);
        plan.epoch_hyper.push(hyper);
        plan.alpha.extend(std::iter::repeat_n(hyper.alpha, t));
        plan.beta.extend(std::iter::repeat_n(hyper.beta, t));
        plan.gamma.extend(std::iter::repeat_n(hyper.gamma, t));
        plan.batch.extend(std::iter::repeat_n(b, t));
        plan.epoch_of_step.extend(std::iter::repeat_n(m, t));
    }
    if let Some(&first) = plan.clamped_epochs.first() {
        warn!(
            "batch schedule exceeds the dataset size n = {n} from epoch {first}; clamped to full batch in {} epochs",
            plan.clamped_epochs.len()
        );
    }
    Ok(plan)
}

/// Smallest number of epochs whose expansion has at least `min_steps` steps,
/// expanded and cut to exactly `min_steps` steps.
///
/// The batch schedule does not depend on the epoch count, so the step count
/// of each epoch is known before the horizon is fixed.
pub fn expand_covering(set: &ScheduleSet, n: usize, min_steps: usize) -> Result<StepPlan> {
    if n == 0 {
        return Err(ScheduleError::EmptyDataset);
    }
    set.validate()?;
    let mut covered = 0usize;
    let mut epochs = 0usize;
    while covered < min_steps.max(1) {
        // the horizon only matters for cosine/polynomial values, not batch sizes
        let (b, _) = epoch_batch(set, epochs, epochs + 1, n)?;
        covered += steps_for_batch(n, b);
        epochs += 1;
    }
    let plan = expand(set, n, epochs)?;
    Ok(plan.prefix(min_steps.max(1)))
}

/// First step `k` with `beta_k (alpha_k / 2 + 1) > 1`.
pub fn first_thm2_violation(plan: &StepPlan) -> Option<usize> {
    plan.alpha
        .iter()
        .zip(&plan.beta)
        .position(|(&a, &b)| b * (a / 2.0 + 1.0) > 1.0)
}

/// Whether `beta_k (alpha_k / 2 + 1) <= 1` holds at every step.
pub fn validate_thm2_condition(plan: &StepPlan) -> bool {
    first_thm2_violation(plan).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::ScheduleKind;

    fn set(batch: ScheduleKind) -> ScheduleSet {
        ScheduleSet {
            batch,
            lr: ScheduleKind::Constant { value: 0.1 },
            beta: ScheduleKind::Constant { value: 0.9 },
            gamma: ScheduleKind::Constant { value: 0.7 },
        }
    }

    #[test]
    fn constant_batch_steps() {
        let plan = expand(&set(ScheduleKind::Constant { value: 32.0 }), 100, 2).unwrap();
        assert_eq!(plan.steps_per_epoch, vec![4, 4]);
        assert_eq!(plan.total_steps(), 8);
        assert_eq!(plan.epoch_of_step, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn exponential_batch_steps() {
        let plan =
            expand(&set(ScheduleKind::ExponentialBs { b0: 8, delta: 2.0, interval: 1 }), 64, 3).unwrap();
        assert_eq!(plan.steps_per_epoch, vec![8, 4, 2]);
        assert_eq!(plan.total_steps(), 14);
        assert_eq!(plan.batch[13], 32);
        assert!(plan.clamped_epochs.is_empty());
    }

    #[test]
    fn single_full_batch() {
        let plan = expand(&set(ScheduleKind::Constant { value: 10.0 }), 10, 1).unwrap();
        assert_eq!(plan.steps_per_epoch, vec![1]);
        assert_eq!(plan.total_steps(), 1);
        for len in [plan.alpha.len(), plan.beta.len(), plan.gamma.len(), plan.batch.len()] {
            assert_eq!(len, 1);
        }
    }

    #[test]
    fn oversized_batch_is_clamped() {
        let plan =
            expand(&set(ScheduleKind::ExponentialBs { b0: 8, delta: 2.0, interval: 1 }), 20, 4).unwrap();
        assert_eq!(plan.clamped_epochs, vec![2, 3]);
        assert_eq!(plan.batch.last(), Some(&20));
        assert_eq!(plan.steps_per_epoch, vec![3, 2, 1, 1]);
    }

    #[test]
    fn bad_sizes_rejected() {
        let s = set(ScheduleKind::Constant { value: 4.0 });
        assert_eq!(expand(&s, 0, 1), Err(ScheduleError::EmptyDataset));
        assert_eq!(expand(&s, 4, 0), Err(ScheduleError::NoEpochs));
    }

    #[test]
    fn prefix_keeps_partial_epoch() {
        let plan = expand(&set(ScheduleKind::Constant { value: 32.0 }), 100, 3).unwrap();
        let p = plan.prefix(6);
        assert_eq!(p.total_steps(), 6);
        assert_eq!(p.steps_per_epoch, vec![4, 2]);
        assert_eq!(p.epoch_hyper.len(), 2);
    }

    #[test]
    fn covering_plan_has_exact_length() {
        let s = set(ScheduleKind::ExponentialBs { b0: 8, delta: 2.0, interval: 1 });
        let p = expand_covering(&s, 64, 13).unwrap();
        assert_eq!(p.total_steps(), 13);
        assert_eq!(p.epochs, 3);
    }

    #[test]
    fn thm2_condition_examples() {
        let mut s = set(ScheduleKind::Constant { value: 10.0 });
        s.beta = ScheduleKind::Constant { value: 0.95 };
        assert!(validate_thm2_condition(&expand(&s, 100, 3).unwrap()));
        s.beta = ScheduleKind::Constant { value: 0.96 };
        let plan = expand(&s, 100, 3).unwrap();
        assert!(!validate_thm2_condition(&plan));
        assert_eq!(first_thm2_violation(&plan), Some(0));
        s.beta = ScheduleKind::Constant { value: 0.0 };
        s.lr = ScheduleKind::Constant { value: 1e6 };
        assert!(validate_thm2_condition(&expand(&s, 100, 3).unwrap()));
    }

    #[test]
    fn epoch_range_matches_epoch_of_step() {
        let plan =
            expand(&set(ScheduleKind::ExponentialBs { b0: 8, delta: 2.0, interval: 1 }), 64, 3).unwrap();
        for m in 0..3 {
            for k in plan.epoch_range(m) {
                assert_eq!(plan.epoch_of_step[k], m);
            }
        }
    }
}
