//! Shared fixtures for the criterion benches.

use qhm_core::schedules::{ScheduleKind, ScheduleSet};

/// Schedules from the increasing-batch experiments: exponential batch growth
/// with step-decayed momentum weights.
pub fn increasing_batch_set(b0: u64, interval: u64) -> ScheduleSet {
    ScheduleSet {
        batch: ScheduleKind::ExponentialBs { b0, delta: 2.0, interval },
        lr: ScheduleKind::CosineLr { alpha_max: 0.1, alpha_min: 0.0 },
        beta: ScheduleKind::StepDecay { max: 0.9, ratio: 0.5, interval },
        gamma: ScheduleKind::StepDecay { max: 0.7, ratio: 0.5, interval },
    }
}

/// Constant batch and learning rate, the cheapest plan per epoch to expand
/// but the longest in steps.
pub fn constant_set(batch: u64) -> ScheduleSet {
    ScheduleSet {
        batch: ScheduleKind::Constant { value: batch as f64 },
        lr: ScheduleKind::Constant { value: 0.1 },
        beta: ScheduleKind::Constant { value: 0.9 },
        gamma: ScheduleKind::Constant { value: 0.7 },
    }
}

/// Deterministic pseudo-gradient of length `dim`.
pub fn gradient(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| ((i as f64) * 0.618).sin()).collect()
}
