//! Quasi-hyperbolic momentum with epoch-indexed schedules, synthetic
//! finite-sum problems, and the convergence-bound calculators that go with
//! them.

pub mod bounds;
pub mod experiment;
pub mod optim;
pub mod problems;
pub mod schedules;
pub mod summation;

pub use bounds::{BoundError, BoundReport};
pub use experiment::{run_seeds, run_trajectory, EvalEvery, Init, Trajectory, TrajectoryConfig};
pub use optim::{
    nshb_from_shb, qhm_step, shb_from_nshb, shb_schedule_from_nshb, Optimizer, OptimizerKind, OptimError, QhmState, StepHyper,
};
pub use problems::{
    make_logistic, make_noisy_quadratic, make_sigmoid_sum, sample_batch_grad, BatchSampler, FiniteSumProblem,
    ProblemConstants, ProblemError, ProblemSpec,
};
pub use schedules::{
    expand, expand_covering, validate_asymptotic, ScheduleError, ScheduleKind, ScheduleSet, ScheduleSpec, StepPlan,
    Target,
};
pub use summation::{compensated_sum, CompensatedSum};
