//! Exact schedule sums, theorem right-hand sides and their closed-form upper
//! bounds.
//!
//! With `K` steps of step sizes `alpha_k`, batches `b_k` and momentum weights
//! `beta_k`, `gamma_k`:
//!
//! * decreasing-momentum bound: `A = 1 / S`, `B = (sum alpha_k^2 / b_k) / S`,
//!   `C = (sum gamma_k beta_k) / S`, where `S = sum alpha_k`;
//! * increasing-momentum bound: `A`, `B' = (sum (1 - beta_k) / b_k) / S`,
//!   `C' = (sum alpha_k^2) / S`, `D' = (sum alpha_k^2 / (1 - beta_k)) / S`.
//!
//! All sums use compensated summation.

mod corollary;

pub use corollary::{
    corollary1_case, corollary1_rate, corollary1_upper, corollary2_case, corollary2_rate, corollary2_upper, BsCase,
    Corollary1Case, Corollary1Upper, Corollary2Case, Corollary2Lr, Corollary2Upper, LrCase, MomentumCase, RateLabel,
};

use serde::Serialize;
use thiserror::Error;

use crate::problems::ProblemConstants;
use crate::schedules::{first_thm2_violation, ScheduleSet, StepPlan};
use crate::summation::{compensated_sum, CompensatedSum};

/// Relative slack allowed when comparing an exact sum with its closed form.
pub const DOMINATION_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("plan has no steps")]
    EmptyPlan,
    #[error("sum of step sizes is zero")]
    ZeroStepMass,
    #[error("alpha_max * L = {product} must be below 2")]
    StepTooLarge { product: f64 },
    #[error("sup gamma*beta = {value} must be below 1")]
    MomentumTooLarge { value: f64 },
    #[error("beta_k (alpha_k / 2 + 1) <= 1 fails first at step {step} (alpha = {alpha}, beta = {beta})")]
    Thm2Condition { step: usize, alpha: f64, beta: f64 },
    #[error("combination not covered by corollary {corollary}: {reason}")]
    NotCovered { corollary: u8, reason: String },
    #[error("invalid constant `{name}` = {value}")]
    InvalidConstant { name: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, BoundError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm1Sums {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm2Sums {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

fn step_mass(plan: &StepPlan) -> Result<f64> {
    if plan.total_steps() == 0 {
        return Err(BoundError::EmptyPlan);
    }
    let s = compensated_sum(plan.alpha.iter().copied());
    if s <= 0.0 {
        return Err(BoundError::ZeroStepMass);
    }
    Ok(s)
}

pub fn exact_sums_thm1(plan: &StepPlan) -> Result<Thm1Sums> {
    let s = step_mass(plan)?;
    let noise = compensated_sum(plan.alpha.iter().zip(&plan.batch).map(|(a, &b)| a * a / b as f64));
    let mom = compensated_sum(plan.beta.iter().zip(&plan.gamma).map(|(b, g)| g * b));
    Ok(Thm1Sums { a: 1.0 / s, b: noise / s, c: mom / s })
}

/// Errors when `beta_k (alpha_k / 2 + 1) > 1` at some step, naming the first.
pub fn exact_sums_thm2(plan: &StepPlan) -> Result<Thm2Sums> {
    let s = step_mass(plan)?;
    if let Some(step) = first_thm2_violation(plan) {
        return Err(BoundError::Thm2Condition { step, alpha: plan.alpha[step], beta: plan.beta[step] });
    }
    let mut b = CompensatedSum::new();
    let mut c = CompensatedSum::new();
    let mut d = CompensatedSum::new();
    for k in 0..plan.total_steps() {
        let (alpha, beta) = (plan.alpha[k], plan.beta[k]);
        b.add((1.0 - beta) / plan.batch[k] as f64);
        c.add(alpha * alpha);
        d.add(alpha * alpha / (1.0 - beta));
    }
    Ok(Thm2Sums { a: 1.0 / s, b: b.value() / s, c: c.value() / s, d: d.value() / s })
}

/// Problem and plan constants entering the decreasing-momentum bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm1Constants {
    /// `f(x_0) - f_star`.
    pub f0_minus_fstar: f64,
    pub smoothness: f64,
    pub sigma2: f64,
    /// `G^2`.
    pub g2: f64,
    /// `sup_k gamma_k beta_k`.
    pub gb_bar: f64,
    pub alpha_max: f64,
}

impl Thm1Constants {
    /// Fills `gb_bar` and `alpha_max` from the plan.
    pub fn from_plan(plan: &StepPlan, f0_minus_fstar: f64, smoothness: f64, sigma2: f64, g2: f64) -> Self {
        let gb_bar = plan.beta.iter().zip(&plan.gamma).map(|(b, g)| g * b).fold(0.0, f64::max);
        let alpha_max = plan.alpha.iter().copied().fold(0.0, f64::max);
        Self { f0_minus_fstar, smoothness, sigma2, g2, gb_bar, alpha_max }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("f0_minus_fstar", self.f0_minus_fstar),
            ("smoothness", self.smoothness),
            ("sigma2", self.sigma2),
            ("g2", self.g2),
            ("gb_bar", self.gb_bar),
            ("alpha_max", self.alpha_max),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(BoundError::InvalidConstant { name, value });
            }
        }
        if self.smoothness <= 0.0 {
            return Err(BoundError::InvalidConstant { name: "smoothness", value: self.smoothness });
        }
        let product = self.alpha_max * self.smoothness;
        if product >= 2.0 {
            return Err(BoundError::StepTooLarge { product });
        }
        if self.gb_bar >= 1.0 {
            return Err(BoundError::MomentumTooLarge { value: self.gb_bar });
        }
        Ok(())
    }
}

/// `[2 df A + L sigma^2 B + 2 alpha_max (1 + alpha_max L) G^2 C] / ((1 - gb_bar)(2 - alpha_max L))`.
pub fn thm1_rhs(c: &Thm1Constants, sums: &Thm1Sums) -> Result<f64> {
    c.validate()?;
    let l = c.smoothness;
    let num = 2.0 * c.f0_minus_fstar * sums.a
        + l * c.sigma2 * sums.b
        + 2.0 * c.alpha_max * (1.0 + c.alpha_max * l) * c.g2 * sums.c;
    Ok(num / ((1.0 - c.gb_bar) * (2.0 - c.alpha_max * l)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm2Constants {
    pub f0_minus_fstar: f64,
    pub smoothness: f64,
    pub sigma2: f64,
    pub g2: f64,
}

/// `2 df A + 4 sigma^2 B' + 5 L^2 G^2 C' + 2 L^2 G^2 D'`.
pub fn thm2_rhs(c: &Thm2Constants, sums: &Thm2Sums) -> f64 {
    let lg = c.smoothness * c.smoothness * c.g2;
    2.0 * c.f0_minus_fstar * sums.a + 4.0 * c.sigma2 * sums.b + 5.0 * lg * sums.c + 2.0 * lg * sums.d
}

/// `exact <= upper * (1 + DOMINATION_SLACK)`.
pub fn dominated(exact: f64, upper: f64) -> bool {
    exact <= upper * (1.0 + DOMINATION_SLACK)
}

/// One corollary evaluated against a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryEntry {
    pub covered: bool,
    /// Why the entry is `n/a`, when it is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<UpperBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateLabel>,
    /// Every exact sum is within its closed form; `None` when not covered.
    pub dominated: Option<bool>,
}

impl CorollaryEntry {
    fn not_applicable(reason: String) -> Self {
        Self { covered: false, note: Some(reason), upper: None, rate: None, dominated: None }
    }
}

/// Closed-form values keyed like the exact sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBounds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm1Report {
    pub sums: Thm1Sums,
    pub corollary: CorollaryEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<Thm1Constants>,
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm2Report {
    pub condition_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<usize>,
    pub sums: Option<Thm2Sums>,
    pub corollary: CorollaryEntry,
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub total_steps: usize,
    pub epochs: usize,
    pub n: usize,
    pub clamped_epochs: usize,
    pub thm1: Thm1Report,
    pub thm2: Thm2Report,
    /// `min_k ||grad f(x_k)||^2` averaged over seeds, when a run produced one.
    pub empirical_min_grad_sq: Option<f64>,
    /// The smallest available theorem right-hand side.
    pub rhs_total: Option<f64>,
}

impl BoundReport {
    /// Evaluates every applicable bound on `plan`.
    ///
    /// `f0_minus_fstar` is needed for the right-hand sides; pass `None` when no
    /// starting point or lower bound is known.
    pub fn build(
        set: &ScheduleSet,
        plan: &StepPlan,
        constants: Option<&ProblemConstants>,
        f0_minus_fstar: Option<f64>,
    ) -> Result<Self> {
        let k = plan.total_steps();
        let sums1 = exact_sums_thm1(plan)?;
        let clamped = !plan.clamped_epochs.is_empty();

        let cor1 = match corollary1_case(set) {
            Err(e) => CorollaryEntry::not_applicable(e.to_string()),
            Ok(_) if clamped => CorollaryEntry::not_applicable("batch schedule clamped to n".into()),
            Ok(case) => {
                let up = corollary1_upper(&case, plan.n, k)?;
                CorollaryEntry {
                    covered: true,
                    note: None,
                    upper: Some(UpperBounds { a: up.a, b: up.b, c: up.c, d: None }),
                    rate: Some(corollary1_rate(&case)),
                    dominated: Some(
                        dominated(sums1.a, up.a) && dominated(sums1.b, up.b) && dominated(sums1.c, up.c),
                    ),
                }
            }
        };

        let (rhs1, note1, consts1) = match thm1_inputs(plan, constants, f0_minus_fstar) {
            Err(note) => (None, Some(note), None),
            Ok(c) => match thm1_rhs(&c, &sums1) {
                Ok(v) => (Some(v), None, Some(c)),
                Err(e) => (None, Some(e.to_string()), Some(c)),
            },
        };

        let violation = first_thm2_violation(plan);
        let sums2 = exact_sums_thm2(plan).ok();
        let cor2 = match (corollary2_case(set), sums2) {
            (Err(e), _) => CorollaryEntry::not_applicable(e.to_string()),
            (Ok(_), _) if clamped => CorollaryEntry::not_applicable("batch schedule clamped to n".into()),
            (Ok(_), None) => CorollaryEntry::not_applicable("beta_k (alpha_k / 2 + 1) <= 1 fails".into()),
            (Ok(case), Some(s)) => {
                let up = corollary2_upper(&case, plan.n, k)?;
                CorollaryEntry {
                    covered: true,
                    note: None,
                    upper: Some(UpperBounds { a: up.a, b: up.b, c: up.c, d: Some(up.d) }),
                    rate: Some(corollary2_rate(&case)),
                    dominated: Some(
                        dominated(s.a, up.a) && dominated(s.b, up.b) && dominated(s.c, up.c) && dominated(s.d, up.d),
                    ),
                }
            }
        };
        let (rhs2, note2) = match (sums2, thm2_inputs(constants, f0_minus_fstar)) {
            (None, _) => (None, Some("beta_k (alpha_k / 2 + 1) <= 1 fails".to_string())),
            (Some(_), Err(note)) => (None, Some(note)),
            (Some(s), Ok(c)) => (Some(thm2_rhs(&c, &s)), None),
        };

        let rhs_total = match (rhs1, rhs2) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Ok(BoundReport {
            total_steps: k,
            epochs: plan.steps_per_epoch.len(),
            n: plan.n,
            clamped_epochs: plan.clamped_epochs.len(),
            thm1: Thm1Report { sums: sums1, corollary: cor1, constants: consts1, rhs: rhs1, rhs_note: note1 },
            thm2: Thm2Report {
                condition_holds: violation.is_none(),
                first_violation: violation,
                sums: sums2,
                corollary: cor2,
                rhs: rhs2,
                rhs_note: note2,
            },
            empirical_min_grad_sq: None,
            rhs_total,
        })
    }

    /// Every covered corollary holds against its exact sums.
    pub fn dominations_hold(&self) -> bool {
        [&self.thm1.corollary, &self.thm2.corollary].iter().all(|c| c.dominated != Some(false))
    }
}

fn thm1_inputs(
    plan: &StepPlan,
    constants: Option<&ProblemConstants>,
    f0_minus_fstar: Option<f64>,
) -> std::result::Result<Thm1Constants, String> {
    let c = constants.ok_or("no problem constants")?;
    let l = c.smoothness.ok_or("smoothness constant unknown")?;
    let sigma2 = c.sigma2.ok_or("variance bound unknown")?;
    let df = f0_minus_fstar.ok_or("f(x0) - f_star unknown")?;
    let momentum_free = plan.beta.iter().zip(&plan.gamma).all(|(b, g)| g * b == 0.0);
    let g2 = match c.grad_bound {
        Some(g) => g * g,
        // the gradient bound only multiplies the momentum term
        None if momentum_free => 0.0,
        None => return Err("gradient bound unknown and gamma*beta is not identically zero".into()),
    };
    Ok(Thm1Constants::from_plan(plan, df, l, sigma2, g2))
}

fn thm2_inputs(
    constants: Option<&ProblemConstants>,
    f0_minus_fstar: Option<f64>,
) -> std::result::Result<Thm2Constants, String> {
    let c = constants.ok_or("no problem constants")?;
    Ok(Thm2Constants {
        f0_minus_fstar: f0_minus_fstar.ok_or("f(x0) - f_star unknown")?,
        smoothness: c.smoothness.ok_or("smoothness constant unknown")?,
        sigma2: c.sigma2.ok_or("variance bound unknown")?,
        g2: c.grad_bound.map(|g| g * g).ok_or("gradient bound unknown")?,
    })
}
