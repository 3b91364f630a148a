//! Acceptance gate. Runs each criterion, prints one PASS/FAIL line with the
//! measured quantity and wall time, and exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qhm_core::bounds::{
    corollary1_case, corollary1_upper, corollary2_case, corollary2_upper, exact_sums_thm1, exact_sums_thm2,
    thm1_rhs, Thm1Constants,
};
use qhm_core::experiment::{run_seeds, EvalEvery, Init, TrajectoryConfig};
use qhm_core::optim::{nshb_from_shb, shb_from_nshb, shb_from_nshb_coefficient_rule, MomentumState, QhmState, StepHyper};
use qhm_core::problems::{
    full_grad_vec, make_logistic, make_noisy_quadratic, make_sigmoid_sum, sample_batch_grad, BatchSampler,
    FiniteSumProblem,
};
use qhm_core::schedules::{expand, expand_covering, validate_thm2_condition, ScheduleKind, ScheduleSet};
use qhm_core::OptimizerKind;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "reduction exactness", limit: Some(Duration::from_secs(1)), run: reduction_exactness },
        Criterion { name: "shb/nshb conversion", limit: Some(Duration::from_secs(1)), run: shb_nshb_agreement },
        Criterion { name: "momentum boundedness", limit: Some(Duration::from_secs(10)), run: momentum_boundedness },
        Criterion { name: "corollary 1 domination", limit: Some(Duration::from_secs(30)), run: corollary1_domination },
        Criterion { name: "corollary 2 domination", limit: Some(Duration::from_secs(30)), run: corollary2_domination },
        Criterion { name: "rate slopes", limit: None, run: rate_slopes },
        Criterion { name: "theorem 1 empirical domination", limit: Some(Duration::from_secs(60)), run: thm1_empirical },
        Criterion { name: "noise floor vs increasing batch", limit: Some(Duration::from_secs(120)), run: noise_floor },
        Criterion { name: "estimator statistics", limit: Some(Duration::from_secs(30)), run: estimator_statistics },
        Criterion { name: "gradient oracles", limit: None, run: gradient_oracles },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:.0?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<34} {detail} [{elapsed:.2?}]", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:<34} {detail} [{elapsed:.2?}]", c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn set(batch: ScheduleKind, lr: ScheduleKind, beta: ScheduleKind, gamma: ScheduleKind) -> ScheduleSet {
    ScheduleSet { batch, lr, beta, gamma }
}

fn constant(value: f64) -> ScheduleKind {
    ScheduleKind::Constant { value }
}

fn reduction_exactness() -> Outcome {
    let p = make_sigmoid_sum(8, 256, 11).map_err(|e| e.to_string())?;
    let x0 = vec![0.25; 8];
    let mut worst = 0usize;
    for (gamma, label) in [(0.0, "sgd"), (1.0, "nshb")] {
        let mut qhm = QhmState::new(x0.clone());
        let mut reference = MomentumState::new(x0.clone());
        let mut xs = x0.clone();
        let mut s1 = BatchSampler::new(5, p.n());
        let mut s2 = BatchSampler::new(5, p.n());
        let (mut g1, mut g2) = (vec![0.0; 8], vec![0.0; 8]);
        for k in 0..1000 {
            let beta = 0.9 * 0.5f64.powi((k / 250) as i32);
            let h = StepHyper { alpha: 0.05, beta, gamma, batch: 4 };
            sample_batch_grad(&p, &mut s1, &qhm.x, 4, &mut g1).map_err(|e| e.to_string())?;
            qhm.step(&g1, &h).map_err(|e| e.to_string())?;
            let other = if gamma == 0.0 { &xs } else { &reference.x };
            sample_batch_grad(&p, &mut s2, other, 4, &mut g2).map_err(|e| e.to_string())?;
            if gamma == 0.0 {
                xs.iter_mut().zip(&g2).for_each(|(x, g)| *x -= 0.05 * g);
            } else {
                reference.nshb_step(&g2, 0.05, beta).map_err(|e| e.to_string())?;
            }
            let target = if gamma == 0.0 { &xs } else { &reference.x };
            let bitwise = qhm.x.iter().zip(target).all(|(a, b)| a.to_bits() == b.to_bits());
            check(bitwise, || format!("gamma = {gamma} ({label}) differs at step {k}"))?;
            worst = worst.max(k + 1);
        }
    }
    Ok(format!("gamma=0 == sgd and gamma=1 == nshb bit-for-bit over {worst} steps"))
}

fn shb_nshb_agreement() -> Outcome {
    let p = make_sigmoid_sum(6, 200, 3).map_err(|e| e.to_string())?;
    let (alpha_t, beta_t) = (0.2, 0.9);
    let (alpha_h, beta_h) = shb_from_nshb(alpha_t, beta_t).map_err(|e| e.to_string())?;
    let mut nshb = MomentumState::new(vec![0.5; 6]);
    let mut shb = MomentumState::new(vec![0.5; 6]);
    // the coefficient-matching rule, run alongside to show that it drifts
    let (alpha_c, beta_c) = shb_from_nshb_coefficient_rule(alpha_t, beta_t).map_err(|e| e.to_string())?;
    let mut coef = MomentumState::new(vec![0.5; 6]);
    let mut coef_gap: f64 = 0.0;
    let mut sampler = BatchSampler::new(77, p.n());
    let mut g = vec![0.0; 6];
    let mut worst_rel: f64 = 0.0;
    for k in 0..1000 {
        // one shared gradient stream evaluated at the NSHB iterate
        sample_batch_grad(&p, &mut sampler, &nshb.x, 8, &mut g).map_err(|e| e.to_string())?;
        nshb.nshb_step(&g, alpha_t, beta_t).map_err(|e| e.to_string())?;
        shb.shb_step(&g, alpha_h, beta_h).map_err(|e| e.to_string())?;
        coef.shb_step(&g, alpha_c, beta_c).map_err(|e| e.to_string())?;
        if coef.x.iter().all(|v| v.is_finite()) {
            let c = norm(&coef.x);
            coef_gap = coef_gap.max((norm(&nshb.x) - c).abs() / norm(&nshb.x).max(f64::MIN_POSITIVE));
        } else {
            coef_gap = f64::INFINITY;
        }
        let (a, b) = (norm(&nshb.x), norm(&shb.x));
        let rel = (a - b).abs() / a.max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(rel);
        check(rel <= 1e-10, || format!("||x|| differs by {rel:e} at step {k}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_trip: f64 = 0.0;
    for _ in 0..10_000 {
        let alpha: f64 = rng.random_range(1e-4..1.0);
        let beta: f64 = rng.random_range(0.0..0.999);
        let (a, b) = shb_from_nshb(alpha, beta).and_then(|(a, b)| nshb_from_shb(a, b)).map_err(|e| e.to_string())?;
        let err = ((a - alpha).abs() / alpha).max((b - beta).abs());
        worst_trip = worst_trip.max(err);
    }
    check(worst_trip <= 1e-15, || format!("round trip error {worst_trip:e}"))?;
    Ok(format!(
        "max relative ||x|| gap {worst_rel:.1e}, round-trip error {worst_trip:.1e} (coefficient rule gap {coef_gap:.1e})"
    ))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn momentum_boundedness() -> Outcome {
    let p = make_sigmoid_sum(10, 512, 4).map_err(|e| e.to_string())?;
    let big_g = p.constants().grad_bound.ok_or("sigmoid-sum must declare G")?;
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut state = QhmState::new(x0);
        let mut sampler = BatchSampler::new(seed, p.n());
        let mut g = vec![0.0; 10];
        for k in 0..10_000 {
            let h = StepHyper { alpha: 0.5, beta: 0.95 * 0.7f64.powi((k / 2500) as i32), gamma: 0.7, batch: 1 + k % 8 };
            sample_batch_grad(&p, &mut sampler, &state.x, h.batch, &mut g).map_err(|e| e.to_string())?;
            let d = state.step(&g, &h).map_err(|e| e.to_string())?;
            worst = worst.max(d.d_norm).max(d.m_norm);
        }
    }
    check(worst <= big_g + 1e-12, || format!("max norm {worst} exceeds G = {big_g}"))?;
    Ok(format!("max(||d_k||, ||m_k||) = {worst:.4} <= G = {big_g:.4} over 10 seeds x 1e4 steps"))
}

// ---------------------------------------------------------------------------
// Independent oracles for the schedule sums and their closed forms.

const N: usize = 1024;
const KS: [usize; 5] = [10, 100, 1_000, 10_000, 100_000];
const ALPHA_MAX: f64 = 0.1;
const ALPHA_MIN: f64 = 0.0;
const POWER: f64 = 2.0;
const B_CONST: u64 = 103;
const B0: u64 = 8;
const DELTA: f64 = 2.0;
const E: u64 = 400;
const GAMMA_MAX: f64 = 0.7;
const BETA_MAX: f64 = 0.9;
const LAMBDA: f64 = 0.5;
const ZETA: f64 = 0.5;
const BETA_MIN: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
enum Lr {
    Constant,
    DecayingSq,
    Decaying,
    Cosine,
    Polynomial,
}

#[derive(Clone, Copy, Debug)]
enum Bs {
    Constant,
    Exponential,
}

fn lr_kind(lr: Lr) -> ScheduleKind {
    match lr {
        Lr::Constant => constant(ALPHA_MAX),
        Lr::DecayingSq => ScheduleKind::DecayingSqLr { alpha_max: ALPHA_MAX },
        Lr::Decaying => ScheduleKind::DecayingLr { alpha_max: ALPHA_MAX },
        Lr::Cosine => ScheduleKind::CosineLr { alpha_max: ALPHA_MAX, alpha_min: ALPHA_MIN },
        Lr::Polynomial => ScheduleKind::PolynomialLr { alpha_max: ALPHA_MAX, alpha_min: ALPHA_MIN, power: POWER },
    }
}

fn bs_kind(bs: Bs) -> ScheduleKind {
    match bs {
        Bs::Constant => constant(B_CONST as f64),
        Bs::Exponential => ScheduleKind::ExponentialBs { b0: B0, delta: DELTA, interval: E },
    }
}

fn oracle_lr(lr: Lr, m: usize, total: usize) -> f64 {
    let mf = m as f64;
    match lr {
        Lr::Constant => ALPHA_MAX,
        Lr::DecayingSq => ALPHA_MAX / (mf + 1.0).sqrt(),
        Lr::Decaying => ALPHA_MAX / (mf + 1.0),
        Lr::Cosine if total == 1 => ALPHA_MAX,
        Lr::Cosine => {
            ALPHA_MIN
                + (ALPHA_MAX - ALPHA_MIN) / 2.0 * (1.0 + (mf * std::f64::consts::PI / (total - 1) as f64).cos())
        }
        Lr::Polynomial => ALPHA_MIN + (ALPHA_MAX - ALPHA_MIN) * (1.0 - mf / total as f64).powf(POWER),
    }
}

fn oracle_batch(bs: Bs, m: usize) -> u64 {
    match bs {
        Bs::Constant => B_CONST,
        Bs::Exponential => B0 << (m as u64 / E),
    }
}

/// Per-step `(alpha, batch, beta, gamma)` for the first `k` steps, built
/// from the epoch formulas without the library's plan expansion.
fn oracle_steps(lr: Lr, bs: Bs, beta: &dyn Fn(usize) -> f64, gamma: &dyn Fn(usize) -> f64, k: usize) -> Vec<[f64; 4]> {
    let mut epochs = 0;
    let mut covered = 0;
    while covered < k {
        covered += (N as u64).div_ceil(oracle_batch(bs, epochs)) as usize;
        epochs += 1;
    }
    let mut out = Vec::with_capacity(covered);
    for m in 0..epochs {
        let b = oracle_batch(bs, m);
        assert!(b <= N as u64, "test parameters must not clamp");
        for _ in 0..(N as u64).div_ceil(b) {
            out.push([oracle_lr(lr, m, epochs), b as f64, beta(m), gamma(m)]);
        }
    }
    out.truncate(k);
    out
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn step_decay_beta(m: usize) -> f64 {
    BETA_MAX * ZETA.powi((m as u64 / E) as i32)
}

fn step_decay_gamma(m: usize) -> f64 {
    GAMMA_MAX * LAMBDA.powi((m as u64 / E) as i32)
}

/// Closed forms written out independently of the library.
fn oracle_cor1(lr: Lr, bs: Bs, k: usize) -> [f64; 3] {
    let kf = k as f64;
    let s = (kf + 1.0).sqrt() - 1.0;
    let lg = (kf + 1.0).ln();
    let (am, an, p) = (ALPHA_MAX, ALPHA_MIN, POWER);
    let t0 = (N as f64 / match bs { Bs::Constant => B_CONST, Bs::Exponential => B0 } as f64).ceil();
    let (b, b0, d, e) = (B_CONST as f64, B0 as f64, DELTA, E as f64);
    let gb = GAMMA_MAX * BETA_MAX;
    let lz = LAMBDA * ZETA;
    let a = match lr {
        Lr::Constant => 1.0 / (am * kf),
        Lr::DecayingSq => 1.0 / (2.0 * am * s),
        Lr::Cosine => 2.0 / ((an + am) * kf),
        Lr::Polynomial => (p + 1.0) / ((am + p * an) * kf),
        Lr::Decaying => unreachable!(),
    };
    let bb = match (bs, lr) {
        (Bs::Constant, Lr::Constant) => am / b,
        (Bs::Constant, Lr::DecayingSq) => am * t0 * (1.0 + lg) / (2.0 * b * s),
        (Bs::Constant, Lr::Cosine) => (am + an) / b + t0 * (am - an).powi(2) / (2.0 * b * (am + an) * kf),
        (Bs::Constant, Lr::Polynomial) => {
            ((p + 1.0) * am * am + 2.0 * p * am * an + 2.0 * p * p * an * an) / (b * (2.0 * p + 1.0) * (am + p * an))
                + (p + 1.0) * (am * am - an * an) * t0 / ((am + p * an) * kf)
        }
        (Bs::Exponential, Lr::Constant) => am * t0 * e * d / (b0 * (d - 1.0) * kf),
        (Bs::Exponential, Lr::DecayingSq) => am * t0 * e * d / (2.0 * b0 * (d - 1.0) * s),
        (Bs::Exponential, Lr::Cosine) => 2.0 * am * am * t0 * e * d / (b0 * (d - 1.0) * (am + an) * kf),
        (Bs::Exponential, Lr::Polynomial) => am * am * (p + 1.0) * t0 * e * d / (b0 * (am + p * an) * (d - 1.0) * kf),
        (_, Lr::Decaying) => unreachable!(),
    };
    let c = match lr {
        Lr::Constant => gb * t0 * e / (am * (1.0 - lz) * kf),
        Lr::DecayingSq => gb * t0 * e / (2.0 * am * (1.0 - lz) * s),
        // carries the factor 2 that the lower bound sum alpha_k >= (a_min + a_max) K / 2 implies
        Lr::Cosine => 2.0 * gb * t0 * e / ((1.0 - lz) * (am + an) * kf),
        Lr::Polynomial => gb * (p + 1.0) * t0 * e / ((am + p * an) * (1.0 - lz) * kf),
        Lr::Decaying => unreachable!(),
    };
    [a, bb, c]
}

fn corollary1_domination() -> Outcome {
    let mut checked = 0;
    let mut tightest: f64 = 0.0;
    for lr in [Lr::Constant, Lr::DecayingSq, Lr::Cosine, Lr::Polynomial] {
        for bs in [Bs::Constant, Bs::Exponential] {
            let s = set(
                bs_kind(bs),
                lr_kind(lr),
                ScheduleKind::StepDecay { max: BETA_MAX, ratio: ZETA, interval: E },
                ScheduleKind::StepDecay { max: GAMMA_MAX, ratio: LAMBDA, interval: E },
            );
            let case = corollary1_case(&s).map_err(|e| e.to_string())?;
            for k in KS {
                let plan = expand_covering(&s, N, k).map_err(|e| e.to_string())?;
                let sums = exact_sums_thm1(&plan).map_err(|e| e.to_string())?;
                let steps = oracle_steps(lr, bs, &step_decay_beta, &step_decay_gamma, k);
                let mass: f64 = steps.iter().map(|r| r[0]).sum();
                let oracle = [
                    1.0 / mass,
                    steps.iter().map(|r| r[0] * r[0] / r[1]).sum::<f64>() / mass,
                    steps.iter().map(|r| r[2] * r[3]).sum::<f64>() / mass,
                ];
                let exact = [sums.a, sums.b, sums.c];
                let up = corollary1_upper(&case, N, k).map_err(|e| e.to_string())?;
                let lib_up = [up.a, up.b, up.c];
                let paper_up = oracle_cor1(lr, bs, k);
                for i in 0..3 {
                    let term = ["A", "B", "C"][i];
                    check(close(exact[i], oracle[i], 1e-10), || {
                        format!("{lr:?}/{bs:?} K={k} {term}: library sum {} vs oracle {}", exact[i], oracle[i])
                    })?;
                    check(close(lib_up[i], paper_up[i], 1e-14), || {
                        format!("{lr:?}/{bs:?} K={k} {term}: closed form {} vs {}", lib_up[i], paper_up[i])
                    })?;
                    check(exact[i] <= lib_up[i] * (1.0 + 1e-12), || {
                        format!("{lr:?}/{bs:?} K={k} {term}: exact {} > bound {}", exact[i], lib_up[i])
                    })?;
                    tightest = tightest.max(exact[i] / lib_up[i]);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} sum/bound pairs dominated, max exact/bound = {tightest:.6}"))
}

fn oracle_cor2(lr: Lr, bs: Bs, k: usize) -> [f64; 4] {
    let kf = k as f64;
    let s = (kf + 1.0).sqrt() - 1.0;
    let lg = (kf + 1.0).ln();
    let am = ALPHA_MAX;
    let t0 = (N as f64 / match bs { Bs::Constant => B_CONST, Bs::Exponential => B0 } as f64).ceil();
    let (b, b0, d, e) = (B_CONST as f64, B0 as f64, DELTA, E as f64);
    match lr {
        Lr::DecayingSq => {
            let bb = match bs {
                Bs::Constant => kf * (1.0 - BETA_MAX) / (2.0 * b * am * s),
                Bs::Exponential => (1.0 - BETA_MAX) * t0 * e * d / (2.0 * b0 * am * (d - 1.0) * s),
            };
            let c = am * t0 * (1.0 + lg) / (2.0 * s);
            [1.0 / (2.0 * am * s), bb, c, c / (1.0 - BETA_MAX)]
        }
        Lr::Decaying => {
            let bb = match bs {
                Bs::Constant => t0 * (1.0 + 4.0 * (1.0 - BETA_MIN) * (kf + 1.0).powf(0.25)) / (b * am * lg),
                Bs::Exponential => (1.0 - BETA_MIN) * t0 * e * d / (b0 * am * (d - 1.0) * lg),
            };
            [1.0 / (am * lg), bb, 2.0 * am * t0 / lg, 2.0 * am * t0 / ((1.0 - BETA_MIN) * lg)]
        }
        _ => unreachable!(),
    }
}

fn corollary2_domination() -> Outcome {
    let increasing = |m: usize| 1.0 - (1.0 - BETA_MIN) / ((m + 1) as f64).powf(0.75);
    let fixed = |_: usize| BETA_MAX;
    let zero = |_: usize| 0.0;
    let mut checked = 0;
    let mut tightest: f64 = 0.0;
    for (lr, beta_kind, beta_fn) in [
        (Lr::DecayingSq, constant(BETA_MAX), &fixed as &dyn Fn(usize) -> f64),
        (Lr::Decaying, ScheduleKind::IncreasingBeta { beta_min: BETA_MIN }, &increasing as &dyn Fn(usize) -> f64),
    ] {
        for bs in [Bs::Constant, Bs::Exponential] {
            let s = set(bs_kind(bs), lr_kind(lr), beta_kind.clone(), constant(0.5));
            let case = corollary2_case(&s).map_err(|e| e.to_string())?;
            for k in KS {
                let plan = expand_covering(&s, N, k).map_err(|e| e.to_string())?;
                check(validate_thm2_condition(&plan), || format!("{lr:?}/{bs:?} K={k}: step condition fails"))?;
                let sums = exact_sums_thm2(&plan).map_err(|e| e.to_string())?;
                let steps = oracle_steps(lr, bs, beta_fn, &zero, k);
                let mass: f64 = steps.iter().map(|r| r[0]).sum();
                let oracle = [
                    1.0 / mass,
                    steps.iter().map(|r| (1.0 - r[2]) / r[1]).sum::<f64>() / mass,
                    steps.iter().map(|r| r[0] * r[0]).sum::<f64>() / mass,
                    steps.iter().map(|r| r[0] * r[0] / (1.0 - r[2])).sum::<f64>() / mass,
                ];
                let exact = [sums.a, sums.b, sums.c, sums.d];
                let up = corollary2_upper(&case, N, k).map_err(|e| e.to_string())?;
                let lib_up = [up.a, up.b, up.c, up.d];
                let paper_up = oracle_cor2(lr, bs, k);
                for i in 0..4 {
                    let term = ["A", "B'", "C'", "D'"][i];
                    check(close(exact[i], oracle[i], 1e-10), || {
                        format!("{lr:?}/{bs:?} K={k} {term}: library sum {} vs oracle {}", exact[i], oracle[i])
                    })?;
                    check(close(lib_up[i], paper_up[i], 1e-14), || {
                        format!("{lr:?}/{bs:?} K={k} {term}: closed form {} vs {}", lib_up[i], paper_up[i])
                    })?;
                    check(exact[i] <= lib_up[i] * (1.0 + 1e-12), || {
                        format!("{lr:?}/{bs:?} K={k} {term}: exact {} > bound {}", exact[i], lib_up[i])
                    })?;
                    tightest = tightest.max(exact[i] / lib_up[i]);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} sum/bound pairs dominated, max exact/bound = {tightest:.6}"))
}

/// Least-squares slope of `log y` against `log x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn rate_slopes() -> Outcome {
    let ks: Vec<usize> = (0..=20).map(|i| (1e3 * 10f64.powf(i as f64 / 10.0)).round() as usize).collect();
    let mut report = Vec::new();
    for (lr, target) in [(Lr::Constant, -1.0), (Lr::Cosine, -1.0), (Lr::Polynomial, -1.0), (Lr::DecayingSq, -0.5)] {
        let s = set(bs_kind(Bs::Constant), lr_kind(lr), constant(0.0), constant(0.0));
        let mut pts = Vec::new();
        for &k in &ks {
            let plan = expand_covering(&s, N, k).map_err(|e| e.to_string())?;
            pts.push((k as f64, exact_sums_thm1(&plan).map_err(|e| e.to_string())?.a));
        }
        let slope = loglog_slope(&pts);
        check((slope - target).abs() <= 0.05, || format!("{lr:?}: slope {slope:.4}, expected {target} +- 0.05"))?;
        report.push(format!("{lr:?} {slope:.4}"));
    }
    Ok(report.join(", "))
}

fn thm1_empirical() -> Outcome {
    let p = make_noisy_quadratic(10, 256, 1, 10.0).map_err(|e| e.to_string())?;
    let c = p.constants();
    let l = c.smoothness.ok_or("L missing")?;
    let s = set(constant(16.0), constant(1.0 / l), constant(0.9), constant(0.0));
    let k = 1000;
    let plan = expand_covering(&s, p.n(), k).map_err(|e| e.to_string())?;
    let x0 = vec![3.0; 10];
    let df = p.loss(&x0) - c.f_star.ok_or("f_star missing")?;
    let consts = Thm1Constants::from_plan(&plan, df, l, c.sigma2.ok_or("sigma2 missing")?, 0.0);
    let rhs = thm1_rhs(&consts, &exact_sums_thm1(&plan).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let cfg = TrajectoryConfig {
        problem: &p,
        plan: &plan,
        optimizer: OptimizerKind::Qhm,
        init: Init::Fixed(x0),
        eval: EvalEvery::Step,
    };
    let seeds: Vec<u64> = (0..30).collect();
    let mut mins = Vec::new();
    for r in run_seeds(&cfg, &seeds) {
        let t = r.map_err(|e| e.to_string())?;
        check(t.diverged.is_none(), || format!("seed {} diverged", t.seed))?;
        mins.push(t.min_grad_sq_before(k).ok_or("no evaluations")?);
    }
    let mean = mins.iter().sum::<f64>() / mins.len() as f64;
    check(mean <= rhs, || format!("mean min ||grad f||^2 = {mean} exceeds bound {rhs}"))?;
    Ok(format!("mean min ||grad f||^2 = {mean:.4e} <= bound {rhs:.4e} (30 seeds, K = {k})"))
}

fn noise_floor() -> Outcome {
    let p = make_noisy_quadratic(10, 4096, 1, 10.0).map_err(|e| e.to_string())?;
    let epochs = 60;
    let seeds: Vec<u64> = (0..10).collect();
    let run = |batch: ScheduleKind| -> Result<Vec<Vec<f64>>, String> {
        let s = set(batch, constant(0.05), constant(0.0), constant(0.0));
        let plan = expand(&s, p.n(), epochs).map_err(|e| e.to_string())?;
        let cfg = TrajectoryConfig {
            problem: &p,
            plan: &plan,
            optimizer: OptimizerKind::Sgd,
            init: Init::Fixed(vec![3.0; 10]),
            eval: EvalEvery::Epoch,
        };
        run_seeds(&cfg, &seeds)
            .into_iter()
            .map(|r| r.map(|t| t.rows.iter().map(|row| row.full_grad_norm.powi(2)).collect()).map_err(|e| e.to_string()))
            .collect()
    };
    // mean over seeds and the second half of the epochs
    let plateau = |runs: &[Vec<f64>]| {
        let tail: Vec<f64> = runs.iter().flat_map(|r| r[epochs / 2..].iter().copied()).collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    let small = run(constant(16.0))?;
    let large = run(constant(256.0))?;
    let growing = run(ScheduleKind::ExponentialBs { b0: 8, delta: 2.0, interval: 5 })?;
    let (p16, p256) = (plateau(&small), plateau(&large));
    let ratio = p16 / p256;
    check((8.0..=32.0).contains(&ratio), || format!("plateau ratio {ratio:.3} outside [8, 32]"))?;
    let final_min = growing.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).sum::<f64>()
        / growing.len() as f64;
    check(final_min * 10.0 <= p16, || format!("increasing batch reaches {final_min:.3e}, b=16 plateau {p16:.3e}"))?;
    Ok(format!(
        "plateau(16)/plateau(256) = {ratio:.2}; increasing batch min {final_min:.2e} = plateau(16)/{:.0}",
        p16 / final_min
    ))
}

fn estimator_statistics() -> Outcome {
    let draws = 100_000;
    let problems: Vec<(Box<dyn FiniteSumProblem>, Vec<f64>)> = vec![
        (Box::new(make_noisy_quadratic(5, 200, 2, 4.0).map_err(|e| e.to_string())?), vec![0.3, -0.2, 0.1, 0.5, -0.4]),
        (Box::new(make_sigmoid_sum(5, 200, 2).map_err(|e| e.to_string())?), vec![0.3, -0.2, 0.1, 0.5, -0.4]),
    ];
    let mut worst_z: f64 = 0.0;
    let mut worst_var_ratio: f64 = 0.0;
    for (p, x) in &problems {
        let sigma2 = p.constants().sigma2.ok_or("sigma2 missing")?;
        let full = full_grad_vec(p.as_ref(), x);
        let d = full.len();
        for b in [1usize, 4, 16] {
            let mut sampler = BatchSampler::new(b as u64 + 100, p.n());
            let mut g = vec![0.0; d];
            let mut sum = vec![0.0; d];
            let mut sum_sq = vec![0.0; d];
            let mut dev_sq = 0.0;
            for _ in 0..draws {
                sample_batch_grad(p.as_ref(), &mut sampler, x, b, &mut g).map_err(|e| e.to_string())?;
                for j in 0..d {
                    sum[j] += g[j];
                    sum_sq[j] += g[j] * g[j];
                    dev_sq += (g[j] - full[j]).powi(2);
                }
            }
            let nf = draws as f64;
            for j in 0..d {
                let mean = sum[j] / nf;
                let var = (sum_sq[j] / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
                let se = (var / nf).sqrt();
                let z = (mean - full[j]).abs() / se.max(f64::MIN_POSITIVE);
                worst_z = worst_z.max(z);
                check(z <= 4.0, || format!("{} b={b} coordinate {j}: bias {z:.2} standard errors", p.name()))?;
            }
            let var_ratio = (dev_sq / nf) / (sigma2 / b as f64);
            worst_var_ratio = worst_var_ratio.max(var_ratio);
            check(var_ratio <= 1.05, || format!("{} b={b}: variance {var_ratio:.4} x sigma^2/b", p.name()))?;
        }
    }
    Ok(format!("max |bias| = {worst_z:.2} SE, max variance / (sigma^2/b) = {worst_var_ratio:.4}"))
}

fn gradient_oracles() -> Outcome {
    let problems: Vec<Box<dyn FiniteSumProblem>> = vec![
        Box::new(make_noisy_quadratic(6, 50, 5, 20.0).map_err(|e| e.to_string())?),
        Box::new(make_sigmoid_sum(6, 50, 5).map_err(|e| e.to_string())?),
        Box::new(make_logistic(6, 50, 5).map_err(|e| e.to_string())?),
    ];
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for p in &problems {
        for _ in 0..100 {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = full_grad_vec(p.as_ref(), &x);
            let mut fd = vec![0.0; x.len()];
            for j in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                fd[j] = (p.loss(&xp) - p.loss(&xm)) / (2.0 * h);
            }
            let diff = norm(&g.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
            let rel = diff / norm(&g).max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
            check(rel <= 1e-5, || format!("{}: relative error {rel:e}", p.name()))?;
        }
    }
    Ok(format!("max relative error {worst:.2e} over 3 problems x 100 points"))
}
