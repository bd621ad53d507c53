//! Numerical verification suites for the convergence analysis.
//!
//! Every suite is deterministic: fuzz case `i` draws from `Rng::new(i)`
//! offset by a per-check constant.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector, Rng};
use crate::optimizers::{GradientBound, HeavyBallState, InlineAvgState, MadgradState};
use crate::presets;
use crate::problems::{L1Median, Problem, SparseBagOfWords};
use crate::runner::{run_on, RunConfig};
use crate::schedules::{ck_lemma_worst_slack, MomentumSchedule, StepSizeSchedule};
use crate::theory::{
    adaptive_bounds, allocation_objective, check_lyapunov_trace, check_support_properties,
    cube_root_allocation, effective_step_deviation, error_sum_lemma_sides,
    implicit_regularization_deviation, slack, sqrt_sum, sqrt_sum_bound, stationarity_spread,
    theorem1_prebound, theorem1_rhs, AdaptiveConvention, BoundInputs, CheckRow, DiagScaling,
    IndexConvention, Report, StepCheck, TheoryTrace,
};

pub const SUITES: &[&str] = &[
    "lemmas",
    "support",
    "lyapunov",
    "theorem1",
    "allocation",
    "identities",
    "momentum",
    "sparsity",
    "adaptive",
];

/// Runs one suite by name, or every suite for `"all"`.
pub fn verify(suite: &str) -> Result<Report> {
    match suite {
        "all" => {
            let mut report = Report::default();
            for s in SUITES {
                report.extend(verify(s)?);
            }
            Ok(report)
        }
        "lemmas" => lemmas(10_000),
        "support" => support(1_000),
        "lyapunov" => lyapunov(5, 1_000),
        "theorem1" => theorem1(),
        "allocation" => allocation(100),
        "identities" => identities(1_000),
        "momentum" => momentum(1_000),
        "sparsity" => sparsity(1_000),
        "adaptive" => adaptive(),
        other => Err(Error::UnknownSuite(
            other.to_string(),
            format!("all, {}", SUITES.join(", ")),
        )),
    }
}

/// Outcome of one fuzz case: a violation measure (`<= 0` or below the
/// check's threshold when it passes) and, on failure, the inputs.
type Case = (f64, Option<String>);

/// Seed, checks against `x*`, checks against another comparator.
type TraceChecks = (u64, Vec<StepCheck>, Vec<StepCheck>);

/// Runs `n` cases in parallel and keeps the worst measure and the first
/// failure by case index.
fn fuzz(name: &str, n: usize, case: impl Fn(usize) -> Result<Case> + Sync) -> Result<CheckRow> {
    let results = (0..n)
        .into_par_iter()
        .map(&case)
        .collect::<Result<Vec<_>>>()?;
    let worst = results
        .iter()
        .map(|r| r.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let failure = results.into_iter().find_map(|r| r.1);
    Ok(CheckRow::new(name, n, worst, failure))
}

fn fail_if(bad: bool, describe: impl FnOnce() -> String) -> Option<String> {
    bad.then(describe)
}

/// Error-sum lemma and the `c_k` weighting lemma on random valid inputs.
pub fn lemmas(cases: usize) -> Result<Report> {
    let error_sum = |name: &str, offset: u64, sqrt_weights: bool| {
        fuzz(name, cases, |i| {
            let mut rng = Rng::new(offset + i as u64);
            let len = 1 + rng.below(30);
            let dim = 1 + rng.below(3);
            let g_bound = 2.0;
            let mut lambdas = Vec::with_capacity(len);
            let mut last: f64 = 0.0;
            for t in 0..len {
                let next = if sqrt_weights {
                    ((t + 1) as f64).sqrt()
                } else {
                    last + rng.uniform() * 2.0 + if t == 0 { 1e-3 } else { 0.0 }
                };
                lambdas.push(next);
                last = next;
            }
            let rows: Vec<Vec<f64>> = (0..len)
                .map(|_| {
                    (0..dim)
                        .map(|_| match rng.below(8) {
                            0 => g_bound,
                            1 => -g_bound,
                            2 => 0.0,
                            _ => rng.uniform_in(-g_bound, g_bound),
                        })
                        .collect()
                })
                .collect();
            let sides = error_sum_lemma_sides(&lambdas, &rows, g_bound)?;
            let worst = sides
                .iter()
                .map(|(l, r)| (l - r) / r.abs().max(1.0))
                .fold(f64::NEG_INFINITY, f64::max);
            let bad = sides.iter().any(|(l, r)| *l > r + slack(1e-12, *r));
            Ok((
                worst,
                fail_if(bad, || {
                    format!("lambdas={lambdas:?} g={rows:?} G={g_bound}")
                }),
            ))
        })
    };
    let mut report = Report::default();
    report.push(error_sum("error-sum lemma, sqrt weights", 0, true)?);
    report.push(error_sum(
        "error-sum lemma, random weights",
        1 << 32,
        false,
    )?);
    report.push(fuzz("c_k weighting lemma", cases, |i| {
        let mut rng = Rng::new((2 << 32) + i as u64);
        let r = rng.uniform_in(1e-3, 1.0 - 1e-3);
        let j = if rng.below(4) == 0 {
            0.0
        } else {
            rng.uniform_in(0.0, 10.0)
        };
        let k_max = 1 + rng.below(200) as u64;
        let worst = ck_lemma_worst_slack(r, j, k_max)?;
        Ok((
            worst,
            fail_if(worst > 0.0, || format!("r={r} j={j} k_max={k_max}")),
        ))
    })?);
    Ok(report)
}

/// Gradient, smoothness and monotonicity of the support function.
pub fn support(cases: usize) -> Result<Report> {
    let results = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::new((3 << 32) + i as u64);
            let dim = 1 + rng.below(6);
            let a: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.1, 5.0)).collect();
            let a_next: Vec<f64> = a
                .iter()
                .map(|v| {
                    if rng.below(4) == 0 {
                        *v
                    } else {
                        v + rng.uniform_in(0.0, 2.0)
                    }
                })
                .collect();
            let s = rng.normal_vector(dim).scaled(3.0);
            let delta = rng.normal_vector(dim);
            let x0 = rng.normal_vector(dim);
            let rep = check_support_properties(
                &DiagScaling::new(ParamVector::new(a.clone()))?,
                &DiagScaling::new(ParamVector::new(a_next.clone()))?,
                &s,
                &delta,
                &x0,
            )?;
            let inputs = format!("a={a:?} a_next={a_next:?} s={s:?} delta={delta:?} x0={x0:?}");
            Ok((rep, inputs))
        })
        .collect::<Result<Vec<_>>>()?;
    let row = |name: &str,
               measure: &dyn Fn(&crate::theory::SupportReport) -> f64,
               ok: &dyn Fn(&crate::theory::SupportReport) -> bool| {
        let worst = results
            .iter()
            .map(|(r, _)| measure(r))
            .fold(f64::NEG_INFINITY, f64::max);
        let failure = results.iter().find(|(r, _)| !ok(r)).map(|(_, s)| s.clone());
        CheckRow::new(name, results.len(), worst, failure)
    };
    let mut report = Report::default();
    report.push(row(
        "support gradient vs finite differences",
        &|r| r.gradient_rel_err,
        &|r| r.gradient,
    ));
    report.push(row("support smoothness", &|r| -r.smoothness_margin, &|r| {
        r.smoothness
    }));
    report.push(row(
        "support decrease under growth",
        &|r| -r.decrease_margin,
        &|r| r.decrease,
    ));
    Ok(report)
}

/// The L1 median problem used by the trajectory checks.
fn l1_problem(dim: usize) -> Result<L1Median> {
    L1Median::random(dim, 101, 0.0, 2.0, 0)
}

/// Per-step inequality along theoretical-variant trajectories.
pub fn lyapunov(seeds: u64, steps: usize) -> Result<Report> {
    let p = l1_problem(10)?;
    let x0 = ParamVector::zeros(10);
    let t = theorem1_rhs(
        &BoundInputs {
            k: steps as u64,
            dim: 10,
            g_bound: 1.0,
            dist0: x0.sub(p.optimum())?.l2(),
        },
        IndexConvention::Statement,
    )?;
    let schedule = StepSizeSchedule::Constant { gamma: t.gamma_opt };
    let off_optimum = ParamVector::new((0..10).map(|d| 3.0 - 0.5 * d as f64).collect());
    let traces = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let state = MadgradState::theoretical(x0.clone(), GradientBound::Uniform(1.0))?;
            let trace = TheoryTrace::record(
                &p,
                state,
                &schedule,
                &MomentumSchedule::theorem(),
                steps,
                seed,
            )?;
            let at_opt = check_lyapunov_trace(&trace, &p, p.optimum())?;
            let at_other = check_lyapunov_trace(&trace, &p, &off_optimum)?;
            Ok((seed, at_opt, at_other))
        })
        .collect::<Result<Vec<_>>>()?;
    let row = |name: &str, pick: &dyn Fn(&TraceChecks) -> Vec<StepCheck>| {
        let mut cases = 0;
        let mut worst = f64::NEG_INFINITY;
        let mut failure = None;
        for entry in &traces {
            for c in pick(entry) {
                cases += 1;
                worst = worst.max((c.lhs - c.rhs) / c.tolerance);
                if !c.holds && failure.is_none() {
                    failure = Some(format!(
                        "seed={} k={} lhs={} rhs={} tol={}",
                        entry.0, c.k, c.lhs, c.rhs, c.tolerance
                    ));
                }
            }
        }
        CheckRow::new(name, cases, worst, failure)
    };
    let mut report = Report::default();
    report.push(row("lyapunov base case k=0", &|e| e.1[..1].to_vec()));
    report.push(row("lyapunov per-step, u = x*", &|e| e.1.clone()));
    report.push(row("lyapunov per-step, u != x*", &|e| e.2.clone()));
    Ok(report)
}

/// Seed-averaged suboptimality of a theoretical-variant run against the
/// bound at each recorded `k >= min_k`. Returns the check row.
pub fn theorem1_empirical(config: &RunConfig, min_k: u64) -> Result<CheckRow> {
    let problem = config.problem.build()?;
    let g_bound = problem
        .g_inf_bound()
        .ok_or_else(|| Error::config("problem has no gradient bound"))?;
    let dist0 = ParamVector::filled(problem.dim(), config.x0)
        .sub(problem.optimum())?
        .l2();
    let out = run_on(config, problem.clone())?;
    if let Some(rec) = out.records.iter().find(|r| r.diverged()) {
        return Ok(CheckRow::new(
            "theorem1 empirical bound",
            0,
            f64::INFINITY,
            Some(format!(
                "seed {} halted: {}",
                rec.seed,
                rec.halted.as_deref().unwrap_or("")
            )),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut failure = None;
    let mut cases = 0;
    for row in out.aggregate.iter().filter(|r| r.k >= min_k) {
        let bound = theorem1_rhs(
            &BoundInputs {
                k: row.k,
                dim: problem.dim(),
                g_bound,
                dist0,
            },
            IndexConvention::Statement,
        )?
        .bound;
        let lower = row.subopt_mean() - row.subopt_two_se();
        cases += 1;
        worst = worst.max((lower - bound) / bound);
        if lower > bound && failure.is_none() {
            failure = Some(format!(
                "k={} mean={} 2se={} bound={bound}",
                row.k,
                row.subopt_mean(),
                row.subopt_two_se()
            ));
        }
    }
    Ok(CheckRow::new(
        "theorem1 empirical bound",
        cases,
        worst,
        failure,
    ))
}

pub fn theorem1() -> Result<Report> {
    let mut report = Report::default();
    report.push(theorem1_empirical(
        &presets::get("theorem1-l1-median")?,
        100,
    )?);
    report.push(fuzz("gamma_opt minimizes the pre-bound", 200, |i| {
        let mut rng = Rng::new((4 << 32) + i as u64);
        let b = BoundInputs {
            k: 1 + rng.below(100_000) as u64,
            dim: 1 + rng.below(100),
            g_bound: 10f64.powf(rng.uniform_in(-2.0, 2.0)),
            dist0: 10f64.powf(rng.uniform_in(-2.0, 2.0)),
        };
        let gamma = theorem1_rhs(&b, IndexConvention::Derivation)?.gamma_opt;
        let at_opt = theorem1_prebound(&b, gamma)?;
        let mut grid_min = f64::INFINITY;
        for n in 0..=600 {
            let g = gamma * 10f64.powf(-3.0 + 6.0 * n as f64 / 600.0);
            grid_min = grid_min.min(theorem1_prebound(&b, g)?);
        }
        let excess = (at_opt - grid_min) / grid_min;
        Ok((
            excess,
            fail_if(excess > 1e-12, || format!("{b:?} gamma={gamma}")),
        ))
    })?);
    report.push(fuzz("summation property", 10_000, |k| {
        let (lhs, rhs) = (sqrt_sum(k as u64), sqrt_sum_bound(k as u64));
        let excess = (lhs - rhs) / rhs;
        Ok((excess, fail_if(excess > 1e-12, || format!("k={k}"))))
    })?);
    Ok(report)
}

/// Closed-form cube-root allocation: feasibility, stationarity, and
/// optimality against random feasible points.
pub fn allocation(cases: usize) -> Result<Report> {
    let instance = |i: usize| {
        let mut rng = Rng::new((5 << 32) + i as u64);
        let dim = 1 + rng.below(8);
        let q: ParamVector = (0..dim)
            .map(|_| 10f64.powf(rng.uniform_in(-3.0, 1.0)))
            .collect::<Vec<_>>()
            .into();
        let c = rng.uniform_in(0.1, 10.0);
        (rng, q, c)
    };
    let mut report = Report::default();
    report.push(fuzz("allocation sum of squares = c", cases, |i| {
        let (_, q, c) = instance(i);
        let s = cube_root_allocation(&q, c)?;
        let err = (s.iter().map(|v| v * v).sum::<f64>() - c).abs() / c;
        Ok((err, fail_if(err > 1e-10, || format!("q={q:?} c={c}"))))
    })?);
    report.push(fuzz("allocation stationarity spread", cases, |i| {
        let (_, q, c) = instance(i);
        let spread = stationarity_spread(&q, &cube_root_allocation(&q, c)?)?;
        Ok((spread, fail_if(spread > 1e-9, || format!("q={q:?} c={c}"))))
    })?);
    report.push(fuzz(
        "allocation beats random feasible points",
        cases,
        |i| {
            let (mut rng, q, c) = instance(i);
            let s = cube_root_allocation(&q, c)?;
            let best = allocation_objective(&q, &s)?;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..10_000 {
                let raw: Vec<f64> = (0..q.len()).map(|_| rng.uniform_in(1e-3, 1.0)).collect();
                let norm = (raw.iter().map(|v| v * v).sum::<f64>() / c).sqrt();
                let p: ParamVector = raw.iter().map(|v| v / norm).collect::<Vec<_>>().into();
                worst = worst.max((best - allocation_objective(&q, &p)?) / best);
            }
            Ok((worst, fail_if(worst > 1e-12, || format!("q={q:?} c={c}"))))
        },
    )?);
    Ok(report)
}

/// The dual-averaging rewrites, on random gradient streams.
pub fn identities(steps: usize) -> Result<Report> {
    let stream = |seed: u64| {
        let mut rng = Rng::new(seed);
        let x0 = rng.normal_vector(7);
        let grads: Vec<ParamVector> = (0..steps).map(|_| rng.normal_vector(7)).collect();
        (x0, grads)
    };
    let mut report = Report::default();
    report.push(fuzz("implicit regularization rewrite", 5, |i| {
        let (x0, g) = stream((6 << 32) + i as u64);
        let dev = implicit_regularization_deviation(&x0, &g)?;
        Ok((dev, fail_if(dev > 1e-10, || format!("stream seed {i}"))))
    })?);
    report.push(fuzz("effective step decomposition", 5, |i| {
        let (x0, g) = stream((7 << 32) + i as u64);
        let gamma = [0.5, 0.05, 0.005, 1.0, 0.1][i % 5];
        let dev = effective_step_deviation(&x0, &g, gamma)?;
        Ok((
            dev,
            fail_if(dev > 1e-10, || format!("stream seed {i} gamma={gamma}")),
        ))
    })?);
    Ok(report)
}

/// Largest coordinate gap between inline averaging with `(eta, c)` and heavy
/// ball with `(beta, alpha) = (1 - c, c * eta)` driven by the same gradients.
pub fn momentum_deviation(dim: usize, steps: usize, eta: f64, c: f64, seed: u64) -> Result<f64> {
    let mut rng = Rng::new(seed);
    let x0 = rng.normal_vector(dim);
    let mut inline = InlineAvgState::new(x0.clone(), eta, c)?;
    let (beta, alpha) = inline.heavy_ball_equivalent();
    let mut hb = HeavyBallState::new(x0, alpha, beta)?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let g = GradSample::Dense(rng.normal_vector(dim));
        inline.step(&g)?;
        hb.step(&g)?;
        worst = worst.max(inline.x().sub(hb.x())?.linf());
    }
    Ok(worst)
}

pub fn momentum(steps: usize) -> Result<Report> {
    let mut report = Report::default();
    report.push(fuzz("inline averaging = heavy ball", 20, |i| {
        let mut rng = Rng::new((8 << 32) + i as u64);
        let eta = 10f64.powf(rng.uniform_in(-3.0, -1.0));
        let c = rng.uniform_in(0.05, 1.0);
        let dev = momentum_deviation(10, steps, eta, c, rng.next_u64())?;
        Ok((
            dev,
            fail_if(dev > 1e-9, || format!("case {i} eta={eta} c={c}")),
        ))
    })?);
    Ok(report)
}

/// Runs practical MADGRAD with `c = 1` on sparse gradients and returns
/// `(untouched coordinates, how many of them moved)`.
pub fn sparse_untouched(
    problem: &SparseBagOfWords,
    steps: usize,
    seed: u64,
) -> Result<(usize, usize)> {
    let mut rng = Rng::new(seed);
    let x0 = rng.normal_vector(problem.dim());
    let mut st = MadgradState::new(x0.clone(), 1e-6)?;
    let mut touched = vec![false; problem.dim()];
    for _ in 0..steps {
        let xi = problem.sample(&mut rng);
        let g = problem.grad(st.x(), xi)?;
        for (d, _) in g.entries() {
            touched[d] = true;
        }
        st.step(&g, 0.05, 1.0)?;
    }
    let untouched: Vec<usize> = (0..problem.dim()).filter(|d| !touched[*d]).collect();
    let moved = untouched
        .iter()
        .filter(|d| st.x()[**d].to_bits() != x0[**d].to_bits())
        .count();
    Ok((untouched.len(), moved))
}

const SPARSE_AVERAGING_CONFIG: &str = r#"
name = "sparse-averaging"
steps = 10
seeds = 1

[problem]
kind = "sparse-bag-of-words"
vocab = 50
docs = 200

[optimizer]
kind = "madgrad"

[schedule]
kind = "constant"
gamma = 0.01

[momentum]
kind = "constant"
c = 0.9
"#;

pub fn sparsity(steps: usize) -> Result<Report> {
    let mut report = Report::default();
    let problem = SparseBagOfWords::generate(600, 12_000, 2, 11)?;
    let mut cases = 0;
    let mut moved_total = 0;
    for seed in 0..3 {
        let (untouched, moved) = sparse_untouched(&problem, steps, seed)?;
        cases += untouched;
        moved_total += moved;
    }
    report.push(CheckRow::new(
        "sparse untouched coordinates unchanged",
        cases,
        moved_total as f64,
        fail_if(moved_total > 0 || cases == 0, || {
            format!("{moved_total} of {cases} untouched coordinates moved")
        }),
    ));
    let cfg = RunConfig::from_toml(SPARSE_AVERAGING_CONFIG)?;
    let rejected = match cfg.problem.build().and_then(|p| cfg.validate(p.as_ref())) {
        Err(Error::Config(msg)) => msg.contains("c = 1"),
        _ => false,
    };
    report.push(CheckRow::new(
        "sparse config with c != 1 rejected",
        1,
        0.0,
        fail_if(!rejected, || {
            "c = 0.9 on a sparse problem was accepted".into()
        }),
    ));
    Ok(report)
}

/// Bounds under per-step gradient bounds: the constant-G closed form and
/// the faster decay after one early outlier.
pub fn adaptive() -> Result<Report> {
    let mut report = Report::default();
    let (m0, a0) = adaptive_bounds(&[1.0], 1.0, 1, AdaptiveConvention::SameLimit)?;
    let err0 = (m0 - 6.0).abs().max((a0 - 6.0).abs());
    report.push(CheckRow::new(
        "adaptive k=0",
        1,
        err0,
        fail_if(err0 > 1e-12, || format!("madgrad={m0} adagrad={a0}")),
    ));
    report.push(fuzz("adaptive constant G", 200, |i| {
        let mut rng = Rng::new((9 << 32) + i as u64);
        let k = rng.below(5_000) as u64;
        let g = rng.uniform_in(0.1, 10.0);
        let dist0 = rng.uniform_in(0.1, 10.0);
        let dim = 1 + rng.below(50);
        let hist = vec![g; k as usize + 1];
        let (m, _) = adaptive_bounds(&hist, dist0, dim, AdaptiveConvention::SameLimit)?;
        let scale = 6.0 * dist0 * (dim as f64).sqrt() * g / ((k + 1) as f64).powf(1.25);
        let closed = scale * sqrt_sum(k).sqrt();
        let relaxed = scale * sqrt_sum_bound(k).sqrt();
        let err = (m - closed).abs() / closed;
        let over = (m - relaxed) / relaxed;
        let bad = err > 1e-9 || over > 1e-12;
        Ok((
            err.max(over),
            fail_if(bad, || format!("k={k} G={g} dist0={dist0} D={dim}")),
        ))
    })?);
    let ratios: Vec<(u64, f64)> = [1u64, 10, 100, 1_000, 10_000]
        .iter()
        .map(|&k| {
            let mut hist = vec![1e-3; k as usize + 1];
            hist[0] = 100.0;
            let (m, a) = adaptive_bounds(&hist, 1.0, 4, AdaptiveConvention::SameLimit)?;
            Ok((k, m / a))
        })
        .collect::<Result<_>>()?;
    let monotone = ratios.windows(2).all(|w| w[1].1 < w[0].1);
    let worst = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    report.push(CheckRow::new(
        "adaptive outlier ratio below 1 and falling",
        ratios.len(),
        worst,
        fail_if(!monotone || worst >= 1.0, || format!("ratios {ratios:?}")),
    ));
    Ok(report)
}
