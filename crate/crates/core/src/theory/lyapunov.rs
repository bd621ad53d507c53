use super::{slack, support_value, DiagScaling};
use crate::error::{Error, Result};
use crate::numerics::{weighted_inv_sq_norm, ParamVector, Rng};
use crate::optimizers::{GradientBound, MadgradState, Optimizer, StepControl};
use crate::problems::{Problem, Sample};
use crate::schedules::{momentum_coeff, step_size, MomentumSchedule, StepSizeSchedule};

/// Quantities seen by step `k`, before it is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub xi: Sample,
    /// `x_k`, where the gradient is evaluated.
    pub x: ParamVector,
    pub s: ParamVector,
    pub nu: ParamVector,
    pub g: ParamVector,
    pub lambda: f64,
    pub lambda_next: f64,
    /// Weight that produces `x_{k+1}` from `x_k`.
    pub c_next: f64,
}

/// A MADGRAD run with everything needed to evaluate the per-step inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryTrace {
    pub x0: ParamVector,
    pub bound: Option<GradientBound>,
    pub steps: Vec<TraceStep>,
    pub final_s: ParamVector,
    pub final_nu: ParamVector,
    pub final_x: ParamVector,
}

impl TheoryTrace {
    /// Runs `steps` steps from `state` on `problem`, sampling with `seed`.
    pub fn record(
        problem: &dyn Problem,
        mut state: MadgradState,
        schedule: &StepSizeSchedule,
        momentum: &MomentumSchedule,
        steps: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let mut out = Vec::with_capacity(steps);
        for k in 0..steps as u64 {
            let xi = problem.sample(&mut rng);
            let g = problem.grad(state.x(), xi)?;
            let ctl = StepControl {
                gamma: step_size(schedule, k),
                gamma_next: step_size(schedule, k + 1),
                c_next: momentum_coeff(momentum, k),
            };
            out.push(TraceStep {
                xi,
                x: state.x().clone(),
                s: state.s().clone(),
                nu: state.nu().clone(),
                g: g.to_dense(),
                lambda: ctl.gamma * (k as f64 + 1.0).sqrt(),
                lambda_next: ctl.gamma_next * (k as f64 + 2.0).sqrt(),
                c_next: ctl.c_next,
            });
            Optimizer::step(&mut state, &g, &ctl)?;
        }
        Ok(TheoryTrace {
            x0: state.x0().clone(),
            bound: state.gradient_bound().cloned(),
            steps: out,
            final_s: state.s().clone(),
            final_nu: state.nu().clone(),
            final_x: state.x().clone(),
        })
    }

    fn after(&self, k: usize) -> (&ParamVector, &ParamVector) {
        match self.steps.get(k + 1) {
            Some(next) => (&next.s, &next.nu),
            None => (&self.final_s, &self.final_nu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCheck {
    pub k: usize,
    /// `V_{A_{k+1}}(-s_{k+1})`.
    pub lhs: f64,
    pub rhs: f64,
    /// Absolute slack allowed, `1e-9` times the largest term magnitude (at least 1).
    pub tolerance: f64,
    pub holds: bool,
}

/// Evaluates the per-step bound on `V_{A_{k+1}}(-s_{k+1})` with
/// `A_k = diag(cbrt(lambda_k G^2 + nu_k))`.
///
/// For `k = 0` the right side is `lambda_0^2 / 2 ||g_0||^2_{A_0^{-1}}`. For
/// `k >= 1` it is
///
/// ```text
/// V_{A_k}(-s_k) + lambda_k^2 / 2 ||g_k||^2_{A_k^{-1}} + lambda_k <g_k, x0 - u>
///   - lambda_k / c_k [f(x_k, xi_k) - f(u, xi_k)]
///   + lambda_k (1 - c_k) / c_k [f(x_{k-1}, xi_k) - f(u, xi_k)]
/// ```
///
/// where `c_k` produced `x_k` from `x_{k-1}` and `u` is the comparator.
pub fn check_lyapunov_step(
    trace: &TheoryTrace,
    problem: &dyn Problem,
    k: usize,
    comparator: &ParamVector,
) -> Result<StepCheck> {
    let bound = trace
        .bound
        .as_ref()
        .ok_or_else(|| Error::config("trace was not produced by the theoretical variant"))?;
    let step = trace
        .steps
        .get(k)
        .ok_or_else(|| Error::precondition(format!("trace has no step {k}")))?;
    let (s_next, nu_next) = trace.after(k);
    let a_next = DiagScaling::madgrad(step.lambda_next, bound, nu_next)?;
    let lhs = support_value(&a_next, s_next, &trace.x0)?.0;

    let a_k = DiagScaling::madgrad(step.lambda, bound, &step.nu)?;
    let noise = 0.5 * step.lambda * step.lambda * weighted_inv_sq_norm(&step.g, a_k.as_vector())?;
    let terms = if k == 0 {
        vec![noise]
    } else {
        let prev = &trace.steps[k - 1];
        let c = prev.c_next;
        let v_k = support_value(&a_k, &step.s, &trace.x0)?.0;
        let f_u = problem.loss(comparator, step.xi)?;
        let f_x = problem.loss(&step.x, step.xi)?;
        let f_prev = problem.loss(&prev.x, step.xi)?;
        vec![
            v_k,
            noise,
            step.lambda * step.g.dot(&trace.x0.sub(comparator)?)?,
            -step.lambda / c * (f_x - f_u),
            step.lambda * (1.0 - c) / c * (f_prev - f_u),
        ]
    };
    let rhs: f64 = terms.iter().sum();
    let scale = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
    let tolerance = slack(1e-9, scale);
    Ok(StepCheck {
        k,
        lhs,
        rhs,
        tolerance,
        holds: lhs <= rhs + tolerance,
    })
}

/// [`check_lyapunov_step`] at every step of the trace.
pub fn check_lyapunov_trace(
    trace: &TheoryTrace,
    problem: &dyn Problem,
    comparator: &ParamVector,
) -> Result<Vec<StepCheck>> {
    (0..trace.steps.len())
        .map(|k| check_lyapunov_step(trace, problem, k, comparator))
        .collect()
}
