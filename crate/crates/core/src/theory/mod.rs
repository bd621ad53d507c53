//! Executable checks of the convergence analysis.
//!
//! Inequalities are tested with a slack of `tol * max(1, |rhs|)`, which
//! absorbs floating-point error on both small and large magnitudes.

mod allocation;
mod bounds;
mod identities;
mod lemmas;
mod lyapunov;
mod report;

use serde::{Deserialize, Serialize};

pub use allocation::{allocation_objective, cube_root_allocation, stationarity_spread};
pub use bounds::{
    adaptive_bounds, sqrt_sum, sqrt_sum_bound, theorem1_prebound, theorem1_rhs, AdaptiveConvention,
    BoundInputs, IndexConvention, Theorem1,
};
pub use identities::{effective_step_deviation, implicit_regularization_deviation};
pub use lemmas::{check_error_sum_lemma, error_sum_lemma_sides};
pub use lyapunov::{check_lyapunov_step, check_lyapunov_trace, StepCheck, TheoryTrace, TraceStep};
pub use report::{CheckRow, Report};

use crate::error::{check_dims, Error, Result};
use crate::numerics::ParamVector;
use crate::optimizers::GradientBound;

/// `tol * max(1, |reference|)`.
pub(crate) fn slack(tol: f64, reference: f64) -> f64 {
    tol * reference.abs().max(1.0)
}

/// A positive diagonal scaling `A = diag(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiagScaling(ParamVector);

impl DiagScaling {
    pub fn new(a: ParamVector) -> Result<Self> {
        for (d, v) in a.iter().enumerate() {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "scaling entry {d} must be positive, got {v}"
                )));
            }
        }
        Ok(DiagScaling(a))
    }

    /// `a_d = cbrt(lambda G_d^2 + nu_d)`, the scaling of the theoretical variant.
    pub fn madgrad(lambda: f64, bound: &GradientBound, nu: &ParamVector) -> Result<Self> {
        let a = (0..nu.len())
            .map(|d| {
                let g = bound.at(d);
                (lambda * g * g + nu[d]).cbrt()
            })
            .collect::<Vec<_>>();
        DiagScaling::new(ParamVector::new(a))
    }

    pub fn as_vector(&self) -> &ParamVector {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every entry of `self` is at most the matching entry of `other`.
    pub fn dominated_by(&self, other: &DiagScaling) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }
}

/// `V_A(-s) = max_x <-s, x - x0> - 0.5 ||x - x0||_A^2`, in closed form.
/// Returns the value `sum s_d^2 / (2 a_d)` and the maximizer `x0 - s / a`.
pub fn support_value(
    a: &DiagScaling,
    s: &ParamVector,
    x0: &ParamVector,
) -> Result<(f64, ParamVector)> {
    check_dims(a.len(), s.len())?;
    check_dims(a.len(), x0.len())?;
    let a = a.as_vector();
    let value = (0..s.len()).map(|d| s[d] * s[d] / (2.0 * a[d])).sum();
    let maximizer = (0..s.len())
        .map(|d| x0[d] - s[d] / a[d])
        .collect::<Vec<_>>();
    Ok((value, ParamVector::new(maximizer)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportReport {
    /// `V_{A_next}(-s) <= V_A(-s)`.
    pub decrease: bool,
    /// Finite differences of `V_A` at `-s` agree with `z - x0`.
    pub gradient: bool,
    /// `V(-s + delta) <= V(-s) + <delta, z - x0> + 0.5 ||delta||^2_{A^-1}`.
    pub smoothness: bool,
    pub decrease_margin: f64,
    pub gradient_rel_err: f64,
    pub smoothness_margin: f64,
}

impl SupportReport {
    pub fn all(&self) -> bool {
        self.decrease && self.gradient && self.smoothness
    }
}

/// Checks the three support-function properties at `-s`. Margins are
/// `rhs - lhs`; the gradient error is relative with a unit floor.
pub fn check_support_properties(
    a: &DiagScaling,
    a_next: &DiagScaling,
    s: &ParamVector,
    delta: &ParamVector,
    x0: &ParamVector,
) -> Result<SupportReport> {
    check_dims(a.len(), a_next.len())?;
    check_dims(a.len(), delta.len())?;
    if !a.dominated_by(a_next) {
        return Err(Error::precondition("a_next must be elementwise >= a"));
    }
    let (v, z) = support_value(a, s, x0)?;
    let (v_next, _) = support_value(a_next, s, x0)?;
    let decrease_margin = v - v_next;

    let grad = z.sub(x0)?;
    let mut probe = s.clone();
    let mut gradient_rel_err: f64 = 0.0;
    for d in 0..s.len() {
        // V is evaluated at u = -s, so moving u by +h moves s by -h.
        let h = 1e-4 * s[d].abs().max(1.0);
        probe[d] = s[d] - h;
        let up = support_value(a, &probe, x0)?.0;
        probe[d] = s[d] + h;
        let down = support_value(a, &probe, x0)?.0;
        probe[d] = s[d];
        let fd = (up - down) / (2.0 * h);
        gradient_rel_err = gradient_rel_err.max((fd - grad[d]).abs() / grad[d].abs().max(1.0));
    }

    let shifted: ParamVector = (0..s.len())
        .map(|d| s[d] - delta[d])
        .collect::<Vec<_>>()
        .into();
    let lhs = support_value(a, &shifted, x0)?.0;
    let av = a.as_vector();
    let quad: f64 = (0..s.len()).map(|d| delta[d] * delta[d] / av[d]).sum();
    let rhs = v + delta.dot(&grad)? + 0.5 * quad;
    let smoothness_margin = rhs - lhs;

    Ok(SupportReport {
        decrease: decrease_margin >= -slack(1e-10, v),
        gradient: gradient_rel_err <= 1e-6,
        smoothness: smoothness_margin >= -slack(1e-10, rhs),
        decrease_margin,
        gradient_rel_err,
        smoothness_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn scaling(v: &[f64]) -> DiagScaling {
        DiagScaling::new(ParamVector::new(v.to_vec())).unwrap()
    }

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec())
    }

    #[test]
    fn support_value_examples() {
        let (v, z) =
            support_value(&scaling(&[1.0, 2.0]), &pv(&[0.0, 0.0]), &pv(&[0.3, 0.4])).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(z, pv(&[0.3, 0.4]));
        let (v, z) = support_value(&scaling(&[1.0]), &pv(&[2.0]), &pv(&[0.0])).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(z, pv(&[-2.0]));
        let (v, z) =
            support_value(&scaling(&[1.0, 3.0]), &pv(&[1.0, 3.0]), &pv(&[0.0, 0.0])).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(z, pv(&[-1.0, -1.0]));
    }

    #[test]
    fn nonpositive_scaling_rejected() {
        assert!(matches!(
            DiagScaling::new(pv(&[1.0, 0.0])),
            Err(Error::Domain(_))
        ));
        assert!(DiagScaling::new(pv(&[-1.0])).is_err());
    }

    #[test]
    fn zero_delta_and_equal_scalings_are_tight() {
        let a = scaling(&[0.5, 2.0]);
        let r = check_support_properties(
            &a,
            &a,
            &pv(&[1.0, -2.0]),
            &pv(&[0.0, 0.0]),
            &pv(&[0.0, 1.0]),
        )
        .unwrap();
        assert!(r.all());
        assert!(r.decrease_margin.abs() <= 1e-15);
        assert!(r.smoothness_margin.abs() <= 1e-14);
    }

    #[test]
    fn shrinking_scaling_rejected() {
        let r = check_support_properties(
            &scaling(&[2.0]),
            &scaling(&[1.0]),
            &pv(&[1.0]),
            &pv(&[0.0]),
            &pv(&[0.0]),
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    /// Maximizes the concave objective by ternary search per coordinate, which
    /// separates because `A` is diagonal.
    fn numeric_support(a: &ParamVector, s: &ParamVector, x0: &ParamVector, radius: f64) -> f64 {
        let mut total = 0.0;
        for d in 0..s.len() {
            let f = |x: f64| -s[d] * (x - x0[d]) - 0.5 * a[d] * (x - x0[d]).powi(2);
            let (mut lo, mut hi) = (x0[d] - radius, x0[d] + radius);
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if f(m1) < f(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            total += f(0.5 * (lo + hi));
        }
        total
    }

    proptest! {
        #[test]
        fn closed_form_matches_numeric_maximum(seed in 0u64..10_000, dim in 1usize..=4) {
            let mut rng = Rng::new(seed);
            let a = rng.uniform_vector(dim, 0.2, 5.0);
            let s = rng.normal_vector(dim).scaled(3.0);
            let x0 = rng.normal_vector(dim);
            let (v, _) = support_value(&DiagScaling::new(a.clone()).unwrap(), &s, &x0).unwrap();
            let numeric = numeric_support(&a, &s, &x0, 100.0);
            prop_assert!((v - numeric).abs() <= 1e-6, "{} vs {}", v, numeric);
        }
    }
}
