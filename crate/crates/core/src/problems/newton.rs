use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(super) struct Evaluation {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Damped Newton with Armijo backtracking for a smooth convex objective.
/// Stops once `||grad||_inf <= tol`, and then requires the Hessian to be
/// positive definite there, which rules out an infimum approached at infinity.
pub(super) fn minimize(
    start: DVector<f64>,
    tol: f64,
    eval: impl Fn(&DVector<f64>) -> Evaluation,
) -> Result<DVector<f64>> {
    let mut x = start;
    let mut cur = eval(&x);
    for _ in 0..200 {
        if cur.grad.amax() <= tol {
            let curvature = cur.hessian.clone().symmetric_eigen().eigenvalues.min();
            if curvature > 1e-10 {
                return Ok(x);
            }
            break;
        }
        let dir = newton_direction(&cur.hessian, &cur.grad)?;
        let slope = cur.grad.dot(&dir);
        let mut t = 1.0;
        loop {
            let trial = &x + &dir * t;
            let next = eval(&trial);
            let rounding = 4.0 * f64::EPSILON * cur.value.abs();
            if next.value <= cur.value + 1e-4 * t * slope + rounding || t < 1e-12 {
                x = trial;
                cur = next;
                break;
            }
            t *= 0.5;
        }
        if !cur.value.is_finite() || x.iter().any(|v| v.abs() > 1e8) {
            break;
        }
    }
    Err(Error::domain(
        "Newton solve did not converge; the objective may have no finite minimizer",
    ))
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = h.diagonal().amax().max(1.0);
    let mut ridge = 0.0;
    for _ in 0..30 {
        let mut damped = h.clone();
        for i in 0..damped.nrows() {
            damped[(i, i)] += ridge;
        }
        if let Some(chol) = damped.cholesky() {
            return Ok(-chol.solve(g));
        }
        ridge = if ridge == 0.0 {
            1e-14 * scale
        } else {
            ridge * 10.0
        };
    }
    Err(Error::domain("Hessian is not positive definite"))
}
