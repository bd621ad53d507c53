use super::slack;
use crate::error::{Error, Result};

/// Per-coordinate sides of the error-sum lemma
///
/// `sum_t lambda_t^2 g_t^2 / (lambda_t G^2 + sum_{i<t} lambda_i g_i^2)^{1/3}
///     <= 1.5 lambda_k (sum_i lambda_i g_i^2)^{2/3}`.
///
/// `g_rows[t]` holds the gradient coordinates at step `t`. Returns one
/// `(lhs, rhs)` pair per coordinate.
pub fn error_sum_lemma_sides(
    lambdas: &[f64],
    g_rows: &[Vec<f64>],
    g_bound: f64,
) -> Result<Vec<(f64, f64)>> {
    if lambdas.is_empty() {
        return Err(Error::precondition("need at least one step"));
    }
    crate::error::check_dims(lambdas.len(), g_rows.len())?;
    if !(g_bound > 0.0 && g_bound.is_finite()) {
        return Err(Error::precondition(format!(
            "G must be positive, got {g_bound}"
        )));
    }
    for (t, w) in lambdas.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::precondition(format!(
                "lambda must be nondecreasing; lambda_{} = {} < lambda_{t} = {}",
                t + 1,
                w[1],
                w[0]
            )));
        }
    }
    if !(lambdas[0] > 0.0) {
        return Err(Error::precondition("lambda must be positive"));
    }
    let dim = g_rows[0].len();
    for row in g_rows {
        crate::error::check_dims(dim, row.len())?;
        if let Some(g) = row.iter().find(|g| !(g.abs() <= g_bound)) {
            return Err(Error::precondition(format!(
                "|g| = {} exceeds G = {g_bound}",
                g.abs()
            )));
        }
    }
    let g2 = g_bound * g_bound;
    let k = lambdas.len() - 1;
    Ok((0..dim)
        .map(|d| {
            let mut acc = 0.0;
            let mut lhs = 0.0;
            for (t, lambda) in lambdas.iter().enumerate() {
                let g = g_rows[t][d];
                lhs += lambda * lambda * g * g / (lambda * g2 + acc).cbrt();
                acc += lambda * g * g;
            }
            let rhs = 1.5 * lambdas[k] * acc.powf(2.0 / 3.0);
            (lhs, rhs)
        })
        .collect())
}

/// True iff the error-sum lemma holds on every coordinate within `1e-12`.
pub fn check_error_sum_lemma(lambdas: &[f64], g_rows: &[Vec<f64>], g_bound: f64) -> Result<bool> {
    Ok(error_sum_lemma_sides(lambdas, g_rows, g_bound)?
        .iter()
        .all(|(lhs, rhs)| *lhs <= rhs + slack(1e-12, *rhs)))
}
