use crate::error::{Error, Result};
use crate::numerics::ParamVector;

/// Minimizer of `sum_d q_d / s_d` subject to `||s||_2^2 = c`, `s > 0`:
/// `s_d = q_d^{1/3} / sqrt(c^{-1} sum_d q_d^{2/3})`, where `q_d` is the sum
/// of squared gradients on coordinate `d`.
pub fn cube_root_allocation(sq_sums: &ParamVector, c: f64) -> Result<ParamVector> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::precondition(format!("c must be positive, got {c}")));
    }
    if sq_sums.is_empty() {
        return Err(Error::precondition("need at least one coordinate"));
    }
    for (d, q) in sq_sums.iter().enumerate() {
        if !(*q > 0.0 && q.is_finite()) {
            return Err(Error::domain(format!(
                "squared-gradient sum at coordinate {d} must be positive, got {q}"
            )));
        }
    }
    let norm = (sq_sums.iter().map(|q| q.powf(2.0 / 3.0)).sum::<f64>() / c).sqrt();
    Ok(sq_sums
        .iter()
        .map(|q| q.cbrt() / norm)
        .collect::<Vec<_>>()
        .into())
}

/// `sum_d q_d / s_d`.
pub fn allocation_objective(sq_sums: &ParamVector, s: &ParamVector) -> Result<f64> {
    crate::error::check_dims(sq_sums.len(), s.len())?;
    Ok(sq_sums.iter().zip(s.iter()).map(|(q, v)| q / v).sum())
}

/// Relative spread `(max - min) / max` of the multipliers `mu_d = q_d / s_d^3`
/// implied by stationarity. Zero when all coordinates agree on one `mu`.
pub fn stationarity_spread(sq_sums: &ParamVector, s: &ParamVector) -> Result<f64> {
    crate::error::check_dims(sq_sums.len(), s.len())?;
    let mu: Vec<f64> = sq_sums
        .iter()
        .zip(s.iter())
        .map(|(q, v)| q / (v * v * v))
        .collect();
    let hi = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = mu.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((hi - lo) / hi)
}
