use crate::error::{check_dims, Result};
use crate::numerics::{GradSample, ParamVector};
use crate::optimizers::{BetaRule, DualAvgState, Optimizer, StepControl};

/// Largest deviation between dual averaging with `beta_{k+1} = sqrt(k+1)` and
/// unit weights, and the rewrite
/// `x_{k+1} = x_k - [g_k + (sqrt(k+1) - sqrt(k)) (x_k - x0)] / sqrt(k+1)`.
pub fn implicit_regularization_deviation(x0: &ParamVector, grads: &[ParamVector]) -> Result<f64> {
    let mut da = DualAvgState::new(x0.clone(), BetaRule::Sqrt, false);
    let mut rewrite = x0.clone();
    let mut worst: f64 = 0.0;
    for (k, g) in grads.iter().enumerate() {
        check_dims(x0.len(), g.len())?;
        let kf = k as f64;
        let root = (kf + 1.0).sqrt();
        let shrink = root - kf.sqrt();
        for d in 0..x0.len() {
            rewrite[d] -= (g[d] + shrink * (rewrite[d] - x0[d])) / root;
        }
        da.step(&GradSample::Dense(g.clone()), 1.0, 1.0)?;
        worst = worst.max(da.x().sub(&rewrite)?.linf());
    }
    Ok(worst)
}

/// Largest deviation between dual averaging with `lambda_i = gamma sqrt(i+1)`
/// and the expansion `x_{k+1} = x0 - gamma g_k - sum_{i<k} lambda_i g_i / sqrt(k+1)`,
/// in which the newest gradient is scaled by exactly `gamma`.
pub fn effective_step_deviation(
    x0: &ParamVector,
    grads: &[ParamVector],
    gamma: f64,
) -> Result<f64> {
    let mut da = DualAvgState::new(x0.clone(), BetaRule::Sqrt, true);
    let mut older = ParamVector::zeros(x0.len());
    let mut worst: f64 = 0.0;
    for (k, g) in grads.iter().enumerate() {
        check_dims(x0.len(), g.len())?;
        Optimizer::step(
            &mut da,
            &GradSample::Dense(g.clone()),
            &StepControl::constant(gamma, 1.0),
        )?;
        let root = (k as f64 + 1.0).sqrt();
        for d in 0..x0.len() {
            let expected = x0[d] - gamma * g[d] - older[d] / root;
            worst = worst.max((da.x()[d] - expected).abs());
        }
        let lambda = gamma * root;
        for d in 0..x0.len() {
            older[d] += lambda * g[d];
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn grads(seed: u64, dim: usize, n: usize) -> (ParamVector, Vec<ParamVector>) {
        let mut rng = Rng::new(seed);
        let x0 = rng.normal_vector(dim);
        (x0, (0..n).map(|_| rng.normal_vector(dim)).collect())
    }

    #[test]
    fn rewrite_holds() {
        let (x0, g) = grads(1, 7, 1000);
        assert!(implicit_regularization_deviation(&x0, &g).unwrap() <= 1e-10);
    }

    #[test]
    fn expansion_holds() {
        let (x0, g) = grads(2, 7, 1000);
        assert!(effective_step_deviation(&x0, &g, 0.05).unwrap() <= 1e-10);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let x0 = ParamVector::zeros(2);
        assert!(implicit_regularization_deviation(&x0, &[ParamVector::zeros(3)]).is_err());
        assert!(effective_step_deviation(&x0, &[ParamVector::zeros(3)], 0.1).is_err());
    }
}
