//! Fixtures shared by the criterion benchmarks.

use madgrad::optimizers::{
    AdaGradForm, AdaGradState, AdamState, BetaRule, DualAvgState, HeavyBallState, MadgradState,
};
use madgrad::{GradSample, Optimizer, ParamVector, Result, Rng};

/// Optimizers compared in the step benchmarks.
pub const OPTIMIZERS: &[&str] = &[
    "madgrad",
    "dual-averaging",
    "adagrad",
    "adagrad-da",
    "sgd",
    "adam",
];

/// A fresh optimizer of the given kind at the origin.
pub fn optimizer(kind: &str, dim: usize) -> Result<Box<dyn Optimizer>> {
    let x0 = ParamVector::zeros(dim);
    Ok(match kind {
        "madgrad" => Box::new(MadgradState::new(x0, 1e-6)?),
        "dual-averaging" => Box::new(DualAvgState::new(x0, BetaRule::Sqrt, true)),
        "adagrad" => Box::new(AdaGradState::new(AdaGradForm::MirrorDescent, x0, 1e-10)?),
        "adagrad-da" => Box::new(AdaGradState::new(AdaGradForm::DualAveraging, x0, 1e-10)?),
        "sgd" => Box::new(HeavyBallState::new(x0, 0.01, 0.9)?),
        "adam" => Box::new(AdamState::new(x0, 0.9, 0.999, 1e-8, false)?),
        other => panic!("no benchmark fixture for {other}"),
    })
}

/// `n` dense standard-normal gradients.
pub fn dense_grads(dim: usize, n: usize, seed: u64) -> Vec<GradSample> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| GradSample::Dense(rng.normal_vector(dim)))
        .collect()
}

/// `n` sparse gradients with `nnz` distinct coordinates each.
pub fn sparse_grads(dim: usize, nnz: usize, n: usize, seed: u64) -> Vec<GradSample> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let mut idx: Vec<usize> = Vec::with_capacity(nnz);
            while idx.len() < nnz {
                let i = rng.below(dim);
                if !idx.contains(&i) {
                    idx.push(i);
                }
            }
            idx.sort_unstable();
            let entries = idx.into_iter().map(|i| (i, rng.normal())).collect();
            GradSample::sparse(dim, entries).expect("indices are in range and distinct")
        })
        .collect()
}
