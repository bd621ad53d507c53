//! Convex stochastic test problems with known optima.
//!
//! Every problem draws `xi` uniformly from a finite, seeded sample set, so the
//! full objective `F(x) = mean_xi f(x, xi)` and its minimum are computed
//! exactly by enumeration.

mod adam_stress;
mod bag_of_words;
mod l1_median;
mod logistic;
mod newton;
mod quadratic;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use adam_stress::AdamStress;
pub use bag_of_words::SparseBagOfWords;
pub use l1_median::L1Median;
pub use logistic::SyntheticLogistic;
pub use quadratic::StochasticQuadratic;

use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector, Rng};

/// Index of a sample in the problem's finite sample set.
pub type Sample = usize;

pub trait Problem: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn num_samples(&self) -> usize;

    fn sample(&self, rng: &mut Rng) -> Sample {
        rng.below(self.num_samples())
    }

    fn loss(&self, x: &ParamVector, xi: Sample) -> Result<f64>;

    fn grad(&self, x: &ParamVector, xi: Sample) -> Result<GradSample>;

    /// `F(x)`, the exact mean over the sample set.
    fn full_loss(&self, x: &ParamVector) -> Result<f64> {
        let n = self.num_samples();
        let mut total = 0.0;
        for xi in 0..n {
            total += self.loss(x, xi)?;
        }
        Ok(total / n as f64)
    }

    fn optimum(&self) -> &ParamVector;

    fn f_star(&self) -> f64;

    /// A uniform bound on `||grad f(x, xi)||_inf`, when one exists.
    fn g_inf_bound(&self) -> Option<f64>;

    /// Distance from `x_d` to the nearest point where `f(., xi)` is not
    /// differentiable along coordinate `d`. Smooth losses return infinity.
    fn kink_distance(&self, _x: &ParamVector, _xi: Sample, _d: usize) -> f64 {
        f64::INFINITY
    }

    fn emits_sparse(&self) -> bool {
        false
    }
}

/// `F(x) - f*`. Rounding noise below zero is reported as zero.
pub fn suboptimality(p: &dyn Problem, x: &ParamVector) -> Result<f64> {
    let gap = p.full_loss(x)? - p.f_star();
    if gap < 0.0 && gap > -1e-12 * p.f_star().abs().max(1.0) {
        Ok(0.0)
    } else {
        Ok(gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDiffReport {
    pub max_rel_err: f64,
    /// Coordinates within `h` of a kink, left unchecked.
    pub skipped: Vec<usize>,
}

/// Central differences of `loss` against `grad`, per coordinate. The error is
/// `|fd - g| / max(1, |g|)`.
pub fn finite_diff_check(
    p: &dyn Problem,
    x: &ParamVector,
    xi: Sample,
    h: f64,
) -> Result<FiniteDiffReport> {
    if !(1e-8..=1e-3).contains(&h) {
        return Err(Error::precondition(format!(
            "h must lie in [1e-8, 1e-3], got {h}"
        )));
    }
    let g = p.grad(x, xi)?.to_dense();
    let mut probe = x.clone();
    let mut max_rel_err: f64 = 0.0;
    let mut skipped = Vec::new();
    for d in 0..x.len() {
        if p.kink_distance(x, xi, d) <= h {
            skipped.push(d);
            continue;
        }
        probe[d] = x[d] + h;
        let up = p.loss(&probe, xi)?;
        probe[d] = x[d] - h;
        let down = p.loss(&probe, xi)?;
        probe[d] = x[d];
        let fd = (up - down) / (2.0 * h);
        max_rel_err = max_rel_err.max((fd - g[d]).abs() / g[d].abs().max(1.0));
    }
    Ok(FiniteDiffReport {
        max_rel_err,
        skipped,
    })
}

/// Serializable description of a problem instance. The problem seed is fixed
/// by the config and independent of the run seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    L1Median {
        dim: usize,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
    },
    StochasticQuadratic {
        dim: usize,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_spread")]
        spread: f64,
    },
    SyntheticLogistic {
        dim: usize,
        samples: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        l2: f64,
    },
    AdamStress {
        dim: usize,
        #[serde(default = "default_stress_large")]
        large: f64,
        #[serde(default = "default_stress_period")]
        period: usize,
        #[serde(default = "default_stress_rare")]
        rare: usize,
    },
    SparseBagOfWords {
        vocab: usize,
        docs: usize,
        #[serde(default = "default_words")]
        words_per_doc: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_points() -> usize {
    101
}

fn default_hi() -> f64 {
    2.0
}

fn default_spread() -> f64 {
    1.0
}

fn default_stress_large() -> f64 {
    20.0
}

fn default_stress_period() -> usize {
    20
}

fn default_stress_rare() -> usize {
    2
}

fn default_words() -> usize {
    5
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Arc<dyn Problem>> {
        Ok(match *self {
            ProblemSpec::L1Median {
                dim,
                points,
                seed,
                lo,
                hi,
            } => Arc::new(L1Median::random(dim, points, lo, hi, seed)?),
            ProblemSpec::StochasticQuadratic {
                dim,
                points,
                seed,
                spread,
            } => Arc::new(StochasticQuadratic::random(dim, points, spread, seed)?),
            ProblemSpec::SyntheticLogistic {
                dim,
                samples,
                seed,
                l2,
            } => Arc::new(SyntheticLogistic::generate(dim, samples, l2, seed)?),
            ProblemSpec::AdamStress {
                dim,
                large,
                period,
                rare,
            } => Arc::new(AdamStress::new(dim, large, period, rare)?),
            ProblemSpec::SparseBagOfWords {
                vocab,
                docs,
                words_per_doc,
                seed,
            } => Arc::new(SparseBagOfWords::generate(
                vocab,
                docs,
                words_per_doc,
                seed,
            )?),
        })
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, ProblemSpec::SparseBagOfWords { .. })
    }
}

pub(crate) fn check_point(x: &ParamVector, dim: usize) -> Result<()> {
    crate::error::check_dims(dim, x.len())?;
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("iterate".into()))
    }
}

pub(crate) fn check_sample(xi: Sample, n: usize) -> Result<()> {
    if xi < n {
        Ok(())
    } else {
        Err(Error::precondition(format!(
            "sample index {xi} out of range 0..{n}"
        )))
    }
}

/// `log(1 + exp(t))` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
