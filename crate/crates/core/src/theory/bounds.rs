use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which step count enters the worst-case bound: the stated `k`, or the
/// `k + 1` that the derivation produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexConvention {
    #[default]
    Statement,
    Derivation,
}

impl IndexConvention {
    fn steps(self, k: u64) -> f64 {
        match self {
            IndexConvention::Statement => k as f64,
            IndexConvention::Derivation => k as f64 + 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub k: u64,
    pub dim: usize,
    pub g_bound: f64,
    /// `||x0 - x*||_2`.
    pub dist0: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::precondition("k must be at least 1"));
        }
        if self.dim < 1 {
            return Err(Error::precondition("D must be at least 1"));
        }
        if !(self.g_bound > 0.0 && self.g_bound.is_finite()) {
            return Err(Error::precondition(format!(
                "G must be positive, got {}",
                self.g_bound
            )));
        }
        if !(self.dist0 >= 0.0 && self.dist0.is_finite()) {
            return Err(Error::precondition(format!(
                "dist0 must be >= 0, got {}",
                self.dist0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1 {
    /// `6 / sqrt(k) * dist0 * G * sqrt(D)`.
    pub bound: f64,
    /// `dist0^{3/2} / (k^{3/4} D^{3/4} G^{1/2})`.
    pub gamma_opt: f64,
}

pub fn theorem1_rhs(b: &BoundInputs, convention: IndexConvention) -> Result<Theorem1> {
    b.validate()?;
    let k = convention.steps(b.k);
    let d = b.dim as f64;
    Ok(Theorem1 {
        bound: 6.0 / k.sqrt() * b.dist0 * b.g_bound * d.sqrt(),
        gamma_opt: b.dist0.powf(1.5) / (k.powf(0.75) * d.powf(0.75) * b.g_bound.sqrt()),
    })
}

/// `3 gamma^{2/3} G^{4/3} D + 3 / (k + 1) * gamma^{-2/3} G^{2/3} dist0^2`, the
/// bound before the step size is optimized. Its minimizer over `gamma` is the
/// [`IndexConvention::Derivation`] value of `gamma_opt`.
pub fn theorem1_prebound(b: &BoundInputs, gamma: f64) -> Result<f64> {
    b.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::precondition(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let (g, d, k) = (b.g_bound, b.dim as f64, b.k as f64);
    Ok(3.0 * gamma.powf(2.0 / 3.0) * g.powf(4.0 / 3.0) * d
        + 3.0 / (k + 1.0) * gamma.powf(-2.0 / 3.0) * g.powf(2.0 / 3.0) * b.dist0 * b.dist0)
}

/// Summation limits for the bounds under a time-varying gradient bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptiveConvention {
    /// `k = len - 1`; both sums run over `i = 0..=k`.
    #[default]
    SameLimit,
    /// `k = len - 2`; the MADGRAD sum runs over `i = 0..=k+1` and the
    /// AdaGrad sum over `i = 0..=k`.
    ExtraTerm,
}

/// Right-hand sides `(madgrad, adagrad)` of the bounds with per-step gradient
/// bounds `G_i`:
///
/// - MADGRAD: `6 / (k+1)^{5/4} * dist0 * sqrt(D) * (sum (i+1)^{1/2} G_i^2)^{1/2}`
/// - AdaGrad: `6 / (k+1) * dist0 * sqrt(D) * (sum G_i^2)^{1/2}`
pub fn adaptive_bounds(
    g_hist: &[f64],
    dist0: f64,
    dim: usize,
    convention: AdaptiveConvention,
) -> Result<(f64, f64)> {
    if let Some(g) = g_hist.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::precondition(format!(
            "every G_i must be positive, got {g}"
        )));
    }
    if dim < 1 || !(dist0 >= 0.0) {
        return Err(Error::precondition("need D >= 1 and dist0 >= 0"));
    }
    let (k, madgrad_terms, adagrad_terms) = match convention {
        AdaptiveConvention::SameLimit => {
            if g_hist.is_empty() {
                return Err(Error::precondition("need at least one G_i"));
            }
            (g_hist.len() - 1, g_hist.len(), g_hist.len())
        }
        AdaptiveConvention::ExtraTerm => {
            if g_hist.len() < 2 {
                return Err(Error::precondition(
                    "the extra-term form needs at least two G_i",
                ));
            }
            (g_hist.len() - 2, g_hist.len(), g_hist.len() - 1)
        }
    };
    let weighted: f64 = g_hist[..madgrad_terms]
        .iter()
        .enumerate()
        .map(|(i, g)| ((i + 1) as f64).sqrt() * g * g)
        .sum();
    let plain: f64 = g_hist[..adagrad_terms].iter().map(|g| g * g).sum();
    let t = k as f64 + 1.0;
    let scale = 6.0 * dist0 * (dim as f64).sqrt();
    Ok((
        scale / t.powf(1.25) * weighted.sqrt(),
        scale / t * plain.sqrt(),
    ))
}

/// `sum_{i=0}^{k} (i+1)^{1/2}`.
pub fn sqrt_sum(k: u64) -> f64 {
    (0..=k).map(|i| ((i + 1) as f64).sqrt()).sum()
}

/// `(2/3) (k+2)^{3/2}`, an upper bound on [`sqrt_sum`].
pub fn sqrt_sum_bound(k: u64) -> f64 {
    2.0 / 3.0 * (k as f64 + 2.0).powf(1.5)
}
