use serde::{Deserialize, Serialize};

use super::madgrad::average_into;
use super::{check_control, check_gradient, check_weight_decay, weight_decayed};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector};
use crate::schedules::lambda_weight;

/// Denominator sequence `beta_{k+1}` of Euclidean dual averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaRule {
    /// `beta_{k+1} = sqrt(k + 1)`.
    Sqrt,
    Constant {
        beta: f64,
    },
}

impl BetaRule {
    /// `beta_{k+1}` for the step that consumes gradient `g_k`.
    pub fn next(&self, k: u64) -> f64 {
        match self {
            BetaRule::Sqrt => (k as f64 + 1.0).sqrt(),
            BetaRule::Constant { beta } => *beta,
        }
    }
}

/// Dual averaging with the proximity function `0.5 * ||x - x0||^2`:
/// `s += lambda_k g_k`, `z = x0 - s / beta_{k+1}`, `x = (1 - c) x + c z`.
///
/// With `c = 1` this is plain dual averaging; a smaller `c` evaluates the
/// gradient at a running average of the dual-averaging points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualAvgState {
    x0: ParamVector,
    s: ParamVector,
    z: ParamVector,
    x: ParamVector,
    k: u64,
    beta: BetaRule,
    /// When set, the runner's `gamma_k` is turned into `gamma_k sqrt(k + 1)`.
    sqrt_weighted: bool,
    weight_decay: f64,
}

impl DualAvgState {
    pub fn new(x0: ParamVector, beta: BetaRule, sqrt_weighted: bool) -> Self {
        let dim = x0.len();
        DualAvgState {
            s: ParamVector::zeros(dim),
            z: x0.clone(),
            x: x0.clone(),
            x0,
            k: 0,
            beta,
            sqrt_weighted,
            weight_decay: 0.0,
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Result<Self> {
        check_weight_decay(wd)?;
        self.weight_decay = wd;
        Ok(self)
    }

    pub fn x0(&self) -> &ParamVector {
        &self.x0
    }

    pub fn s(&self) -> &ParamVector {
        &self.s
    }

    pub fn z(&self) -> &ParamVector {
        &self.z
    }

    pub fn x(&self) -> &ParamVector {
        &self.x
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub(crate) fn lambda_for(&self, gamma: f64) -> f64 {
        if self.sqrt_weighted {
            lambda_weight(gamma, self.k)
        } else {
            gamma
        }
    }

    pub fn step(&mut self, g: &GradSample, lambda_k: f64, c_next: f64) -> Result<()> {
        check_control(lambda_k, c_next)?;
        check_gradient(g, self.x0.len())?;
        let beta = self.beta.next(self.k);
        if !(beta > 0.0) {
            return Err(Error::precondition(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let g = weight_decayed(g, &self.x, self.weight_decay);
        for (i, gi) in g.entries() {
            self.s[i] += lambda_k * gi;
        }
        for d in 0..self.x0.len() {
            self.z[d] = self.x0[d] - self.s[d] / beta;
        }
        average_into(&mut self.x, &self.z, c_next);
        self.k += 1;
        Ok(())
    }
}

/// Pure form of [`DualAvgState::step`] without iterate averaging.
pub fn dual_avg_step(st: &DualAvgState, g: &GradSample, lambda_k: f64) -> Result<DualAvgState> {
    let mut next = st.clone();
    next.step(g, lambda_k, 1.0)?;
    Ok(next)
}
