use serde::{Deserialize, Serialize};

use super::madgrad::average_into;
use super::{check_control, check_gradient, check_weight_decay, dense_view, weight_decayed};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector};

/// SGD with heavy-ball momentum: `x' = x + beta (x - x_prev) - alpha g`.
/// `beta = 0` is plain SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyBallState {
    x: ParamVector,
    prev_x: ParamVector,
    alpha: f64,
    beta: f64,
    k: u64,
    weight_decay: f64,
}

impl HeavyBallState {
    pub fn new(x0: ParamVector, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::config(format!(
                "beta must lie in [0, 1), got {beta}"
            )));
        }
        Ok(HeavyBallState {
            prev_x: x0.clone(),
            x: x0,
            alpha,
            beta,
            k: 0,
            weight_decay: 0.0,
        })
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Result<Self> {
        check_weight_decay(wd)?;
        self.weight_decay = wd;
        Ok(self)
    }

    pub fn x(&self) -> &ParamVector {
        &self.x
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub(crate) fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        check_control(alpha, 1.0)?;
        self.alpha = alpha;
        Ok(())
    }

    pub fn step(&mut self, g: &GradSample) -> Result<()> {
        check_gradient(g, self.x.len())?;
        let g = weight_decayed(g, &self.x, self.weight_decay);
        let g = dense_view(&g);
        for d in 0..self.x.len() {
            let next = self.x[d] + self.beta * (self.x[d] - self.prev_x[d]) - self.alpha * g[d];
            self.prev_x[d] = self.x[d];
            self.x[d] = next;
        }
        self.k += 1;
        Ok(())
    }
}

/// SGD with momentum written as inline averaging:
/// `z' = z - eta g`, `x' = (1 - c) x + c z'`.
///
/// Equivalent to [`HeavyBallState`] with `beta = 1 - c`, `alpha = c eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineAvgState {
    x: ParamVector,
    z: ParamVector,
    eta: f64,
    c: f64,
    k: u64,
}

impl InlineAvgState {
    pub fn new(x0: ParamVector, eta: f64, c: f64) -> Result<Self> {
        check_control(eta, c).map_err(|e| Error::config(e.to_string()))?;
        Ok(InlineAvgState {
            z: x0.clone(),
            x: x0,
            eta,
            c,
            k: 0,
        })
    }

    /// Heavy-ball parameters `(beta, alpha)` producing the same iterates.
    pub fn heavy_ball_equivalent(&self) -> (f64, f64) {
        (1.0 - self.c, self.c * self.eta)
    }

    pub fn x(&self) -> &ParamVector {
        &self.x
    }

    pub fn z(&self) -> &ParamVector {
        &self.z
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub(crate) fn set_eta_c(&mut self, eta: f64, c: f64) -> Result<()> {
        check_control(eta, c)?;
        self.eta = eta;
        self.c = c;
        Ok(())
    }

    pub fn step(&mut self, g: &GradSample) -> Result<()> {
        check_gradient(g, self.x.len())?;
        for (i, gi) in g.entries() {
            self.z[i] -= self.eta * gi;
        }
        average_into(&mut self.x, &self.z, self.c);
        self.k += 1;
        Ok(())
    }
}

pub fn heavy_ball_step(st: &HeavyBallState, g: &GradSample) -> Result<HeavyBallState> {
    let mut next = st.clone();
    next.step(g)?;
    Ok(next)
}

pub fn inline_avg_step(st: &InlineAvgState, g: &GradSample) -> Result<InlineAvgState> {
    let mut next = st.clone();
    next.step(g)?;
    Ok(next)
}
