use serde::{Deserialize, Serialize};

use super::{check_gradient, check_step_size, check_weight_decay, weight_decayed};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaGradForm {
    /// `acc += g^2; x -= gamma g / (sqrt(acc) + eps)`.
    MirrorDescent,
    /// `s += gamma g; acc += gamma g^2; x = x0 - s / (sqrt(acc) + eps)`.
    DualAveraging,
}

/// Coordinate-wise AdaGrad in either form. The dual-averaging form keeps the
/// step size inside both sums; `gamma = 1` recovers the classical `sum g^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaGradState {
    form: AdaGradForm,
    x0: ParamVector,
    x: ParamVector,
    acc: ParamVector,
    s: ParamVector,
    k: u64,
    eps: f64,
    weight_decay: f64,
}

impl AdaGradState {
    pub fn new(form: AdaGradForm, x0: ParamVector, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::config(format!(
                "eps must be finite and >= 0, got {eps}"
            )));
        }
        let dim = x0.len();
        Ok(AdaGradState {
            form,
            x: x0.clone(),
            x0,
            acc: ParamVector::zeros(dim),
            s: ParamVector::zeros(dim),
            k: 0,
            eps,
            weight_decay: 0.0,
        })
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Result<Self> {
        check_weight_decay(wd)?;
        self.weight_decay = wd;
        Ok(self)
    }

    pub fn form(&self) -> AdaGradForm {
        self.form
    }

    pub fn x(&self) -> &ParamVector {
        &self.x
    }

    pub fn accumulator(&self) -> &ParamVector {
        &self.acc
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn step(&mut self, g: &GradSample, gamma: f64) -> Result<()> {
        check_step_size(gamma)?;
        check_gradient(g, self.x.len())?;
        let g = weight_decayed(g, &self.x, self.weight_decay);
        let acc_weight = match self.form {
            AdaGradForm::MirrorDescent => 1.0,
            AdaGradForm::DualAveraging => gamma,
        };
        if self.eps == 0.0 {
            for (i, gi) in g.entries() {
                if self.acc[i] + acc_weight * gi * gi == 0.0 {
                    return Err(Error::DivisionByZero { index: i });
                }
            }
        }
        for (i, gi) in g.entries() {
            self.acc[i] += acc_weight * gi * gi;
            let denom = self.acc[i].sqrt() + self.eps;
            match self.form {
                AdaGradForm::MirrorDescent => self.x[i] -= gamma * gi / denom,
                AdaGradForm::DualAveraging => {
                    self.s[i] += gamma * gi;
                    self.x[i] = self.x0[i] - self.s[i] / denom;
                }
            }
        }
        self.k += 1;
        Ok(())
    }
}

pub fn adagrad_step(st: &AdaGradState, g: &GradSample, gamma: f64) -> Result<AdaGradState> {
    let mut next = st.clone();
    next.step(g, gamma)?;
    Ok(next)
}
