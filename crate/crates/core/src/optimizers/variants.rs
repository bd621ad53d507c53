//! Alternative ways of combining AdaGrad-style scaling with the
//! `sqrt(i + 1)`-weighted gradient sum. All are anchored at `x0` and
//! elementwise; `eps` is added to each denominator.
//!
//! | policy                 | update                                                        |
//! |------------------------|---------------------------------------------------------------|
//! | `UnweightedDenominator`| `x0 - S / sqrt(sum gamma_i g_i^2)`                            |
//! | `WeightedDenominator`  | `x0 - S / sqrt(sum w_i gamma_i g_i^2)`                        |
//! | `WeightedNumerator`    | `x0 - gamma_k/sqrt(t) * sqrt(sum w_i) / sqrt(sum w_i g_i^2) g_k` |
//! | `CubeRoot`             | MADGRAD with `c = 1`                                          |
//!
//! with `w_i = sqrt(i + 1)`, `S = sum w_i gamma_i g_i` and `t = k + 1`.

use serde::{Deserialize, Serialize};

use super::madgrad::{MadgradState, DEFAULT_EPS};
use super::{check_gradient, check_step_size};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingVariant {
    UnweightedDenominator,
    WeightedDenominator,
    WeightedNumerator,
    CubeRoot,
}

impl WeightingVariant {
    pub fn name(&self) -> &'static str {
        match self {
            WeightingVariant::UnweightedDenominator => "unweighted-denominator",
            WeightingVariant::WeightedDenominator => "weighted-denominator",
            WeightingVariant::WeightedNumerator => "weighted-numerator",
            WeightingVariant::CubeRoot => "cube-root",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantState {
    policy: WeightingVariant,
    x0: ParamVector,
    x: ParamVector,
    num: ParamVector,
    den: ParamVector,
    weight_sum: f64,
    k: u64,
    eps: f64,
    cube: Option<MadgradState>,
}

impl VariantState {
    pub fn new(policy: WeightingVariant, x0: ParamVector, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::config(format!(
                "eps must be finite and >= 0, got {eps}"
            )));
        }
        let dim = x0.len();
        let cube = match policy {
            WeightingVariant::CubeRoot => Some(MadgradState::new(x0.clone(), eps)?),
            _ => None,
        };
        Ok(VariantState {
            policy,
            x: x0.clone(),
            x0,
            num: ParamVector::zeros(dim),
            den: ParamVector::zeros(dim),
            weight_sum: 0.0,
            k: 0,
            eps,
            cube,
        })
    }

    pub fn with_default_eps(policy: WeightingVariant, x0: ParamVector) -> Result<Self> {
        VariantState::new(policy, x0, DEFAULT_EPS)
    }

    pub fn policy(&self) -> WeightingVariant {
        self.policy
    }

    pub fn x(&self) -> &ParamVector {
        &self.x
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn step(&mut self, g: &GradSample, gamma_k: f64) -> Result<()> {
        if let Some(cube) = &mut self.cube {
            cube.step(g, gamma_k, 1.0)?;
            self.x.as_mut_slice().copy_from_slice(cube.x().as_slice());
            self.k += 1;
            return Ok(());
        }
        check_step_size(gamma_k)?;
        check_gradient(g, self.x0.len())?;
        let w = (self.k as f64 + 1.0).sqrt();
        let den_weight = match self.policy {
            WeightingVariant::UnweightedDenominator => gamma_k,
            WeightingVariant::WeightedDenominator => w * gamma_k,
            WeightingVariant::WeightedNumerator => w,
            WeightingVariant::CubeRoot => unreachable!(),
        };
        if self.eps == 0.0 {
            for (i, gi) in g.entries() {
                if self.den[i] + den_weight * gi * gi == 0.0 {
                    return Err(Error::DivisionByZero { index: i });
                }
            }
        }
        self.weight_sum += w;
        let t = self.k as f64 + 1.0;
        for (i, gi) in g.entries() {
            self.den[i] += den_weight * gi * gi;
            let denom = self.den[i].sqrt() + self.eps;
            match self.policy {
                WeightingVariant::WeightedNumerator => {
                    let coeff = gamma_k / t.sqrt() * self.weight_sum.sqrt() / denom;
                    self.x[i] = self.x0[i] - coeff * gi;
                }
                _ => {
                    self.num[i] += w * gamma_k * gi;
                    self.x[i] = self.x0[i] - self.num[i] / denom;
                }
            }
        }
        if self.policy == WeightingVariant::WeightedNumerator {
            // Only the newest gradient enters; untouched coordinates fall back to x0.
            if let GradSample::Sparse(sp) = g {
                let mut touched = sp.entries().iter().map(|e| e.0).peekable();
                for d in 0..self.x0.len() {
                    if touched.peek() == Some(&d) {
                        touched.next();
                    } else {
                        self.x[d] = self.x0[d];
                    }
                }
            }
        }
        self.k += 1;
        Ok(())
    }
}

/// Pure form of [`VariantState::step`]. `k` must equal the state's counter.
pub fn variant_step(
    policy: WeightingVariant,
    st: &VariantState,
    g: &GradSample,
    gamma_k: f64,
    k: u64,
) -> Result<VariantState> {
    if policy != st.policy {
        return Err(Error::config(format!(
            "state was built for {}, not {}",
            st.policy.name(),
            policy.name()
        )));
    }
    if k != st.k {
        return Err(Error::precondition(format!(
            "step index {k} != state counter {}",
            st.k
        )));
    }
    let mut next = st.clone();
    next.step(g, gamma_k)?;
    Ok(next)
}
