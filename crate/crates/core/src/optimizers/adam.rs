use serde::{Deserialize, Serialize};

use super::{check_gradient, check_step_size, check_weight_decay, dense_view, weight_decayed};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector};

/// Adam with bias correction, optionally AMSGrad.
///
/// AMSGrad keeps `v_max`, the running elementwise maximum of `v`, and uses it
/// in place of `v` in the denominator. Weight decay is the coupled L2 form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    x: ParamVector,
    m: ParamVector,
    v: ParamVector,
    v_max: Option<ParamVector>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    k: u64,
    weight_decay: f64,
}

impl AdamState {
    pub fn new(x0: ParamVector, beta1: f64, beta2: f64, eps: f64, amsgrad: bool) -> Result<Self> {
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::config(format!(
                "eps must be finite and >= 0, got {eps}"
            )));
        }
        let dim = x0.len();
        Ok(AdamState {
            x: x0,
            m: ParamVector::zeros(dim),
            v: ParamVector::zeros(dim),
            v_max: amsgrad.then(|| ParamVector::zeros(dim)),
            beta1,
            beta2,
            eps,
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

    pub fn m(&self) -> &ParamVector {
        &self.m
    }

    pub fn v(&self) -> &ParamVector {
        &self.v
    }

    pub fn v_max(&self) -> Option<&ParamVector> {
        self.v_max.as_ref()
    }

    pub fn is_amsgrad(&self) -> bool {
        self.v_max.is_some()
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn step(&mut self, g: &GradSample, gamma: f64) -> Result<()> {
        check_step_size(gamma)?;
        check_gradient(g, self.x.len())?;
        let g = weight_decayed(g, &self.x, self.weight_decay);
        let g = dense_view(&g);
        let t = (self.k + 1) as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for d in 0..self.x.len() {
            self.m[d] = self.beta1 * self.m[d] + (1.0 - self.beta1) * g[d];
            self.v[d] = self.beta2 * self.v[d] + (1.0 - self.beta2) * g[d] * g[d];
            let second = match &mut self.v_max {
                Some(vm) => {
                    vm[d] = vm[d].max(self.v[d]);
                    vm[d]
                }
                None => self.v[d],
            };
            let denom = (second / bias2).sqrt() + self.eps;
            // A coordinate that has only ever seen zero gradients has m = 0 too.
            if denom > 0.0 {
                self.x[d] -= gamma * (self.m[d] / bias1) / denom;
            }
        }
        self.k += 1;
        Ok(())
    }
}

pub fn adam_step(st: &AdamState, g: &GradSample, gamma: f64) -> Result<AdamState> {
    let mut next = st.clone();
    next.step(g, gamma)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn first_step_moves_by_sign() {
        let mut rng = Rng::new(1);
        let x0 = rng.normal_vector(5);
        let g = GradSample::dense(vec![3.0, -0.5, 1e-3, -7.0, 0.0]);
        for amsgrad in [false, true] {
            let st = AdamState::new(x0.clone(), 0.9, 0.999, 0.0, amsgrad).unwrap();
            let next = adam_step(&st, &g, 0.01).unwrap();
            let expected = [-0.01, 0.01, -0.01, 0.01, 0.0];
            for d in 0..5 {
                assert!((next.x()[d] - x0[d] - expected[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gradient_forever_is_fixed() {
        let x0 = ParamVector::new(vec![1.0, -2.0]);
        let mut st = AdamState::new(x0.clone(), 0.9, 0.999, 0.0, false).unwrap();
        for _ in 0..100 {
            st.step(&GradSample::Dense(ParamVector::zeros(2)), 0.1)
                .unwrap();
        }
        assert_eq!(st.x(), &x0);
    }

    #[test]
    fn amsgrad_max_is_nondecreasing() {
        let mut rng = Rng::new(21);
        let mut st = AdamState::new(rng.normal_vector(4), 0.9, 0.99, 1e-8, true).unwrap();
        for k in 0..500 {
            let prev = st.v_max().unwrap().clone();
            let scale = if k % 50 < 5 { 10.0 } else { 0.1 };
            st.step(&GradSample::Dense(rng.normal_vector(4).scaled(scale)), 1e-3)
                .unwrap();
            let now = st.v_max().unwrap();
            assert!(now.iter().zip(prev.iter()).all(|(a, b)| a >= b));
            assert!(st.v().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn matches_reference_trace() {
        // Scalar reference with bias correction written out by hand.
        let (b1, b2, eps, lr) = (0.8, 0.95, 1e-3, 0.05);
        let grads = [0.3, -1.2, 0.7, 0.05];
        let mut st = AdamState::new(ParamVector::new(vec![0.4]), b1, b2, eps, false).unwrap();
        let (mut x, mut m, mut v) = (0.4f64, 0.0f64, 0.0f64);
        for (t, g) in grads.iter().enumerate() {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32 + 1));
            let vh = v / (1.0 - b2.powi(t as i32 + 1));
            x -= lr * mh / (vh.sqrt() + eps);
            st.step(&GradSample::dense(vec![*g]), lr).unwrap();
            assert!((st.x()[0] - x).abs() < 1e-14);
        }
    }
}
