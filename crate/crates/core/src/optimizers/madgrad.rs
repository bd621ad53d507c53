use serde::{Deserialize, Serialize};

use super::{check_control, check_gradient, weight_decayed};
use crate::error::{check_dims, Error, Result};
use crate::numerics::{GradSample, ParamVector};
use crate::schedules::lambda_weight;

/// Default `eps`, added after the cube root.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Bound `|g_d| <= G_d` on every stochastic gradient coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientBound {
    Uniform(f64),
    PerCoordinate(ParamVector),
}

impl GradientBound {
    pub fn at(&self, d: usize) -> f64 {
        match self {
            GradientBound::Uniform(g) => *g,
            GradientBound::PerCoordinate(v) => v[d],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            GradientBound::Uniform(g) => {
                if !(*g > 0.0 && g.is_finite()) {
                    return Err(Error::config(format!(
                        "gradient bound must be positive, got {g}"
                    )));
                }
            }
            GradientBound::PerCoordinate(v) => {
                check_dims(dim, v.len())?;
                if let Some(bad) = v.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
                    return Err(Error::config(format!(
                        "per-coordinate gradient bound must be positive, got {bad}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// MADGRAD state: dual-averaged, cube-root scaled, with iterate averaging.
///
/// `s` and `nu` accumulate `lambda_k g_k` and `lambda_k g_k^2`; `z` is the
/// dual-averaging point anchored at `x0` and `x` the averaged iterate at
/// which gradients are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadgradState {
    x0: ParamVector,
    s: ParamVector,
    nu: ParamVector,
    z: ParamVector,
    x: ParamVector,
    k: u64,
    eps: f64,
    weight_decay: f64,
    g_bound: Option<GradientBound>,
}

impl MadgradState {
    pub fn new(x0: ParamVector, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::config(format!(
                "eps must be finite and >= 0, got {eps}"
            )));
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("initial point".into()));
        }
        let dim = x0.len();
        Ok(MadgradState {
            s: ParamVector::zeros(dim),
            nu: ParamVector::zeros(dim),
            z: x0.clone(),
            x: x0.clone(),
            x0,
            k: 0,
            eps,
            weight_decay: 0.0,
            g_bound: None,
        })
    }

    /// State for the variant with `lambda_{k+1} G^2` inside the cube root.
    /// That variant has no `eps` and no weight decay.
    pub fn theoretical(x0: ParamVector, bound: GradientBound) -> Result<Self> {
        bound.validate(x0.len())?;
        let mut st = MadgradState::new(x0, 0.0)?;
        st.g_bound = Some(bound);
        Ok(st)
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Result<Self> {
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::config(format!(
                "weight decay must be finite and >= 0, got {weight_decay}"
            )));
        }
        if weight_decay > 0.0 && self.g_bound.is_some() {
            return Err(Error::config(
                "the theoretical variant does not take weight decay",
            ));
        }
        self.weight_decay = weight_decay;
        Ok(self)
    }

    pub fn x0(&self) -> &ParamVector {
        &self.x0
    }

    pub fn s(&self) -> &ParamVector {
        &self.s
    }

    pub fn nu(&self) -> &ParamVector {
        &self.nu
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

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn weight_decay(&self) -> f64 {
        self.weight_decay
    }

    pub fn gradient_bound(&self) -> Option<&GradientBound> {
        self.g_bound.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// One step of the practical method.
    ///
    /// Sparse gradients require `c_next == 1`; with them only the touched
    /// coordinates of `s`, `nu`, `z` and `x` are written. The state is left
    /// untouched when an error is returned.
    pub fn step(&mut self, g: &GradSample, gamma_k: f64, c_next: f64) -> Result<()> {
        if self.g_bound.is_some() {
            return Err(Error::config(
                "state carries a gradient bound; use step_theoretical",
            ));
        }
        check_control(gamma_k, c_next)?;
        check_gradient(g, self.dim())?;
        if g.is_sparse() {
            if c_next != 1.0 {
                return Err(Error::config(format!(
                    "sparse gradients require c = 1 (no iterate averaging), got c = {c_next}"
                )));
            }
            if self.weight_decay > 0.0 {
                return Err(Error::config(
                    "weight decay is not supported with sparse gradients",
                ));
            }
        }
        let g = weight_decayed(g, &self.x, self.weight_decay);
        let lambda = lambda_weight(gamma_k, self.k);

        if self.eps == 0.0 {
            for (i, gi) in g.entries() {
                if self.nu[i] + lambda * gi * gi == 0.0 {
                    return Err(Error::DivisionByZero { index: i });
                }
            }
        }

        for (i, gi) in g.entries() {
            self.s[i] += lambda * gi;
            self.nu[i] += lambda * gi * gi;
            self.z[i] = self.x0[i] - self.s[i] / (self.nu[i].cbrt() + self.eps);
        }
        match g.as_ref() {
            GradSample::Sparse(sp) => {
                for &(i, _) in sp.entries() {
                    self.x[i] = self.z[i];
                }
            }
            GradSample::Dense(_) => average_into(&mut self.x, &self.z, c_next),
        }
        self.k += 1;
        Ok(())
    }

    /// One step of the analysed variant:
    /// `z = x0 - s / cbrt(lambda_{k+1} G^2 + nu)`, with
    /// `lambda_{k+1} = gamma_next * sqrt(k + 2)`.
    pub fn step_theoretical(
        &mut self,
        g: &GradSample,
        gamma_k: f64,
        gamma_next: f64,
        c_next: f64,
    ) -> Result<()> {
        let bound = self
            .g_bound
            .as_ref()
            .ok_or_else(|| Error::config("theoretical step needs a gradient bound G"))?;
        check_control(gamma_k, c_next)?;
        check_control(gamma_next, c_next)?;
        check_gradient(g, self.dim())?;
        for (i, gi) in g.entries() {
            let b = bound.at(i);
            if gi.abs() > b {
                return Err(Error::GradientBound {
                    index: i,
                    value: gi.abs(),
                    bound: b,
                });
            }
        }
        let lambda = lambda_weight(gamma_k, self.k);
        let lambda_next = lambda_weight(gamma_next, self.k + 1);
        for (i, gi) in g.entries() {
            self.s[i] += lambda * gi;
            self.nu[i] += lambda * gi * gi;
        }
        for d in 0..self.dim() {
            let b = bound.at(d);
            self.z[d] = self.x0[d] - self.s[d] / (lambda_next * b * b + self.nu[d]).cbrt();
        }
        average_into(&mut self.x, &self.z, c_next);
        self.k += 1;
        Ok(())
    }
}

/// `x <- (1 - c) x + c z`, evaluated as `x + c (z - x)` so that `x == z`
/// is reproduced exactly; `c == 1` copies `z`.
pub(crate) fn average_into(x: &mut ParamVector, z: &ParamVector, c: f64) {
    if c == 1.0 {
        x.as_mut_slice().copy_from_slice(z.as_slice());
        return;
    }
    for (xi, zi) in x.as_mut_slice().iter_mut().zip(z.iter()) {
        *xi += c * (zi - *xi);
    }
}

/// Pure form of [`MadgradState::step`].
pub fn madgrad_step(
    st: &MadgradState,
    g: &GradSample,
    gamma_k: f64,
    c_next: f64,
) -> Result<MadgradState> {
    let mut next = st.clone();
    next.step(g, gamma_k, c_next)?;
    Ok(next)
}

/// Pure form of [`MadgradState::step_theoretical`] under a constant step
/// size (`gamma_{k+1} = gamma_k`).
pub fn madgrad_theoretical_step(
    st: &MadgradState,
    g: &GradSample,
    gamma_k: f64,
    c_next: f64,
) -> Result<MadgradState> {
    let mut next = st.clone();
    next.step_theoretical(g, gamma_k, gamma_k, c_next)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec())
    }

    #[test]
    fn scalar_trace() {
        let st = MadgradState::new(pv(&[1.0]), 0.0).unwrap();
        let next = madgrad_step(&st, &GradSample::dense(vec![2.0]), 0.1, 1.0).unwrap();
        assert!((next.s()[0] - 0.2).abs() < 1e-15);
        assert!((next.nu()[0] - 0.4).abs() < 1e-15);
        // 1 - 0.2 / 0.4^(1/3), 40-digit scalar evaluation
        assert!((next.x()[0] - 0.728_558_238_340_509_3).abs() < 1e-6);
        assert_eq!(next.k(), 1);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut rng = Rng::new(3);
        let mut st = MadgradState::new(rng.normal_vector(5), DEFAULT_EPS).unwrap();
        for _ in 0..10 {
            st.step(&GradSample::Dense(rng.normal_vector(5)), 0.05, 1.0)
                .unwrap();
        }
        assert_eq!(st.x(), st.z());
        let before = st.clone();
        st.step(&GradSample::Dense(ParamVector::zeros(5)), 0.05, 0.3)
            .unwrap();
        assert_eq!(st.z(), before.z());
        assert_eq!(st.x(), before.x());
        assert_eq!(st.s(), before.s());
        assert_eq!(st.nu(), before.nu());
    }

    #[test]
    fn zero_gradient_moves_x_toward_z() {
        let mut rng = Rng::new(4);
        let mut st = MadgradState::new(rng.normal_vector(3), DEFAULT_EPS).unwrap();
        for _ in 0..5 {
            st.step(&GradSample::Dense(rng.normal_vector(3)), 0.05, 0.2)
                .unwrap();
        }
        let gap_before = st.x().sub(st.z()).unwrap().l2();
        let z_before = st.z().clone();
        st.step(&GradSample::Dense(ParamVector::zeros(3)), 0.05, 0.2)
            .unwrap();
        assert_eq!(st.z(), &z_before);
        let gap_after = st.x().sub(st.z()).unwrap().l2();
        assert!((gap_after - 0.8 * gap_before).abs() < 1e-12);
    }

    #[test]
    fn sparse_step_touches_only_listed_coordinates() {
        let mut rng = Rng::new(5);
        let mut st = MadgradState::new(rng.normal_vector(8), DEFAULT_EPS).unwrap();
        st.step(&GradSample::Dense(rng.normal_vector(8)), 0.1, 1.0)
            .unwrap();
        let before = st.clone();
        let g = GradSample::sparse(8, vec![(3, 0.7)]).unwrap();
        st.step(&g, 0.1, 1.0).unwrap();
        for d in (0..8).filter(|&d| d != 3) {
            assert_eq!(st.s()[d].to_bits(), before.s()[d].to_bits());
            assert_eq!(st.nu()[d].to_bits(), before.nu()[d].to_bits());
            assert_eq!(st.z()[d].to_bits(), before.z()[d].to_bits());
            assert_eq!(st.x()[d].to_bits(), before.x()[d].to_bits());
        }
        assert_ne!(st.x()[3], before.x()[3]);
    }

    #[test]
    fn sparse_with_averaging_is_rejected() {
        let mut st = MadgradState::new(ParamVector::zeros(4), DEFAULT_EPS).unwrap();
        let g = GradSample::sparse(4, vec![(1, 1.0)]).unwrap();
        assert!(matches!(st.step(&g, 0.1, 0.9), Err(Error::Config(_))));
        assert_eq!(st.k(), 0);
    }

    #[test]
    fn division_by_zero_and_nan_rejected() {
        let mut st = MadgradState::new(pv(&[0.0, 0.0]), 0.0).unwrap();
        let before = st.clone();
        assert!(matches!(
            st.step(&GradSample::dense(vec![1.0, 0.0]), 0.1, 1.0),
            Err(Error::DivisionByZero { index: 1 })
        ));
        assert_eq!(st, before);
        assert!(matches!(
            st.step(&GradSample::dense(vec![f64::NAN, 1.0]), 0.1, 1.0),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            st.step(&GradSample::dense(vec![1.0]), 0.1, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weight_decay_adds_l2_gradient() {
        let x0 = pv(&[2.0, -1.0]);
        let mut decayed = MadgradState::new(x0.clone(), 0.0)
            .unwrap()
            .with_weight_decay(0.5)
            .unwrap();
        let mut manual = MadgradState::new(x0, 0.0).unwrap();
        decayed
            .step(&GradSample::dense(vec![1.0, 1.0]), 0.1, 1.0)
            .unwrap();
        manual
            .step(&GradSample::dense(vec![2.0, 0.5]), 0.1, 1.0)
            .unwrap();
        assert_eq!(decayed.x(), manual.x());
    }

    #[test]
    fn theoretical_scalar_trace() {
        let st = MadgradState::theoretical(pv(&[0.0]), GradientBound::Uniform(1.0)).unwrap();
        let next = madgrad_theoretical_step(&st, &GradSample::dense(vec![1.0]), 1.0, 1.0).unwrap();
        assert_eq!(next.s()[0], 1.0);
        assert_eq!(next.nu()[0], 1.0);
        // -1 / cbrt(sqrt(2) + 1), 40-digit scalar evaluation
        assert!((next.z()[0] + 0.745_432_124_647_256_2).abs() < 1e-12);
        assert_eq!(next.x(), next.z());
    }

    #[test]
    fn theoretical_zero_gradient_shrinks_toward_x0() {
        let mut st = MadgradState::theoretical(pv(&[0.5]), GradientBound::Uniform(1.0)).unwrap();
        st.step_theoretical(&GradSample::dense(vec![0.8]), 1.0, 1.0, 1.0)
            .unwrap();
        let dist_before = (st.z()[0] - 0.5).abs();
        let s_before = st.s().clone();
        st.step_theoretical(&GradSample::dense(vec![0.0]), 1.0, 1.0, 1.0)
            .unwrap();
        assert_eq!(st.s(), &s_before);
        assert!((st.z()[0] - 0.5).abs() < dist_before);
    }

    #[test]
    fn theoretical_bound_violation() {
        let mut st = MadgradState::theoretical(pv(&[0.0]), GradientBound::Uniform(1.0)).unwrap();
        assert!(matches!(
            st.step_theoretical(&GradSample::dense(vec![2.0]), 1.0, 1.0, 1.0),
            Err(Error::GradientBound { index: 0, .. })
        ));
        assert!(matches!(
            st.step(&GradSample::dense(vec![0.5]), 1.0, 1.0),
            Err(Error::Config(_))
        ));
        let per = GradientBound::PerCoordinate(pv(&[1.0, 0.1]));
        let mut st = MadgradState::theoretical(pv(&[0.0, 0.0]), per).unwrap();
        assert!(st
            .step_theoretical(&GradSample::dense(vec![0.9, 0.2]), 1.0, 1.0, 1.0)
            .is_err());
        assert!(st
            .step_theoretical(&GradSample::dense(vec![0.9, 0.1]), 1.0, 1.0, 1.0)
            .is_ok());
    }

    #[test]
    fn nu_is_nondecreasing() {
        let mut rng = Rng::new(11);
        let mut st = MadgradState::new(rng.normal_vector(6), DEFAULT_EPS).unwrap();
        for k in 0..200 {
            let prev = st.nu().clone();
            st.step(
                &GradSample::Dense(rng.normal_vector(6)),
                0.01 + (k % 7) as f64 * 0.01,
                0.1,
            )
            .unwrap();
            assert!(st.nu().iter().zip(prev.iter()).all(|(a, b)| a >= b));
        }
    }
}
