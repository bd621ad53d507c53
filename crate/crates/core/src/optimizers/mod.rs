//! Optimizer state records and their step transitions.
//!
//! Every optimizer owns an explicit state record with an in-place `step`
//! that validates its inputs before mutating anything, so a failed step
//! leaves the state as it was. The `*_step` free functions are the pure
//! `state -> state` forms. [`Optimizer`] is the uniform interface the runner
//! drives.

mod adagrad;
mod adam;
mod dual_averaging;
mod madgrad;
mod momentum;
mod variants;

use std::borrow::Cow;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use adagrad::{adagrad_step, AdaGradForm, AdaGradState};
pub use adam::{adam_step, AdamState};
pub use dual_averaging::{dual_avg_step, BetaRule, DualAvgState};
pub use madgrad::{
    madgrad_step, madgrad_theoretical_step, GradientBound, MadgradState, DEFAULT_EPS,
};
pub use momentum::{heavy_ball_step, inline_avg_step, HeavyBallState, InlineAvgState};
pub use variants::{variant_step, VariantState, WeightingVariant};

use crate::error::{check_dims, Error, Result};
use crate::numerics::{GradSample, ParamVector};

/// Per-step inputs supplied by the schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// `gamma_k`.
    pub gamma: f64,
    /// `gamma_{k+1}`; only the theoretical MADGRAD variant reads it.
    pub gamma_next: f64,
    /// Averaging weight producing `x_{k+1}`.
    pub c_next: f64,
}

impl StepControl {
    pub fn constant(gamma: f64, c_next: f64) -> Self {
        StepControl {
            gamma,
            gamma_next: gamma,
            c_next,
        }
    }
}

/// Uniform interface over all state records.
pub trait Optimizer: Send {
    fn name(&self) -> &'static str;

    /// The point at which the next gradient is evaluated.
    fn iterate(&self) -> &ParamVector;

    fn steps_taken(&self) -> u64;

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()>;
}

impl Optimizer for MadgradState {
    fn name(&self) -> &'static str {
        if self.gradient_bound().is_some() {
            "madgrad-theory"
        } else {
            "madgrad"
        }
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        if self.gradient_bound().is_some() {
            self.step_theoretical(g, ctl.gamma, ctl.gamma_next, ctl.c_next)
        } else {
            MadgradState::step(self, g, ctl.gamma, ctl.c_next)
        }
    }
}

impl Optimizer for DualAvgState {
    fn name(&self) -> &'static str {
        "dual-averaging"
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        let lambda = self.lambda_for(ctl.gamma);
        DualAvgState::step(self, g, lambda, ctl.c_next)
    }
}

impl Optimizer for AdaGradState {
    fn name(&self) -> &'static str {
        match self.form() {
            AdaGradForm::MirrorDescent => "adagrad",
            AdaGradForm::DualAveraging => "adagrad-da",
        }
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        AdaGradState::step(self, g, ctl.gamma)
    }
}

impl Optimizer for HeavyBallState {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        self.set_alpha(ctl.gamma)?;
        HeavyBallState::step(self, g)
    }
}

impl Optimizer for InlineAvgState {
    fn name(&self) -> &'static str {
        "sgd-inline"
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        self.set_eta_c(ctl.gamma, ctl.c_next)?;
        InlineAvgState::step(self, g)
    }
}

impl Optimizer for AdamState {
    fn name(&self) -> &'static str {
        if self.is_amsgrad() {
            "amsgrad"
        } else {
            "adam"
        }
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        AdamState::step(self, g, ctl.gamma)
    }
}

impl Optimizer for VariantState {
    fn name(&self) -> &'static str {
        self.policy().name()
    }

    fn iterate(&self) -> &ParamVector {
        self.x()
    }

    fn steps_taken(&self) -> u64 {
        self.k()
    }

    fn step(&mut self, g: &GradSample, ctl: &StepControl) -> Result<()> {
        VariantState::step(self, g, ctl.gamma)
    }
}

/// Serializes a state record to its flat text snapshot.
pub fn to_snapshot<T: Serialize>(state: &T) -> Result<String> {
    toml::to_string(state).map_err(|e| Error::Parse(e.to_string()))
}

/// Restores a state record from [`to_snapshot`] output.
pub fn from_snapshot<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub(crate) fn check_control(gamma: f64, c: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::precondition(format!(
            "step size must be positive, got {gamma}"
        )));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::precondition(format!(
            "momentum c must lie in (0, 1], got {c}"
        )));
    }
    Ok(())
}

pub(crate) fn check_step_size(gamma: f64) -> Result<()> {
    check_control(gamma, 1.0)
}

pub(crate) fn check_gradient(g: &GradSample, dim: usize) -> Result<()> {
    check_dims(dim, g.dim())?;
    if !g.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(())
}

pub(crate) fn check_weight_decay(wd: f64) -> Result<()> {
    if wd >= 0.0 && wd.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "weight decay must be finite and >= 0, got {wd}"
        )))
    }
}

/// `g + wd * x`. A sparse sample is densified when `wd > 0`.
pub(crate) fn weight_decayed<'a>(
    g: &'a GradSample,
    x: &ParamVector,
    wd: f64,
) -> Cow<'a, GradSample> {
    if wd == 0.0 {
        return Cow::Borrowed(g);
    }
    let mut dense = g.to_dense();
    for (gi, xi) in dense.as_mut_slice().iter_mut().zip(x.iter()) {
        *gi += wd * xi;
    }
    Cow::Owned(GradSample::Dense(dense))
}

/// Densified view of a gradient, for optimizers without a sparse path.
pub(crate) fn dense_view(g: &GradSample) -> Cow<'_, ParamVector> {
    match g {
        GradSample::Dense(v) => Cow::Borrowed(v),
        GradSample::Sparse(_) => Cow::Owned(g.to_dense()),
    }
}
