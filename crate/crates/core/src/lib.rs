//! MADGRAD and its comparison optimizers on small synthetic problems, with
//! numerical checks of the convergence analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod optimizers;
pub mod presets;
pub mod problems;
pub mod runner;
pub mod schedules;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{GradSample, ParamVector, Rng, SparseGrad};
pub use optimizers::{Optimizer, StepControl};
pub use problems::{Problem, ProblemSpec};
pub use runner::{run, RunConfig, RunOutput, RunRecord};
pub use schedules::{MomentumSchedule, StepSizeSchedule};
