use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::ParamVector;
use crate::optimizers::{
    AdaGradForm, AdaGradState, AdamState, BetaRule, DualAvgState, GradientBound, HeavyBallState,
    MadgradState, Optimizer, VariantState, WeightingVariant, DEFAULT_EPS,
};
use crate::problems::{Problem, ProblemSpec};
use crate::schedules::{MomentumSchedule, StepSizeSchedule};
use crate::theory::{theorem1_rhs, BoundInputs, IndexConvention};

/// One experiment: a problem, an optimizer with its schedules, and the seeds
/// to run it under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub steps: u64,
    pub seeds: Seeds,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// CSV destination, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Every coordinate of the starting point.
    #[serde(default)]
    pub x0: f64,
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: ScheduleSpec,
    #[serde(default = "no_momentum")]
    pub momentum: MomentumSchedule,
}

fn default_record_every() -> u64 {
    1
}

fn no_momentum() -> MomentumSchedule {
    MomentumSchedule::Constant { c: 1.0 }
}

/// `seeds = 5` means seeds `0..5`; a list is used as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Madgrad {
        #[serde(default = "default_madgrad_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    /// The analysed variant; `g_bound` defaults to the problem's bound.
    MadgradTheory {
        #[serde(default)]
        g_bound: Option<f64>,
    },
    DualAveraging {
        #[serde(default = "yes")]
        sqrt_weighted: bool,
        #[serde(default)]
        weight_decay: f64,
    },
    Adagrad {
        #[serde(default = "default_adagrad_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    AdagradDa {
        #[serde(default = "default_adagrad_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    /// SGD with heavy-ball momentum `beta = 1 - c` taken from `[momentum]`.
    Sgd {
        #[serde(default)]
        weight_decay: f64,
    },
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Amsgrad {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Variant {
        policy: WeightingVariant,
        #[serde(default = "default_madgrad_eps")]
        eps: f64,
    },
}

fn default_madgrad_eps() -> f64 {
    DEFAULT_EPS
}

fn default_adagrad_eps() -> f64 {
    1e-10
}

fn default_adam_eps() -> f64 {
    1e-8
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn yes() -> bool {
    true
}

impl OptimizerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            OptimizerSpec::Madgrad { .. } => "madgrad",
            OptimizerSpec::MadgradTheory { .. } => "madgrad-theory",
            OptimizerSpec::DualAveraging { .. } => "dual-averaging",
            OptimizerSpec::Adagrad { .. } => "adagrad",
            OptimizerSpec::AdagradDa { .. } => "adagrad-da",
            OptimizerSpec::Sgd { .. } => "sgd",
            OptimizerSpec::Adam { .. } => "adam",
            OptimizerSpec::Amsgrad { .. } => "amsgrad",
            OptimizerSpec::Variant { .. } => "variant",
        }
    }

    pub fn weight_decay(&self) -> f64 {
        match self {
            OptimizerSpec::Madgrad { weight_decay, .. }
            | OptimizerSpec::DualAveraging { weight_decay, .. }
            | OptimizerSpec::Adagrad { weight_decay, .. }
            | OptimizerSpec::AdagradDa { weight_decay, .. }
            | OptimizerSpec::Sgd { weight_decay }
            | OptimizerSpec::Adam { weight_decay, .. }
            | OptimizerSpec::Amsgrad { weight_decay, .. } => *weight_decay,
            OptimizerSpec::MadgradTheory { .. } | OptimizerSpec::Variant { .. } => 0.0,
        }
    }

    /// Copy with the weight decay replaced.
    pub fn with_weight_decay(&self, wd: f64) -> Result<OptimizerSpec> {
        let mut out = self.clone();
        match &mut out {
            OptimizerSpec::Madgrad { weight_decay, .. }
            | OptimizerSpec::DualAveraging { weight_decay, .. }
            | OptimizerSpec::Adagrad { weight_decay, .. }
            | OptimizerSpec::AdagradDa { weight_decay, .. }
            | OptimizerSpec::Sgd { weight_decay }
            | OptimizerSpec::Adam { weight_decay, .. }
            | OptimizerSpec::Amsgrad { weight_decay, .. } => *weight_decay = wd,
            OptimizerSpec::MadgradTheory { .. } | OptimizerSpec::Variant { .. } => {
                if wd != 0.0 {
                    return Err(Error::config(format!(
                        "{} does not take weight decay",
                        self.kind()
                    )));
                }
            }
        }
        Ok(out)
    }

    fn g_bound(&self, problem: &dyn Problem) -> Result<f64> {
        match self {
            OptimizerSpec::MadgradTheory { g_bound } => g_bound
                .or_else(|| problem.g_inf_bound())
                .ok_or_else(|| {
                    Error::config(format!(
                        "madgrad-theory needs a gradient bound G, and {} has none; set optimizer.g_bound",
                        problem.name()
                    ))
                }),
            _ => problem
                .g_inf_bound()
                .ok_or_else(|| Error::config(format!("{} has no gradient bound G", problem.name()))),
        }
    }

    pub(crate) fn build(
        &self,
        x0: ParamVector,
        problem: &dyn Problem,
        momentum: &MomentumSchedule,
    ) -> Result<Box<dyn Optimizer>> {
        Ok(match self {
            OptimizerSpec::Madgrad { eps, weight_decay } => {
                Box::new(MadgradState::new(x0, *eps)?.with_weight_decay(*weight_decay)?)
            }
            OptimizerSpec::MadgradTheory { .. } => Box::new(MadgradState::theoretical(
                x0,
                GradientBound::Uniform(self.g_bound(problem)?),
            )?),
            OptimizerSpec::DualAveraging {
                sqrt_weighted,
                weight_decay,
            } => Box::new(
                DualAvgState::new(x0, BetaRule::Sqrt, *sqrt_weighted)
                    .with_weight_decay(*weight_decay)?,
            ),
            OptimizerSpec::Adagrad { eps, weight_decay } => Box::new(
                AdaGradState::new(AdaGradForm::MirrorDescent, x0, *eps)?
                    .with_weight_decay(*weight_decay)?,
            ),
            OptimizerSpec::AdagradDa { eps, weight_decay } => Box::new(
                AdaGradState::new(AdaGradForm::DualAveraging, x0, *eps)?
                    .with_weight_decay(*weight_decay)?,
            ),
            OptimizerSpec::Sgd { weight_decay } => {
                let MomentumSchedule::Constant { c } = momentum else {
                    return Err(Error::config(
                        "sgd takes a constant momentum c (beta = 1 - c)",
                    ));
                };
                // alpha is replaced by gamma_k on every step
                Box::new(HeavyBallState::new(x0, 1.0, 1.0 - c)?.with_weight_decay(*weight_decay)?)
            }
            OptimizerSpec::Adam {
                beta1,
                beta2,
                eps,
                weight_decay,
            } => Box::new(
                AdamState::new(x0, *beta1, *beta2, *eps, false)?
                    .with_weight_decay(*weight_decay)?,
            ),
            OptimizerSpec::Amsgrad {
                beta1,
                beta2,
                eps,
                weight_decay,
            } => Box::new(
                AdamState::new(x0, *beta1, *beta2, *eps, true)?.with_weight_decay(*weight_decay)?,
            ),
            OptimizerSpec::Variant { policy, eps } => {
                Box::new(VariantState::new(*policy, x0, *eps)?)
            }
        })
    }

    /// Whether the optimizer reads `c_k` from `[momentum]`.
    fn uses_momentum(&self) -> bool {
        matches!(
            self,
            OptimizerSpec::Madgrad { .. }
                | OptimizerSpec::MadgradTheory { .. }
                | OptimizerSpec::DualAveraging { .. }
                | OptimizerSpec::Sgd { .. }
        )
    }
}

/// A step-size schedule, or the constant step size that optimizes the
/// worst-case bound for this problem and step count.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Theorem1Optimal { convention: IndexConvention },
    Fixed(StepSizeSchedule),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Theorem1Fields {
    kind: String,
    #[serde(default)]
    convention: IndexConvention,
}

impl<'de> Deserialize<'de> for ScheduleSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = toml::Value::deserialize(deserializer)?;
        let kind = value
            .get("kind")
            .and_then(toml::Value::as_str)
            .unwrap_or_default();
        if kind == "theorem1-optimal" {
            let fields: Theorem1Fields = value.try_into().map_err(D::Error::custom)?;
            Ok(ScheduleSpec::Theorem1Optimal {
                convention: fields.convention,
            })
        } else {
            value
                .try_into()
                .map(ScheduleSpec::Fixed)
                .map_err(D::Error::custom)
        }
    }
}

impl Serialize for ScheduleSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ScheduleSpec::Theorem1Optimal { convention } => Theorem1Fields {
                kind: "theorem1-optimal".into(),
                convention: *convention,
            }
            .serialize(serializer),
            ScheduleSpec::Fixed(s) => s.serialize(serializer),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Where the CSV goes: `output` (or `<name>.csv`) under `dir` when given.
    pub fn output_path(&self, dir: Option<&Path>) -> PathBuf {
        let file = self
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)));
        match dir {
            Some(d) if file.is_relative() => d.join(file),
            _ => file,
        }
    }

    /// Checks the config on its own and against the problem it builds.
    pub fn validate(&self, problem: &dyn Problem) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::config("steps must be at least 1"));
        }
        if self.record_every < 1 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if self.seeds.to_vec().is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        if !self.x0.is_finite() {
            return Err(Error::config("x0 must be finite"));
        }
        self.momentum.validate()?;
        if let ScheduleSpec::Fixed(s) = &self.schedule {
            s.validate()?;
        }
        if problem.emits_sparse() && self.optimizer.uses_momentum() && !self.momentum.is_identity()
        {
            return Err(Error::config(format!(
                "{} emits sparse gradients, which require c = 1; got momentum {:?}",
                problem.name(),
                self.momentum
            )));
        }
        if problem.emits_sparse() && self.optimizer.weight_decay() > 0.0 {
            if let OptimizerSpec::Madgrad { .. } = self.optimizer {
                return Err(Error::config(
                    "madgrad does not combine weight decay with sparse gradients",
                ));
            }
        }
        if let OptimizerSpec::MadgradTheory { .. } = self.optimizer {
            self.optimizer.g_bound(problem)?;
        }
        if !self.optimizer.uses_momentum() && !self.momentum.is_identity() {
            return Err(Error::config(format!(
                "{} has its own momentum; remove the [momentum] section",
                self.optimizer.kind()
            )));
        }
        Ok(())
    }

    /// The concrete step-size schedule for this problem.
    pub fn resolve_schedule(&self, problem: &dyn Problem) -> Result<StepSizeSchedule> {
        match &self.schedule {
            ScheduleSpec::Fixed(s) => Ok(s.clone()),
            ScheduleSpec::Theorem1Optimal { convention } => {
                let x0 = ParamVector::filled(problem.dim(), self.x0);
                let dist0 = x0.sub(problem.optimum())?.l2();
                let t = theorem1_rhs(
                    &BoundInputs {
                        k: self.steps,
                        dim: problem.dim(),
                        g_bound: self.optimizer.g_bound(problem)?,
                        dist0,
                    },
                    *convention,
                )?;
                if !(t.gamma_opt > 0.0) {
                    return Err(Error::config(
                        "x0 is already optimal; the optimal step size is zero",
                    ));
                }
                Ok(StepSizeSchedule::Constant { gamma: t.gamma_opt })
            }
        }
    }
}
