//! Step-size (`gamma_k`), gradient-weight (`lambda_k`) and momentum (`c_k`)
//! sequences. All are pure functions of the 0-based optimizer step `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size sequence `gamma_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSizeSchedule {
    Constant {
        gamma: f64,
    },
    /// `gamma0 * factor^m`, where `m` counts boundaries `b <= k`.
    Stagewise {
        gamma0: f64,
        boundaries: Vec<u64>,
        factor: f64,
    },
    /// `a / sqrt(k + 1 + b)`.
    SqrtDecay {
        a: f64,
        b: f64,
    },
    /// Linear ramp `peak * (k + 1) / warmup_steps`, then
    /// `peak * sqrt(warmup_steps / (k + 1))`.
    InverseSqrtWarmup {
        peak: f64,
        warmup_steps: u64,
    },
    /// `(gamma0 - end_gamma) * (1 - min(k, end_step) / end_step)^power + end_gamma`.
    PolynomialDecay {
        gamma0: f64,
        end_step: u64,
        power: f64,
        end_gamma: f64,
    },
}

impl StepSizeSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            StepSizeSchedule::Constant { gamma } => positive("gamma", *gamma),
            StepSizeSchedule::Stagewise {
                gamma0,
                boundaries,
                factor,
            } => {
                positive("gamma0", *gamma0)?;
                if !(*factor > 0.0 && *factor <= 1.0) {
                    return Err(Error::config(format!(
                        "stagewise factor must lie in (0, 1], got {factor}"
                    )));
                }
                if boundaries.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::config(
                        "stagewise boundaries must be strictly increasing",
                    ));
                }
                Ok(())
            }
            StepSizeSchedule::SqrtDecay { a, b } => {
                positive("a", *a)?;
                if *b < 0.0 || !b.is_finite() {
                    return Err(Error::config(format!(
                        "sqrt-decay offset b must be >= 0, got {b}"
                    )));
                }
                Ok(())
            }
            StepSizeSchedule::InverseSqrtWarmup { peak, warmup_steps } => {
                positive("peak", *peak)?;
                if *warmup_steps == 0 {
                    return Err(Error::config("warmup_steps must be >= 1"));
                }
                Ok(())
            }
            StepSizeSchedule::PolynomialDecay {
                gamma0,
                end_step,
                power,
                end_gamma,
            } => {
                positive("gamma0", *gamma0)?;
                positive("end_gamma", *end_gamma)?;
                positive("power", *power)?;
                if *end_step == 0 {
                    return Err(Error::config("end_step must be >= 1"));
                }
                if end_gamma > gamma0 {
                    return Err(Error::config("end_gamma must not exceed gamma0"));
                }
                Ok(())
            }
        }
    }

    /// The base learning rate that a grid sweep replaces.
    pub fn base_lr(&self) -> f64 {
        match self {
            StepSizeSchedule::Constant { gamma } => *gamma,
            StepSizeSchedule::Stagewise { gamma0, .. } => *gamma0,
            StepSizeSchedule::SqrtDecay { a, .. } => *a,
            StepSizeSchedule::InverseSqrtWarmup { peak, .. } => *peak,
            StepSizeSchedule::PolynomialDecay { gamma0, .. } => *gamma0,
        }
    }

    /// Same schedule shape with its base learning rate replaced by `lr`.
    /// A polynomial schedule keeps its `end_gamma / gamma0` ratio.
    pub fn with_base_lr(&self, lr: f64) -> StepSizeSchedule {
        let mut out = self.clone();
        match &mut out {
            StepSizeSchedule::Constant { gamma } => *gamma = lr,
            StepSizeSchedule::Stagewise { gamma0, .. } => *gamma0 = lr,
            StepSizeSchedule::SqrtDecay { a, .. } => *a = lr,
            StepSizeSchedule::InverseSqrtWarmup { peak, .. } => *peak = lr,
            StepSizeSchedule::PolynomialDecay {
                gamma0, end_gamma, ..
            } => {
                *end_gamma *= lr / *gamma0;
                *gamma0 = lr;
            }
        }
        out
    }
}

/// `gamma_k` for the given schedule.
pub fn step_size(s: &StepSizeSchedule, k: u64) -> f64 {
    match s {
        StepSizeSchedule::Constant { gamma } => *gamma,
        StepSizeSchedule::Stagewise {
            gamma0,
            boundaries,
            factor,
        } => {
            let crossed = boundaries.iter().take_while(|&&b| b <= k).count();
            gamma0 * factor.powi(crossed as i32)
        }
        StepSizeSchedule::SqrtDecay { a, b } => a / (k as f64 + 1.0 + b).sqrt(),
        StepSizeSchedule::InverseSqrtWarmup { peak, warmup_steps } => {
            let w = *warmup_steps as f64;
            let t = k as f64 + 1.0;
            if k < *warmup_steps {
                peak * t / w
            } else {
                peak * (w / t).sqrt()
            }
        }
        StepSizeSchedule::PolynomialDecay {
            gamma0,
            end_step,
            power,
            end_gamma,
        } => {
            let frac = k.min(*end_step) as f64 / *end_step as f64;
            (gamma0 - end_gamma) * (1.0 - frac).powf(*power) + end_gamma
        }
    }
}

/// `lambda_k = gamma_k * sqrt(k + 1)`.
pub fn lambda_weight(gamma_k: f64, k: u64) -> f64 {
    gamma_k * (k as f64 + 1.0).sqrt()
}

/// Momentum (averaging) coefficient sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MomentumSchedule {
    /// Constant `c`; `c = 1 - beta` for a heavy-ball momentum `beta`.
    Constant { c: f64 },
    /// `c_k = (r + 1) / (k + j + r + 1)`, so `c_0 = 1` when `j = 0`.
    /// With `r = 1/2, j = 0` this is `(3/2) / (k + 3/2)`.
    Decaying { r: f64, j: f64 },
}

impl MomentumSchedule {
    /// `c_k = (3/2)/(k + 3/2)`, the rate used by the convex convergence bound.
    pub fn theorem() -> Self {
        MomentumSchedule::Decaying { r: 0.5, j: 0.0 }
    }

    /// The averaging coefficient equivalent to heavy-ball momentum `beta`.
    pub fn from_heavy_ball(beta: f64) -> Self {
        MomentumSchedule::Constant { c: 1.0 - beta }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MomentumSchedule::Constant { c } => {
                if *c > 0.0 && *c <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!(
                        "momentum c must lie in (0, 1], got {c}"
                    )))
                }
            }
            MomentumSchedule::Decaying { r, j } => {
                if !(*r > 0.0 && *r <= 1.0) {
                    return Err(Error::config(format!(
                        "decaying momentum needs 0 < r <= 1, got {r}"
                    )));
                }
                if *j < 0.0 || !j.is_finite() {
                    return Err(Error::config(format!(
                        "decaying momentum needs j >= 0, got {j}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// True when every `c_k` equals one (no iterate averaging).
    pub fn is_identity(&self) -> bool {
        matches!(self, MomentumSchedule::Constant { c } if *c == 1.0)
    }
}

/// `c_k` for the given schedule.
pub fn momentum_coeff(s: &MomentumSchedule, k: u64) -> f64 {
    match s {
        MomentumSchedule::Constant { c } => *c,
        MomentumSchedule::Decaying { r, j } => (r + 1.0) / (k as f64 + j + r + 1.0),
    }
}

/// Checks the iterate-weighting inequality
/// `(1 - c_k)/c_k * (k+j)^r <= (k+j-1)^r / c_{k-1}` with `c_k = (r+1)/(k+j+r)`
/// for every `1 <= k <= k_max`, allowing `1e-12` relative slack.
pub fn check_ck_lemma(r: f64, j: f64, k_max: u64) -> Result<bool> {
    Ok(ck_lemma_worst_slack(r, j, k_max)? <= 0.0)
}

/// Largest `lhs - rhs - 1e-12 * max(1, |rhs|)` over `1 <= k <= k_max`;
/// nonpositive iff the inequality holds everywhere.
pub fn ck_lemma_worst_slack(r: f64, j: f64, k_max: u64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::precondition(format!(
            "lemma requires 0 < r < 1, got {r}"
        )));
    }
    if !(j >= 0.0) || !j.is_finite() {
        return Err(Error::precondition(format!(
            "lemma requires j >= 0, got {j}"
        )));
    }
    if k_max < 1 {
        return Err(Error::precondition("lemma requires k_max >= 1"));
    }
    let c = |k: f64| (r + 1.0) / (k + j + r);
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=k_max {
        let kf = k as f64;
        let ck = c(kf);
        let lhs = (1.0 - ck) / ck * (kf + j).powf(r);
        let rhs = (kf + j - 1.0).powf(r) / c(kf - 1.0);
        worst = worst.max(lhs - rhs - 1e-12 * rhs.abs().max(1.0));
    }
    Ok(worst)
}
