use super::{check_point, check_sample, Problem, Sample};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector};

/// Rare large gradients against frequent small opposing ones, on the box
/// `[-1, 1]^D`.
///
/// Out of every `period` samples, `rare` have loss `large * t` per coordinate
/// and the rest `-t`; each also pays `(large + 1) * dist(t, [-1, 1])`, which
/// keeps the minimizer in the box without a projection. The mean slope
/// `(rare * large - (period - rare)) / period` decides which corner is optimal.
/// With the defaults (20, 20, 2) the slope is `1.1` and `x* = -1`, while
/// exponential moving averages of the squared gradient forget the rare samples.
#[derive(Debug, Clone)]
pub struct AdamStress {
    dim: usize,
    large: f64,
    period: usize,
    rare: usize,
    optimum: ParamVector,
    f_star: f64,
}

impl AdamStress {
    pub fn new(dim: usize, large: f64, period: usize, rare: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if !(large > 0.0 && large.is_finite()) {
            return Err(Error::config(format!(
                "large must be positive, got {large}"
            )));
        }
        if rare == 0 || rare >= period {
            return Err(Error::config(format!(
                "need 0 < rare < period, got rare={rare} period={period}"
            )));
        }
        let slope = (rare as f64 * large - (period - rare) as f64) / period as f64;
        if slope == 0.0 {
            return Err(Error::config(
                "mean slope is zero; the minimizer is not unique",
            ));
        }
        let corner = -slope.signum();
        Ok(AdamStress {
            dim,
            large,
            period,
            rare,
            optimum: ParamVector::filled(dim, corner),
            f_star: -(dim as f64) * slope.abs(),
        })
    }

    /// Mean slope of the objective inside the box.
    pub fn mean_slope(&self) -> f64 {
        (self.rare as f64 * self.large - (self.period - self.rare) as f64) / self.period as f64
    }

    fn penalty(&self) -> f64 {
        self.large + 1.0
    }

    fn slope_of(&self, xi: Sample) -> f64 {
        if xi < self.rare {
            self.large
        } else {
            -1.0
        }
    }
}

impl Problem for AdamStress {
    fn name(&self) -> &'static str {
        "adam-stress"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.period
    }

    fn loss(&self, x: &ParamVector, xi: Sample) -> Result<f64> {
        check_point(x, self.dim)?;
        check_sample(xi, self.period)?;
        let a = self.slope_of(xi);
        let m = self.penalty();
        Ok(x.iter().map(|t| a * t + m * (t.abs() - 1.0).max(0.0)).sum())
    }

    fn grad(&self, x: &ParamVector, xi: Sample) -> Result<GradSample> {
        check_point(x, self.dim)?;
        check_sample(xi, self.period)?;
        let a = self.slope_of(xi);
        let m = self.penalty();
        let g = x
            .iter()
            .map(|t| {
                if *t > 1.0 {
                    a + m
                } else if *t < -1.0 {
                    a - m
                } else {
                    a
                }
            })
            .collect();
        Ok(GradSample::dense(g))
    }

    fn optimum(&self) -> &ParamVector {
        &self.optimum
    }

    fn f_star(&self) -> f64 {
        self.f_star
    }

    fn g_inf_bound(&self) -> Option<f64> {
        Some(self.large + self.penalty())
    }

    fn kink_distance(&self, x: &ParamVector, _xi: Sample, d: usize) -> f64 {
        (x[d].abs() - 1.0).abs()
    }
}
