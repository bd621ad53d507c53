use super::{check_point, check_sample, Problem, Sample};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector, Rng};

/// `f(x, xi) = ||x - xi||_1` over a finite point set.
///
/// The subgradient is `sign(x - xi)` with `0` at a tie, so `G = 1`. The
/// minimizer is the coordinate-wise median; for an even count the midpoint
/// of the two middle values is used.
#[derive(Debug, Clone)]
pub struct L1Median {
    points: Vec<ParamVector>,
    optimum: ParamVector,
    f_star: f64,
}

impl L1Median {
    pub fn new(points: Vec<ParamVector>) -> Result<Self> {
        let dim = validate_points(&points)?;
        let n = points.len();
        let mut column = vec![0.0; n];
        let mut optimum = ParamVector::zeros(dim);
        for d in 0..dim {
            for (c, p) in column.iter_mut().zip(&points) {
                *c = p[d];
            }
            column.sort_by(f64::total_cmp);
            optimum[d] = if n % 2 == 1 {
                column[n / 2]
            } else {
                0.5 * (column[n / 2 - 1] + column[n / 2])
            };
        }
        let mut problem = L1Median {
            points,
            optimum,
            f_star: 0.0,
        };
        problem.f_star = problem.full_loss(&problem.optimum)?;
        Ok(problem)
    }

    /// `n` points drawn uniformly from `[lo, hi]^dim`.
    pub fn random(dim: usize, n: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::config(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        let mut rng = Rng::new(seed);
        L1Median::new((0..n).map(|_| rng.uniform_vector(dim, lo, hi)).collect())
    }

    pub fn points(&self) -> &[ParamVector] {
        &self.points
    }
}

pub(super) fn validate_points(points: &[ParamVector]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::config("point set is empty"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::config("dimension must be at least 1"));
    }
    for p in points {
        crate::error::check_dims(dim, p.len())?;
        if !p.is_finite() {
            return Err(Error::NonFinite("point set".into()));
        }
    }
    Ok(dim)
}

impl Problem for L1Median {
    fn name(&self) -> &'static str {
        "l1-median"
    }

    fn dim(&self) -> usize {
        self.optimum.len()
    }

    fn num_samples(&self) -> usize {
        self.points.len()
    }

    fn loss(&self, x: &ParamVector, xi: Sample) -> Result<f64> {
        check_point(x, self.dim())?;
        check_sample(xi, self.points.len())?;
        Ok(x.iter()
            .zip(self.points[xi].iter())
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    fn grad(&self, x: &ParamVector, xi: Sample) -> Result<GradSample> {
        check_point(x, self.dim())?;
        check_sample(xi, self.points.len())?;
        let g = x
            .iter()
            .zip(self.points[xi].iter())
            .map(|(a, b)| {
                if a > b {
                    1.0
                } else if a < b {
                    -1.0
                } else {
                    0.0
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
        Some(1.0)
    }

    fn kink_distance(&self, x: &ParamVector, xi: Sample, d: usize) -> f64 {
        (x[d] - self.points[xi][d]).abs()
    }
}
