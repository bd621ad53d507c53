use super::l1_median::validate_points;
use super::{check_point, check_sample, Problem, Sample};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector, Rng};

/// `f(x, xi) = 0.5 ||x - xi||^2`, minimized at the mean of the point set.
/// There is no global gradient bound.
#[derive(Debug, Clone)]
pub struct StochasticQuadratic {
    points: Vec<ParamVector>,
    optimum: ParamVector,
    f_star: f64,
}

impl StochasticQuadratic {
    pub fn new(points: Vec<ParamVector>) -> Result<Self> {
        let dim = validate_points(&points)?;
        let mut optimum = ParamVector::zeros(dim);
        for p in &points {
            for d in 0..dim {
                optimum[d] += p[d];
            }
        }
        let optimum = optimum.scaled(1.0 / points.len() as f64);
        let mut problem = StochasticQuadratic {
            points,
            optimum,
            f_star: 0.0,
        };
        problem.f_star = problem.full_loss(&problem.optimum)?;
        Ok(problem)
    }

    /// `n` points with coordinates `spread * N(0, 1)`.
    pub fn random(dim: usize, n: usize, spread: f64, seed: u64) -> Result<Self> {
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::config(format!(
                "spread must be positive, got {spread}"
            )));
        }
        let mut rng = Rng::new(seed);
        StochasticQuadratic::new(
            (0..n)
                .map(|_| rng.normal_vector(dim).scaled(spread))
                .collect(),
        )
    }
}

impl Problem for StochasticQuadratic {
    fn name(&self) -> &'static str {
        "stochastic-quadratic"
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
        Ok(0.5
            * x.iter()
                .zip(self.points[xi].iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>())
    }

    fn grad(&self, x: &ParamVector, xi: Sample) -> Result<GradSample> {
        check_point(x, self.dim())?;
        check_sample(xi, self.points.len())?;
        Ok(GradSample::Dense(x.sub(&self.points[xi])?))
    }

    fn optimum(&self) -> &ParamVector {
        &self.optimum
    }

    fn f_star(&self) -> f64 {
        self.f_star
    }

    fn g_inf_bound(&self) -> Option<f64> {
        None
    }
}
