use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::newton::{self, Evaluation};
use super::{check_point, check_sample, sigmoid, softplus, Problem, Sample};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector, Rng};

/// Logistic regression on Gaussian features with labels drawn from a planted
/// separator: `f(x, i) = log(1 + exp(-y_i <a_i, x>)) + l2/2 ||x||^2`.
///
/// The minimizer is computed once by Newton's method when the instance is
/// generated and stored alongside the data in the fixture format:
///
/// ```text
/// synthetic-logistic D=<dim> n=<samples> seed=<seed> l2=<l2>
/// x_star <x_1> ... <x_D>
/// <y_1> <a_11> ... <a_1D>
/// ...
/// ```
///
/// Labels are `1` or `-1`. Blank lines and lines starting with `#` are ignored.
#[derive(Debug, Clone)]
pub struct SyntheticLogistic {
    features: Vec<ParamVector>,
    labels: Vec<f64>,
    l2: f64,
    seed: u64,
    optimum: ParamVector,
    f_star: f64,
}

impl SyntheticLogistic {
    pub fn generate(dim: usize, n: usize, l2: f64, seed: u64) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(Error::config(
                "logistic problem needs dim >= 1 and samples >= 1",
            ));
        }
        let mut rng = Rng::new(seed);
        let planted = rng.normal_vector(dim);
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let a = rng.normal_vector(dim);
            let p = sigmoid(a.dot(&planted)?);
            labels.push(if rng.bernoulli(p) { 1.0 } else { -1.0 });
            features.push(a);
        }
        SyntheticLogistic::from_data(features, labels, l2, seed)
    }

    /// Builds an instance from raw data and solves for its minimizer.
    pub fn from_data(
        features: Vec<ParamVector>,
        labels: Vec<f64>,
        l2: f64,
        seed: u64,
    ) -> Result<Self> {
        let dim = validate(&features, &labels, l2)?;
        let mut problem = SyntheticLogistic {
            features,
            labels,
            l2,
            seed,
            optimum: ParamVector::zeros(dim),
            f_star: 0.0,
        };
        let x = newton::minimize(DVector::zeros(dim), 1e-12, |x| problem.evaluate(x))?;
        problem.optimum = ParamVector::new(x.iter().copied().collect());
        problem.f_star = problem.full_loss(&problem.optimum)?;
        Ok(problem)
    }

    pub fn features(&self) -> &[ParamVector] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    fn margin(&self, x: &[f64], i: usize) -> f64 {
        let a = &self.features[i];
        self.labels[i] * a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Evaluation {
        let dim = x.len();
        let n = self.features.len() as f64;
        let xs = x.as_slice();
        let mut value = 0.0;
        let mut grad = DVector::zeros(dim);
        let mut hessian = DMatrix::zeros(dim, dim);
        for (i, a) in self.features.iter().enumerate() {
            let m = self.margin(xs, i);
            value += softplus(-m);
            let s = sigmoid(-m);
            let a = DVector::from_column_slice(a.as_slice());
            grad.axpy(-self.labels[i] * s, &a, 1.0);
            hessian.ger(s * (1.0 - s), &a, &a, 1.0);
        }
        value /= n;
        grad /= n;
        hessian /= n;
        value += 0.5 * self.l2 * x.norm_squared();
        grad.axpy(self.l2, x, 1.0);
        for d in 0..dim {
            hessian[(d, d)] += self.l2;
        }
        Evaluation {
            value,
            grad,
            hessian,
        }
    }

    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "synthetic-logistic D={} n={} seed={} l2={}",
            self.dim(),
            self.features.len(),
            self.seed,
            self.l2
        );
        out.push_str("x_star");
        for v in self.optimum.iter() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
        for (a, y) in self.features.iter().zip(&self.labels) {
            let _ = write!(out, "{y}");
            for v in a.iter() {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the fixture format. The stored `x_star` is used as is.
    pub fn from_fixture(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty fixture".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("synthetic-logistic") {
            return Err(Error::Parse(format!(
                "unexpected fixture header `{header}`"
            )));
        }
        let (mut dim, mut n, mut seed, mut l2) = (None, None, None, None);
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed header field `{field}`")))?;
            match key {
                "D" => dim = Some(parse::<usize>(value)?),
                "n" => n = Some(parse::<usize>(value)?),
                "seed" => seed = Some(parse::<u64>(value)?),
                "l2" => l2 = Some(parse::<f64>(value)?),
                other => return Err(Error::Parse(format!("unknown header field `{other}`"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("header is missing `{name}`"));
        let dim = dim.ok_or_else(|| missing("D"))?;
        let n = n.ok_or_else(|| missing("n"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        let l2 = l2.ok_or_else(|| missing("l2"))?;

        let star = lines
            .next()
            .ok_or_else(|| Error::Parse("missing x_star line".into()))?;
        let mut star = star.split_whitespace();
        if star.next() != Some("x_star") {
            return Err(Error::Parse("second line must start with x_star".into()));
        }
        let optimum = ParamVector::new(star.map(parse::<f64>).collect::<Result<_>>()?);
        crate::error::check_dims(dim, optimum.len())?;

        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for line in lines {
            let mut values = line.split_whitespace().map(parse::<f64>);
            let y = values
                .next()
                .ok_or_else(|| Error::Parse("empty row".into()))??;
            if y != 1.0 && y != -1.0 {
                return Err(Error::Parse(format!("label must be 1 or -1, got {y}")));
            }
            let a = ParamVector::new(values.collect::<Result<_>>()?);
            crate::error::check_dims(dim, a.len())?;
            labels.push(y);
            features.push(a);
        }
        if features.len() != n {
            return Err(Error::Parse(format!(
                "header declares n={n} but {} rows follow",
                features.len()
            )));
        }
        validate(&features, &labels, l2)?;
        let mut problem = SyntheticLogistic {
            features,
            labels,
            l2,
            seed,
            optimum,
            f_star: 0.0,
        };
        problem.f_star = problem.full_loss(&problem.optimum)?;
        Ok(problem)
    }

    pub fn write_fixture(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_fixture())?;
        Ok(())
    }

    pub fn read_fixture(path: impl AsRef<Path>) -> Result<Self> {
        SyntheticLogistic::from_fixture(&std::fs::read_to_string(path)?)
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

fn validate(features: &[ParamVector], labels: &[f64], l2: f64) -> Result<usize> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::config(format!(
            "l2 must be finite and >= 0, got {l2}"
        )));
    }
    crate::error::check_dims(features.len(), labels.len())?;
    super::l1_median::validate_points(features)
}

impl Problem for SyntheticLogistic {
    fn name(&self) -> &'static str {
        "synthetic-logistic"
    }

    fn dim(&self) -> usize {
        self.optimum.len()
    }

    fn num_samples(&self) -> usize {
        self.features.len()
    }

    fn loss(&self, x: &ParamVector, xi: Sample) -> Result<f64> {
        check_point(x, self.dim())?;
        check_sample(xi, self.features.len())?;
        let reg = 0.5 * self.l2 * x.iter().map(|v| v * v).sum::<f64>();
        Ok(softplus(-self.margin(x.as_slice(), xi)) + reg)
    }

    fn grad(&self, x: &ParamVector, xi: Sample) -> Result<GradSample> {
        check_point(x, self.dim())?;
        check_sample(xi, self.features.len())?;
        let coeff = -self.labels[xi] * sigmoid(-self.margin(x.as_slice(), xi));
        let g = self.features[xi]
            .iter()
            .zip(x.iter())
            .map(|(a, v)| coeff * a + self.l2 * v)
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
        if self.l2 > 0.0 {
            None
        } else {
            Some(
                self.features
                    .iter()
                    .map(ParamVector::linf)
                    .fold(0.0, f64::max),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_diff_check;

    #[test]
    fn optimum_is_stationary() {
        let p = SyntheticLogistic::generate(5, 300, 0.0, 11).unwrap();
        let mut mean = ParamVector::zeros(5);
        for i in 0..p.num_samples() {
            let g = p.grad(p.optimum(), i).unwrap().to_dense();
            for d in 0..5 {
                mean[d] += g[d] / 300.0;
            }
        }
        assert!(mean.linf() <= 1e-12);
    }

    #[test]
    fn differences_within_tolerance() {
        let p = SyntheticLogistic::generate(5, 50, 0.01, 3).unwrap();
        let mut rng = Rng::new(4);
        for _ in 0..100 {
            let x = rng.normal_vector(5);
            let xi = p.sample(&mut rng);
            assert!(finite_diff_check(&p, &x, xi, 1e-5).unwrap().max_rel_err <= 1e-5);
        }
    }

    #[test]
    fn fixture_round_trip_is_exact() {
        let p = SyntheticLogistic::generate(4, 40, 0.5, 8).unwrap();
        let text = p.to_fixture();
        assert!(text.starts_with("synthetic-logistic D=4 n=40 seed=8 l2=0.5\n"));
        let back = SyntheticLogistic::from_fixture(&text).unwrap();
        assert_eq!(back.features(), p.features());
        assert_eq!(back.labels(), p.labels());
        assert_eq!(back.optimum(), p.optimum());
        assert_eq!(back.f_star(), p.f_star());
        assert_eq!(back.to_fixture(), text);
    }

    #[test]
    fn fixture_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("logistic.txt");
        let p = SyntheticLogistic::generate(3, 30, 0.0, 1).unwrap();
        p.write_fixture(&path).unwrap();
        let back = SyntheticLogistic::read_fixture(&path).unwrap();
        assert_eq!(back.optimum(), p.optimum());
    }

    #[test]
    fn malformed_fixtures_rejected() {
        assert!(SyntheticLogistic::from_fixture("").is_err());
        assert!(SyntheticLogistic::from_fixture("nonsense D=1 n=1 seed=0 l2=0\n").is_err());
        let short = "synthetic-logistic D=2 n=2 seed=0 l2=0\nx_star 0 0\n1 0.5 0.5\n";
        assert!(SyntheticLogistic::from_fixture(short).is_err());
        let bad_label = "synthetic-logistic D=1 n=1 seed=0 l2=0\nx_star 0\n0 0.5\n";
        assert!(SyntheticLogistic::from_fixture(bad_label).is_err());
    }

    #[test]
    fn separable_data_has_no_minimizer() {
        let features = vec![ParamVector::new(vec![1.0]), ParamVector::new(vec![-1.0])];
        let out = SyntheticLogistic::from_data(features, vec![1.0, -1.0], 0.0, 0);
        assert!(matches!(out, Err(Error::Domain(_))));
    }
}
