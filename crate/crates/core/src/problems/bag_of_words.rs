use nalgebra::{DMatrix, DVector};

use super::newton::{self, Evaluation};
use super::{check_point, check_sample, sigmoid, softplus, Problem, Sample};
use crate::error::{Error, Result};
use crate::numerics::{GradSample, ParamVector, Rng};

/// Logistic loss over binary bag-of-words documents. Each document holds a
/// fixed number of distinct words, and its gradient is nonzero exactly on
/// those words.
#[derive(Debug, Clone)]
pub struct SparseBagOfWords {
    vocab: usize,
    docs: Vec<Vec<usize>>,
    labels: Vec<f64>,
    optimum: ParamVector,
    f_star: f64,
}

impl SparseBagOfWords {
    /// Words are drawn uniformly without replacement; labels follow a planted
    /// weight vector with scale 0.5, so they are noisy.
    pub fn generate(vocab: usize, n: usize, words_per_doc: usize, seed: u64) -> Result<Self> {
        if words_per_doc == 0 || words_per_doc > vocab || n == 0 {
            return Err(Error::config(format!(
                "need 0 < words_per_doc <= vocab and docs >= 1, got {words_per_doc}, {vocab}, {n}"
            )));
        }
        let mut rng = Rng::new(seed);
        let planted = rng.normal_vector(vocab).scaled(0.5);
        let mut docs = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let mut words: Vec<usize> = Vec::with_capacity(words_per_doc);
            while words.len() < words_per_doc {
                let w = rng.below(vocab);
                if !words.contains(&w) {
                    words.push(w);
                }
            }
            words.sort_unstable();
            let score: f64 = words.iter().map(|w| planted[*w]).sum();
            labels.push(if rng.bernoulli(sigmoid(score)) {
                1.0
            } else {
                -1.0
            });
            docs.push(words);
        }
        SparseBagOfWords::from_docs(vocab, docs, labels)
    }

    pub fn from_docs(vocab: usize, docs: Vec<Vec<usize>>, labels: Vec<f64>) -> Result<Self> {
        crate::error::check_dims(docs.len(), labels.len())?;
        if docs.is_empty() {
            return Err(Error::config("no documents"));
        }
        for doc in &docs {
            if doc.windows(2).any(|w| w[0] >= w[1]) || doc.iter().any(|w| *w >= vocab) {
                return Err(Error::config(
                    "document words must be increasing and below vocab",
                ));
            }
        }
        let mut problem = SparseBagOfWords {
            vocab,
            docs,
            labels,
            optimum: ParamVector::zeros(vocab),
            f_star: 0.0,
        };
        let x = newton::minimize(DVector::zeros(vocab), 1e-12, |x| problem.evaluate(x))?;
        problem.optimum = ParamVector::new(x.iter().copied().collect());
        problem.f_star = problem.full_loss(&problem.optimum)?;
        Ok(problem)
    }

    pub fn doc(&self, xi: Sample) -> &[usize] {
        &self.docs[xi]
    }

    fn margin(&self, x: &[f64], xi: Sample) -> f64 {
        self.labels[xi] * self.docs[xi].iter().map(|w| x[*w]).sum::<f64>()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Evaluation {
        let n = self.docs.len() as f64;
        let mut value = 0.0;
        let mut grad = DVector::zeros(self.vocab);
        let mut hessian = DMatrix::zeros(self.vocab, self.vocab);
        for (i, doc) in self.docs.iter().enumerate() {
            let m = self.margin(x.as_slice(), i);
            value += softplus(-m) / n;
            let s = sigmoid(-m);
            for a in doc {
                grad[*a] -= self.labels[i] * s / n;
                for b in doc {
                    hessian[(*a, *b)] += s * (1.0 - s) / n;
                }
            }
        }
        Evaluation {
            value,
            grad,
            hessian,
        }
    }
}

impl Problem for SparseBagOfWords {
    fn name(&self) -> &'static str {
        "sparse-bag-of-words"
    }

    fn dim(&self) -> usize {
        self.vocab
    }

    fn num_samples(&self) -> usize {
        self.docs.len()
    }

    fn loss(&self, x: &ParamVector, xi: Sample) -> Result<f64> {
        check_point(x, self.vocab)?;
        check_sample(xi, self.docs.len())?;
        Ok(softplus(-self.margin(x.as_slice(), xi)))
    }

    fn grad(&self, x: &ParamVector, xi: Sample) -> Result<GradSample> {
        check_point(x, self.vocab)?;
        check_sample(xi, self.docs.len())?;
        let value = -self.labels[xi] * sigmoid(-self.margin(x.as_slice(), xi));
        GradSample::sparse(
            self.vocab,
            self.docs[xi].iter().map(|w| (*w, value)).collect(),
        )
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

    fn emits_sparse(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_diff_check;

    #[test]
    fn gradient_support_is_the_document() {
        let p = SparseBagOfWords::generate(40, 500, 4, 2).unwrap();
        let mut rng = Rng::new(3);
        for _ in 0..200 {
            let x = rng.normal_vector(40);
            let xi = p.sample(&mut rng);
            let g = p.grad(&x, xi).unwrap();
            assert!(g.is_sparse());
            let GradSample::Sparse(sp) = g else {
                unreachable!()
            };
            assert_eq!(sp.nnz(), p.doc(xi).len());
            let idx: Vec<usize> = sp.entries().iter().map(|e| e.0).collect();
            assert_eq!(idx, p.doc(xi));
        }
    }

    #[test]
    fn differences_match() {
        let p = SparseBagOfWords::generate(10, 300, 3, 5).unwrap();
        let mut rng = Rng::new(6);
        for _ in 0..50 {
            let x = rng.normal_vector(10);
            let xi = p.sample(&mut rng);
            assert!(finite_diff_check(&p, &x, xi, 1e-5).unwrap().max_rel_err <= 1e-6);
        }
    }

    #[test]
    fn bad_documents_rejected() {
        assert!(SparseBagOfWords::from_docs(3, vec![vec![2, 1]], vec![1.0]).is_err());
        assert!(SparseBagOfWords::from_docs(3, vec![vec![3]], vec![1.0]).is_err());
        assert!(SparseBagOfWords::generate(3, 10, 4, 0).is_err());
    }
}
