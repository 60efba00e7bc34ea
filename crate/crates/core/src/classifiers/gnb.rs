use serde::{Deserialize, Serialize};

use super::{check_dim, check_samples, Classifier};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::Real;

const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ClassGaussian<T: Real> {
    pub prior: T,
    pub mean: Vec<T>,
    pub variance: Vec<T>,
}

impl<T: Real> ClassGaussian<T> {
    fn log_posterior(&self, x: &[T]) -> T {
        let two_pi = T::lit(std::f64::consts::TAU);
        let half = T::lit(0.5);
        self.mean.iter().zip(&self.variance).zip(x).fold(self.prior.ln(), |acc, ((&m, &v), &xi)| {
            let d = xi - m;
            acc - half * (two_pi * v).ln() - d * d / (T::lit(2.0) * v)
        })
    }
}

/// Gaussian naive Bayes with frequency priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct GaussianNb<T: Real> {
    pub dim: usize,
    pub ma: ClassGaussian<T>,
    pub normal: ClassGaussian<T>,
}

impl<T: Real> GaussianNb<T> {
    /// Per-class means and unbiased variances, floored at 1e-9.
    pub fn fit(xs: &[Vec<T>], ys: &[Label]) -> Result<Self> {
        let dim = check_samples(xs, ys, "naive Bayes training set")?;
        let n = T::from_usize_lossy(xs.len());
        let class = |label: Label| -> Result<ClassGaussian<T>> {
            let members: Vec<&Vec<T>> = xs.iter().zip(ys).filter(|(_, &y)| y == label).map(|(x, _)| x).collect();
            match members.len() {
                0 => return Err(Error::MissingClass(label.to_string())),
                1 => return Err(Error::ClassStarvation { label: label.to_string(), count: 1, needed: 2 }),
                _ => {}
            }
            let m = T::from_usize_lossy(members.len());
            let mut mean = vec![T::zero(); dim];
            for x in &members {
                for (a, &v) in mean.iter_mut().zip(x.iter()) {
                    *a += v;
                }
            }
            mean.iter_mut().for_each(|a| *a /= m);
            let mut variance = vec![T::zero(); dim];
            for x in &members {
                for ((s, &v), &mu) in variance.iter_mut().zip(x.iter()).zip(&mean) {
                    *s += (v - mu) * (v - mu);
                }
            }
            let floor = T::lit(VARIANCE_FLOOR);
            variance.iter_mut().for_each(|s| *s = (*s / (m - T::one())).max(floor));
            Ok(ClassGaussian { prior: m / n, mean, variance })
        };
        Ok(Self { dim, ma: class(Label::Ma)?, normal: class(Label::Normal)? })
    }

    pub fn log_posteriors(&self, x: &[T]) -> Result<(T, T)> {
        check_dim(self.dim, x.len())?;
        Ok((self.ma.log_posterior(x), self.normal.log_posterior(x)))
    }
}

impl<T: Real> Classifier<T> for GaussianNb<T> {
    fn input_dim(&self) -> usize {
        self.dim
    }

    /// Argmax of the log-posterior; ties go to MA.
    fn predict(&self, x: &[T]) -> Result<Label> {
        let (ma, normal) = self.log_posteriors(x)?;
        Ok(if ma >= normal { Label::Ma } else { Label::Normal })
    }
}
