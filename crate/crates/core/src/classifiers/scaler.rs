use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, SavedModel};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::Real;

/// Per-feature z-scoring fitted on training rows. Constant features get scale 1
/// so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Standardizer<T: Real> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn fit(xs: &[Vec<T>]) -> Result<Self> {
        let first = xs.first().ok_or(Error::EmptyInput("standardizer input"))?;
        let d = first.len();
        let n = T::from_usize_lossy(xs.len());
        let mut mean = vec![T::zero(); d];
        for x in xs {
            check_dim(d, x.len())?;
            mean.iter_mut().zip(x).for_each(|(m, &v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); d];
        for x in xs {
            var.iter_mut().zip(x.iter().zip(&mean)).for_each(|(s, (&v, &m))| *s += (v - m) * (v - m));
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::zero() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter().zip(self.mean.iter().zip(&self.scale)).map(|(&v, (&m, &s))| (v - m) / s).collect())
    }

    pub fn transform_all(&self, xs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        xs.iter().map(|x| self.transform(x)).collect()
    }
}

/// A classifier applied after z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Standardized<T: Real> {
    pub standardizer: Standardizer<T>,
    pub classifier: Box<SavedModel<T>>,
}

impl<T: Real> Classifier<T> for Standardized<T> {
    fn input_dim(&self) -> usize {
        self.standardizer.dim()
    }

    fn predict(&self, x: &[T]) -> Result<Label> {
        self.classifier.predict(&self.standardizer.transform(x)?)
    }
}
