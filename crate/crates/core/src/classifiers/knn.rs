use serde::{Deserialize, Serialize};

use super::{check_dim, check_samples, Classifier};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::{squared_distance, Real};

/// k-nearest-neighbour majority vote under L2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Knn<T: Real> {
    pub k: usize,
    pub dim: usize,
    pub train_x: Vec<Vec<T>>,
    pub train_y: Vec<Label>,
}

impl<T: Real> Knn<T> {
    pub fn fit(xs: &[Vec<T>], ys: &[Label], k: usize) -> Result<Self> {
        let dim = check_samples(xs, ys, "KNN training set")?;
        if k == 0 || k > xs.len() {
            return Err(Error::InvalidArgument(format!("k = {k} must be in 1..={}", xs.len())));
        }
        Ok(Self { k, dim, train_x: xs.to_vec(), train_y: ys.to_vec() })
    }
}

impl<T: Real> Classifier<T> for Knn<T> {
    fn input_dim(&self) -> usize {
        self.dim
    }

    /// Distance ties go to the lower training index; vote ties go to MA.
    fn predict(&self, x: &[T]) -> Result<Label> {
        check_dim(self.dim, x.len())?;
        let mut dists: Vec<(T, usize)> =
            self.train_x.iter().enumerate().map(|(i, t)| (squared_distance(t, x), i)).collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
        let ma = dists[..self.k].iter().filter(|(_, i)| self.train_y[*i] == Label::Ma).count();
        Ok(if 2 * ma >= self.k { Label::Ma } else { Label::Normal })
    }
}
