use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_samples, Classifier};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lambda: 0.01, epochs: 100, seed: 0 }
    }
}

/// Linear SVM trained by primal sub-gradient descent (Pegasos step `1/(lambda t)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct LinearSvm<T: Real> {
    pub dim: usize,
    pub w: Vec<T>,
    pub b: T,
    pub lambda: f64,
}

impl<T: Real> LinearSvm<T> {
    /// Minimizes `lambda/2 |w|^2 + mean hinge(1 - y (w.x + b))`; the bias is not
    /// regularized. Samples are visited in a per-epoch shuffle seeded by `cfg.seed`.
    pub fn train(xs: &[Vec<T>], ys: &[Label], cfg: &SvmConfig) -> Result<Self> {
        let dim = check_samples(xs, ys, "linear SVM training set")?;
        if !(cfg.lambda > 0.0) || cfg.epochs == 0 {
            return Err(Error::InvalidArgument("linear SVM needs lambda > 0 and epochs >= 1".into()));
        }
        let lambda = T::lit(cfg.lambda);
        let mut w = vec![T::zero(); dim];
        let mut b = T::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = (lambda * T::from_usize_lossy(t)).recip();
                let y = T::lit(ys[i].sign());
                let margin = y * (dot(&w, &xs[i]) + b);
                let shrink = T::one() - eta * lambda;
                w.iter_mut().for_each(|wj| *wj *= shrink);
                if margin < T::one() {
                    for (wj, &xj) in w.iter_mut().zip(&xs[i]) {
                        *wj += eta * y * xj;
                    }
                    b += eta * y;
                }
            }
        }
        Ok(Self { dim, w, b, lambda: cfg.lambda })
    }

    pub fn decision(&self, x: &[T]) -> Result<T> {
        check_dim(self.dim, x.len())?;
        Ok(dot(&self.w, x) + self.b)
    }
}

impl<T: Real> Classifier<T> for LinearSvm<T> {
    fn input_dim(&self) -> usize {
        self.dim
    }

    /// `sign(w.x + b)`, with 0 mapped to MA.
    fn predict(&self, x: &[T]) -> Result<Label> {
        Ok(if self.decision(x)? >= T::zero() { Label::Ma } else { Label::Normal })
    }
}
