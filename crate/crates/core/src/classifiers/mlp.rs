use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_samples, Classifier};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::{dot, Real};

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus<T: Real>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

/// One hidden layer of logistic units feeding a single logistic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpFile<T>", into = "MlpFile<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MlpModel<T: Real> {
    input_dim: usize,
    hidden: usize,
    /// `hidden x input_dim`, row-major.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct MlpFile<T: Real> {
    input_dim: usize,
    hidden: usize,
    activation: String,
    w1: Vec<Vec<T>>,
    b1: Vec<T>,
    w2: Vec<T>,
    b2: T,
}

impl<T: Real> TryFrom<MlpFile<T>> for MlpModel<T> {
    type Error = Error;

    fn try_from(f: MlpFile<T>) -> Result<Self> {
        if f.activation != "sigmoid" {
            return Err(Error::InvalidArgument(format!("unsupported activation {:?}", f.activation)));
        }
        check_dim(f.hidden, f.w1.len())?;
        for row in &f.w1 {
            check_dim(f.input_dim, row.len())?;
        }
        let m = MlpModel {
            input_dim: f.input_dim,
            hidden: f.hidden,
            w1: f.w1.into_iter().flatten().collect(),
            b1: f.b1,
            w2: f.w2,
            b2: f.b2,
        };
        m.validate()?;
        Ok(m)
    }
}

impl<T: Real> From<MlpModel<T>> for MlpFile<T> {
    fn from(m: MlpModel<T>) -> Self {
        MlpFile {
            input_dim: m.input_dim,
            hidden: m.hidden,
            activation: "sigmoid".into(),
            w1: m.w1.chunks(m.input_dim).map(<[T]>::to_vec).collect(),
            b1: m.b1,
            w2: m.w2,
            b2: m.b2,
        }
    }
}

/// Gradient with the same layout as [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

impl<T: Real> MlpGradient<T> {
    pub fn norm(&self) -> T {
        let sq = |v: &[T]| v.iter().map(|&g| g * g).sum::<T>();
        (sq(&self.w1) + sq(&self.b1) + sq(&self.w2) + self.b2 * self.b2).sqrt()
    }

    /// Flattened in the order w1, b1, w2, b2 (matches [`MlpModel::params_mut`]).
    pub fn flatten(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + 1);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }
}

impl<T: Real> MlpModel<T> {
    /// Zero-initialized model.
    pub fn zeros(input_dim: usize, hidden: usize) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidArgument("MLP dimensions must be at least 1".into()));
        }
        Ok(Self {
            input_dim,
            hidden,
            w1: vec![T::zero(); hidden * input_dim],
            b1: vec![T::zero(); hidden],
            w2: vec![T::zero(); hidden],
            b2: T::zero(),
        })
    }

    /// Weights uniform in `[-r, r]` with `r = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(input_dim, hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = (6.0 / (input_dim + hidden) as f64).sqrt();
        let r2 = (6.0 / (hidden + 1) as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = T::lit(rng.random_range(-r1..=r1)));
        m.w2.iter_mut().for_each(|w| *w = T::lit(rng.random_range(-r2..=r2)));
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("MLP dimensions must be at least 1".into()));
        }
        check_dim(self.hidden * self.input_dim, self.w1.len())?;
        check_dim(self.hidden, self.b1.len())?;
        check_dim(self.hidden, self.w2.len())?;
        let finite = self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite();
        if !finite {
            return Err(Error::InvalidArgument("non-finite MLP parameter".into()));
        }
        Ok(())
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Mutable references to every parameter, in gradient-flatten order.
    pub fn params_mut(&mut self) -> Vec<&mut T> {
        let mut v: Vec<&mut T> = Vec::with_capacity(self.param_count());
        v.extend(self.w1.iter_mut());
        v.extend(self.b1.iter_mut());
        v.extend(self.w2.iter_mut());
        v.push(&mut self.b2);
        v
    }

    fn hidden_activations(&self, x: &[T]) -> Vec<T> {
        self.w1.chunks(self.input_dim).zip(&self.b1).map(|(row, &b)| sigmoid(dot(row, x) + b)).collect()
    }

    fn output_logit(&self, h: &[T]) -> T {
        dot(&self.w2, h) + self.b2
    }

    /// Probability of MA: `sigmoid(w2 . sigmoid(w1 x + b1) + b2)`.
    pub fn forward(&self, x: &[T]) -> Result<T> {
        check_dim(self.input_dim, x.len())?;
        Ok(sigmoid(self.output_logit(&self.hidden_activations(x))))
    }

    /// Mean binary cross-entropy.
    pub fn loss(&self, xs: &[Vec<T>], ys: &[Label]) -> Result<T> {
        check_samples(xs, ys, "MLP loss inputs")?;
        let mut total = T::zero();
        for (x, &y) in xs.iter().zip(ys) {
            check_dim(self.input_dim, x.len())?;
            let z = self.output_logit(&self.hidden_activations(x));
            total += softplus(z) - T::lit(y.target()) * z;
        }
        Ok(total / T::from_usize_lossy(xs.len()))
    }

    /// Analytic gradient of the mean binary cross-entropy by backpropagation.
    pub fn gradient(&self, xs: &[Vec<T>], ys: &[Label]) -> Result<MlpGradient<T>> {
        check_samples(xs, ys, "MLP gradient inputs")?;
        let mut g = MlpGradient {
            w1: vec![T::zero(); self.w1.len()],
            b1: vec![T::zero(); self.hidden],
            w2: vec![T::zero(); self.hidden],
            b2: T::zero(),
        };
        let inv_n = T::from_usize_lossy(xs.len()).recip();
        for (x, &y) in xs.iter().zip(ys) {
            check_dim(self.input_dim, x.len())?;
            let h = self.hidden_activations(x);
            let out = sigmoid(self.output_logit(&h));
            let delta_out = (out - T::lit(y.target())) * inv_n;
            g.b2 += delta_out;
            for j in 0..self.hidden {
                g.w2[j] += delta_out * h[j];
                let delta_h = delta_out * self.w2[j] * h[j] * (T::one() - h[j]);
                g.b1[j] += delta_h;
                for (gw, &xi) in g.w1[j * self.input_dim..(j + 1) * self.input_dim].iter_mut().zip(x) {
                    *gw += delta_h * xi;
                }
            }
        }
        Ok(g)
    }

    fn step(&mut self, g: &MlpGradient<T>, lr: T) {
        for (p, &d) in self.params_mut().into_iter().zip(&g.flatten()) {
            *p -= lr * d;
        }
    }

    /// Gradient descent on mean binary cross-entropy, keeping the parameters with
    /// the lowest validation loss. With an empty validation set the final
    /// parameters are returned.
    pub fn train(
        mut self,
        xs: &[Vec<T>],
        ys: &[Label],
        val_xs: &[Vec<T>],
        val_ys: &[Label],
        cfg: &TrainConfig,
    ) -> Result<TrainOutcome<T>> {
        cfg.validate()?;
        let dim = check_samples(xs, ys, "MLP training set")?;
        check_dim(self.input_dim, dim)?;
        check_dim(val_xs.len(), val_ys.len())?;
        let lr = T::lit(cfg.learning_rate);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();

        let mut train_loss = Vec::with_capacity(cfg.epochs);
        let mut val_loss = Vec::new();
        let mut best: Option<(T, usize, MlpModel<T>)> = None;
        let mut since_best = 0;

        for epoch in 1..=cfg.epochs {
            if cfg.full_batch {
                let g = self.gradient(xs, ys)?;
                self.step(&g, lr);
            } else {
                order.shuffle(&mut rng);
                for &i in &order {
                    let g = self.gradient(std::slice::from_ref(&xs[i]), std::slice::from_ref(&ys[i]))?;
                    self.step(&g, lr);
                }
            }
            let loss = self.loss(xs, ys)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            train_loss.push(loss);

            if !val_xs.is_empty() {
                let vl = self.loss(val_xs, val_ys)?;
                if !vl.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch });
                }
                val_loss.push(vl);
                if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                    best = Some((vl, epoch, self.clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                    if cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience {
                        break;
                    }
                }
            }
        }
        let (model, best_epoch) = match best {
            Some((_, e, m)) => (m, e),
            None => (self, train_loss.len()),
        };
        Ok(TrainOutcome { model, train_loss, val_loss, best_epoch })
    }
}

impl<T: Real> Classifier<T> for MlpModel<T> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// MA iff the output probability is at least 0.5.
    fn predict(&self, x: &[T]) -> Result<Label> {
        Ok(if self.forward(x)? >= T::lit(0.5) { Label::Ma } else { Label::Normal })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub full_batch: bool,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 2000, full_batch: true, seed: 0, early_stop_patience: 200 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T: Real> {
    pub model: MlpModel<T>,
    pub train_loss: Vec<T>,
    pub val_loss: Vec<T>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}
