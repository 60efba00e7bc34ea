//! The MLP classifier and the baseline track (PCA, KNN, Gaussian naive Bayes,
//! linear SVM) behind one prediction contract, plus input standardization.

mod gnb;
mod knn;
mod mlp;
mod pca;
mod scaler;
mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::Real;

pub use gnb::GaussianNb;
pub use knn::Knn;
pub use mlp::{sigmoid, MlpGradient, MlpModel, TrainConfig, TrainOutcome};
pub use pca::{jacobi_eigen, PcaModel, Retain};
pub use scaler::{Standardized, Standardizer};
pub use svm::{LinearSvm, SvmConfig};

/// Vector in, label out. Every trained model implements this.
pub trait Classifier<T: Real> {
    fn input_dim(&self) -> usize;

    fn predict(&self, x: &[T]) -> Result<Label>;

    fn predict_all(&self, xs: &[Vec<T>]) -> Result<Vec<Label>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_samples<T>(xs: &[Vec<T>], ys: &[Label], what: &'static str) -> Result<usize> {
    if xs.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    check_dim(xs.len(), ys.len())?;
    let dim = xs[0].len();
    for x in xs {
        check_dim(dim, x.len())?;
    }
    Ok(dim)
}

/// A classifier applied after a PCA projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct PcaPipeline<T: Real> {
    pub pca: PcaModel<T>,
    pub classifier: Box<SavedModel<T>>,
}

impl<T: Real> Classifier<T> for PcaPipeline<T> {
    fn input_dim(&self) -> usize {
        self.pca.input_dim()
    }

    fn predict(&self, x: &[T]) -> Result<Label> {
        self.classifier.predict(&self.pca.transform(x)?)
    }
}

/// Any persisted model, tagged by `model_type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub enum SavedModel<T: Real> {
    Mlp(MlpModel<T>),
    Knn(Knn<T>),
    GaussianNb(GaussianNb<T>),
    LinearSvm(LinearSvm<T>),
    PcaPipeline(PcaPipeline<T>),
    Standardized(Standardized<T>),
}

impl<T: Real> SavedModel<T> {
    fn inner(&self) -> &dyn Classifier<T> {
        match self {
            SavedModel::Mlp(m) => m,
            SavedModel::Knn(m) => m,
            SavedModel::GaussianNb(m) => m,
            SavedModel::LinearSvm(m) => m,
            SavedModel::PcaPipeline(m) => m,
            SavedModel::Standardized(m) => m,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

impl<T: Real> Classifier<T> for SavedModel<T> {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn predict(&self, x: &[T]) -> Result<Label> {
        self.inner().predict(x)
    }
}
