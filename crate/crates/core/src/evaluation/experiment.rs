use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{confusion, ConfusionMatrix, Metrics};
use super::split::Split;
use crate::classifiers::{
    Classifier, GaussianNb, Knn, LinearSvm, MlpModel, PcaModel, PcaPipeline, Retain, SavedModel, Standardized,
    Standardizer, SvmConfig, TrainConfig,
};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureTrack {
    /// Term vectors over the visual vocabulary.
    Bof,
    /// Concatenated dense descriptors reduced by PCA.
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    Mlp,
    LinearSvm,
    Knn,
    NaiveBayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub track: FeatureTrack,
    pub classifier: ClassifierKind,
}

impl Method {
    /// Every supported combination in report order.
    pub const ALL: [Method; 8] = {
        use ClassifierKind::*;
        use FeatureTrack::*;
        [
            Method { track: Bof, classifier: Mlp },
            Method { track: Bof, classifier: LinearSvm },
            Method { track: Bof, classifier: Knn },
            Method { track: Bof, classifier: NaiveBayes },
            Method { track: Pca, classifier: Mlp },
            Method { track: Pca, classifier: LinearSvm },
            Method { track: Pca, classifier: Knn },
            Method { track: Pca, classifier: NaiveBayes },
        ]
    };

    pub fn name(&self) -> String {
        let track = match self.track {
            FeatureTrack::Bof => "BOF",
            FeatureTrack::Pca => "PCA",
        };
        let clf = match self.classifier {
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::LinearSvm => "LinSVM",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::NaiveBayes => "GNB",
        };
        format!("{track}+{clf}")
    }

    pub fn valid_names() -> String {
        Method::ALL.iter().map(Method::name).collect::<Vec<_>>().join(", ")
    }

    /// Parses a comma-separated list; an empty list means every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        if parts.is_empty() {
            return Ok(Method::ALL.to_vec());
        }
        parts.into_iter().map(str::parse).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Case-insensitive; spaces are ignored and common long names are accepted
    /// (`BOF+Linear SVM`, `PCA+Naive Bayes`).
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMethod { name: s.to_string(), valid: Method::valid_names() };
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let (track, clf) = norm.split_once('+').ok_or_else(unknown)?;
        let track = match track {
            "bof" => FeatureTrack::Bof,
            "pca" => FeatureTrack::Pca,
            _ => return Err(unknown()),
        };
        let classifier = match clf {
            "mlp" => ClassifierKind::Mlp,
            "linsvm" | "linearsvm" | "svm" => ClassifierKind::LinearSvm,
            "knn" => ClassifierKind::Knn,
            "gnb" | "nb" | "naivebayes" | "naïvebayes" | "gaussiannb" => ClassifierKind::NaiveBayes,
            _ => return Err(unknown()),
        };
        Ok(Method { track, classifier })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hyperparameters shared by every cell of the method matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub hidden: usize,
    pub mlp_init_seed: u64,
    pub train: TrainConfig,
    pub knn_k: usize,
    pub svm: SvmConfig,
    pub pca_retain: Retain,
    /// Z-score inputs before the MLP and the linear SVM.
    pub standardize: bool,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            hidden: 10,
            mlp_init_seed: 0,
            train: TrainConfig::default(),
            knn_k: 5,
            svm: SvmConfig::default(),
            pca_retain: Retain::Variance(0.95),
            standardize: true,
        }
    }
}

/// Per-sample features for both tracks plus the one split every method shares.
/// `raw` may be left empty when no PCA method is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData<T> {
    pub bof: Vec<Vec<T>>,
    pub raw: Vec<Vec<T>>,
    pub labels: Vec<Label>,
    pub split: Split,
}

impl<T: Real> ExperimentData<T> {
    fn track(&self, track: FeatureTrack) -> Result<&[Vec<T>]> {
        let xs = match track {
            FeatureTrack::Bof => &self.bof,
            FeatureTrack::Pca => &self.raw,
        };
        if xs.len() != self.labels.len() {
            return Err(Error::DimensionMismatch { expected: self.labels.len(), found: xs.len() });
        }
        if self.split.len() != self.labels.len()
            || self.split.parts().iter().flat_map(|p| p.iter()).any(|&i| i >= xs.len())
        {
            return Err(Error::InvalidArgument("split does not match the dataset".into()));
        }
        Ok(xs)
    }
}

fn gather<X: Clone>(xs: &[X], idx: &[usize]) -> Vec<X> {
    idx.iter().map(|&i| xs[i].clone()).collect()
}

/// Trains one classifier; `val_*` is only used by the MLP for early stopping.
/// With `cfg.standardize` the MLP and linear SVM are wrapped in a
/// [`Standardized`] fitted on `xs`.
pub fn fit_classifier<T: Real>(
    kind: ClassifierKind,
    xs: &[Vec<T>],
    ys: &[Label],
    val_xs: &[Vec<T>],
    val_ys: &[Label],
    cfg: &MethodConfig,
) -> Result<SavedModel<T>> {
    if cfg.standardize && matches!(kind, ClassifierKind::Mlp | ClassifierKind::LinearSvm) {
        let standardizer = Standardizer::fit(xs)?;
        let (zx, zv) = (standardizer.transform_all(xs)?, standardizer.transform_all(val_xs)?);
        let inner = fit_raw(kind, &zx, ys, &zv, val_ys, cfg)?;
        return Ok(SavedModel::Standardized(Standardized { standardizer, classifier: Box::new(inner) }));
    }
    fit_raw(kind, xs, ys, val_xs, val_ys, cfg)
}

fn fit_raw<T: Real>(
    kind: ClassifierKind,
    xs: &[Vec<T>],
    ys: &[Label],
    val_xs: &[Vec<T>],
    val_ys: &[Label],
    cfg: &MethodConfig,
) -> Result<SavedModel<T>> {
    Ok(match kind {
        ClassifierKind::Mlp => {
            let dim = xs.first().map_or(0, Vec::len);
            let init = MlpModel::init(dim, cfg.hidden, cfg.mlp_init_seed)?;
            SavedModel::Mlp(init.train(xs, ys, val_xs, val_ys, &cfg.train)?.model)
        }
        ClassifierKind::LinearSvm => SavedModel::LinearSvm(LinearSvm::train(xs, ys, &cfg.svm)?),
        ClassifierKind::Knn => SavedModel::Knn(Knn::fit(xs, ys, cfg.knn_k.min(xs.len()))?),
        ClassifierKind::NaiveBayes => SavedModel::GaussianNb(GaussianNb::fit(xs, ys)?),
    })
}

/// Trains `method` on the train split (validation for early stopping).
pub fn fit_method<T: Real>(method: Method, data: &ExperimentData<T>, cfg: &MethodConfig) -> Result<SavedModel<T>> {
    let xs = data.track(method.track)?;
    let s = &data.split;
    let (tr_x, tr_y) = (gather(xs, &s.train), gather(&data.labels, &s.train));
    let (va_x, va_y) = (gather(xs, &s.val), gather(&data.labels, &s.val));
    match method.track {
        FeatureTrack::Bof => fit_classifier(method.classifier, &tr_x, &tr_y, &va_x, &va_y, cfg),
        FeatureTrack::Pca => {
            let pca = PcaModel::fit(&tr_x, cfg.pca_retain)?;
            let project = |rows: &[Vec<T>]| rows.iter().map(|x| pca.transform(x)).collect::<Result<Vec<_>>>();
            let (ptr, pva) = (project(&tr_x)?, project(&va_x)?);
            let inner = fit_classifier(method.classifier, &ptr, &tr_y, &pva, &va_y, cfg)?;
            Ok(SavedModel::PcaPipeline(PcaPipeline { pca, classifier: Box::new(inner) }))
        }
    }
}

/// One method's test-split result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

impl MethodRow {
    pub fn evaluate<T: Real>(method: Method, model: &dyn Classifier<T>, xs: &[Vec<T>], ys: &[Label]) -> Result<Self> {
        let preds = model.predict_all(xs)?;
        let cm = confusion(&preds, ys)?;
        Ok(Self { method, confusion: cm, metrics: Metrics::from_confusion(&cm) })
    }
}

/// Trains and evaluates every method on the shared split, in the given order.
pub fn method_matrix<T: Real>(
    data: &ExperimentData<T>,
    methods: &[Method],
    cfg: &MethodConfig,
) -> Result<Vec<MethodRow>> {
    let test_y = gather(&data.labels, &data.split.test);
    methods
        .iter()
        .map(|&m| {
            let model = fit_method(m, data, cfg)?;
            let test_x = gather(data.track(m.track)?, &data.split.test);
            MethodRow::evaluate(m, &model, &test_x, &test_y)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub hidden: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Index into `points` of the best accuracy; ties go to the smaller count.
    pub best: Option<usize>,
}

impl Sweep {
    pub fn best_point(&self) -> Option<SweepPoint> {
        self.best.map(|i| self.points[i])
    }
}

/// Validation accuracy of a BOF+MLP per hidden-layer size, all on the same
/// split and seeds.
pub fn neuron_sweep<T: Real>(data: &ExperimentData<T>, hidden_counts: &[usize], cfg: &MethodConfig) -> Result<Sweep> {
    if hidden_counts.contains(&0) {
        return Err(Error::InvalidArgument("hidden neuron counts must be at least 1".into()));
    }
    let xs = data.track(FeatureTrack::Bof)?;
    let s = &data.split;
    let (tr_x, tr_y) = (gather(xs, &s.train), gather(&data.labels, &s.train));
    let (va_x, va_y) = (gather(xs, &s.val), gather(&data.labels, &s.val));
    if va_x.is_empty() {
        return Err(Error::EmptyInput("validation split"));
    }
    let mut points = Vec::with_capacity(hidden_counts.len());
    for &hidden in hidden_counts {
        let cell = MethodConfig { hidden, ..*cfg };
        let model = fit_classifier(ClassifierKind::Mlp, &tr_x, &tr_y, &va_x, &va_y, &cell)?;
        let cm = confusion(&model.predict_all(&va_x)?, &va_y)?;
        let accuracy = Metrics::from_confusion(&cm).accuracy.unwrap_or(0.0);
        points.push(SweepPoint { hidden, accuracy });
    }
    let best = (0..points.len()).reduce(|b, i| {
        let (pb, pi) = (points[b], points[i]);
        if pi.accuracy > pb.accuracy || (pi.accuracy == pb.accuracy && pi.hidden < pb.hidden) {
            i
        } else {
            b
        }
    });
    Ok(Sweep { points, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::split::{split_dataset, SplitSpec};

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("bof + linear svm".parse::<Method>().unwrap(), Method::ALL[1]);
        assert_eq!("PCA+Naive Bayes".parse::<Method>().unwrap(), Method::ALL[7]);
        let err = "BOF+RBF".parse::<Method>().unwrap_err();
        assert!(err.to_string().contains("BOF+MLP"), "{err}");
        assert_eq!(Method::parse_list("").unwrap().len(), 8);
        assert_eq!(Method::parse_list("BOF+MLP").unwrap(), vec![Method::ALL[0]]);
    }

    fn blobs(n_per: usize) -> ExperimentData<f64> {
        let mut bof = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per {
            let ma = i % 2 == 0;
            let t = (i as f64 * 0.37).sin() * 0.05;
            let base = if ma { [0.6, 0.1, 0.3] } else { [0.1, 0.6, 0.3] };
            bof.push(vec![base[0] + t, base[1] - t, base[2] + 0.5 * t]);
            labels.push(if ma { Label::Ma } else { Label::Normal });
        }
        let raw = bof.iter().map(|v| v.iter().chain(v).map(|x| x * 2.0).collect()).collect();
        let split = split_dataset(&labels, &SplitSpec { seed: 1, ..SplitSpec::default() }).unwrap();
        ExperimentData { bof, raw, labels, split }
    }

    #[test]
    fn matrix_has_one_row_per_method() {
        let data = blobs(20);
        let cfg = MethodConfig {
            train: TrainConfig { learning_rate: 2.0, epochs: 500, ..TrainConfig::default() },
            ..MethodConfig::default()
        };
        let rows = method_matrix(&data, &Method::ALL, &cfg).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert_eq!(r.confusion.total() as usize, data.split.test.len());
            for v in r.metrics.values().into_iter().flatten() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert_eq!(rows[0].metrics.accuracy, Some(1.0));
    }

    #[test]
    fn sweep_shape_and_duplicates() {
        let data = blobs(10);
        let cfg =
            MethodConfig { train: TrainConfig { epochs: 50, ..TrainConfig::default() }, ..MethodConfig::default() };
        let sweep = neuron_sweep(&data, &[5, 10, 5], &cfg).unwrap();
        assert_eq!(sweep.points.len(), 3);
        assert_eq!(sweep.points[0], sweep.points[2]);
        assert!(neuron_sweep(&data, &[0], &cfg).is_err());
    }
}
