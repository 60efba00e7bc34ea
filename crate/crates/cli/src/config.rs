use std::path::Path;

use bofscan_core::classifiers::{Retain, SvmConfig, TrainConfig};
use bofscan_core::evaluation::{Method, MethodConfig, SplitSpec};
use bofscan_core::features::{DenseConfig, SurfConfig};
use bofscan_core::imaging::{DEFAULT_BAND_HEIGHT, DEFAULT_STRIP_WIDTH};
use bofscan_core::registration::SearchSpace;
use bofscan_core::vocabulary::KmeansConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::seeds::{derive_seed, Stage};

/// Synthetic corpus settings for `synth` (and `bench` without a manifest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub scans: usize,
    pub width: usize,
    pub height: usize,
    /// Lesions per scan, drawn uniformly from this inclusive range.
    pub lesions_min: usize,
    pub lesions_max: usize,
    pub normals_per_scan: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { scans: 40, width: 768, height: 496, lesions_min: 1, lesions_max: 4, normals_per_scan: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.70, val: 0.15, test: 0.15 }
    }
}

/// Everything a command needs besides its file arguments. Missing JSON keys
/// take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub strip_width: usize,
    pub band_height: usize,
    pub grid: [usize; 2],
    /// Descriptor scale. At 1 the 3.3 px Gaussian weighting leaves gaps between
    /// the 8 grid rows of a 170 px patch, so lesions between rows go unseen.
    pub surf_scale: f64,
    pub vocab_k: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub hidden_neurons: usize,
    /// Z-score inputs before the MLP and the linear SVM.
    pub standardize: bool,
    pub split: SplitFractions,
    pub train: TrainConfig,
    pub knn_k: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub pca_variance: f64,
    pub sweep_hidden: Vec<usize>,
    pub methods: Vec<String>,
    pub synth: SynthConfig,
    pub registration: SearchSpace<f64>,
    /// Also write every training descriptor to `descriptors_train.csv`.
    pub dump_descriptors: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            strip_width: DEFAULT_STRIP_WIDTH,
            band_height: DEFAULT_BAND_HEIGHT,
            grid: [8, 8],
            surf_scale: 3.0,
            vocab_k: 100,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-6,
            hidden_neurons: 10,
            standardize: true,
            split: SplitFractions::default(),
            train: TrainConfig::default(),
            knn_k: 5,
            svm_lambda: 0.01,
            svm_epochs: 100,
            pca_variance: 0.95,
            sweep_hidden: vec![1, 2, 5, 10, 15, 20, 30],
            methods: Method::ALL.iter().map(Method::name).collect(),
            synth: SynthConfig::default(),
            registration: SearchSpace::default(),
            dump_descriptors: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::stage("config", bofscan_core::Error::io(path, e)))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Usage(format!("invalid config: {msg}")));
        let counts = [
            ("strip_width", self.strip_width),
            ("band_height", self.band_height),
            ("grid[0]", self.grid[0]),
            ("grid[1]", self.grid[1]),
            ("hidden_neurons", self.hidden_neurons),
            ("knn_k", self.knn_k),
            ("svm_epochs", self.svm_epochs),
            ("kmeans_max_iter", self.kmeans_max_iter),
            ("synth.width", self.synth.width),
            ("synth.height", self.synth.height),
        ];
        for (name, v) in counts {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.vocab_k < 2 {
            return bad("vocab_k must be at least 2".into());
        }
        if !(self.surf_scale > 0.0) || !self.surf_scale.is_finite() {
            return bad("surf_scale must be positive".into());
        }
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return bad("pca_variance must be in (0, 1]".into());
        }
        if !(self.svm_lambda > 0.0) {
            return bad("svm_lambda must be positive".into());
        }
        if self.synth.lesions_min > self.synth.lesions_max {
            return bad("synth.lesions_min exceeds synth.lesions_max".into());
        }
        if self.sweep_hidden.contains(&0) {
            return bad("sweep_hidden entries must be positive".into());
        }
        self.split_spec().validate().map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        self.train.validate().map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        self.registration.validate().map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        self.parsed_methods()?;
        Ok(())
    }

    pub fn parsed_methods(&self) -> CliResult<Vec<Method>> {
        self.methods.iter().map(|m| m.parse::<Method>().map_err(CliError::from_core_usage)).collect()
    }

    pub fn seed(&self, stage: Stage) -> u64 {
        derive_seed(self.master_seed, stage)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_frac: self.split.train,
            val_frac: self.split.val,
            test_frac: self.split.test,
            seed: self.seed(Stage::Split),
        }
    }

    pub fn dense(&self) -> DenseConfig {
        DenseConfig {
            grid_x: self.grid[0],
            grid_y: self.grid[1],
            scale: self.surf_scale,
            margin: 0,
            surf: SurfConfig::default(),
        }
    }

    pub fn kmeans(&self) -> KmeansConfig {
        KmeansConfig { k: self.vocab_k, max_iter: self.kmeans_max_iter, tol: self.kmeans_tol }
    }

    pub fn mlp_train(&self) -> TrainConfig {
        TrainConfig { seed: self.seed(Stage::MlpTrain), ..self.train }
    }

    pub fn method_config(&self) -> MethodConfig {
        MethodConfig {
            hidden: self.hidden_neurons,
            mlp_init_seed: self.seed(Stage::MlpInit),
            train: self.mlp_train(),
            knn_k: self.knn_k,
            svm: SvmConfig { lambda: self.svm_lambda, epochs: self.svm_epochs, seed: self.seed(Stage::Svm) },
            pca_retain: Retain::Variance(self.pca_variance),
            standardize: self.standardize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&text).unwrap(), cfg);
        let partial: PipelineConfig = serde_json::from_str(r#"{"vocab_k": 20}"#).unwrap();
        assert_eq!(partial.vocab_k, 20);
        assert_eq!(partial.hidden_neurons, 10);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"vocab": 20}"#).is_err());
        let cfg = PipelineConfig { methods: vec!["BOF+RBF".into()], ..PipelineConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
        let cfg =
            PipelineConfig { split: SplitFractions { train: 0.5, val: 0.2, test: 0.2 }, ..PipelineConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }
}
