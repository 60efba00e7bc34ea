//! The `train`, `eval`, `bench`, `register` and `predict` workflows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bofscan_core::classifiers::{Classifier, MlpModel, SavedModel, Standardized, Standardizer};
use bofscan_core::evaluation::{
    confusion, emit_report, format_table_row, method_matrix, neuron_sweep, split_dataset, ExperimentData, Method,
    MethodRow, Metrics, Report, Split,
};
use bofscan_core::features::{describe_patch, write_descriptor_csv, Descriptor};
use bofscan_core::imaging::{load_pgm, synth_bscan, Patch};
use bofscan_core::registration::{rigid_register, warp, RigidParams};
use bofscan_core::vocabulary::{class_occurrence_sum, ClassOccurrence, TermVector, Vocabulary};
use bofscan_core::{Error, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::dataset::{synthesize, Manifest, MANIFEST_FILE};
use crate::error::{CliError, CliResult, StageExt};
use crate::seeds::Stage;

pub const VOCAB_FILE: &str = "vocab.json";
pub const MODEL_FILE: &str = "model.json";
pub const SPLIT_FILE: &str = "split.json";

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)).stage("output")
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e)).stage("output")
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from).stage("output")?;
    write_text(path, &(text + "\n"))
}

fn read_json<D: serde::de::DeserializeOwned>(path: &Path, stage: &'static str) -> CliResult<D> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e)).stage(stage)?;
    serde_json::from_str(&text).map_err(Error::from).stage(stage)
}

fn pick<X: Clone>(xs: &[X], idx: &[usize]) -> Vec<X> {
    idx.iter().map(|&i| xs[i].clone()).collect()
}

pub fn describe_all(patches: &[Patch<f64>], cfg: &PipelineConfig) -> CliResult<Vec<Vec<Descriptor<f64>>>> {
    let dense = cfg.dense();
    patches.iter().map(|p| describe_patch(&p.image, &dense).stage("describe")).collect()
}

/// Vocabulary from the pooled descriptors of the training patches.
pub fn build_vocabulary(
    descs: &[Vec<Descriptor<f64>>],
    train: &[usize],
    cfg: &PipelineConfig,
) -> CliResult<Vocabulary<f64>> {
    let pool: Vec<&Descriptor<f64>> = train.iter().flat_map(|&i| descs[i].iter()).collect();
    let (vocab, _) = Vocabulary::build(&pool, &cfg.kmeans(), cfg.seed(Stage::Vocab)).stage("vocabulary")?;
    Ok(vocab)
}

pub fn encode_all(vocab: &Vocabulary<f64>, descs: &[Vec<Descriptor<f64>>]) -> CliResult<Vec<TermVector<f64>>> {
    descs.iter().map(|d| vocab.encode(d).stage("encode")).collect()
}

/// `source_id,label,bin_0..` rows for the selected samples.
pub fn term_vector_csv(patches: &[Patch<f64>], tvs: &[TermVector<f64>], idx: &[usize]) -> String {
    let k = tvs.first().map_or(0, TermVector::k);
    let mut out = String::from("source_id,label");
    for b in 0..k {
        let _ = write!(out, ",bin_{b}");
    }
    out.push('\n');
    for &i in idx {
        let _ = write!(out, "{},{}", patches[i].source_id, patches[i].label);
        for v in &tvs[i].bins {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Source id, optional label, feature values.
pub type FeatureRow = (String, Option<Label>, Vec<f64>);

/// Rows of a term-vector style CSV.
pub fn read_feature_csv(path: &Path) -> CliResult<Vec<FeatureRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::from).stage("predict input")?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(Error::from).stage("predict input")?;
        if rec.len() < 3 {
            return Err(Error::MalformedHeader(format!("{}: expected source_id,label,values...", path.display())))
                .stage("predict input");
        }
        let label = match rec[1].trim() {
            "" => None,
            s => Some(s.parse::<Label>().stage("predict input")?),
        };
        let values = rec
            .iter()
            .skip(2)
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("not a number: {v:?}"))))
            .collect::<bofscan_core::Result<Vec<f64>>>()
            .stage("predict input")?;
        rows.push((rec[0].to_string(), label, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("feature CSV")).stage("predict input");
    }
    Ok(rows)
}

fn loss_csv(train: &[f64], val: &[f64]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for (e, t) in train.iter().enumerate() {
        let v = val.get(e).map_or(String::new(), f64::to_string);
        let _ = writeln!(out, "{},{t},{v}", e + 1);
    }
    out
}

pub fn table_text(rows: &[MethodRow]) -> String {
    let mut out = String::from("method | accuracy | sensitivity | specificity | precision\n");
    for r in rows {
        out.push_str(&format_table_row(&r.method.name(), &r.metrics));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainArtifacts {
    pub vocab: Vocabulary<f64>,
    pub model: MlpModel<f64>,
    pub split: Split,
    pub best_epoch: usize,
}

/// Split, describe, cluster, encode and fit the BOF+MLP model (z-scored inputs
/// unless `standardize` is off). Writes vocab.json,
/// model.json, split.json, train_loss.csv and term_vectors_train.csv to `out`.
pub fn cmd_train(cfg: &PipelineConfig, manifest_path: &Path, out: &Path) -> CliResult<TrainArtifacts> {
    cfg.validate()?;
    let manifest = Manifest::read(manifest_path)?;
    let split = split_dataset(&manifest.labels(), &cfg.split_spec()).stage("split")?;
    let patches = manifest.load_patches()?;
    let descs = describe_all(&patches, cfg)?;
    let vocab = build_vocabulary(&descs, &split.train, cfg)?;
    let tvs = encode_all(&vocab, &descs)?;
    let bins: Vec<Vec<f64>> = tvs.iter().map(|t| t.bins.clone()).collect();
    let labels = manifest.labels();

    let (mut train_x, mut val_x) = (pick(&bins, &split.train), pick(&bins, &split.val));
    let standardizer = if cfg.standardize {
        let s = Standardizer::fit(&train_x).stage("standardize")?;
        train_x = s.transform_all(&train_x).stage("standardize")?;
        val_x = s.transform_all(&val_x).stage("standardize")?;
        Some(s)
    } else {
        None
    };
    let init = MlpModel::init(vocab.k(), cfg.hidden_neurons, cfg.seed(Stage::MlpInit)).stage("mlp init")?;
    let outcome = init
        .train(&train_x, &pick(&labels, &split.train), &val_x, &pick(&labels, &split.val), &cfg.mlp_train())
        .stage("mlp train")?;
    let saved = match standardizer {
        Some(standardizer) => SavedModel::Standardized(Standardized {
            standardizer,
            classifier: Box::new(SavedModel::Mlp(outcome.model.clone())),
        }),
        None => SavedModel::Mlp(outcome.model.clone()),
    };

    create_dir(out)?;
    write_json(&out.join(VOCAB_FILE), &vocab)?;
    saved.save(out.join(MODEL_FILE)).stage("output")?;
    write_json(&out.join(SPLIT_FILE), &split)?;
    write_text(&out.join("train_loss.csv"), &loss_csv(&outcome.train_loss, &outcome.val_loss))?;
    write_text(&out.join("term_vectors_train.csv"), &term_vector_csv(&patches, &tvs, &split.train))?;
    if cfg.dump_descriptors {
        let path = out.join("descriptors_train.csv");
        let mut buf = Vec::new();
        for (n, &i) in split.train.iter().enumerate() {
            write_descriptor_csv(&mut buf, &patches[i].source_id, &descs[i], n == 0).stage("output")?;
        }
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e)).stage("output")?;
    }
    Ok(TrainArtifacts { vocab, model: outcome.model, split, best_epoch: outcome.best_epoch })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub row: MethodRow,
    pub test_indices: Vec<usize>,
    pub files: Vec<PathBuf>,
}

/// Scores the saved model on the saved test split and writes the report set
/// plus predictions.csv and term_vectors_test.csv.
pub fn cmd_eval(cfg: &PipelineConfig, manifest_path: &Path, artifacts: &Path, out: &Path) -> CliResult<EvalOutcome> {
    cfg.validate()?;
    let manifest = Manifest::read(manifest_path)?;
    let vocab: Vocabulary<f64> = read_json(&artifacts.join(VOCAB_FILE), "artifacts")?;
    let model = SavedModel::<f64>::load(artifacts.join(MODEL_FILE)).stage("artifacts")?;
    let split: Split = read_json(&artifacts.join(SPLIT_FILE), "artifacts")?;
    if model.input_dim() != vocab.k() {
        return Err(Error::DimensionMismatch { expected: vocab.k(), found: model.input_dim() }).stage("artifacts");
    }
    if split.len() != manifest.rows.len() || split.parts().iter().any(|p| p.iter().any(|&i| i >= manifest.rows.len())) {
        return Err(Error::DimensionMismatch { expected: manifest.rows.len(), found: split.len() }).stage("artifacts");
    }

    let patches = manifest.load_patches()?;
    let descs = describe_all(&patches, cfg)?;
    if let Some(d) = descs.first().and_then(|d| d.first()) {
        if d.values().len() != vocab.dim() {
            return Err(Error::DimensionMismatch { expected: vocab.dim(), found: d.values().len() }).stage("artifacts");
        }
    }
    let tvs = encode_all(&vocab, &descs)?;
    let labels = manifest.labels();
    let test_x: Vec<Vec<f64>> = split.test.iter().map(|&i| tvs[i].bins.clone()).collect();
    let test_y = pick(&labels, &split.test);
    let preds = model.predict_all(&test_x).stage("predict")?;
    let cm = confusion(&preds, &test_y).stage("evaluate")?;
    let method: Method = "BOF+MLP".parse().stage("evaluate")?;
    let row = MethodRow { method, confusion: cm, metrics: Metrics::from_confusion(&cm) };

    create_dir(out)?;
    let occ = class_occurrence_sum(&pick(&tvs, &split.train), &pick(&labels, &split.train)).stage("evaluate")?;
    let rows = [row.clone()];
    let mut files = emit_report(&Report { rows: &rows, occurrence: Some(&occ), sweep: &[], sweep_best: None }, out)
        .stage("report")?;

    let mut pred_csv = String::from("index,source_id,center_x,label,predicted\n");
    for (&i, p) in split.test.iter().zip(&preds) {
        let r = &manifest.rows[i];
        let _ = writeln!(pred_csv, "{i},{},{},{},{p}", r.source_id, r.center_x, r.label);
    }
    for (name, text) in
        [("predictions.csv", pred_csv), ("term_vectors_test.csv", term_vector_csv(&patches, &tvs, &split.test))]
    {
        let path = out.join(name);
        write_text(&path, &text)?;
        files.push(path);
    }
    Ok(EvalOutcome { row, test_indices: split.test, files })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub rows: Vec<MethodRow>,
    pub occurrence: ClassOccurrence,
    pub files: Vec<PathBuf>,
}

/// Runs every configured method on one shared split plus the hidden-size sweep
/// and writes the full report set. Without a manifest a synthetic corpus is
/// generated under `out/data` first.
pub fn cmd_bench(cfg: &PipelineConfig, manifest_path: Option<&Path>, out: &Path) -> CliResult<BenchOutcome> {
    cfg.validate()?;
    let methods = cfg.parsed_methods()?;
    create_dir(out)?;
    let manifest = match manifest_path {
        Some(p) => Manifest::read(p)?,
        None => synthesize(cfg, &out.join("data"))?,
    };
    let labels = manifest.labels();
    let split = split_dataset(&labels, &cfg.split_spec()).stage("split")?;
    let patches = manifest.load_patches()?;
    let descs = describe_all(&patches, cfg)?;
    let vocab = build_vocabulary(&descs, &split.train, cfg)?;
    let tvs = encode_all(&vocab, &descs)?;
    let occurrence = class_occurrence_sum(&pick(&tvs, &split.train), &pick(&labels, &split.train)).stage("evaluate")?;

    let needs_raw = methods.iter().any(|m| m.track == bofscan_core::evaluation::FeatureTrack::Pca);
    let raw: Vec<Vec<f64>> = if needs_raw {
        descs.iter().map(|d| d.iter().flat_map(|x| x.values().iter().copied()).collect()).collect()
    } else {
        Vec::new()
    };
    let data = ExperimentData { bof: tvs.iter().map(|t| t.bins.clone()).collect(), raw, labels, split };
    let mcfg = cfg.method_config();
    let rows = method_matrix(&data, &methods, &mcfg).stage("method matrix")?;
    let sweep = neuron_sweep(&data, &cfg.sweep_hidden, &mcfg).stage("neuron sweep")?;

    let report = Report { rows: &rows, occurrence: Some(&occurrence), sweep: &sweep.points, sweep_best: sweep.best };
    let mut files = emit_report(&report, out).stage("report")?;
    let table = out.join("table.txt");
    write_text(&table, &table_text(&rows))?;
    files.push(table);
    write_json(&out.join(SPLIT_FILE), &data.split)?;
    Ok(BenchOutcome { rows, occurrence, files })
}

/// Rigid parameters plus the alignment score, as written by `register`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationRecord {
    pub angle: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
    pub score: f64,
}

impl RegistrationRecord {
    pub fn params(&self) -> RigidParams<f64> {
        RigidParams { angle: self.angle, scale: self.scale, tx: self.tx, ty: self.ty }
    }
}

/// A random rigid transform whose inverse lies inside the default search
/// space: |angle| <= 8 deg, scale in [0.93, 1.07], |t| <= 10 px per axis.
pub fn random_perturbation(rng: &mut impl Rng) -> RigidParams<f64> {
    RigidParams {
        angle: rng.random_range(-8.0..=8.0),
        scale: rng.random_range(0.93..=1.07),
        tx: rng.random_range(-10.0..=10.0),
        ty: rng.random_range(-10.0..=10.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisterOutcome {
    pub result: RegistrationRecord,
    /// Set for the synthetic demo: the perturbation's inverse.
    pub expected: Option<RigidParams<f64>>,
}

/// Registers `moving` onto `fixed`; with no inputs, registers a synthetic scan
/// against a randomly perturbed copy of itself. Writes registration.json (and
/// expected.json for the demo).
pub fn cmd_register(
    cfg: &PipelineConfig,
    fixed: Option<&Path>,
    moving: Option<&Path>,
    out: &Path,
) -> CliResult<RegisterOutcome> {
    cfg.validate()?;
    let (fixed_img, moving_img, expected) = match (fixed, moving) {
        (Some(f), Some(m)) => {
            (load_pgm::<f64>(f).stage("register input")?, load_pgm::<f64>(m).stage("register input")?, None)
        }
        (None, None) => {
            let seed = cfg.seed(Stage::Register);
            let (scan, _) = synth_bscan::<f64>(seed, 3, cfg.synth.width, cfg.synth.height).stage("synth")?;
            let truth = random_perturbation(&mut ChaCha8Rng::seed_from_u64(seed));
            let moving = warp(&scan, &truth);
            (scan, moving, Some(truth.inverse()))
        }
        _ => return Err(CliError::Usage("--fixed and --moving must be given together".into())),
    };
    let reg = rigid_register(&fixed_img, &moving_img, &cfg.registration).stage("register")?;
    let p = reg.params;
    let result = RegistrationRecord { angle: p.angle, scale: p.scale, tx: p.tx, ty: p.ty, score: reg.score };
    create_dir(out)?;
    write_json(&out.join("registration.json"), &result)?;
    if let Some(e) = &expected {
        write_json(&out.join("expected.json"), e)?;
    }
    Ok(RegisterOutcome { result, expected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictOutcome {
    pub predictions: Vec<Label>,
    /// Present when every input row carries a label.
    pub metrics: Option<Metrics>,
}

/// Applies any saved model to the rows of a feature CSV and writes predictions.csv.
pub fn cmd_predict(model_path: &Path, input: &Path, out: &Path) -> CliResult<PredictOutcome> {
    let model = SavedModel::<f64>::load(model_path).stage("model")?;
    let rows = read_feature_csv(input)?;
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();
    let predictions = model.predict_all(&xs).stage("predict")?;
    let labels: Option<Vec<Label>> = rows.iter().map(|r| r.1).collect();
    let metrics = match labels {
        Some(ys) => Some(Metrics::from_confusion(&confusion(&predictions, &ys).stage("evaluate")?)),
        None => None,
    };
    let mut csv = String::from("row,source_id,label,predicted\n");
    for (i, ((id, label, _), p)) in rows.iter().zip(&predictions).enumerate() {
        let l = label.map_or(String::new(), |l| l.to_string());
        let _ = writeln!(csv, "{i},{id},{l},{p}");
    }
    create_dir(out)?;
    write_text(&out.join("predictions.csv"), &csv)?;
    Ok(PredictOutcome { predictions, metrics })
}

/// `synth` with the manifest path it wrote.
pub fn cmd_synth(cfg: &PipelineConfig, out: &Path) -> CliResult<(Manifest, PathBuf)> {
    cfg.validate()?;
    let manifest = synthesize(cfg, out)?;
    Ok((manifest, out.join(MANIFEST_FILE)))
}
