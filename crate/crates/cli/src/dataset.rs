//! Manifest I/O and synthetic corpus generation.

use std::path::{Path, PathBuf};

use bofscan_core::imaging::{
    crop_to_band, extract_strip, load_pgm, save_pgm, strip_columns, synth_bscan, GrayImage, Patch,
};
use bofscan_core::{Error, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{CliResult, StageExt};
use crate::seeds::{derive_indexed, Stage};

pub const MANIFEST_FILE: &str = "manifest.csv";

/// One manifest row. `path` is relative to the manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: String,
    pub label: Label,
    pub source_id: String,
    pub center_x: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e)).stage("manifest")?;
        let mut reader = csv::Reader::from_reader(file);
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<ManifestRow>, csv::Error>>()
            .map_err(Error::from)
            .stage("manifest")?;
        if rows.is_empty() {
            return Err(Error::EmptyInput("manifest")).stage("manifest");
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { root, rows })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(path).map_err(Error::from).stage("manifest")?;
        for row in &self.rows {
            w.serialize(row).map_err(Error::from).stage("manifest")?;
        }
        w.flush().map_err(|e| Error::io(path, e)).stage("manifest")
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        let p = Path::new(&row.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn load_patches(&self) -> CliResult<Vec<Patch<f64>>> {
        self.rows
            .iter()
            .map(|row| {
                Ok(Patch {
                    image: load_pgm(self.resolve(row)).stage("load patches")?,
                    label: row.label,
                    source_id: row.source_id.clone(),
                    center_x: row.center_x,
                })
            })
            .collect()
    }
}

/// Picks `count` distinct strip centers whose strips fit in the image and lie
/// more than `strip_width` from every lesion column.
fn normal_columns(
    rng: &mut ChaCha8Rng,
    width: usize,
    strip_width: usize,
    lesion_xs: &[usize],
    count: usize,
) -> Vec<usize> {
    let candidates: Vec<usize> = (0..width)
        .filter(|&x| strip_columns(width, x, strip_width).is_some())
        .filter(|&x| lesion_xs.iter().all(|&l| x.abs_diff(l) > strip_width))
        .collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    while chosen.len() < count.min(candidates.len()) {
        let x = candidates[rng.random_range(0..candidates.len())];
        if !chosen.contains(&x) {
            chosen.push(x);
        }
    }
    chosen
}

fn cut(bscan: &GrayImage<f64>, x: usize, cfg: &PipelineConfig) -> bofscan_core::Result<GrayImage<f64>> {
    crop_to_band(&extract_strip(bscan, x, cfg.strip_width)?, cfg.band_height)
}

/// Writes `scans/scan_NNN.{pgm,json}`, `patches/*.pgm` and `manifest.csv` under
/// `out`. MA patches are centered on each lesion; NORMAL patches on random
/// lesion-free columns.
pub fn synthesize(cfg: &PipelineConfig, out: &Path) -> CliResult<Manifest> {
    let s = &cfg.synth;
    let (scan_dir, patch_dir) = (out.join("scans"), out.join("patches"));
    for d in [out, &scan_dir, &patch_dir] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e)).stage("synth")?;
    }
    let base = cfg.seed(Stage::Synth);
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    let mut rows = Vec::new();
    for i in 0..s.scans {
        let n_lesions = rng.random_range(s.lesions_min..=s.lesions_max);
        let (scan, ann) =
            synth_bscan::<f64>(derive_indexed(base, i as u64 + 1), n_lesions, s.width, s.height).stage("synth")?;
        let id = format!("scan_{i:03}");
        save_pgm(&scan, scan_dir.join(format!("{id}.pgm"))).stage("synth")?;
        let ann_path = scan_dir.join(format!("{id}.json"));
        let ann_text = serde_json::to_string_pretty(&ann).map_err(Error::from).stage("synth")?;
        std::fs::write(&ann_path, ann_text + "\n").map_err(|e| Error::io(&ann_path, e)).stage("synth")?;

        let lesion_xs: Vec<usize> = ann.lesion_centers.iter().map(|&(x, _)| x).collect();
        let mut centers: Vec<(Label, usize)> = lesion_xs
            .iter()
            .filter(|&&x| strip_columns(s.width, x, cfg.strip_width).is_some())
            .map(|&x| (Label::Ma, x))
            .collect();
        centers.extend(
            normal_columns(&mut rng, s.width, cfg.strip_width, &lesion_xs, s.normals_per_scan)
                .into_iter()
                .map(|x| (Label::Normal, x)),
        );

        for (j, (label, x)) in centers.into_iter().enumerate() {
            let patch = cut(&scan, x, cfg).stage("synth")?;
            let name = format!("{id}_{j:02}_{}.pgm", label.as_str().to_ascii_lowercase());
            save_pgm(&patch, patch_dir.join(&name)).stage("synth")?;
            rows.push(ManifestRow { path: format!("patches/{name}"), label, source_id: id.clone(), center_x: x });
        }
    }
    let manifest = Manifest { root: out.to_path_buf(), rows };
    manifest.write(&out.join(MANIFEST_FILE))?;
    Ok(manifest)
}
