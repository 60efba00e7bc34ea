//! Dense upright SURF descriptors computed from Haar responses on an integral image.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, IntegralImage};
use crate::scalar::Real;

pub const DESCRIPTOR_LEN: usize = 64;
const SUBREGIONS: usize = 4;
/// Descriptor window side and Gaussian sigma, in units of the keypoint scale.
const WINDOW: f64 = 20.0;
const SIGMA: f64 = 3.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint<T> {
    pub x: T,
    pub y: T,
    pub scale: T,
}

impl<T: Real> Keypoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y, scale: T::one() }
    }

    pub fn with_scale(self, scale: T) -> Self {
        Self { scale, ..self }
    }
}

/// 64 values: for each of the 4x4 subregions in row-major order the quadruple
/// `(sum dx, sum dy, sum |dx|, sum |dy|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Descriptor<T>(Vec<T>);

impl<T: Real> Descriptor<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() != DESCRIPTOR_LEN {
            return Err(Error::DimensionMismatch { expected: DESCRIPTOR_LEN, found: values.len() });
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![T::zero(); DESCRIPTOR_LEN])
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_values(self) -> Vec<T> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| v.is_zero())
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Index of `component` (0..4) of subregion (`row`, `col`).
    pub const fn index(row: usize, col: usize, component: usize) -> usize {
        4 * (SUBREGIONS * row + col) + component
    }
}

impl<T> AsRef<[T]> for Descriptor<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

fn footprint(ii_w: usize, ii_h: usize, cx: i64, cy: i64, side: usize) -> Result<(usize, usize, usize)> {
    if side == 0 || !side.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("Haar filter side must be even and positive, got {side}")));
    }
    let half = (side / 2) as i64;
    let (x0, y0) = (cx - half, cy - half);
    let (x1, y1) = (cx + half - 1, cy + half - 1);
    if x0 < 0 || y0 < 0 || x1 >= ii_w as i64 || y1 >= ii_h as i64 {
        return Err(Error::OutOfBounds(format!(
            "Haar filter of side {side} at ({cx},{cy}) leaves {ii_w}x{ii_h} image"
        )));
    }
    Ok((x0 as usize, y0 as usize, half as usize))
}

/// Horizontal Haar response: right half minus left half of the `side`x`side`
/// square whose top-left corner is `(cx - side/2, cy - side/2)`.
pub fn haar_x<T: Real>(ii: &IntegralImage<T>, cx: i64, cy: i64, side: usize) -> Result<T> {
    let (x0, y0, half) = footprint(ii.width(), ii.height(), cx, cy, side)?;
    let y1 = y0 + side - 1;
    let left = ii.box_sum_unchecked(x0, y0, x0 + half - 1, y1);
    let right = ii.box_sum_unchecked(x0 + half, y0, x0 + side - 1, y1);
    Ok(right - left)
}

/// Vertical Haar response: bottom half minus top half.
pub fn haar_y<T: Real>(ii: &IntegralImage<T>, cx: i64, cy: i64, side: usize) -> Result<T> {
    let (x0, y0, half) = footprint(ii.width(), ii.height(), cx, cy, side)?;
    let x1 = x0 + side - 1;
    let top = ii.box_sum_unchecked(x0, y0, x1, y0 + half - 1);
    let bottom = ii.box_sum_unchecked(x0, y0 + half, x1, y0 + side - 1);
    Ok(bottom - top)
}

/// `nx` x `ny` keypoints evenly spread over `[margin, extent - 1 - margin]`,
/// row-major. A single point per axis sits at the center.
pub fn dense_grid<T: Real>(
    width: usize,
    height: usize,
    nx: usize,
    ny: usize,
    margin: usize,
) -> Result<Vec<Keypoint<T>>> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("grid counts must be at least 1".into()));
    }
    let axis = |extent: usize, n: usize| -> Result<Vec<T>> {
        if extent < 2 * margin + 1 {
            return Err(Error::InvalidArgument(format!("margin {margin} leaves no usable extent in {extent} pixels")));
        }
        let span = T::from_usize_lossy(extent - 1 - 2 * margin);
        let m = T::from_usize_lossy(margin);
        if n == 1 {
            return Ok(vec![T::from_usize_lossy(extent - 1) * T::lit(0.5)]);
        }
        let denom = T::from_usize_lossy(n - 1);
        Ok((0..n).map(|i| m + T::from_usize_lossy(i) * span / denom).collect())
    };
    let xs = axis(width, nx)?;
    let ys = axis(height, ny)?;
    Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| Keypoint::new(x, y))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfConfig {
    /// Samples per subregion side; standard SURF uses 5.
    pub samples_per_subregion: usize,
}

impl Default for SurfConfig {
    fn default() -> Self {
        Self { samples_per_subregion: 5 }
    }
}

/// Upright SURF descriptor at `kp`.
///
/// The 20s window is split into 4x4 subregions, each sampled on an n x n grid
/// (rounded half up to pixels) with Haar filters of side 2s. Responses are
/// Gaussian-weighted (sigma 3.3s) around the keypoint, summed per subregion and
/// the vector is L2-normalized. Responses at the integral image's rounding noise
/// level are treated as zero so flat regions give an all-zero descriptor.
pub fn surf_descriptor<T: Real>(ii: &IntegralImage<T>, kp: &Keypoint<T>, cfg: &SurfConfig) -> Result<Descriptor<T>> {
    let n = cfg.samples_per_subregion;
    if n == 0 {
        return Err(Error::InvalidArgument("samples_per_subregion must be at least 1".into()));
    }
    let s = kp.scale.as_f64();
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("keypoint scale must be positive, got {s}")));
    }
    let side = 2 * crate::scalar::round_half_up_i64(s).max(1) as usize;
    let (kx, ky) = (kp.x.as_f64(), kp.y.as_f64());
    let sub = WINDOW / SUBREGIONS as f64;
    let offsets: Vec<f64> = (0..SUBREGIONS * n)
        .map(|i| (-WINDOW / 2.0 + sub * (i / n) as f64 + (i % n) as f64 * sub / n as f64 + sub / (2.0 * n as f64)) * s)
        .collect();
    let two_sigma_sq = 2.0 * (SIGMA * s).powi(2);
    let noise = T::epsilon() * T::lit(8.0) * ii.total().abs().max(T::one());
    let clean = |r: T| if r.abs() <= noise { T::zero() } else { r };

    let mut values = vec![T::zero(); DESCRIPTOR_LEN];
    for (iy, &v) in offsets.iter().enumerate() {
        let py = crate::scalar::round_half_up_i64(ky + v);
        for (ix, &u) in offsets.iter().enumerate() {
            let px = crate::scalar::round_half_up_i64(kx + u);
            let g = T::lit((-(u * u + v * v) / two_sigma_sq).exp());
            let dx = g * clean(haar_x(ii, px, py, side)?);
            let dy = g * clean(haar_y(ii, px, py, side)?);
            let base = Descriptor::<T>::index(iy / n, ix / n, 0);
            values[base] += dx;
            values[base + 1] += dy;
            values[base + 2] += dx.abs();
            values[base + 3] += dy.abs();
        }
    }
    let norm = values.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm > T::zero() {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(Descriptor(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseConfig {
    pub grid_x: usize,
    pub grid_y: usize,
    pub scale: f64,
    pub margin: usize,
    pub surf: SurfConfig,
}

impl Default for DenseConfig {
    fn default() -> Self {
        Self { grid_x: 8, grid_y: 8, scale: 1.0, margin: 0, surf: SurfConfig::default() }
    }
}

impl DenseConfig {
    /// Edge-replication padding that keeps every keypoint's support inside the
    /// image: `ceil(10 s) + 1`, widened when the outermost Haar footprint
    /// reaches further (any `s >= 2`).
    pub fn padding(&self) -> usize {
        let s = self.scale;
        let n = self.surf.samples_per_subregion.max(1) as f64;
        let half = crate::scalar::round_half_up_i64(s).max(1) as f64;
        let reach = (WINDOW / 2.0 - WINDOW / SUBREGIONS as f64 / (2.0 * n)) * s + 0.5 + half;
        ((WINDOW / 2.0 * s).ceil() + 1.0).max(reach.ceil()) as usize
    }

    pub fn descriptors_per_patch(&self) -> usize {
        self.grid_x * self.grid_y
    }
}

/// Descriptors on a dense grid over `patch`, in grid order.
pub fn describe_patch<T: Real>(patch: &GrayImage<T>, cfg: &DenseConfig) -> Result<Vec<Descriptor<T>>> {
    let pad = cfg.padding();
    let padded = patch.pad_replicate(pad);
    let ii = IntegralImage::new(&padded);
    let offset = T::from_usize_lossy(pad);
    let scale = T::lit(cfg.scale);
    dense_grid::<T>(patch.width(), patch.height(), cfg.grid_x, cfg.grid_y, cfg.margin)?
        .iter()
        .map(|kp| {
            let kp = Keypoint { x: kp.x + offset, y: kp.y + offset, scale };
            surf_descriptor(&ii, &kp, &cfg.surf)
        })
        .collect()
}

/// Writes `source_id,kp_index,d0..d63` rows. Set `header` for the first block.
pub fn write_descriptor_csv<T: Real, W: Write>(
    out: W,
    source_id: &str,
    descriptors: &[Descriptor<T>],
    header: bool,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        let mut h = vec!["source_id".to_string(), "kp_index".to_string()];
        h.extend((0..DESCRIPTOR_LEN).map(|i| format!("d{i}")));
        w.write_record(&h)?;
    }
    for (i, d) in descriptors.iter().enumerate() {
        let mut rec = vec![source_id.to_string(), i.to_string()];
        rec.extend(d.values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<descriptor csv>", e))?;
    Ok(())
}
