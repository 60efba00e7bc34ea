use super::GrayImage;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::Real;

pub const DEFAULT_STRIP_WIDTH: usize = 30;
pub const DEFAULT_BAND_HEIGHT: usize = 170;

/// A labeled region of interest cut from a B-scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch<T> {
    pub image: GrayImage<T>,
    pub label: Label,
    pub source_id: String,
    pub center_x: usize,
}

/// Inclusive column range of a `width`-wide strip centered at `center_x`,
/// left-biased for even widths. `None` if it leaves `0..image_width`.
pub fn strip_columns(image_width: usize, center_x: usize, width: usize) -> Option<(usize, usize)> {
    if width == 0 {
        return None;
    }
    let left = center_x.checked_sub(width / 2)?;
    let right = left + width - 1;
    (right < image_width).then_some((left, right))
}

/// Full-height vertical strip of `width` columns centered at `center_x`.
pub fn extract_strip<T: Real>(bscan: &GrayImage<T>, center_x: usize, width: usize) -> Result<GrayImage<T>> {
    if width == 0 {
        return Err(Error::InvalidArgument("strip width must be at least 1".into()));
    }
    let (left, right) = strip_columns(bscan.width(), center_x, width).ok_or_else(|| {
        Error::OutOfBounds(format!("strip of width {width} at column {center_x} exceeds image width {}", bscan.width()))
    })?;
    bscan.sub_image(left, 0, right, bscan.height() - 1)
}

/// Keeps `band_height` rows centered on the intensity-weighted row centroid
/// (rounded half up), shifted as needed to stay inside the strip.
pub fn crop_to_band<T: Real>(strip: &GrayImage<T>, band_height: usize) -> Result<GrayImage<T>> {
    let h = strip.height();
    if band_height == 0 || h < band_height {
        return Err(Error::InvalidArgument(format!("strip height {h} shorter than band height {band_height}")));
    }
    if h == band_height {
        return Ok(strip.clone());
    }
    let mut mass = 0.0;
    let mut moment = 0.0;
    for y in 0..h {
        let m: f64 = strip.row(y).iter().map(|p| p.as_f64()).sum();
        mass += m;
        moment += y as f64 * m;
    }
    // An empty strip has no centroid; fall back to the geometric middle.
    let centroid = if mass > 0.0 { moment / mass } else { (h - 1) as f64 / 2.0 };
    // Summation error can leave an exact half just below .5; treat it as a tie.
    let center = crate::scalar::round_half_up_i64(centroid + 1e-9);
    let top = (center - (band_height / 2) as i64).clamp(0, (h - band_height) as i64) as usize;
    strip.sub_image(0, top, strip.width() - 1, top + band_height - 1)
}
