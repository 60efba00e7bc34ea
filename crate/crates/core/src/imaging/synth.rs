//! Seeded synthetic B-scans: horizontal retinal bands, vessel shadows, speckle
//! noise and hyperreflective circular lesions in the inner layers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const LESION_RADIUS_MIN: f64 = 3.0;
pub const LESION_RADIUS_MAX: f64 = 8.0;

const MIN_SIDE: usize = 64;
const PLACEMENT_ATTEMPTS: usize = 1000;
const BACKGROUND: f64 = 0.0;
const NOISE_SIGMA: f64 = 0.04;

/// (top fraction, bottom fraction, intensity) of each band within the retina.
const LAYERS: [(f64, f64, f64); 6] = [
    (0.00, 0.10, 0.85), // nerve fibre layer
    (0.10, 0.30, 0.45), // ganglion cell / inner plexiform
    (0.30, 0.45, 0.22), // inner nuclear
    (0.45, 0.60, 0.40), // outer plexiform
    (0.60, 0.82, 0.18), // outer nuclear
    (0.82, 1.00, 0.90), // pigment epithelium
];
const CHOROID: f64 = 0.15;

/// Ground truth for one generated B-scan. Layer extents are nominal: the
/// rendered bands undulate by a few pixels around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthAnnotation {
    #[serde(rename = "seed")]
    pub rng_seed: u64,
    #[serde(rename = "lesions")]
    pub lesion_centers: Vec<(usize, usize)>,
    #[serde(rename = "radii", default)]
    pub lesion_radii: Vec<f64>,
    #[serde(rename = "layers")]
    pub layer_rows: Vec<(usize, usize)>,
}

struct Geometry {
    top: f64,
    thickness: f64,
    amp: f64,
    period: f64,
    phase: f64,
}

impl Geometry {
    fn offset(&self, x: f64) -> f64 {
        self.amp * (std::f64::consts::TAU * x / self.period + self.phase).sin()
    }
}

struct Shadow {
    center: f64,
    half_width: f64,
    attenuation: f64,
}

struct Lesion {
    x: usize,
    y: usize,
    radius: f64,
    amplitude: f64,
}

/// Generates a `width`×`height` B-scan with `n_lesions` lesions. A pure function
/// of its arguments.
pub fn synth_bscan<T: Real>(
    seed: u64,
    n_lesions: usize,
    width: usize,
    height: usize,
) -> Result<(GrayImage<T>, SynthAnnotation)> {
    if width < MIN_SIDE || height < MIN_SIDE {
        return Err(Error::InvalidArgument(format!(
            "synthetic B-scan must be at least {MIN_SIDE}x{MIN_SIDE}, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);

    let geo = Geometry {
        top: h * (0.30 + 0.08 * rng.random::<f64>()),
        thickness: (0.26 * h).round().max(12.0),
        amp: 0.012 * h,
        period: w * (0.6 + 0.9 * rng.random::<f64>()),
        phase: std::f64::consts::TAU * rng.random::<f64>(),
    };

    let shadows: Vec<Shadow> = (0..rng.random_range(2..=4))
        .map(|_| Shadow {
            center: rng.random::<f64>() * w,
            half_width: rng.random_range(2.0..5.0),
            attenuation: rng.random_range(0.5..0.7),
        })
        .collect();

    let lesions = place_lesions(&mut rng, &geo, n_lesions, width, height)?;

    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64, y as f64);
            let depth = (yf - geo.offset(xf) - geo.top) / geo.thickness;
            let mut v = band_intensity(depth);
            if depth > LAYERS[0].1 {
                for s in &shadows {
                    let d = (xf - s.center).abs();
                    if d < s.half_width + 1.0 {
                        let edge = (s.half_width + 1.0 - d).min(1.0);
                        v *= 1.0 - (1.0 - s.attenuation) * edge;
                    }
                }
            }
            for l in &lesions {
                let (dx, dy) = (xf - l.x as f64, yf - l.y as f64);
                let d2 = dx * dx + dy * dy;
                if d2 <= 9.0 * l.radius * l.radius {
                    // half maximum at the lesion radius
                    v += l.amplitude * (-d2 * std::f64::consts::LN_2 / (l.radius * l.radius)).exp();
                }
            }
            v += noise.sample(&mut rng);
            pixels.push(T::lit(v));
        }
    }
    let image = GrayImage::from_unclamped(width, height, pixels);

    let layer_rows = LAYERS
        .iter()
        .map(|&(a, b, _)| {
            let top = (geo.top + a * geo.thickness).round() as usize;
            let bottom = ((geo.top + b * geo.thickness).round() as usize).saturating_sub(1).max(top);
            (top.min(height - 1), bottom.min(height - 1))
        })
        .collect();
    let annotation = SynthAnnotation {
        rng_seed: seed,
        lesion_centers: lesions.iter().map(|l| (l.x, l.y)).collect(),
        lesion_radii: lesions.iter().map(|l| l.radius).collect(),
        layer_rows,
    };
    Ok((image, annotation))
}

fn band_intensity(depth: f64) -> f64 {
    if depth < 0.0 {
        return BACKGROUND;
    }
    if depth >= 1.0 {
        // choroid fading into the background
        return BACKGROUND + (CHOROID - BACKGROUND) * (-(depth - 1.0) * 8.0).exp();
    }
    LAYERS.iter().find(|&&(a, b, _)| depth >= a && depth < b).map_or(BACKGROUND, |&(_, _, v)| v)
}

fn place_lesions(rng: &mut ChaCha8Rng, geo: &Geometry, n: usize, width: usize, height: usize) -> Result<Vec<Lesion>> {
    let margin = (width / 16).max(16);
    let mut placed: Vec<Lesion> = Vec::with_capacity(n);
    let mut attempts = 0;
    while placed.len() < n {
        if attempts == PLACEMENT_ATTEMPTS * n {
            return Err(Error::PlacementFailed { requested: n, placed: placed.len() });
        }
        attempts += 1;
        let radius = rng.random_range(LESION_RADIUS_MIN..=LESION_RADIUS_MAX);
        let x = rng.random_range(margin..width - margin);
        // upper half of the retina, below the nerve fibre layer
        let lo = LAYERS[0].1 + radius / geo.thickness;
        let hi = 0.5 - radius / geo.thickness;
        let frac = if hi > lo { rng.random_range(lo..hi) } else { 0.5 * (lo + hi) };
        let yf = (geo.top + geo.offset(x as f64) + frac * geo.thickness).round();
        if yf < 0.0 || yf >= height as f64 {
            continue;
        }
        let y = yf as usize;
        let clear = placed.iter().all(|p| {
            let (dx, dy) = (p.x as f64 - x as f64, p.y as f64 - y as f64);
            (dx * dx + dy * dy).sqrt() >= 2.0 * p.radius.max(radius)
        });
        if clear {
            placed.push(Lesion { x, y, radius, amplitude: rng.random_range(0.5..0.7) });
        }
    }
    Ok(placed)
}
