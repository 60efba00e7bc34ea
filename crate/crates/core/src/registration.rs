//! Rigid-similarity registration by exhaustive coarse-to-fine NCC search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::scalar::Real;

/// Rotation (degrees) and uniform scale about the image center, then translation.
///
/// A source point `p` maps to `scale * R(angle) * (p - c) + c + (tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidParams<T> {
    pub angle: T,
    pub scale: T,
    pub tx: T,
    pub ty: T,
}

impl<T: Real> RigidParams<T> {
    pub fn new(angle: T, scale: T, tx: T, ty: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        Ok(Self { angle: normalize_angle(angle), scale, tx, ty })
    }

    pub fn identity() -> Self {
        Self { angle: T::zero(), scale: T::one(), tx: T::zero(), ty: T::zero() }
    }

    /// The transform undoing `self`.
    pub fn inverse(&self) -> Self {
        let (sin, cos) = self.angle.to_radians().sin_cos();
        let inv_s = self.scale.recip();
        // -(1/s) R(-angle) t
        let tx = -inv_s * (cos * self.tx + sin * self.ty);
        let ty = -inv_s * (-sin * self.tx + cos * self.ty);
        Self { angle: normalize_angle(-self.angle), scale: inv_s, tx, ty }
    }

    fn key(&self) -> [T; 4] {
        [self.angle, self.scale, self.tx, self.ty]
    }
}

/// Maps an angle in degrees into `(-180, 180]`.
pub fn normalize_angle<T: Real>(deg: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut a = deg % full;
    if a > half {
        a -= full;
    } else if a <= -half {
        a += full;
    }
    a
}

/// Inclusive `min..=max` sampled every `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange<T> {
    pub min: T,
    pub max: T,
    pub step: T,
}

impl<T: Real> AxisRange<T> {
    pub fn new(min: T, max: T, step: T) -> Self {
        Self { min, max, step }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.step > T::zero()) || !(self.min <= self.max) {
            return Err(Error::InvalidArgument(format!(
                "{name} range needs min <= max and step > 0, got {}..{} step {}",
                self.min, self.max, self.step
            )));
        }
        Ok(())
    }

    fn contains(&self, v: T) -> bool {
        let eps = self.step * T::lit(1e-9);
        v >= self.min - eps && v <= self.max + eps
    }

    /// Lattice `anchor + k * step` inside the range, anchored on `identity` when
    /// the range contains it so the identity value is always a grid point.
    fn lattice(&self, identity: T, step: T) -> Vec<T> {
        let anchor = if self.contains(identity) { identity } else { self.min };
        let eps = T::lit(1e-9);
        let kmin = ((self.min - anchor) / step - eps).ceil().as_f64() as i64;
        let kmax = ((self.max - anchor) / step + eps).floor().as_f64() as i64;
        (kmin..=kmax).map(|k| anchor + T::lit(k as f64) * step).collect()
    }

    fn around(&self, center: T, step: T, reach: i32) -> Vec<T> {
        (-reach..=reach).map(|j| center + T::lit(f64::from(j)) * step).filter(|&v| self.contains(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SearchSpace<T> {
    pub angle: AxisRange<T>,
    pub scale: AxisRange<T>,
    pub translation_radius: T,
    pub translation_step: T,
    pub pyramid_levels: usize,
    /// Extra full-resolution rounds after the finest level, each halving the
    /// steps again. Results then fall between the configured grid points.
    pub refine_rounds: usize,
}

impl<T: Real> Default for SearchSpace<T> {
    fn default() -> Self {
        Self {
            angle: AxisRange::new(T::lit(-10.0), T::lit(10.0), T::one()),
            scale: AxisRange::new(T::lit(0.9), T::lit(1.1), T::lit(0.02)),
            translation_radius: T::lit(20.0),
            translation_step: T::one(),
            pyramid_levels: 3,
            refine_rounds: 2,
        }
    }
}

impl<T: Real> SearchSpace<T> {
    pub fn validate(&self) -> Result<()> {
        self.angle.validate("angle")?;
        self.scale.validate("scale")?;
        if !(self.scale.min > T::zero()) {
            return Err(Error::InvalidArgument("scale range must be positive".into()));
        }
        if !(self.translation_radius >= T::zero()) || !(self.translation_step > T::zero()) {
            return Err(Error::InvalidArgument("translation radius >= 0 and step > 0 required".into()));
        }
        if self.pyramid_levels == 0 {
            return Err(Error::InvalidArgument("pyramid_levels must be at least 1".into()));
        }
        Ok(())
    }

    fn translation_range(&self) -> AxisRange<T> {
        AxisRange::new(-self.translation_radius, self.translation_radius, self.translation_step)
    }
}

/// Pearson correlation of two equally sized images.
pub fn ncc<T: Real>(a: &GrayImage<T>, b: &GrayImage<T>) -> Result<T> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch { expected: a.width() * a.height(), found: b.width() * b.height() });
    }
    let stats = CenteredStats::new(a.pixels()).ok_or(Error::ZeroVariance)?;
    stats.correlate(b.pixels()).ok_or(Error::ZeroVariance)
}

/// Mean-removed reference signal, reused across many correlations.
struct CenteredStats<T> {
    centered: Vec<T>,
    norm: T,
}

impl<T: Real> CenteredStats<T> {
    fn new(values: &[T]) -> Option<Self> {
        if is_constant(values) {
            return None;
        }
        let mean = values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len());
        let centered: Vec<T> = values.iter().map(|&v| v - mean).collect();
        let norm = centered.iter().map(|&v| v * v).sum::<T>().sqrt();
        (norm > T::zero()).then_some(Self { centered, norm })
    }

    fn correlate(&self, other: &[T]) -> Option<T> {
        // `centered` sums to zero, so the cross term needs no mean of `other`.
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        let mut cross = T::zero();
        for (&r, &v) in self.centered.iter().zip(other) {
            sum += v;
            sum_sq += v * v;
            cross += r * v;
        }
        let n = T::from_usize_lossy(other.len());
        let energy = sum_sq - sum * sum / n;
        // Cancellation leaves rounding residue for constant input.
        if !(energy > sum_sq * T::lit(1e-12)) {
            return None;
        }
        Some((cross / (self.norm * energy.sqrt())).max(-T::one()).min(T::one()))
    }
}

fn is_constant<T: Real>(values: &[T]) -> bool {
    values.split_first().is_none_or(|(first, rest)| rest.iter().all(|v| v == first))
}

/// Resamples `img` under `p` by inverse mapping with bilinear interpolation;
/// samples falling outside the source are 0.
pub fn warp<T: Real>(img: &GrayImage<T>, p: &RigidParams<T>) -> GrayImage<T> {
    let mut out = Vec::new();
    warp_into(img, p, &mut out);
    GrayImage::from_unclamped(img.width(), img.height(), out)
}

fn warp_into<T: Real>(img: &GrayImage<T>, p: &RigidParams<T>, out: &mut Vec<T>) {
    let (w, h) = (img.width(), img.height());
    out.clear();
    out.reserve(w * h);
    let half = T::lit(0.5);
    let cx = T::from_usize_lossy(w - 1) * half;
    let cy = T::from_usize_lossy(h - 1) * half;
    let (sin, cos) = p.angle.to_radians().sin_cos();
    let a = cos / p.scale;
    let b = sin / p.scale;
    let xmax = T::from_usize_lossy(w - 1);
    let ymax = T::from_usize_lossy(h - 1);
    let px = img.pixels();
    // Source coordinates are affine in x, so step them along each row.
    let x_origin = -cx - p.tx;
    for y in 0..h {
        let dy = T::from_usize_lossy(y) - cy - p.ty;
        let mut sx = cx + a * x_origin + b * dy;
        let mut sy = cy - b * x_origin + a * dy;
        for _ in 0..w {
            let (x_src, y_src) = (sx, sy);
            sx += a;
            sy -= b;
            if !(x_src >= T::zero() && y_src >= T::zero() && x_src <= xmax && y_src <= ymax) {
                out.push(T::zero());
                continue;
            }
            // non-negative, so truncation is floor
            let (x0, y0) = (x_src.as_f64() as usize, y_src.as_f64() as usize);
            let (fx, fy) = (x_src - T::from_usize_lossy(x0), y_src - T::from_usize_lossy(y0));
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let p00 = px[y0 * w + x0];
            let p10 = px[y0 * w + x1];
            let p01 = px[y1 * w + x0];
            let p11 = px[y1 * w + x1];
            let top = p00 + fx * (p10 - p00);
            let bottom = p01 + fx * (p11 - p01);
            out.push(top + fy * (bottom - top));
        }
    }
}

/// 2x box-filter downsampling; an odd trailing row or column is dropped.
pub fn downsample2<T: Real>(img: &GrayImage<T>) -> Result<GrayImage<T>> {
    let (w, h) = (img.width() / 2, img.height() / 2);
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument(format!("cannot downsample {}x{} image", img.width(), img.height())));
    }
    let quarter = T::lit(0.25);
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let s = img.get(2 * x, 2 * y)
                + img.get(2 * x + 1, 2 * y)
                + img.get(2 * x, 2 * y + 1)
                + img.get(2 * x + 1, 2 * y + 1);
            pixels.push(s * quarter);
        }
    }
    Ok(GrayImage::from_unclamped(w, h, pixels))
}

/// Incumbent after one pyramid level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelResult<T> {
    /// 0 is full resolution.
    pub level: usize,
    pub params: RigidParams<T>,
    /// Score at this level's resolution.
    pub level_score: T,
    /// Score of the incumbent evaluated at full resolution.
    pub full_score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration<T> {
    pub params: RigidParams<T>,
    pub score: T,
    /// Coarsest level first.
    pub levels: Vec<LevelResult<T>>,
}

/// Hill-climbing moves allowed per level.
const MAX_CLIMB: usize = 20;

struct Level<T> {
    fixed: CenteredStats<T>,
    moving: GrayImage<T>,
    factor: T,
}

impl<T: Real> Level<T> {
    fn score(&self, p: &RigidParams<T>, buf: &mut Vec<T>) -> Option<T> {
        let scaled = RigidParams { tx: p.tx / self.factor, ty: p.ty / self.factor, ..*p };
        warp_into(&self.moving, &scaled, buf);
        self.fixed.correlate(buf)
    }

    /// Best candidate by score; equal scores keep the lexicographically smallest.
    fn best(&self, candidates: &[RigidParams<T>], buf: &mut Vec<T>) -> Option<(RigidParams<T>, T)> {
        let mut best: Option<(RigidParams<T>, T)> = None;
        for c in candidates {
            let Some(s) = self.score(c, buf) else { continue };
            let better = match &best {
                None => true,
                Some((bp, bs)) => s > *bs || (s == *bs && lex_less(&c.key(), &bp.key())),
            };
            if better {
                best = Some((*c, s));
            }
        }
        best
    }
}

fn lex_less<T: Real>(a: &[T; 4], b: &[T; 4]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn cartesian<T: Real>(angles: &[T], scales: &[T], txs: &[T], tys: &[T]) -> Vec<RigidParams<T>> {
    let mut out = Vec::with_capacity(angles.len() * scales.len() * txs.len() * tys.len());
    for &angle in angles {
        for &scale in scales {
            for &tx in txs {
                for &ty in tys {
                    out.push(RigidParams { angle, scale, tx, ty });
                }
            }
        }
    }
    out
}

/// Finds the rigid parameters that best align `moving` onto `fixed`, i.e. maximize
/// `ncc(fixed, warp(moving, p))`.
///
/// The coarsest pyramid level scans the full lattice at `2^(levels-1)` times the
/// configured steps; each finer level halves the steps, scans two fine steps
/// either side of the incumbent and then hill-climbs one step at a time until
/// the best candidate stops moving. `refine_rounds` repeats that at full
/// resolution with ever smaller steps. An incumbent is only replaced when its
/// full-resolution score does not drop, and identity wins if it scores higher
/// than the search result.
pub fn rigid_register<T: Real>(
    fixed: &GrayImage<T>,
    moving: &GrayImage<T>,
    space: &SearchSpace<T>,
) -> Result<Registration<T>> {
    space.validate()?;
    if fixed.width() != moving.width() || fixed.height() != moving.height() {
        return Err(Error::DimensionMismatch {
            expected: fixed.width() * fixed.height(),
            found: moving.width() * moving.height(),
        });
    }

    let mut fixed_pyr = vec![fixed.clone()];
    let mut moving_pyr = vec![moving.clone()];
    for _ in 1..space.pyramid_levels {
        fixed_pyr.push(downsample2(fixed_pyr.last().expect("non-empty"))?);
        moving_pyr.push(downsample2(moving_pyr.last().expect("non-empty"))?);
    }
    let mut levels = Vec::with_capacity(space.pyramid_levels);
    for (l, (f, m)) in fixed_pyr.into_iter().zip(moving_pyr).enumerate() {
        let fixed = CenteredStats::new(f.pixels()).ok_or(Error::ZeroVariance)?;
        levels.push(Level { fixed, moving: m, factor: T::lit((1u64 << l) as f64) });
    }

    let trans = space.translation_range();
    let mut buf = Vec::new();
    let mut trace = Vec::with_capacity(levels.len() + space.refine_rounds);
    let mut incumbent: Option<(RigidParams<T>, T)> = None;
    let neighbourhood = |p: &RigidParams<T>, reach: i32, (sa, ss, st): (T, T, T)| {
        cartesian(
            &space.angle.around(p.angle, sa, reach),
            &space.scale.around(p.scale, ss, reach),
            &trans.around(p.tx, st, reach),
            &trans.around(p.ty, st, reach),
        )
    };

    // Pyramid levels, coarsest first, then refinement rounds at full resolution.
    // The pyramid's first local scan spans one coarse step; after a converged
    // round the optimum is within one of the new half steps.
    let rounds = (0..levels.len())
        .rev()
        .map(|l| (l, levels[l].factor, 2))
        .chain((1..=space.refine_rounds).map(|r| (0, T::lit(0.5f64.powi(r as i32)), 1)));
    for (l, mult, reach) in rounds {
        let steps = (space.angle.step * mult, space.scale.step * mult, space.translation_step * mult);
        let (best, level_score) = match &incumbent {
            None => {
                let candidates = cartesian(
                    &space.angle.lattice(T::zero(), steps.0),
                    &space.scale.lattice(T::one(), steps.1),
                    &trans.lattice(T::zero(), steps.2),
                    &trans.lattice(T::zero(), steps.2),
                );
                if candidates.is_empty() {
                    return Err(Error::InvalidArgument("search space is empty".into()));
                }
                levels[l].best(&candidates, &mut buf).ok_or(Error::ZeroVariance)?
            }
            Some((p, _)) => {
                // Scan around the incumbent, then hill-climb one step at a
                // time while the best candidate keeps moving.
                let mut current =
                    levels[l].best(&neighbourhood(p, reach, steps), &mut buf).ok_or(Error::ZeroVariance)?;
                for _ in 0..MAX_CLIMB {
                    let next =
                        levels[l].best(&neighbourhood(&current.0, 1, steps), &mut buf).ok_or(Error::ZeroVariance)?;
                    if next.0 == current.0 {
                        break;
                    }
                    current = next;
                }
                current
            }
        };
        let full = levels[0].score(&best, &mut buf).unwrap_or(T::neg_infinity());
        let keep_previous = matches!(&incumbent, Some((_, prev)) if full < *prev);
        if !keep_previous {
            incumbent = Some((best, full));
        }
        let (params, full_score) = incumbent.expect("set above");
        trace.push(LevelResult { level: l, params, level_score, full_score });
    }

    let (mut params, mut score) = incumbent.expect("at least one level");
    let identity = RigidParams::identity();
    if let Some(id_score) = levels[0].score(&identity, &mut buf) {
        if id_score > score {
            params = identity;
            score = id_score;
        }
    }
    Ok(Registration { params: RigidParams { angle: normalize_angle(params.angle), ..params }, score, levels: trace })
}
