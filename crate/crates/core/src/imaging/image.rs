use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

impl<T: Real> GrayImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!("{} pixels for a {width}x{height} image", pixels.len())));
        }
        if let Some(i) = pixels.iter().position(|&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::InvalidImage(format!("pixel {i} = {} outside [0, 1]", pixels[i])));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, T::zero())
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Builds an image from rows of equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::InvalidImage("ragged rows".into()));
        }
        let pixels = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(width, height, pixels)
    }

    /// Clamps every value into `[0, 1]` (NaN becomes 0). Used by generators and warps.
    pub(crate) fn from_unclamped(width: usize, height: usize, mut pixels: Vec<T>) -> Self {
        for p in &mut pixels {
            *p = if p.is_nan() { T::zero() } else { p.max(T::zero()).min(T::one()) };
        }
        debug_assert_eq!(pixels.len(), width * height);
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn sum(&self) -> T {
        self.pixels.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize_lossy(self.pixels.len())
    }

    pub fn transpose(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for x in 0..self.width {
            for y in 0..self.height {
                pixels.push(self.get(x, y));
            }
        }
        Self { width: self.height, height: self.width, pixels }
    }

    /// Copies the inclusive column range `x0..=x1` and row range `y0..=y1`.
    pub fn sub_image(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 > x1 || y0 > y1 || x1 >= self.width || y1 >= self.height {
            return Err(Error::OutOfBounds(format!(
                "sub-image ({x0},{y0})-({x1},{y1}) of {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity((x1 - x0 + 1) * (y1 - y0 + 1));
        for y in y0..=y1 {
            pixels.extend_from_slice(&self.row(y)[x0..=x1]);
        }
        Ok(Self { width: x1 - x0 + 1, height: y1 - y0 + 1, pixels })
    }

    /// Pads every side by `pad` pixels, replicating the nearest edge pixel.
    pub fn pad_replicate(&self, pad: usize) -> Self {
        let width = self.width + 2 * pad;
        let height = self.height + 2 * pad;
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y.saturating_sub(pad).min(self.height - 1);
            for x in 0..width {
                let sx = x.saturating_sub(pad).min(self.width - 1);
                pixels.push(self.get(sx, sy));
            }
        }
        Self { width, height, pixels }
    }

    pub fn cast<U: Real>(&self) -> GrayImage<U> {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| U::lit(p.as_f64()).max(U::zero()).min(U::one())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_bad_length() {
        assert!(GrayImage::<f64>::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::<f64>::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::<f64>::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::<f64>::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn pad_replicates_edges() {
        let img = GrayImage::from_rows(&[[0.1, 0.2], [0.3, 0.4]]).unwrap();
        let p = img.pad_replicate(1);
        assert_eq!((p.width(), p.height()), (4, 4));
        assert_eq!(p.row(0), &[0.1, 0.1, 0.2, 0.2]);
        assert_eq!(p.row(3), &[0.3, 0.3, 0.4, 0.4]);
    }

    #[test]
    fn transpose_swaps_axes() {
        let img = GrayImage::from_rows(&[[0.1, 0.2, 0.3]]).unwrap();
        let t = img.transpose();
        assert_eq!((t.width(), t.height()), (1, 3));
        assert_eq!(t.get(0, 2), 0.3);
    }
}
