use super::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Summed-area table: `sum(x, y)` is the total over the inclusive rectangle `(0,0)..(x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage<T> {
    width: usize,
    height: usize,
    sums: Vec<T>,
}

impl<T: Real> IntegralImage<T> {
    /// Single pass: running row sum plus the cell above.
    pub fn new(img: &GrayImage<T>) -> Self {
        let (width, height) = (img.width(), img.height());
        let mut sums = vec![T::zero(); width * height];
        for y in 0..height {
            let mut row_sum = T::zero();
            for x in 0..width {
                row_sum += img.get(x, y);
                let above = if y > 0 { sums[(y - 1) * width + x] } else { T::zero() };
                sums[y * width + x] = row_sum + above;
            }
        }
        Self { width, height, sums }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn sum(&self, x: usize, y: usize) -> T {
        self.sums[y * self.width + x]
    }

    pub fn total(&self) -> T {
        self.sums[self.sums.len() - 1]
    }

    /// Sum over the inclusive rectangle `(x0,y0)..(x1,y1)` from four lookups.
    pub fn box_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<T> {
        if x0 > x1 || y0 > y1 || x1 >= self.width || y1 >= self.height {
            return Err(Error::OutOfBounds(format!(
                "rectangle ({x0},{y0})-({x1},{y1}) in {}x{} integral image",
                self.width, self.height
            )));
        }
        Ok(self.box_sum_unchecked(x0, y0, x1, y1))
    }

    #[inline]
    pub(crate) fn box_sum_unchecked(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> T {
        let d = self.sum(x1, y1);
        let b = if y0 > 0 { self.sum(x1, y0 - 1) } else { T::zero() };
        let c = if x0 > 0 { self.sum(x0 - 1, y1) } else { T::zero() };
        let a = if x0 > 0 && y0 > 0 { self.sum(x0 - 1, y0 - 1) } else { T::zero() };
        d - b - c + a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_sum(img: &GrayImage<f64>, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let mut s = 0.0;
        for y in y0..=y1 {
            for x in x0..=x1 {
                s += img.get(x, y);
            }
        }
        s
    }

    fn quarter_image() -> GrayImage<f64> {
        // [[1,2],[3,4]] scaled into [0,1]; sums are compared after rescaling.
        GrayImage::from_rows(&[[0.1, 0.2], [0.3, 0.4]]).unwrap()
    }

    #[test]
    fn small_table_matches_double_loop() {
        let img = quarter_image();
        let ii = IntegralImage::new(&img);
        let expected = [[1.0, 3.0], [4.0, 10.0]];
        for y in 0..2 {
            for x in 0..2 {
                assert!((ii.sum(x, y) * 10.0 - expected[y][x]).abs() < 1e-12);
                assert!((ii.sum(x, y) - direct_sum(&img, 0, 0, x, y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn box_sum_examples() {
        let ii = IntegralImage::new(&quarter_image());
        assert!((ii.box_sum(0, 0, 1, 1).unwrap() * 10.0 - 10.0).abs() < 1e-12);
        assert!((ii.box_sum(1, 1, 1, 1).unwrap() * 10.0 - 4.0).abs() < 1e-12);
        let zero = IntegralImage::new(&GrayImage::<f64>::zeros(5, 3).unwrap());
        assert_eq!(zero.box_sum(1, 0, 4, 2).unwrap(), 0.0);
        assert!(zero.sums.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn unit_row_gives_prefix_counts() {
        let img = GrayImage::<f64>::filled(7, 1, 1.0).unwrap();
        let ii = IntegralImage::new(&img);
        for x in 0..7 {
            assert_eq!(ii.sum(x, 0), (x + 1) as f64);
        }
    }

    #[test]
    fn out_of_bounds_rectangle_rejected() {
        let ii = IntegralImage::new(&quarter_image());
        assert!(matches!(ii.box_sum(0, 0, 2, 1), Err(Error::OutOfBounds(_))));
        assert!(ii.box_sum(1, 0, 0, 1).is_err());
    }

    fn image_strategy() -> impl Strategy<Value = GrayImage<f64>> {
        (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f64..=1.0, w * h).prop_map(move |px| GrayImage::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn box_sum_matches_direct_sum(img in image_strategy(), picks in proptest::collection::vec(any::<(u16, u16, u16, u16)>(), 16)) {
            let ii = IntegralImage::new(&img);
            for (a, b, c, d) in picks {
                let (xa, xb) = (a as usize % img.width(), b as usize % img.width());
                let (ya, yb) = (c as usize % img.height(), d as usize % img.height());
                let (x0, x1) = (xa.min(xb), xa.max(xb));
                let (y0, y1) = (ya.min(yb), ya.max(yb));
                let got = ii.box_sum(x0, y0, x1, y1).unwrap();
                prop_assert!((got - direct_sum(&img, x0, y0, x1, y1)).abs() < 1e-9);
            }
        }

        #[test]
        fn sums_monotone_and_total_exact(img in image_strategy()) {
            let ii = IntegralImage::new(&img);
            for y in 0..ii.height() {
                for x in 0..ii.width() {
                    if x > 0 { prop_assert!(ii.sum(x, y) >= ii.sum(x - 1, y)); }
                    if y > 0 { prop_assert!(ii.sum(x, y) >= ii.sum(x, y - 1)); }
                }
            }
            let total = img.sum();
            prop_assert!((ii.total() - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
