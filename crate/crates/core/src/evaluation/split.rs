use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_frac: 0.70, val_frac: 0.15, test_frac: 0.15, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument(format!("split fractions must be positive, got {fracs:?}")));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("split fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes: floors for the first two, remainder to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // the nudge keeps 0.7 * 20 at 14 rather than 13.999...
        let train = (n as f64 * self.train_frac + 1e-9).floor() as usize;
        let val = (n as f64 * self.val_frac + 1e-9).floor() as usize;
        (train, val, n - train - val)
    }
}

/// Disjoint, covering index lists, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn parts(&self) -> [&[usize]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

/// Stratified shuffle split of `labels`.
///
/// Split sizes follow [`SplitSpec::sizes`]. Within a split the MA count is the
/// proportional share rounded half up and NORMAL takes the rest, so each class
/// is within one sample of its proportional share in every split.
pub fn split_dataset(labels: &[Label], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let n = labels.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 samples to split, got {n}")));
    }
    let mut by_class: Vec<Vec<usize>> =
        Label::ALL.iter().map(|&c| (0..n).filter(|&i| labels[i] == c).collect()).collect();
    for (c, idx) in Label::ALL.iter().zip(&by_class) {
        if idx.len() < 3 {
            return Err(Error::ClassStarvation { label: c.to_string(), count: idx.len(), needed: 3 });
        }
    }

    let (n_train, n_val, _) = spec.sizes(n);
    let n_ma = by_class[0].len();
    let share = |size: usize| ((n_ma * size) as f64 / n as f64 + 0.5 + 1e-9).floor() as usize;
    let ma_train = share(n_train).min(n_ma);
    let ma_val = share(n_val).min(n_ma - ma_train);
    let counts = [[ma_train, ma_val], [n_train - ma_train, n_val - ma_val]];

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = Split { seed: spec.seed, train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for ((idx, [tr, va]), c) in by_class.iter_mut().zip(counts).zip(Label::ALL) {
        if tr + va > idx.len() {
            return Err(Error::ClassStarvation { label: c.to_string(), count: idx.len(), needed: tr + va });
        }
        idx.shuffle(&mut rng);
        split.train.extend_from_slice(&idx[..tr]);
        split.val.extend_from_slice(&idx[tr..tr + va]);
        split.test.extend_from_slice(&idx[tr + va..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(ma: usize, normal: usize) -> Vec<Label> {
        let mut v = vec![Label::Ma; ma];
        v.extend(vec![Label::Normal; normal]);
        v
    }

    #[test]
    fn sizes_follow_floor_rule() {
        let s = SplitSpec::default();
        assert_eq!(s.sizes(202), (141, 30, 31));
        assert_eq!(s.sizes(20), (14, 3, 3));
    }

    #[test]
    fn split_is_disjoint_covering_and_stratified() {
        let ys = labels(92, 110);
        let s = split_dataset(&ys, &SplitSpec { seed: 3, ..SplitSpec::default() }).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (141, 30, 31));
        let mut all: Vec<usize> = s.parts().concat();
        all.sort_unstable();
        assert_eq!(all, (0..202).collect::<Vec<_>>());
        for part in s.parts() {
            let ma = part.iter().filter(|&&i| ys[i] == Label::Ma).count() as f64;
            let ideal = 92.0 * part.len() as f64 / 202.0;
            assert!((ma - ideal).abs() <= 1.0, "{ma} vs {ideal}");
        }
    }

    #[test]
    fn same_seed_same_split() {
        let ys = labels(10, 10);
        let spec = SplitSpec { seed: 9, ..SplitSpec::default() };
        assert_eq!(split_dataset(&ys, &spec).unwrap(), split_dataset(&ys, &spec).unwrap());
        let other = split_dataset(&ys, &SplitSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(split_dataset(&ys, &spec).unwrap(), other);
    }

    #[test]
    fn starved_class_is_rejected() {
        let r = split_dataset(&labels(2, 30), &SplitSpec::default());
        assert!(matches!(r, Err(Error::ClassStarvation { count: 2, .. })), "{r:?}");
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let spec = SplitSpec { train_frac: 0.8, ..SplitSpec::default() };
        assert!(split_dataset(&labels(5, 5), &spec).is_err());
    }
}
