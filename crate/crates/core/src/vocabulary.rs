//! Visual vocabulary: k-means++ seeding, Lloyd refinement and term-vector encoding.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::scalar::{squared_distance, Real};

pub const DEFAULT_K: usize = 100;

/// Source of uniform draws in `[0, 1)`. Any `rand` generator qualifies; tests
/// can script the sequence.
pub trait UniformSource {
    fn next_unit(&mut self) -> f64;
}

impl<R: RngCore> UniformSource for R {
    fn next_unit(&mut self) -> f64 {
        self.random::<f64>()
    }
}

/// Indices of the k-means++ seeds: the first uniformly, each next one with
/// probability proportional to its squared distance to the nearest chosen seed.
pub fn kmeanspp_indices<T: Real, P: AsRef<[T]>>(
    data: &[P],
    k: usize,
    rng: &mut impl UniformSource,
) -> Result<Vec<usize>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("k-means++ data"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = data.len();
    let first = ((rng.next_unit() * n as f64) as usize).min(n - 1);
    let mut chosen = vec![first];
    let mut d2: Vec<T> = data.iter().map(|p| squared_distance(p.as_ref(), data[first].as_ref())).collect();

    while chosen.len() < k {
        let total: T = d2.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::TooFewDistinct { needed: k, found: chosen.len() });
        }
        let target = T::lit(rng.next_unit()) * total;
        let mut cum = T::zero();
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > T::zero() {
                cum += w;
                pick = Some(i);
                if cum > target {
                    break;
                }
            }
        }
        let next = pick.expect("positive total has a positive weight");
        chosen.push(next);
        let c = data[next].as_ref();
        for (w, p) in d2.iter_mut().zip(data) {
            let d = squared_distance(p.as_ref(), c);
            if d < *w {
                *w = d;
            }
        }
    }
    Ok(chosen)
}

pub fn kmeanspp_seed<T: Real, P: AsRef<[T]>>(
    data: &[P],
    k: usize,
    rng: &mut impl UniformSource,
) -> Result<Vec<Vec<T>>> {
    Ok(kmeanspp_indices(data, k, rng)?.into_iter().map(|i| data[i].as_ref().to_vec()).collect())
}

/// Index and squared distance of the closest center; ties go to the lowest index.
pub fn nearest<T: Real, C: AsRef<[T]>>(centers: &[C], x: &[T]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (i, c) in centers.iter().enumerate() {
        let mut d = T::zero();
        let mut pruned = false;
        for (&a, &b) in c.as_ref().iter().zip(x) {
            let diff = a - b;
            d += diff * diff;
            if d > best.1 {
                pruned = true;
                break;
            }
        }
        if !pruned && d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<T> {
    pub centers: Vec<Vec<T>>,
    pub assignments: Vec<usize>,
    pub wcss: T,
    /// WCSS after each iteration.
    pub history: Vec<T>,
    pub converged: bool,
}

impl<T: Real> Clustering<T> {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

/// Lloyd iterations from `centers` until the WCSS improvement drops below `tol`
/// or `max_iter` is reached. Empty clusters are reseeded to the point farthest
/// from its own center.
pub fn lloyd<T: Real, P: AsRef<[T]>>(
    data: &[P],
    centers: Vec<Vec<T>>,
    max_iter: usize,
    tol: T,
) -> Result<Clustering<T>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("Lloyd data"));
    }
    if centers.is_empty() {
        return Err(Error::EmptyInput("Lloyd initial centers"));
    }
    if max_iter == 0 || !(tol >= T::zero()) {
        return Err(Error::InvalidArgument("max_iter >= 1 and tol >= 0 required".into()));
    }
    let dim = centers[0].len();
    if let Some(bad) = centers.iter().map(Vec::len).chain(data.iter().map(|p| p.as_ref().len())).find(|&l| l != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad });
    }
    let k = centers.len();
    let mut centers = centers;
    let mut assignments = vec![0usize; data.len()];
    let mut history = Vec::new();
    let mut prev = T::infinity();
    let mut converged = false;

    for iter in 0..max_iter {
        let mut assign_cost = T::zero();
        for (a, p) in assignments.iter_mut().zip(data) {
            let (i, d) = nearest(&centers, p.as_ref());
            *a = i;
            assign_cost += d;
        }
        if iter == 0 {
            prev = assign_cost;
        }

        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(data) {
            counts[a] += 1;
            for (s, &v) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for ((c, s), &n) in centers.iter_mut().zip(&sums).zip(&counts) {
            if n > 0 {
                let inv = T::from_usize_lossy(n);
                for (cv, &sv) in c.iter_mut().zip(s) {
                    *cv = sv / inv;
                }
            }
        }
        let mut used = Vec::new();
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = data
                .iter()
                .enumerate()
                .filter(|(i, _)| !used.contains(i))
                .map(|(i, p)| (i, squared_distance(p.as_ref(), &centers[assignments[i]])))
                .fold(None, |best: Option<(usize, T)>, (i, d)| match best {
                    Some((_, bd)) if d <= bd => best,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                used.push(i);
                centers[j] = data[i].as_ref().to_vec();
            }
        }

        let wcss: T = assignments.iter().zip(data).map(|(&a, p)| squared_distance(p.as_ref(), &centers[a])).sum();
        debug_assert!(wcss <= prev, "WCSS increased: {prev} -> {wcss}");
        history.push(wcss);
        let improvement = prev - wcss;
        prev = wcss;
        if improvement < tol {
            converged = true;
            break;
        }
    }

    let wcss = *history.last().expect("at least one iteration");
    Ok(Clustering { centers, assignments, wcss, history, converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self { k: DEFAULT_K, max_iter: 300, tol: 1e-6 }
    }
}

/// K cluster centers in descriptor space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile<T>", into = "VocabularyFile<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Vocabulary<T: Real> {
    centers: Vec<Vec<T>>,
    seed: u64,
    wcss: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct VocabularyFile<T: Real> {
    k: usize,
    seed: u64,
    wcss: T,
    centers: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<VocabularyFile<T>> for Vocabulary<T> {
    type Error = Error;

    fn try_from(f: VocabularyFile<T>) -> Result<Self> {
        if f.k != f.centers.len() {
            return Err(Error::DimensionMismatch { expected: f.k, found: f.centers.len() });
        }
        Vocabulary::new(f.centers, f.seed, f.wcss)
    }
}

impl<T: Real> From<Vocabulary<T>> for VocabularyFile<T> {
    fn from(v: Vocabulary<T>) -> Self {
        VocabularyFile { k: v.centers.len(), seed: v.seed, wcss: v.wcss, centers: v.centers }
    }
}

impl<T: Real> Vocabulary<T> {
    pub fn new(centers: Vec<Vec<T>>, seed: u64, wcss: T) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::InvalidArgument(format!("vocabulary needs K >= 2, got {}", centers.len())));
        }
        let dim = centers[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional centers".into()));
        }
        if let Some(c) = centers.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: c.len() });
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if squared_distance(&centers[i], &centers[j]) == T::zero() {
                    return Err(Error::InvalidArgument(format!("centers {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { centers, seed, wcss })
    }

    /// k-means++ seeding followed by Lloyd, all driven by `seed`.
    pub fn build<P: AsRef<[T]>>(data: &[P], cfg: &KmeansConfig, seed: u64) -> Result<(Self, Clustering<T>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = kmeanspp_seed(data, cfg.k, &mut rng)?;
        let clustering = lloyd(data, init, cfg.max_iter, T::lit(cfg.tol))?;
        let vocab = Self::new(clustering.centers.clone(), seed, clustering.wcss)?;
        Ok((vocab, clustering))
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn wcss(&self) -> T {
        self.wcss
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    pub fn nearest_center(&self, d: &[T]) -> Result<usize> {
        if d.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: d.len() });
        }
        Ok(nearest(&self.centers, d).0)
    }

    /// Histogram of nearest-center assignments, normalized to sum 1.
    pub fn encode<P: AsRef<[T]>>(&self, descriptors: &[P]) -> Result<TermVector<T>> {
        if descriptors.is_empty() {
            return Err(Error::EmptyInput("descriptor list"));
        }
        let mut raw = vec![0u64; self.k()];
        for d in descriptors {
            raw[self.nearest_center(d.as_ref())?] += 1;
        }
        Ok(TermVector::from_counts(raw))
    }
}

/// Normalized visual-word histogram of one patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermVector<T> {
    pub bins: Vec<T>,
    pub raw_counts: Vec<u64>,
}

impl<T: Real> TermVector<T> {
    pub fn from_counts(raw_counts: Vec<u64>) -> Self {
        let total: u64 = raw_counts.iter().sum();
        let bins = if total == 0 {
            vec![T::zero(); raw_counts.len()]
        } else {
            let t = T::lit(total as f64);
            raw_counts.iter().map(|&c| T::lit(c as f64) / t).collect()
        };
        Self { bins, raw_counts }
    }

    pub fn k(&self) -> usize {
        self.bins.len()
    }
}

/// Per-class elementwise sums of raw visual-word counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassOccurrence {
    pub ma: Vec<u64>,
    pub normal: Vec<u64>,
}

impl ClassOccurrence {
    pub fn of(&self, label: Label) -> &[u64] {
        match label {
            Label::Ma => &self.ma,
            Label::Normal => &self.normal,
        }
    }
}

pub fn class_occurrence_sum<T: Real>(term_vectors: &[TermVector<T>], labels: &[Label]) -> Result<ClassOccurrence> {
    if term_vectors.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: term_vectors.len(), found: labels.len() });
    }
    let k = term_vectors.first().map_or(0, TermVector::k);
    let mut out = ClassOccurrence { ma: vec![0; k], normal: vec![0; k] };
    for (tv, &label) in term_vectors.iter().zip(labels) {
        if tv.raw_counts.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: tv.raw_counts.len() });
        }
        let totals = match label {
            Label::Ma => &mut out.ma,
            Label::Normal => &mut out.normal,
        };
        for (t, &c) in totals.iter_mut().zip(&tv.raw_counts) {
            *t += c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scripted(Vec<f64>);

    impl UniformSource for Scripted {
        fn next_unit(&mut self) -> f64 {
            self.0.remove(0)
        }
    }

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn scripted_d2_sampling() {
        // D^2 from 0: {0, 1, 100}; u = 0.5 -> target 50.5 -> third point.
        let data = pts(&[0.0, 1.0, 10.0]);
        let idx = kmeanspp_indices(&data, 2, &mut Scripted(vec![0.0, 0.5])).unwrap();
        assert_eq!(idx, vec![0, 2]);
        // u just below 1/101 selects the near point
        let idx = kmeanspp_indices(&data, 2, &mut Scripted(vec![0.0, 0.5 / 101.0])).unwrap();
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn duplicates_never_rechosen() {
        for k in 2..=4 {
            for m in 1..=3 {
                let distinct: Vec<f64> = (0..k).map(|i| (i * i) as f64 + 0.5).collect();
                let data: Vec<Vec<f64>> = distinct.iter().flat_map(|&x| std::iter::repeat_n(vec![x, -x], m)).collect();
                for seed in 0..10 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut got: Vec<f64> = kmeanspp_seed(&data, k, &mut rng).unwrap().iter().map(|c| c[0]).collect();
                    got.sort_by(f64::total_cmp);
                    assert_eq!(got, distinct);
                }
            }
        }
    }

    #[test]
    fn too_few_distinct() {
        let data = pts(&[1.0, 1.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(kmeanspp_seed(&data, 3, &mut rng), Err(Error::TooFewDistinct { needed: 3, found: 2 })));
        assert!(kmeanspp_seed::<f64, Vec<f64>>(&[], 1, &mut rng).is_err());
    }

    #[test]
    fn all_points_when_k_equals_n() {
        let data = pts(&[3.0, -1.0, 7.0, 2.0]);
        let mut idx = kmeanspp_indices(&data, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lloyd_one_dimensional_oracle() {
        let data = pts(&[0.0, 1.0, 9.0, 10.0]);
        let c = lloyd(&data, pts(&[0.0, 10.0]), 300, 1e-6).unwrap();
        assert_eq!(c.centers, pts(&[0.5, 9.5]));
        assert_eq!(c.wcss, 1.0);
        assert!(c.converged);
        assert_eq!(c.assignments, vec![0, 0, 1, 1]);
    }

    #[test]
    fn lloyd_on_its_own_points() {
        let data = pts(&[0.0, 4.0, 9.0]);
        let c = lloyd(&data, data.clone(), 300, 1e-6).unwrap();
        assert_eq!(c.wcss, 0.0);
        assert_eq!(c.iterations(), 1);
    }

    #[test]
    fn lloyd_reseeds_empty_cluster() {
        // second center starts far from all data and collects nothing
        let data = pts(&[0.0, 0.1, 5.0, 5.2]);
        let c = lloyd(&data, pts(&[2.5, 100.0]), 50, 0.0).unwrap();
        assert!(c.history.windows(2).all(|w| w[1] <= w[0]));
        let mut centers: Vec<f64> = c.centers.iter().map(|v| v[0]).collect();
        centers.sort_by(f64::total_cmp);
        assert!((centers[0] - 0.05).abs() < 1e-12 && (centers[1] - 5.1).abs() < 1e-12, "{centers:?}");
    }

    #[test]
    fn lloyd_errors() {
        assert!(matches!(lloyd::<f64, Vec<f64>>(&[], pts(&[0.0]), 10, 0.0), Err(Error::EmptyInput(_))));
        assert!(lloyd(&pts(&[1.0]), pts(&[0.0]), 0, 0.0).is_err());
        assert!(lloyd(&[vec![1.0, 2.0]], pts(&[0.0]), 5, 0.0).is_err());
    }

    fn vocab4() -> Vocabulary<f64> {
        Vocabulary::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 5.0], vec![3.0, 0.0]], 9, 0.0).unwrap()
    }

    #[test]
    fn nearest_center_ties_and_matches() {
        let v = vocab4();
        assert_eq!(v.nearest_center(&[0.0, 5.0]).unwrap(), 2);
        // equidistant from centers 1 and 3
        assert_eq!(v.nearest_center(&[2.0, 0.0]).unwrap(), 1);
        assert!(v.nearest_center(&[1.0]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = [rng.random_range(-2.0..6.0), rng.random_range(-2.0..6.0)];
            let brute = (0..4)
                .map(|i| (i, squared_distance(&v.centers()[i], &x)))
                .fold((0, f64::INFINITY), |b, (i, d)| if d < b.1 { (i, d) } else { b });
            assert_eq!(v.nearest_center(&x).unwrap(), brute.0);
        }
    }

    #[test]
    fn encode_counts() {
        let v = vocab4();
        let all_two = vec![vec![0.1, 4.9]; 64];
        let tv = v.encode(&all_two).unwrap();
        assert_eq!(tv.raw_counts, vec![0, 0, 64, 0]);
        assert_eq!(tv.bins, vec![0.0, 0.0, 1.0, 0.0]);
        let tv = v.encode(&[vec![0.0, 0.1], vec![1.1, 0.0], vec![0.9, 0.2]]).unwrap();
        assert_eq!(tv.raw_counts, vec![1, 2, 0, 0]);
        assert!((tv.bins[0] - 1.0 / 3.0).abs() < 1e-15 && (tv.bins[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(v.encode::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn occurrence_sums() {
        let tvs: Vec<TermVector<f64>> = vec![TermVector::from_counts(vec![1, 0]), TermVector::from_counts(vec![0, 2])];
        let occ = class_occurrence_sum(&tvs, &[Label::Ma, Label::Ma]).unwrap();
        assert_eq!(occ.ma, vec![1, 2]);
        assert_eq!(occ.normal, vec![0, 0]);
        assert!(class_occurrence_sum(&tvs, &[Label::Ma]).is_err());
    }

    #[test]
    fn vocabulary_validation_and_json() {
        assert!(Vocabulary::new(vec![vec![1.0]], 0, 0.0).is_err());
        assert!(Vocabulary::new(vec![vec![1.0], vec![1.0]], 0, 0.0).is_err());
        let v = vocab4();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["k"], 4);
        assert_eq!(json["seed"], 9);
        assert_eq!(json["centers"][2][1], 5.0);
        let back: Vocabulary<f64> = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(back, v);
        let mut bad = json;
        bad["k"] = 3.into();
        assert!(serde_json::from_value::<Vocabulary<f64>>(bad).is_err());
    }
}
