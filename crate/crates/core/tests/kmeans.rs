use bofscan_core::vocabulary::{kmeanspp_seed, lloyd, KmeansConfig, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DIM: usize = 64;
const PER_BLOB: usize = 40;

/// Three unit-variance Gaussian blobs along orthogonal axes. Center spacing is
/// 10x the blob's rms radius (sqrt(DIM) per-axis deviations).
fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut truth = Vec::new();
    for b in 0..3 {
        for _ in 0..PER_BLOB {
            let mut p: Vec<f64> = (0..DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
            p[b] += 10.0 * (DIM as f64).sqrt() / std::f64::consts::SQRT_2;
            xs.push(p);
            truth.push(b);
        }
    }
    (xs, truth)
}

/// Same partition up to a relabelling of the clusters.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut map = [usize::MAX; 3];
    let mut used = [false; 3];
    for (&x, &y) in a.iter().zip(b) {
        if map[x] == usize::MAX {
            if used[y] {
                return false;
            }
            map[x] = y;
            used[y] = true;
        } else if map[x] != y {
            return false;
        }
    }
    true
}

fn non_increasing(history: &[f64]) -> bool {
    history.windows(2).all(|w| w[1] <= w[0])
}

#[test]
fn three_blobs_are_recovered() {
    let cfg = KmeansConfig { k: 3, max_iter: 100, tol: 1e-9 };
    let mut exact = 0;
    for seed in 0..100 {
        let (xs, truth) = blobs(1000 + seed);
        let (vocab, c) = Vocabulary::build(&xs, &cfg, seed).unwrap();
        assert_eq!(vocab.k(), 3);
        assert!(non_increasing(&c.history), "seed {seed}: {:?}", c.history);
        if same_partition(&c.assignments, &truth) {
            exact += 1;
        }
    }
    assert!(exact >= 95, "exact recoveries {exact}/100");
}

#[test]
fn wcss_never_increases_from_poor_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..30 {
        let n = rng.random_range(20..200);
        let d = rng.random_range(1..10);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let k = rng.random_range(2..8);
        // Deliberately clumped start: the first k points, nudged.
        let init: Vec<Vec<f64>> = (0..k).map(|i| xs[0].iter().map(|v| v + i as f64 * 1e-3).collect()).collect();
        let c = lloyd(&xs, init, 500, 0.0).unwrap();
        assert!(non_increasing(&c.history), "trial {trial}: {:?}", c.history);
        let seeded = kmeanspp_seed(&xs, k, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
        let c = lloyd(&xs, seeded, 500, 0.0).unwrap();
        assert!(non_increasing(&c.history), "trial {trial}: {:?}", c.history);
    }
}

#[test]
fn final_wcss_matches_direct_sum() {
    let (xs, _) = blobs(9);
    let (_, c) = Vocabulary::build(&xs, &KmeansConfig { k: 3, max_iter: 100, tol: 1e-9 }, 4).unwrap();
    let direct: f64 = xs
        .iter()
        .zip(&c.assignments)
        .map(|(x, &a)| x.iter().zip(&c.centers[a]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
        .sum();
    assert!((direct - c.wcss).abs() <= 1e-9 * direct);
}
