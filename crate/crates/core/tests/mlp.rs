use bofscan_core::classifiers::{Classifier, MlpModel, TrainConfig};
use bofscan_core::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let xs = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys = (0..n).map(|_| if rng.random_bool(0.5) { Label::Ma } else { Label::Normal }).collect();
    (xs, ys)
}

/// Central differences of the loss, one parameter at a time.
fn numeric_gradient(model: &MlpModel<f64>, xs: &[Vec<f64>], ys: &[Label], h: f64) -> Vec<f64> {
    let count = model.clone().params_mut().len();
    (0..count)
        .map(|i| {
            let mut plus = model.clone();
            *plus.params_mut()[i] += h;
            let mut minus = model.clone();
            *minus.params_mut()[i] -= h;
            (plus.loss(xs, ys).unwrap() - minus.loss(xs, ys).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

fn full_batch(lr: f64, epochs: usize) -> TrainConfig {
    TrainConfig { learning_rate: lr, epochs, full_batch: true, seed: 0, early_stop_patience: 0 }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..25 {
        let d = rng.random_range(1..9);
        let hidden = rng.random_range(1..7);
        let n = rng.random_range(1..12);
        let mut model = MlpModel::<f64>::init(d, hidden, trial).unwrap();
        // Push weights away from the small init so the hidden units are not all linear.
        for p in model.params_mut() {
            *p *= rng.random_range(1.0..4.0);
        }
        let (xs, ys) = random_set(&mut rng, n, d);
        let analytic = model.gradient(&xs, &ys).unwrap().flatten();
        let numeric = numeric_gradient(&model, &xs, &ys, 1e-5);
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-6, "trial {trial}: relative error {err:e}");
    }
}

#[test]
fn learns_xor() {
    let xs = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let ys = vec![Label::Normal, Label::Ma, Label::Ma, Label::Normal];
    let model = MlpModel::<f64>::init(2, 10, 3).unwrap();
    let out = model.train(&xs, &ys, &[], &[], &full_batch(0.5, 20_000)).unwrap();
    assert_eq!(out.model.predict_all(&xs).unwrap(), ys);
    assert!(*out.train_loss.last().unwrap() < 0.05);
}

#[test]
fn small_learning_rate_descends_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (xs, ys) = random_set(&mut rng, 30, 5);
    let model = MlpModel::<f64>::init(5, 6, 1).unwrap();
    let out = model.train(&xs, &ys, &[], &[], &full_batch(1e-3, 300)).unwrap();
    assert_eq!(out.train_loss.len(), 300);
    assert!(out.train_loss.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn two_points_are_fit_exactly() {
    let xs = vec![vec![0.0], vec![1.0]];
    let ys = vec![Label::Normal, Label::Ma];
    let out = MlpModel::<f64>::init(1, 3, 9).unwrap().train(&xs, &ys, &[], &[], &full_batch(1.0, 5000)).unwrap();
    assert!(*out.train_loss.last().unwrap() < 0.01);
    assert_eq!(out.model.predict_all(&xs).unwrap(), ys);
}

#[test]
fn gradient_vanishes_at_a_fitted_model() {
    // Overlapping classes keep the minimum finite.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i) / 40.0 + rng.random_range(-0.3..0.3)]).collect();
    let ys: Vec<Label> = (0..40).map(|i| if (i + i / 3) % 2 == 0 { Label::Ma } else { Label::Normal }).collect();
    let model = MlpModel::<f64>::init(1, 2, 5).unwrap();
    let start = model.gradient(&xs, &ys).unwrap().norm();
    let out = model.train(&xs, &ys, &[], &[], &full_batch(0.5, 40_000)).unwrap();
    let end = out.model.gradient(&xs, &ys).unwrap().norm();
    assert!(end < 1e-3 && end < start, "gradient norm {start} -> {end}");
}
