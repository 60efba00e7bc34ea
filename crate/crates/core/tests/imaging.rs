use bofscan_core::imaging::{crop_to_band, decode_pgm, encode_pgm, extract_strip, synth_bscan, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn band_crop_keeps_most_of_the_strip_mass() {
    for seed in 0..20 {
        let (scan, ann) = synth_bscan::<f64>(seed, 2, 768, 496).unwrap();
        let centers: Vec<usize> = ann.lesion_centers.iter().map(|&(x, _)| x).chain([200, 400, 600]).collect();
        for cx in centers {
            let strip = extract_strip(&scan, cx, 30).unwrap();
            let patch = crop_to_band(&strip, 170).unwrap();
            assert_eq!((patch.width(), patch.height()), (30, 170));
            let kept = patch.sum() / strip.sum();
            assert!(kept >= 0.9, "seed {seed} x {cx}: kept {kept}");
        }
    }
}

#[test]
fn pgm_round_trip_matches_quantized_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let img = GrayImage::from_fn(37, 23, |_, _| rng.random::<f64>()).unwrap();
    let back: GrayImage<f64> = decode_pgm(&encode_pgm(&img)).unwrap();
    for (a, b) in img.pixels().iter().zip(back.pixels()) {
        let q = (a * 255.0 + 0.5).floor() / 255.0;
        assert!((q - b).abs() < 1e-12);
    }
}
