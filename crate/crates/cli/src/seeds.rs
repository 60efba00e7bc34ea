//! Per-stage seeds derived from one master seed.

/// Pipeline stages that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth = 1,
    Split = 2,
    Vocab = 3,
    MlpInit = 4,
    MlpTrain = 5,
    Svm = 6,
    Register = 7,
}

/// The splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// `splitmix64(master + stage * golden)`: the stage-th splitmix64 draw from a
/// generator seeded with `master`.
pub fn derive_seed(master: u64, stage: Stage) -> u64 {
    derive_indexed(master, stage as u64)
}

/// Same derivation with an arbitrary index, used for per-item seeds.
pub fn derive_indexed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(index.wrapping_mul(GOLDEN)))
}
