//! Bag-of-features classification of retinal B-scan patches.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file pin the common concrete instantiations.

pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod imaging;
pub mod label;
pub mod registration;
pub mod scalar;
pub mod vocabulary;

pub use error::{Error, Result};
pub use label::Label;
pub use scalar::Real;

pub type GrayImageF64 = imaging::GrayImage<f64>;
pub type GrayImageF32 = imaging::GrayImage<f32>;
pub type IntegralImageF64 = imaging::IntegralImage<f64>;
pub type PatchF64 = imaging::Patch<f64>;
pub type DescriptorF64 = features::Descriptor<f64>;
pub type VocabularyF64 = vocabulary::Vocabulary<f64>;
pub type TermVectorF64 = vocabulary::TermVector<f64>;
pub type MlpModelF64 = classifiers::MlpModel<f64>;
pub type PcaModelF64 = classifiers::PcaModel<f64>;
pub type SavedModelF64 = classifiers::SavedModel<f64>;
pub type RigidParamsF64 = registration::RigidParams<f64>;
