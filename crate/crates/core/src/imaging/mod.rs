//! Grayscale rasters, integral images, ROI strips and the synthetic B-scan generator.

mod image;
mod integral;
mod pgm;
mod strip;
mod synth;

pub use image::GrayImage;
pub use integral::IntegralImage;
pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm};
pub use strip::{crop_to_band, extract_strip, strip_columns, Patch, DEFAULT_BAND_HEIGHT, DEFAULT_STRIP_WIDTH};
pub use synth::{synth_bscan, SynthAnnotation, LESION_RADIUS_MAX, LESION_RADIUS_MIN};
