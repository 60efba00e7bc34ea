//! Binary PGM (P5) reading and writing.

use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn load_pgm<T: Real>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// Writes a P5 file with maxval 255; each intensity is stored as `round_half_up(p * 255)`.
pub fn save_pgm<T: Real>(img: &GrayImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm<T: Real>(img: &GrayImage<T>) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    let scale = T::lit(255.0);
    out.extend(img.pixels().iter().map(|&p| {
        let q = (p * scale).round_half_up().as_f64();
        q.clamp(0.0, 255.0) as u8
    }));
    out
}

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader(format!("expected header field {}", i + 1)));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text.parse().map_err(|_| Error::MalformedHeader(format!("header field {text:?} out of range")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} not in 1..=65535")));
    }
    Ok(Header { width: width as usize, height: height as usize, maxval, data_offset: pos })
}

/// Decodes P5 bytes; 16-bit samples (maxval > 255) are big-endian.
pub fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<GrayImage<T>> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let bytes_per_sample = if h.maxval > 255 { 2 } else { 1 };
    let data = &bytes[h.data_offset..];
    let expected = n * bytes_per_sample;
    if data.len() < expected {
        return Err(Error::TruncatedData { expected, found: data.len() });
    }
    let maxval = T::lit(f64::from(h.maxval));
    let pixels = (0..n)
        .map(|i| {
            let raw = if bytes_per_sample == 1 {
                u32::from(data[i])
            } else {
                u32::from(u16::from_be_bytes([data[2 * i], data[2 * i + 1]]))
            };
            (T::lit(f64::from(raw)) / maxval).min(T::one())
        })
        .collect();
    GrayImage::new(h.width, h.height, pixels)
}
