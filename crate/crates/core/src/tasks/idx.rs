//! IDX container reader (the MNIST distribution format).
//!
//! Both files are big-endian. Images: magic `0x00000803`, then `u32` count,
//! rows and cols, then `count·rows·cols` unsigned pixel bytes. Labels: magic
//! `0x00000801`, `u32` count, then `count` label bytes. Paths ending in `.gz`
//! are gunzipped first.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::tasks::datasets::LabeledDataset;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// One vector per image, pixels scaled to `[0, 1]`.
    pub images: Vec<Vec<f64>>,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    let chunk = bytes.get(offset..end).ok_or(Error::Length {
        needed: end,
        available: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Format(format!(
            "{what}: magic 0x{magic:08x}, expected 0x{expected:08x}"
        )));
    }
    Ok(())
}

fn payload(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8]> {
    let needed = offset
        .checked_add(len)
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    bytes.get(offset..needed).ok_or(Error::Length {
        needed,
        available: bytes.len(),
    })
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGE_MAGIC, "image file")?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let size = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let total = count
        .checked_mul(size)
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let pixels = payload(bytes, 16, total)?;
    let images = if size == 0 {
        vec![Vec::new(); count]
    } else {
        pixels
            .chunks(size)
            .map(|c| c.iter().map(|&p| p as f64 / 255.0).collect())
            .collect()
    };
    Ok(IdxImages { rows, cols, images })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, "label file")?;
    let count = read_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Loads an image/label file pair into a dataset.
pub fn load_idx(images: &Path, labels: &Path) -> Result<LabeledDataset> {
    let imgs = parse_idx_images(&read_maybe_gz(images)?)?;
    let labs = parse_idx_labels(&read_maybe_gz(labels)?)?;
    if imgs.images.len() != labs.len() {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            imgs.images.len(),
            labs.len()
        )));
    }
    LabeledDataset::new(imgs.images, labs.into_iter().map(usize::from).collect())
}

pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len() * rows * cols);
    for v in [IMAGE_MAGIC, pixels.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in pixels {
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes `bytes`, gzip-compressed when `path` ends in `.gz`.
pub fn write_idx_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(fs::File::create(path)?, Compression::default());
        enc.write_all(bytes)?;
        enc.finish()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_defines_shape() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        bytes.extend([0, 255, 51, 102, 255, 255, 0, 0]);
        let imgs = parse_idx_images(&bytes).unwrap();
        assert_eq!((imgs.rows, imgs.cols, imgs.images.len()), (2, 2, 2));
        assert_eq!(imgs.images[0], vec![0.0, 1.0, 0.2, 0.4]);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let labels = encode_idx_labels(&[1, 2]);
        assert!(matches!(parse_idx_images(&labels), Err(Error::Format(_))));
        let images = encode_idx_images(1, 1, &[vec![3]]);
        assert!(matches!(parse_idx_labels(&images), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_is_length_error() {
        let full = encode_idx_images(2, 2, &[vec![1, 2, 3, 4]]);
        for cut in [0, 3, 10, full.len() - 1] {
            assert!(
                matches!(parse_idx_images(&full[..cut]), Err(Error::Length { .. })),
                "cut at {cut}"
            );
        }
        let labels = encode_idx_labels(&[1, 2, 3]);
        assert!(matches!(parse_idx_labels(&labels[..9]), Err(Error::Length { .. })));
    }
}
