//! IDX container codec (the MNIST file format).
//!
//! Layout, all integers big-endian:
//!
//! ```text
//! images: 0x00000803 | count u32 | rows u32 | cols u32 | count·rows·cols u8
//! labels: 0x00000801 | count u32 | count u8
//! ```
//!
//! Parsing is strict: trailing bytes are an error just like missing ones.

use alloc::vec::Vec;

use crate::error::{Error, ParseErrorKind, Result};
use crate::tensor::Tensor;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw pixel payload of an image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn parse_err(offset: usize, kind: ParseErrorKind) -> Error {
    Error::Parse { offset, kind }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| parse_err(bytes.len(), ParseErrorKind::TruncatedHeader))
}

fn read_header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(parse_err(0, ParseErrorKind::UnexpectedMagic { expected: magic, found }));
    }
    (0..dims)
        .map(|d| {
            let offset = 4 + 4 * d;
            let v = read_u32(bytes, offset)? as usize;
            if v == 0 {
                Err(parse_err(offset, ParseErrorKind::ZeroDimension))
            } else {
                Ok(v)
            }
        })
        .collect()
}

fn payload(bytes: &[u8], header_len: usize, expected: usize) -> Result<&[u8]> {
    let found = bytes.len() - header_len;
    if found != expected {
        let offset = header_len + found.min(expected);
        return Err(parse_err(offset, ParseErrorKind::PayloadLength { expected, found }));
    }
    Ok(&bytes[header_len..])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let dims = read_header(bytes, IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let len = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| {
            parse_err(
                4,
                ParseErrorKind::PayloadLength {
                    expected: usize::MAX,
                    found: bytes.len(),
                },
            )
        })?;
    let pixels = payload(bytes, 16, len)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let dims = read_header(bytes, LABELS_MAGIC, 1)?;
    Ok(payload(bytes, 8, dims[0])?.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IMAGES_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Maps a byte to `byte / 255`.
pub fn normalize_pixel(byte: u8) -> f64 {
    byte as f64 / 255.0
}

/// Scales raw pixels into `[0, 1]`, shaped `[count, 1, rows, cols]`.
pub fn normalize(images: &IdxImages) -> Result<Tensor> {
    Tensor::new(
        &[images.count, 1, images.rows, images.cols],
        images.pixels.iter().copied().map(normalize_pixel).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> IdxImages {
        IdxImages {
            count: 2,
            rows: 3,
            cols: 2,
            pixels: (0..12).map(|v| (v * 21) as u8).collect(),
        }
    }

    #[test]
    fn roundtrip() {
        let img = fixture();
        assert_eq!(parse_idx_images(&encode_idx_images(&img)).unwrap(), img);
        let labels = [7u8, 2, 1, 0];
        assert_eq!(parse_idx_labels(&encode_idx_labels(&labels)).unwrap(), labels);
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode_idx_images(&fixture());
        bytes[3] = 0x02;
        let err = parse_idx_images(&bytes).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                offset: 0,
                kind: ParseErrorKind::UnexpectedMagic {
                    expected: IMAGES_MAGIC,
                    found: 0x0000_0802
                }
            }
        );
        assert!(alloc::format!("{err}").contains("unexpected magic"));
        // a label file is not an image file
        assert!(parse_idx_images(&encode_idx_labels(&[1, 2])).is_err());
    }

    #[test]
    fn truncated_and_trailing() {
        let bytes = encode_idx_images(&fixture());
        assert!(matches!(
            parse_idx_images(&bytes[..10]),
            Err(Error::Parse {
                kind: ParseErrorKind::TruncatedHeader,
                ..
            })
        ));
        assert!(matches!(
            parse_idx_images(&bytes[..bytes.len() - 1]),
            Err(Error::Parse {
                offset: 27,
                kind: ParseErrorKind::PayloadLength {
                    expected: 12,
                    found: 11
                }
            })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(parse_idx_images(&long).is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_pixel(0), 0.0);
        assert_eq!(normalize_pixel(255), 1.0);
        assert!((normalize_pixel(128) - 0.501_960_784_313_725_5).abs() < 1e-15);
        let t = normalize(&fixture()).unwrap();
        assert_eq!(t.shape(), &[2, 1, 3, 2]);
        assert!(t.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
