//! 8-bit grayscale images and binary PGM (P5) file I/O.
//!
//! The on-disk format is fixed to binary PGM with maxval 255. The writer
//! emits the exact header `P5\n<w> <h>\n255\n` followed by `w*h` raw bytes,
//! so saved files are bit-stable; the reader additionally tolerates
//! standard PNM whitespace and `#` comments in the header.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad PGM magic (expected P5)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255)")]
    BadMaxval(u32),
    #[error("truncated pixel data: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("invalid dimensions {width}x{height}")]
    BadDimensions { width: usize, height: usize },
}

/// An 8-bit grayscale raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Wraps row-major pixel data. `pixels.len()` must equal `width*height`
    /// and both dimensions must be positive.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImageError::BadDimensions { width, height });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage::from_pixels(width, height, vec![value; width * height])
            .expect("positive dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    /// Transposed copy (rows become columns).
    pub fn transposed(&self) -> GrayImage {
        let mut out = vec![0u8; self.pixels.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                out[c * self.height + r] = self.get(r, c);
            }
        }
        GrayImage {
            width: self.height,
            height: self.width,
            pixels: out,
        }
    }

    /// Content hash used to derive per-image embedding seeds; covers
    /// dimensions and every pixel, so it is stable under list reordering.
    pub fn content_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(16 + self.pixels.len());
        bytes.extend_from_slice(&(self.width as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.height as u64).to_le_bytes());
        bytes.extend_from_slice(&self.pixels);
        crate::prng::fnv1a64(&bytes)
    }
}

impl fmt::Display for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

/// Reads a binary PGM (P5, maxval 255) file.
pub fn load_image<P: AsRef<Path>>(path: P) -> Result<GrayImage, ImageError> {
    let data = fs::read(path)?;
    decode_pgm(&data)
}

/// Writes `img` as binary PGM with the exact header `P5\n<w> <h>\n255\n`.
pub fn save_image<P: AsRef<Path>>(img: &GrayImage, path: P) -> Result<(), ImageError> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    file.write_all(&encode_pgm(img))?;
    file.flush()?;
    Ok(())
}

/// Encodes an image to PGM bytes (same layout `save_image` writes).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + img.pixels.len());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}

/// Decodes PGM bytes produced by this crate or by standard tools
/// (whitespace and `#` comments in the header are accepted).
pub fn decode_pgm(data: &[u8]) -> Result<GrayImage, ImageError> {
    let mut cursor = 0usize;
    if data.len() < 2 || &data[0..2] != b"P5" {
        return Err(ImageError::BadMagic);
    }
    cursor += 2;

    let width = read_header_int(data, &mut cursor)?;
    let height = read_header_int(data, &mut cursor)?;
    let maxval = read_header_int(data, &mut cursor)?;
    if maxval != 255 {
        return Err(ImageError::BadMaxval(maxval as u32));
    }
    // Exactly one whitespace byte separates the header from pixel data.
    match data.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => {
            return Err(ImageError::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }

    if width == 0 || height == 0 {
        return Err(ImageError::BadDimensions { width, height });
    }
    let expected = width * height;
    let rest = &data[cursor..];
    if rest.len() < expected {
        return Err(ImageError::Truncated {
            expected,
            got: rest.len(),
        });
    }
    GrayImage::from_pixels(width, height, rest[..expected].to_vec())
}

fn read_header_int(data: &[u8], cursor: &mut usize) -> Result<usize, ImageError> {
    // skip whitespace and comment lines
    loop {
        match data.get(*cursor) {
            Some(b) if b.is_ascii_whitespace() => *cursor += 1,
            Some(b'#') => {
                while let Some(&b) = data.get(*cursor) {
                    *cursor += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *cursor;
    while let Some(b) = data.get(*cursor) {
        if b.is_ascii_digit() {
            *cursor += 1;
        } else {
            break;
        }
    }
    if *cursor == start {
        return Err(ImageError::MalformedHeader(
            "expected an unsigned integer".into(),
        ));
    }
    let text = std::str::from_utf8(&data[start..*cursor])
        .map_err(|_| ImageError::MalformedHeader("non-ascii header".into()))?;
    text.parse::<usize>()
        .map_err(|_| ImageError::MalformedHeader(format!("integer out of range: {text}")))
}

/// Reads every `.pgm` file in a directory, sorted by file name.
pub fn load_corpus<P: AsRef<Path>>(dir: P) -> Result<Vec<GrayImage>, ImageError> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "pgm").unwrap_or(false))
        .collect();
    paths.sort();
    paths.iter().map(load_image).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let mut pixels = Vec::with_capacity(256 * 256);
        for i in 0..256 * 256usize {
            pixels.push((i * 31 % 256) as u8);
        }
        let img = GrayImage::from_pixels(256, 256, pixels).unwrap();
        let back = decode_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn header_is_bit_exact() {
        let img = GrayImage::filled(3, 2, 7);
        let bytes = encode_pgm(&img);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(bytes.len(), b"P5\n3 2\n255\n".len() + 6);
    }

    #[test]
    fn accepts_comments_in_header() {
        let mut data = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[1, 2, 3, 4]);
        let img = decode_pgm(&data).unwrap();
        assert_eq!(img.pixels(), &[1, 2, 3, 4]);
    }

    #[test]
    fn rejects_wrong_magic() {
        assert!(matches!(decode_pgm(b"P6\n1 1\n255\nz"), Err(ImageError::BadMagic)));
    }

    #[test]
    fn rejects_bad_maxval() {
        let data = b"P5\n1 1\n65535\n\0\0".to_vec();
        assert!(matches!(decode_pgm(&data), Err(ImageError::BadMaxval(65535))));
    }

    #[test]
    fn rejects_truncated_data() {
        let data = b"P5\n2 2\n255\n\x01\x02".to_vec();
        assert!(matches!(decode_pgm(&data), Err(ImageError::Truncated { .. })));
    }

    #[test]
    fn transpose_involution() {
        let img = GrayImage::from_pixels(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.transposed().transposed(), img);
        assert_eq!(img.transposed().get(0, 1), img.get(1, 0));
    }
}
