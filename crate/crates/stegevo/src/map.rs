//! Extended-real 2D maps, mirror-padded convolution/correlation, and
//! kernel constructors.
//!
//! Maps hold per-pixel values in `[0, +inf]` (suitability and cost maps) or
//! plain finite reals (intermediate residuals may be negative). `+inf` is a
//! first-class value following IEEE conventions (`1/0 = +inf`,
//! `inf^positive = +inf`); NaN never appears in a well-formed map and is
//! treated as an internal error by callers that check.
//!
//! Boundary handling is reflect-without-repeat ("mirror") indexing with a
//! pad of `(kernel_rows-1, kernel_cols-1)` per side, so boundary outputs
//! depend only on in-image pixels. Reflection folds as many times as the
//! pad requires, which keeps every kernel size up to the sandbox bound
//! usable on small images. The central crop after a full convolution
//! starts at row `floor(kr/2)`, column `floor(kc/2)` of the full result,
//! matching the common numeric-package convention for even-sized kernels.

use std::f64::consts::PI;

use thiserror::Error;

use crate::image::GrayImage;

/// Kernels larger than this (per side) are rejected; keeps sandboxed DSL
/// programs from requesting absurd convolutions.
pub const MAX_KERNEL_SIDE: usize = 64;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid map dimensions {width}x{height} for {len} values")]
    BadDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("kernel {rows}x{cols} exceeds the {MAX_KERNEL_SIDE}-per-side bound")]
    KernelTooLarge { rows: usize, cols: usize },
    #[error("kernel {krows}x{kcols} does not fit the padded {rows}x{cols} map")]
    KernelExceedsPadded {
        krows: usize,
        kcols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite kernel tap")]
    NonFiniteTap,
    #[error("average kernel size must be odd, got {0}")]
    EvenAverageSize(usize),
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
}

/// Row-major 2D array of extended reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RealMap {
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self, MapError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(MapError::BadDimensions {
                width,
                height,
                len: values.len(),
            });
        }
        Ok(RealMap {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        RealMap::from_values(width, height, vec![value; width * height])
            .expect("positive dimensions")
    }

    /// Image pixels as doubles, the usual entry point of a cost pipeline.
    pub fn from_image(img: &GrayImage) -> Self {
        RealMap {
            width: img.width(),
            height: img.height(),
            values: img.pixels().iter().map(|&p| p as f64).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    pub fn same_dims(&self, other: &RealMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Applies `f` to every value, producing a new map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealMap {
        RealMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equal-sized maps.
    pub fn zip(&self, other: &RealMap, f: impl Fn(f64, f64) -> f64) -> Result<RealMap, MapError> {
        if !self.same_dims(other) {
            return Err(MapError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(RealMap {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn transposed(&self) -> RealMap {
        let mut out = vec![0.0; self.values.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                out[c * self.height + r] = self.get(r, c);
            }
        }
        RealMap {
            width: self.height,
            height: self.width,
            values: out,
        }
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// Minimum and maximum over finite values; `None` if every value is
    /// infinite.
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for &v in &self.values {
            if v.is_finite() {
                range = Some(match range {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
            }
        }
        range
    }
}

/// A small dense convolution kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn from_taps(rows: usize, cols: usize, taps: Vec<f64>) -> Result<Self, MapError> {
        if rows == 0 || cols == 0 || taps.len() != rows * cols {
            return Err(MapError::BadDimensions {
                width: cols,
                height: rows,
                len: taps.len(),
            });
        }
        if rows > MAX_KERNEL_SIDE || cols > MAX_KERNEL_SIDE {
            return Err(MapError::KernelTooLarge { rows, cols });
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(MapError::NonFiniteTap);
        }
        Ok(Kernel { rows, cols, taps })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.cols + col]
    }

    /// Kernel rotated by 180 degrees (the "flip" of convolution).
    pub fn flipped(&self) -> Kernel {
        let mut taps = self.taps.clone();
        taps.reverse();
        Kernel {
            rows: self.rows,
            cols: self.cols,
            taps,
        }
    }

    pub fn transposed(&self) -> Kernel {
        let mut taps = vec![0.0; self.taps.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                taps[c * self.rows + r] = self.tap(r, c);
            }
        }
        Kernel {
            rows: self.cols,
            cols: self.rows,
            taps,
        }
    }

    /// Elementwise absolute value of the taps.
    pub fn abs(&self) -> Kernel {
        Kernel {
            rows: self.rows,
            cols: self.cols,
            taps: self.taps.iter().map(|t| t.abs()).collect(),
        }
    }

    /// Taps scaled by a finite factor.
    pub fn scaled(&self, factor: f64) -> Result<Kernel, MapError> {
        if !factor.is_finite() {
            return Err(MapError::NonFiniteTap);
        }
        Ok(Kernel {
            rows: self.rows,
            cols: self.cols,
            taps: self.taps.iter().map(|t| t * factor).collect(),
        })
    }

    /// Outer product of two 1-D tap vectors: `col * row^T`.
    pub fn outer(col: &[f64], row: &[f64]) -> Result<Kernel, MapError> {
        let mut taps = Vec::with_capacity(col.len() * row.len());
        for &a in col {
            for &b in row {
                taps.push(a * b);
            }
        }
        Kernel::from_taps(col.len(), row.len(), taps)
    }

    pub fn tap_sum(&self) -> f64 {
        self.taps.iter().sum()
    }
}

/// Reflect-without-repeat index fold: maps any integer onto `[0, len)` by
/// bouncing off both ends, never repeating the edge sample. `len == 1`
/// collapses to index 0.
#[inline]
pub fn mirror_index(idx: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut r = idx % period;
    if r < 0 {
        r += period;
    }
    if r >= len as isize {
        r = period - r;
    }
    r as usize
}

fn check_conv_dims(src: &RealMap, k: &Kernel) -> Result<(), MapError> {
    // With a pad of (k-1) per side the padded map always admits the kernel
    // unless a dimension is degenerate; the check guards that edge.
    let padded_rows = src.height + 2 * (k.rows - 1);
    let padded_cols = src.width + 2 * (k.cols - 1);
    if k.rows > padded_rows || k.cols > padded_cols {
        return Err(MapError::KernelExceedsPadded {
            krows: k.rows,
            kcols: k.cols,
            rows: padded_rows,
            cols: padded_cols,
        });
    }
    Ok(())
}

/// Shared core of `conv2_mirror` and `corr2_mirror`: correlates the
/// mirror-padded map with `taps` laid out row-major over `k.rows x k.cols`,
/// then crops the central window starting at `(floor(kr/2), floor(kc/2))`
/// of the full result.
fn correlate_mirror_core(src: &RealMap, k: &Kernel, taps: &[f64]) -> RealMap {
    let h = src.height;
    let w = src.width;
    let kr = k.rows;
    let kc = k.cols;
    let pr = kr - 1;
    let pc = kc - 1;

    // materialize the padded map once; row-major scan stays cache-friendly
    let ph = h + 2 * pr;
    let pw = w + 2 * pc;
    let mut padded = vec![0.0f64; ph * pw];
    for r in 0..ph {
        let sr = mirror_index(r as isize - pr as isize, h);
        for c in 0..pw {
            let sc = mirror_index(c as isize - pc as isize, w);
            padded[r * pw + c] = src.values[sr * w + sc];
        }
    }

    let off_r = kr / 2;
    let off_c = kc / 2;
    let mut out = vec![0.0f64; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            let base_r = i + off_r;
            let base_c = j + off_c;
            for a in 0..kr {
                let row = &padded[(base_r + a) * pw + base_c..(base_r + a) * pw + base_c + kc];
                let trow = &taps[a * kc..(a + 1) * kc];
                for b in 0..kc {
                    acc += trow[b] * row[b];
                }
            }
            out[i * w + j] = acc;
        }
    }
    RealMap {
        width: w,
        height: h,
        values: out,
    }
}

/// Mirror-padded 2D convolution (kernel flipped), output sized like `src`.
pub fn conv2_mirror(src: &RealMap, k: &Kernel) -> Result<RealMap, MapError> {
    check_conv_dims(src, k)?;
    let flipped = k.flipped();
    Ok(correlate_mirror_core(src, k, &flipped.taps))
}

/// Mirror-padded 2D correlation (no kernel flip), output sized like `src`.
pub fn corr2_mirror(src: &RealMap, k: &Kernel) -> Result<RealMap, MapError> {
    check_conv_dims(src, k)?;
    Ok(correlate_mirror_core(src, k, &k.taps))
}

/// Absolute value of the mirror-padded convolution, the residual magnitude
/// step every cost function starts with.
pub fn absconv2_mirror(src: &RealMap, k: &Kernel) -> Result<RealMap, MapError> {
    Ok(conv2_mirror(src, k)?.map(f64::abs))
}

/// Gaussian smoothing kernel. The side length is `2*ceil(L*sigma - 0.5) + 1`
/// and each tap is the density `exp(-(i^2+j^2)/(2 sigma^2)) / (2 pi sigma^2)`
/// about the center tap, renormalized to sum exactly 1 so smoothing
/// preserves the mean.
pub fn gaussian_kernel(sigma: f64, l: f64) -> Result<Kernel, MapError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(MapError::BadSigma(sigma));
    }
    let half = (l * sigma - 0.5).ceil().max(0.0) as isize;
    let side = (2 * half + 1) as usize;
    let norm = 1.0 / (2.0 * PI * sigma * sigma);
    let mut taps = Vec::with_capacity(side * side);
    for i in -half..=half {
        for j in -half..=half {
            let d2 = (i * i + j * j) as f64;
            taps.push(norm * (-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Kernel::from_taps(side, side, taps)
}

/// `size x size` average filter with every tap `1/size^2`; `size` must be odd.
pub fn avg_kernel(size: usize) -> Result<Kernel, MapError> {
    if size % 2 == 0 {
        return Err(MapError::EvenAverageSize(size));
    }
    let tap = 1.0 / (size * size) as f64;
    Kernel::from_taps(size, size, vec![tap; size * size])
}

/// The 3x3 KB high-pass filter.
pub fn kb_kernel() -> Kernel {
    Kernel::from_taps(
        3,
        3,
        vec![-1.0, 2.0, -1.0, 2.0, -4.0, 2.0, -1.0, 2.0, -1.0],
    )
    .expect("static taps")
}

/// How a map is quantized to 8-bit brightness when rendered to PGM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapScaling {
    /// Affine min-max over finite values: the finite minimum renders as 0,
    /// the finite maximum as 255, `+inf` as 255.
    Direct,
    /// Inverted affine scaling (low values bright): the finite minimum
    /// renders as 255, the maximum as 0, `+inf` as 0. Probability maps use
    /// this so that bright areas mark low modification probability.
    Inverted,
}

/// Renders a map to an 8-bit image using the given scaling. Quantization
/// truncates toward zero. A map whose finite values are all equal renders
/// as all-0 (`Direct`) or all-255 (`Inverted`).
pub fn render_map(map: &RealMap, scaling: MapScaling) -> GrayImage {
    let range = map.finite_range();
    let pixels: Vec<u8> = map
        .values
        .iter()
        .map(|&v| {
            let direct = match range {
                Some((lo, hi)) if hi > lo => {
                    if v.is_finite() {
                        (255.0 * (v - lo) / (hi - lo)).floor().clamp(0.0, 255.0) as u8
                    } else {
                        255
                    }
                }
                // degenerate: all finite values equal, or none finite
                _ => {
                    if v.is_finite() {
                        0
                    } else {
                        255
                    }
                }
            };
            match scaling {
                MapScaling::Direct => direct,
                MapScaling::Inverted => match range {
                    Some((lo, hi)) if hi > lo => {
                        if v.is_finite() {
                            (255.0 * (hi - v) / (hi - lo)).floor().clamp(0.0, 255.0) as u8
                        } else {
                            0
                        }
                    }
                    _ => {
                        if v.is_finite() {
                            255
                        } else {
                            0
                        }
                    }
                },
            }
        })
        .collect();
    GrayImage::from_pixels(map.width, map.height, pixels).expect("map dims are positive")
}

/// Renders and writes a map as PGM. See [`render_map`] for the scaling
/// semantics.
pub fn save_map<P: AsRef<std::path::Path>>(
    map: &RealMap,
    path: P,
    scaling: MapScaling,
) -> Result<(), crate::image::ImageError> {
    crate::image::save_image(&render_map(map, scaling), path)
}
