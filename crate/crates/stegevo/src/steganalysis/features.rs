//! Truncated-difference co-occurrence features.
//!
//! Feature specification `diffcooc-784/1`:
//!
//! 1. First-order difference residuals, horizontal `d_h[r][c] =
//!    x[r][c+1] - x[r][c]` and vertical `d_v[r][c] = x[r+1][c] - x[r][c]`,
//!    each truncated to `[-3, 3]`.
//! 2. Four co-occurrence groups over the truncated residuals, scanned
//!    along the residual direction:
//!    - horizontal pairs `(d_h[r][c], d_h[r][c+1])` — 7^2 bins
//!    - vertical pairs `(d_v[r][c], d_v[r+1][c])` — 7^2 bins
//!    - horizontal triples `(d_h[r][c], d_h[r][c+1], d_h[r][c+2])` — 7^3 bins
//!    - vertical triples `(d_v[r][c], d_v[r+1][c], d_v[r+2][c])` — 7^3 bins
//! 3. Each group is normalized to frequencies (bins sum to 1), then the
//!    groups are concatenated in the order above: dimension
//!    `2*49 + 2*343 = 784`.
//!
//! Index within a group is big-endian in residual order with offset 3,
//! e.g. a pair `(a, b)` lands in bin `(a+3)*7 + (b+3)`.

use crate::image::GrayImage;

/// Residual truncation bound.
pub const TRUNCATION: i32 = 3;
/// Number of residual levels after truncation.
pub const LEVELS: usize = (2 * TRUNCATION + 1) as usize;
/// Total feature dimension.
pub const FEATURE_DIM: usize = 2 * LEVELS * LEVELS + 2 * LEVELS * LEVELS * LEVELS;
/// Version tag stored inside serialized evaluators.
pub const FEATURE_SPEC_VERSION: &str = "diffcooc-784/1";

/// A fixed-length feature vector; entries are finite frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Constructor for oracle tests and synthetic-feature experiments;
    /// production scoring always goes through [`extract_features`].
    pub fn from_raw(values: Vec<f64>) -> FeatureVector {
        FeatureVector(values)
    }
}

#[inline]
fn truncate(diff: i32) -> i32 {
    diff.clamp(-TRUNCATION, TRUNCATION)
}

fn normalize_into(hist: &mut [f64]) {
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for v in hist.iter_mut() {
            *v /= total;
        }
    }
}

/// Extracts the `diffcooc-784/1` feature vector.
pub fn extract_features(img: &GrayImage) -> FeatureVector {
    let (w, h) = (img.width(), img.height());

    // truncated residuals; d_h is (w-1) wide, d_v is (h-1) tall
    let mut dh = vec![0i32; h * w.saturating_sub(1)];
    for r in 0..h {
        for c in 0..w - 1 {
            dh[r * (w - 1) + c] = truncate(img.get(r, c + 1) as i32 - img.get(r, c) as i32);
        }
    }
    let mut dv = vec![0i32; w * h.saturating_sub(1)];
    for r in 0..h - 1 {
        for c in 0..w {
            dv[r * w + c] = truncate(img.get(r + 1, c) as i32 - img.get(r, c) as i32);
        }
    }

    let l = LEVELS;
    let mut h_pairs = vec![0.0f64; l * l];
    let mut v_pairs = vec![0.0f64; l * l];
    let mut h_triples = vec![0.0f64; l * l * l];
    let mut v_triples = vec![0.0f64; l * l * l];
    let off = TRUNCATION;

    if w >= 3 {
        for r in 0..h {
            let row = &dh[r * (w - 1)..(r + 1) * (w - 1)];
            for c in 0..w - 2 {
                let (a, b) = ((row[c] + off) as usize, (row[c + 1] + off) as usize);
                h_pairs[a * l + b] += 1.0;
            }
            for c in 0..w.saturating_sub(3) {
                let (a, b, z) = (
                    (row[c] + off) as usize,
                    (row[c + 1] + off) as usize,
                    (row[c + 2] + off) as usize,
                );
                h_triples[(a * l + b) * l + z] += 1.0;
            }
        }
    }
    if h >= 3 {
        for c in 0..w {
            for r in 0..h - 2 {
                let (a, b) = (
                    (dv[r * w + c] + off) as usize,
                    (dv[(r + 1) * w + c] + off) as usize,
                );
                v_pairs[a * l + b] += 1.0;
            }
            for r in 0..h.saturating_sub(3) {
                let (a, b, z) = (
                    (dv[r * w + c] + off) as usize,
                    (dv[(r + 1) * w + c] + off) as usize,
                    (dv[(r + 2) * w + c] + off) as usize,
                );
                v_triples[(a * l + b) * l + z] += 1.0;
            }
        }
    }

    normalize_into(&mut h_pairs);
    normalize_into(&mut v_pairs);
    normalize_into(&mut h_triples);
    normalize_into(&mut v_triples);

    let mut out = Vec::with_capacity(FEATURE_DIM);
    out.extend_from_slice(&h_pairs);
    out.extend_from_slice(&v_pairs);
    out.extend_from_slice(&h_triples);
    out.extend_from_slice(&v_triples);
    debug_assert_eq!(out.len(), FEATURE_DIM);
    FeatureVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn dimension_is_fixed() {
        let f = extract_features(&synth::textured_cover(32, 32, 1));
        assert_eq!(f.dim(), 784);
    }

    #[test]
    fn constant_image_mass_on_zero_bins() {
        let f = extract_features(&GrayImage::filled(16, 16, 99));
        let v = f.values();
        // pair groups: all mass at (0,0) -> bin (3*7+3) = 24
        assert_eq!(v[24], 1.0);
        assert_eq!(v[49 + 24], 1.0);
        // triple groups: bin ((3*7+3)*7+3) = 171
        assert_eq!(v[98 + 171], 1.0);
        assert_eq!(v[98 + 343 + 171], 1.0);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 4);
    }

    #[test]
    fn groups_sum_to_one() {
        let f = extract_features(&synth::textured_cover(48, 48, 5));
        let v = f.values();
        for (start, len) in [(0, 49), (49, 49), (98, 343), (441, 343)] {
            let s: f64 = v[start..start + len].iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "group at {start} sums to {s}");
        }
    }

    #[test]
    fn invariant_to_global_intensity_shift() {
        let img = synth::textured_cover(32, 32, 9);
        assert!(img.pixels().iter().all(|&p| p < 255));
        let mut shifted = img.clone();
        for p in shifted.pixels_mut() {
            *p += 1;
        }
        assert_eq!(extract_features(&img), extract_features(&shifted));
    }

    #[test]
    fn finite_entries() {
        let f = extract_features(&synth::textured_cover(21, 17, 11));
        assert!(f.values().iter().all(|v| v.is_finite()));
    }
}
