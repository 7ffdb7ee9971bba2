//! Seeded synthetic cover generation.
//!
//! Real cover corpora are directories of PGM files; these generators
//! produce deterministic stand-ins with natural-image structure (smooth
//! shading, edges, and textured patches) for examples, tests, and quick
//! experiments. Pixel values stay inside `[1, 254]` so no generated cover
//! starts out saturated.

use crate::image::GrayImage;
use crate::prng::Prng;

/// A textured cover mixing low-frequency shading, a few hard-edged
/// rectangles, and localized noise patches.
pub fn textured_cover(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = Prng::new(seed ^ 0x5eed_c0de);
    let mut field = vec![0.0f64; width * height];

    // smooth background: a handful of low-frequency cosines
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.next_f64() * 3.0 / width as f64,
                rng.next_f64() * 3.0 / height as f64,
                rng.next_f64() * std::f64::consts::TAU,
                20.0 + rng.next_f64() * 25.0,
            )
        })
        .collect();
    for r in 0..height {
        for c in 0..width {
            let mut v = 128.0;
            for &(fx, fy, phase, amp) in &waves {
                v += amp
                    * (std::f64::consts::TAU * (fx * c as f64 + fy * r as f64) + phase).cos();
            }
            field[r * width + c] = v;
        }
    }

    // hard-edged rectangles
    for _ in 0..3 {
        let rw = 4 + rng.next_below(width as u64 / 2) as usize;
        let rh = 4 + rng.next_below(height as u64 / 2) as usize;
        let r0 = rng.next_below((height - rh.min(height - 1)) as u64) as usize;
        let c0 = rng.next_below((width - rw.min(width - 1)) as u64) as usize;
        let delta = rng.next_f64() * 80.0 - 40.0;
        for r in r0..(r0 + rh).min(height) {
            for c in c0..(c0 + rw).min(width) {
                field[r * width + c] += delta;
            }
        }
    }

    // textured patch: stronger noise in one quadrant
    let qr = rng.next_below(2) as usize * height / 2;
    let qc = rng.next_below(2) as usize * width / 2;
    for r in qr..qr + height / 2 {
        for c in qc..qc + width / 2 {
            field[r * width + c] += (rng.next_f64() - 0.5) * 36.0;
        }
    }

    // mild global sensor noise
    for v in &mut field {
        *v += (rng.next_f64() - 0.5) * 6.0;
    }

    quantize(width, height, &field)
}

/// Left half constant, right half uniform noise; used for texture-response
/// checks.
pub fn flat_vs_noise_cover(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = Prng::new(seed);
    let mut pixels = vec![0u8; width * height];
    for r in 0..height {
        for c in 0..width {
            pixels[r * width + c] = if c < width / 2 {
                128
            } else {
                (50.0 + rng.next_f64() * 150.0) as u8
            };
        }
    }
    GrayImage::from_pixels(width, height, pixels).expect("positive dims")
}

/// Two-level checkerboard with the given cell size.
pub fn checkerboard(width: usize, height: usize, cell: usize, lo: u8, hi: u8) -> GrayImage {
    let mut pixels = vec![0u8; width * height];
    for r in 0..height {
        for c in 0..width {
            let on = (r / cell + c / cell) % 2 == 0;
            pixels[r * width + c] = if on { hi } else { lo };
        }
    }
    GrayImage::from_pixels(width, height, pixels).expect("positive dims")
}

/// A deterministic corpus of textured covers.
pub fn corpus(count: usize, width: usize, height: usize, seed: u64) -> Vec<GrayImage> {
    (0..count)
        .map(|i| textured_cover(width, height, seed.wrapping_add(i as u64 * 0x9E37)))
        .collect()
}

fn quantize(width: usize, height: usize, field: &[f64]) -> GrayImage {
    let pixels = field
        .iter()
        .map(|&v| v.round().clamp(1.0, 254.0) as u8)
        .collect();
    GrayImage::from_pixels(width, height, pixels).expect("positive dims")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unsaturated() {
        let a = textured_cover(64, 64, 7);
        let b = textured_cover(64, 64, 7);
        assert_eq!(a, b);
        assert_ne!(a, textured_cover(64, 64, 8));
        assert!(a.pixels().iter().all(|&p| (1..=254).contains(&p)));
    }

    #[test]
    fn corpus_images_differ() {
        let covers = corpus(4, 32, 32, 1);
        assert_eq!(covers.len(), 4);
        assert_ne!(covers[0], covers[1]);
    }

    #[test]
    fn checkerboard_pattern() {
        let img = checkerboard(8, 8, 2, 10, 200);
        assert_eq!(img.get(0, 0), 200);
        assert_eq!(img.get(0, 2), 10);
        assert_eq!(img.get(2, 0), 10);
        assert_eq!(img.get(2, 2), 200);
    }
}
