//! Daubechies-8 decomposition filter pair.
//!
//! The directional filter bank used by WOW and SUNIWARD is built from a
//! 1-D orthonormal Daubechies low-pass filter `h` and the high-pass `g`
//! derived from it by the quadrature-mirror relation
//! `g[k] = (-1)^k h[N-1-k]`. The 16-tap table below was computed by
//! spectral factorization of the order-8 half-band polynomial at 60-digit
//! precision and rounded once to f64, so the derived high-pass sums to
//! zero at machine precision. Swapping in a different table only requires
//! editing this constant; the relation is revalidated at bank
//! construction.

/// Daubechies-8 decomposition low-pass filter, normalized to sum sqrt(2).
pub const DB8_LOWPASS: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

/// High-pass filter from the quadrature-mirror relation.
pub fn derive_highpass(lowpass: &[f64]) -> Vec<f64> {
    let n = lowpass.len();
    (0..n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[n - 1 - k]
        })
        .collect()
}

/// Checks `g[k] = (-1)^k h[N-1-k]` holds between the two tables.
pub fn qmf_relation_holds(lowpass: &[f64], highpass: &[f64]) -> bool {
    lowpass.len() == highpass.len()
        && derive_highpass(lowpass)
            .iter()
            .zip(highpass)
            .all(|(a, b)| a == b)
}

const DYADIC_SCALE: f64 = (1u64 << 40) as f64;

/// Snaps a value onto the 2^-40 dyadic grid. Grid values below 1 in
/// magnitude are exact in f64, and so are their products with 8-bit pixel
/// values and the bounded partial sums a 16x16 convolution produces.
pub fn dyadic40(x: f64) -> f64 {
    (x * DYADIC_SCALE).round() / DYADIC_SCALE
}

/// Quantizes a tap table onto the dyadic grid and shifts one tap so the
/// total is exactly zero. With exact-zero tap sums, constant image regions
/// convolve to exactly zero residual, which is what the infinite-cost
/// branch of the wavelet cost functions relies on. The adjustment is below
/// 1e-10 in magnitude, negligible against the filters themselves.
pub fn quantize_zero_sum(taps: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = taps.iter().map(|&t| dyadic40(t)).collect();
    // all addends are exact multiples of 2^-40 with a small bounded total,
    // so this sum is itself exact
    let sum: f64 = out.iter().sum();
    out[0] -= sum;
    out
}
