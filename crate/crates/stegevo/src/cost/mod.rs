//! Embedding cost functions.
//!
//! Each function maps a cover image to a [`CostPair`]: one extended-real
//! cost per pixel for a `+1` change and one for a `-1` change. Costs are
//! nonnegative, `+inf` marks a wet pixel (a change that must never be
//! made), and smaller costs mark pixels better suited to embedding
//! (complex textures). Six functions are built in: WOW, HILL, SUNIWARD
//! and an evolved variant of each.
//!
//! The three original functions define a single directionless cost; the
//! pair is completed by saturation wetting (`+1` wet at 255, `-1` wet at
//! 0) so every pair is directly usable by the ternary embedder.

pub mod db8;

use crate::image::GrayImage;
use crate::map::{
    absconv2_mirror, avg_kernel, conv2_mirror, corr2_mirror, gaussian_kernel, kb_kernel, Kernel,
    RealMap,
};

/// Per-pixel costs of `+1` and `-1` modifications.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    pub rho_plus: RealMap,
    pub rho_minus: RealMap,
}

impl CostPair {
    pub fn new(rho_plus: RealMap, rho_minus: RealMap) -> Self {
        debug_assert!(rho_plus.same_dims(&rho_minus));
        debug_assert!(!rho_plus.has_nan() && !rho_minus.has_nan());
        debug_assert!(rho_plus.values().iter().all(|&v| v >= 0.0));
        debug_assert!(rho_minus.values().iter().all(|&v| v >= 0.0));
        CostPair {
            rho_plus,
            rho_minus,
        }
    }

    /// Both directions share the same cost map.
    pub fn symmetric(rho: RealMap) -> Self {
        CostPair::new(rho.clone(), rho)
    }

    pub fn width(&self) -> usize {
        self.rho_plus.width()
    }

    pub fn height(&self) -> usize {
        self.rho_plus.height()
    }

    pub fn len(&self) -> usize {
        self.rho_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_plus.is_empty()
    }

    /// Marks boundary pixels wet, inclusive threshold: `+1` is wet where
    /// `x >= 255 - tau`, `-1` where `x <= tau`. `tau = 0` wets only the
    /// saturated levels.
    pub fn wet_boundary(mut self, img: &GrayImage, tau: u8) -> Self {
        let hi = 255 - tau;
        for (i, &x) in img.pixels().iter().enumerate() {
            if x >= hi {
                self.rho_plus.values_mut()[i] = f64::INFINITY;
            }
            if x <= tau {
                self.rho_minus.values_mut()[i] = f64::INFINITY;
            }
        }
        self
    }
}

/// An ordered set of 2D kernels, optionally weighted.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub kernels: Vec<Kernel>,
    pub weights: Option<Vec<f64>>,
}

impl FilterBank {
    pub fn new(kernels: Vec<Kernel>) -> Self {
        assert!(!kernels.is_empty(), "filter bank must be non-empty");
        FilterBank {
            kernels,
            weights: None,
        }
    }

    pub fn with_weights(kernels: Vec<Kernel>, weights: Vec<f64>) -> Self {
        assert_eq!(kernels.len(), weights.len());
        FilterBank {
            kernels,
            weights: Some(weights),
        }
    }
}

/// The three directional wavelet kernels `h*g^T`, `g*h^T`, `g*g^T` built
/// from the Daubechies-8 pair. The quadrature-mirror relation between the
/// stored low-pass and the derived high-pass is asserted on every call.
/// Taps are snapped to a dyadic grid with exactly-zero kernel sums (see
/// [`db8::quantize_zero_sum`]) so constant regions produce exactly-zero
/// residuals.
pub fn db8_bank() -> FilterBank {
    let h = db8::DB8_LOWPASS.to_vec();
    let g = db8::derive_highpass(&h);
    assert!(db8::qmf_relation_holds(&h, &g), "corrupt DB-8 table");
    let outer_zeroed = |col: &[f64], row: &[f64]| {
        let k = Kernel::outer(col, row).expect("db8 outer product");
        let taps = db8::quantize_zero_sum(k.taps());
        Kernel::from_taps(k.rows(), k.cols(), taps).expect("adjusted taps stay finite")
    };
    let k0 = outer_zeroed(&h, &g);
    let k1 = outer_zeroed(&g, &h);
    let k2 = outer_zeroed(&g, &g);
    FilterBank::new(vec![k0, k1, k2])
}

/// The five 2x2-or-smaller difference kernels of the evolved WOW bank,
/// built from the operators `d0 = (1,1)^T/2` and `d1 = (1,-1)^T/2` plus a
/// doubled identity.
pub fn wow_evolved_bank() -> FilterBank {
    let d0 = [0.5, 0.5];
    let d1 = [0.5, -0.5];
    let k0 = Kernel::outer(&d1, &d0).expect("2x2");
    let k1 = Kernel::outer(&d0, &d1).expect("2x2");
    let k2 = Kernel::outer(&d1, &d1).expect("2x2");
    let k3 = Kernel::outer(&d0, &d0).expect("2x2");
    let k4 = Kernel::from_taps(2, 2, vec![2.0, 0.0, 0.0, 2.0]).expect("2x2");
    FilterBank::with_weights(
        vec![k0, k1, k2, k3, k4],
        WOW_EVOLVED_WEIGHTS.to_vec(),
    )
}

/// Sensitivity weights of the evolved WOW aggregation.
pub const WOW_EVOLVED_WEIGHTS: [f64; 5] = [1.8, 1.4, 1.6, 1.0, 0.9];
/// Sensitivity exponent of the evolved WOW aggregation.
pub const WOW_EVOLVED_P: f64 = -2.5;
/// Low-cost floor of the evolved WOW refinement.
pub const WOW_EVOLVED_THETA: f64 = 1e-12;
/// Fraction of highest costs clamped to `+inf` by the evolved WOW.
pub const WOW_EVOLVED_CLAMP_FRACTION: f64 = 0.05;
/// Reciprocal stabilizer of HILL.
pub const HILL_EPSILON: f64 = 1e-10;
/// Residual stabilizer of SUNIWARD.
pub const SUNIWARD_EPSILON: f64 = 1.0;
/// Directional weights of the evolved SUNIWARD suitability stage.
pub const SUNIWARD_EVOLVED_ALPHA: [f64; 3] = [1.0, 1.5, 1.0];
/// Aggregation weights of the evolved SUNIWARD cost stage.
pub const SUNIWARD_EVOLVED_BETA: [f64; 3] = [0.5, 1.0, 0.5];
/// Inclusive boundary threshold of the evolved SUNIWARD.
pub const SUNIWARD_EVOLVED_TAU: u8 = 5;

/// WOW: reciprocal aggregation of wavelet suitability.
///
/// For each bank kernel, the suitability is the mirror-padded correlation
/// of `|X (*) K|` with `|K|`; the cost is the sum of suitability
/// reciprocals. Pixels where every residual vanishes get infinite cost.
pub fn wow_cost(img: &GrayImage) -> CostPair {
    let x = RealMap::from_image(img);
    let bank = db8_bank();
    let mut rho: Option<RealMap> = None;
    for k in &bank.kernels {
        let residual = absconv2_mirror(&x, k).expect("bank kernel fits");
        let xi = corr2_mirror(&residual, &k.abs()).expect("bank kernel fits");
        let inv = xi.map(|v| 1.0 / v);
        rho = Some(match rho {
            None => inv,
            Some(acc) => acc.zip(&inv, |a, b| a + b).expect("same dims"),
        });
    }
    CostPair::symmetric(rho.expect("non-empty bank")).wet_boundary(img, 0)
}

/// Evolved WOW without the final top-fraction clamp; exposed so the clamp
/// stage can be analyzed on its own.
pub fn wow_evolved_cost_unclamped(img: &GrayImage) -> CostPair {
    let x = RealMap::from_image(img);
    let bank = wow_evolved_bank();
    let gauss = gaussian_kernel(0.8, 4.0).expect("sigma > 0");
    let weights = bank.weights.as_ref().expect("weighted bank");

    let mut xi_e: Option<RealMap> = None;
    for (k, &w) in bank.kernels.iter().zip(weights) {
        let residual = absconv2_mirror(&x, k).expect("2x2 kernel fits");
        let smoothed = conv2_mirror(&residual, &gauss).expect("gaussian fits");
        let term = smoothed.map(|v| w * v.powf(WOW_EVOLVED_P));
        xi_e = Some(match xi_e {
            None => term,
            Some(acc) => acc.zip(&term, |a, b| a + b).expect("same dims"),
        });
    }
    let xi_e = xi_e.expect("non-empty bank");
    let rho = xi_e.map(|v| {
        let raw = if v == 0.0 {
            f64::INFINITY
        } else {
            v.powf(-1.0 / WOW_EVOLVED_P)
        };
        if raw < WOW_EVOLVED_THETA {
            f64::INFINITY
        } else {
            raw
        }
    });
    // strict tau = 1 boundary rule: only the saturated levels are wet
    CostPair::symmetric(rho).wet_boundary(img, 0)
}

/// Evolved WOW: expanded 2x2 difference bank, Gaussian smoothing, weighted
/// power aggregation, a low-cost floor, boundary wetting, and a per-sign
/// top-5% clamp to `+inf`.
pub fn wow_evolved_cost(img: &GrayImage) -> CostPair {
    let pair = wow_evolved_cost_unclamped(img);
    CostPair::new(
        clamp_top_fraction(&pair.rho_plus, WOW_EVOLVED_CLAMP_FRACTION),
        clamp_top_fraction(&pair.rho_minus, WOW_EVOLVED_CLAMP_FRACTION),
    )
}

/// HILL with a caller-chosen final smoothing kernel; the standard and
/// evolved variants differ only here.
pub fn hill_cost_with_smoothing(img: &GrayImage, smoothing: &Kernel) -> CostPair {
    let x = RealMap::from_image(img);
    let residual = absconv2_mirror(&x, &kb_kernel()).expect("3x3 fits");
    let xi = conv2_mirror(&residual, &avg_kernel(3).expect("odd")).expect("3x3 fits");
    let inv = xi.map(|v| 1.0 / (v + HILL_EPSILON));
    let rho = conv2_mirror(&inv, smoothing).expect("smoothing kernel fits");
    CostPair::symmetric(rho).wet_boundary(img, 0)
}

/// HILL: high-pass residual, low-pass suitability smoothing, and a 15x15
/// average smoothing of the suitability reciprocal.
pub fn hill_cost(img: &GrayImage) -> CostPair {
    hill_cost_with_smoothing(img, &avg_kernel(15).expect("odd"))
}

/// Evolved HILL: the 15x15 average smoother replaced by a 25x25 Gaussian
/// with sigma 3.
pub fn hill_evolved_cost(img: &GrayImage) -> CostPair {
    hill_cost_with_smoothing(img, &gaussian_kernel(3.0, 4.0).expect("sigma > 0"))
}

/// SUNIWARD family with directional weights `alpha`, aggregation weights
/// `beta`, inclusive boundary threshold `tau`, and residual stabilizer
/// `eps`.
pub fn suniward_cost_with(
    img: &GrayImage,
    alpha: [f64; 3],
    beta: [f64; 3],
    tau: u8,
    eps: f64,
) -> CostPair {
    let x = RealMap::from_image(img);
    let bank = db8_bank();
    let mut rho: Option<RealMap> = None;
    for (idx, k) in bank.kernels.iter().enumerate() {
        let residual = conv2_mirror(&x, k).expect("bank kernel fits");
        let inv = residual.map(|v| 1.0 / (v.abs() + eps));
        let weighted_kernel = k.abs().scaled(alpha[idx]).expect("finite weight");
        let xi = corr2_mirror(&inv, &weighted_kernel).expect("bank kernel fits");
        let term = xi.map(|v| beta[idx] * v);
        rho = Some(match rho {
            None => term,
            Some(acc) => acc.zip(&term, |a, b| a + b).expect("same dims"),
        });
    }
    CostPair::symmetric(rho.expect("non-empty bank")).wet_boundary(img, tau)
}

/// SUNIWARD: reciprocal-residual suitability correlated with the absolute
/// wavelet kernels, summed over the three directions.
pub fn suniward_cost(img: &GrayImage) -> CostPair {
    suniward_cost_with(img, [1.0; 3], [1.0; 3], 0, SUNIWARD_EPSILON)
}

/// Evolved SUNIWARD: directional weighting, weighted aggregation, and a
/// wider boundary band.
pub fn suniward_evolved_cost(img: &GrayImage) -> CostPair {
    suniward_cost_with(
        img,
        SUNIWARD_EVOLVED_ALPHA,
        SUNIWARD_EVOLVED_BETA,
        SUNIWARD_EVOLVED_TAU,
        SUNIWARD_EPSILON,
    )
}

/// Nearest-rank upper-percentile threshold over the finite values: the
/// value at 1-based rank `ceil((1-fraction)*N)` of the ascending sort.
/// `None` when no value is finite.
pub fn top_fraction_threshold(map: &RealMap, fraction: f64) -> Option<f64> {
    let mut finite: Vec<f64> = map.values().iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return None;
    }
    finite.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in maps"));
    let q = 1.0 - fraction;
    let rank = ((q * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
    Some(finite[rank - 1])
}

/// Sends every value strictly above the nearest-rank threshold to `+inf`.
pub fn clamp_top_fraction(map: &RealMap, fraction: f64) -> RealMap {
    match top_fraction_threshold(map, fraction) {
        Some(t) => map.map(|v| if v > t { f64::INFINITY } else { v }),
        None => map.clone(),
    }
}

/// Sends every value strictly below `theta` to `+inf` (low-cost floor).
pub fn floor_to_inf(map: &RealMap, theta: f64) -> RealMap {
    map.map(|v| if v < theta { f64::INFINITY } else { v })
}

/// Anything that turns a cover image into a cost pair: the built-in
/// algorithms and interpreted DSL candidates both implement this, so the
/// embedding, scoring, and evolution pipelines are agnostic to the origin
/// of a cost function.
pub trait CostFunction: Send + Sync {
    fn cost_pair(&self, img: &GrayImage) -> Result<CostPair, crate::dsl::RuntimeFault>;

    /// Short human-readable label for reports and evaluator metadata.
    fn label(&self) -> String;
}

impl CostFunction for CostAlgo {
    fn cost_pair(&self, img: &GrayImage) -> Result<CostPair, crate::dsl::RuntimeFault> {
        Ok(self.compute(img))
    }

    fn label(&self) -> String {
        self.name().to_string()
    }
}

/// The six built-in cost functions, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CostAlgo {
    Wow,
    WowEvolved,
    Hill,
    HillEvolved,
    Suniward,
    SuniwardEvolved,
}

impl CostAlgo {
    pub const ALL: [CostAlgo; 6] = [
        CostAlgo::Wow,
        CostAlgo::WowEvolved,
        CostAlgo::Hill,
        CostAlgo::HillEvolved,
        CostAlgo::Suniward,
        CostAlgo::SuniwardEvolved,
    ];

    pub fn compute(&self, img: &GrayImage) -> CostPair {
        match self {
            CostAlgo::Wow => wow_cost(img),
            CostAlgo::WowEvolved => wow_evolved_cost(img),
            CostAlgo::Hill => hill_cost(img),
            CostAlgo::HillEvolved => hill_evolved_cost(img),
            CostAlgo::Suniward => suniward_cost(img),
            CostAlgo::SuniwardEvolved => suniward_evolved_cost(img),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostAlgo::Wow => "wow",
            CostAlgo::WowEvolved => "wow-e",
            CostAlgo::Hill => "hill",
            CostAlgo::HillEvolved => "hill-e",
            CostAlgo::Suniward => "suni",
            CostAlgo::SuniwardEvolved => "suni-e",
        }
    }

    pub fn parse(name: &str) -> Option<CostAlgo> {
        match name {
            "wow" => Some(CostAlgo::Wow),
            "wow-e" | "wow-evolved" => Some(CostAlgo::WowEvolved),
            "hill" => Some(CostAlgo::Hill),
            "hill-e" | "hill-evolved" => Some(CostAlgo::HillEvolved),
            "suni" | "suniward" => Some(CostAlgo::Suniward),
            "suni-e" | "suniward-evolved" => Some(CostAlgo::SuniwardEvolved),
            _ => None,
        }
    }
}

impl std::fmt::Display for CostAlgo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn fixture(seed: u64) -> GrayImage {
        synth::textured_cover(64, 64, seed)
    }

    #[test]
    fn db8_bank_shapes_and_symmetries() {
        let bank = db8_bank();
        assert_eq!(bank.kernels.len(), 3);
        for k in &bank.kernels {
            assert_eq!(k.rows(), 16);
            assert_eq!(k.cols(), 16);
        }
        // g*g^T is symmetric, h*g^T transposes onto g*h^T
        assert_eq!(bank.kernels[2], bank.kernels[2].transposed());
        assert_eq!(bank.kernels[0], bank.kernels[1].transposed());
        for k in &bank.kernels {
            assert!(k.tap_sum().abs() <= 1e-10, "tap sum {}", k.tap_sum());
        }
    }

    #[test]
    fn wow_constant_image_is_all_wet() {
        let img = GrayImage::filled(32, 32, 128);
        let pair = wow_cost(&img);
        assert!(pair.rho_plus.values().iter().all(|v| v.is_infinite()));
        assert!(pair.rho_minus.values().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn wow_costs_strictly_positive() {
        let pair = wow_cost(&fixture(5));
        assert!(pair.rho_plus.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn wow_evolved_constant_image_is_all_wet() {
        let img = GrayImage::filled(32, 32, 100);
        let pair = wow_evolved_cost(&img);
        assert!(pair.rho_plus.values().iter().all(|v| v.is_infinite()));
        assert!(pair.rho_minus.values().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn wow_evolved_boundary_wetting() {
        let mut img = fixture(7);
        img.set(3, 4, 0);
        img.set(10, 11, 255);
        let pair = wow_evolved_cost(&img);
        assert!(pair.rho_minus.get(3, 4).is_infinite());
        assert!(pair.rho_plus.get(10, 11).is_infinite());
        assert!(pair.rho_plus.get(3, 4).is_finite() || pair.rho_plus.get(3, 4).is_infinite());
    }

    #[test]
    fn wow_evolved_floor_applies() {
        let pair = wow_evolved_cost(&fixture(9));
        for &v in pair.rho_plus.values() {
            assert!(v.is_infinite() || v >= WOW_EVOLVED_THETA);
        }
    }

    #[test]
    fn wow_evolved_clamp_fraction_near_five_percent() {
        let img = fixture(13);
        let before = wow_evolved_cost_unclamped(&img);
        let after = wow_evolved_cost(&img);
        let n = img.len() as f64;
        for (pre, post) in [
            (&before.rho_plus, &after.rho_plus),
            (&before.rho_minus, &after.rho_minus),
        ] {
            let finite_before = pre.values().iter().filter(|v| v.is_finite()).count();
            let newly_inf = pre
                .values()
                .iter()
                .zip(post.values())
                .filter(|(a, b)| a.is_finite() && b.is_infinite())
                .count();
            let fraction = newly_inf as f64 / finite_before as f64;
            assert!(
                (fraction - WOW_EVOLVED_CLAMP_FRACTION).abs() <= 1.0 / n + 1e-12,
                "clamped fraction {fraction}"
            );
        }
    }

    #[test]
    fn hill_constant_image_cost() {
        let img = GrayImage::filled(48, 48, 77);
        let pair = hill_cost(&img);
        // xi = 0 so the cost is 1/eps everywhere; smoothing preserves it
        for &v in pair.rho_plus.values() {
            if v.is_finite() {
                assert!((v - 1.0 / HILL_EPSILON).abs() / (1.0 / HILL_EPSILON) < 1e-9);
            }
        }
        // only saturated pixels are wet, and 77 saturates nowhere
        assert!(pair.rho_plus.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn hill_transpose_equivariance() {
        let img = fixture(21);
        let direct = hill_cost(&img.transposed());
        let transposed = hill_cost(&img);
        for (a, b) in direct
            .rho_plus
            .values()
            .iter()
            .zip(transposed.rho_plus.transposed().values())
        {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn hill_evolved_equals_hill_with_gaussian_smoothing() {
        let img = fixture(23);
        let evolved = hill_evolved_cost(&img);
        let forced = hill_cost_with_smoothing(&img, &gaussian_kernel(3.0, 4.0).unwrap());
        assert_eq!(evolved, forced);
    }

    #[test]
    fn hill_evolved_constant_image_cost() {
        let img = GrayImage::filled(48, 48, 200);
        let pair = hill_evolved_cost(&img);
        for &v in pair.rho_plus.values() {
            assert!((v - 1.0 / HILL_EPSILON).abs() / (1.0 / HILL_EPSILON) < 1e-9);
        }
    }

    #[test]
    fn suniward_constant_image_cost_is_abs_tap_sum() {
        let img = GrayImage::filled(40, 40, 128);
        let pair = suniward_cost(&img);
        let bank = db8_bank();
        let expect: f64 = bank
            .kernels
            .iter()
            .map(|k| k.taps().iter().map(|t| t.abs()).sum::<f64>())
            .sum();
        for &v in pair.rho_plus.values() {
            assert!((v - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn suniward_transpose_equivariance() {
        let img = fixture(27);
        let direct = suniward_cost(&img.transposed());
        let transposed = suniward_cost(&img).rho_plus.transposed();
        for (a, b) in direct.rho_plus.values().iter().zip(transposed.values()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn suniward_evolved_boundary_rules_inclusive() {
        let mut img = fixture(31);
        img.set(0, 0, 250);
        img.set(1, 1, 5);
        img.set(2, 2, 249);
        img.set(3, 3, 6);
        let pair = suniward_evolved_cost(&img);
        assert!(pair.rho_plus.get(0, 0).is_infinite());
        assert!(pair.rho_minus.get(1, 1).is_infinite());
        assert!(pair.rho_plus.get(2, 2).is_finite());
        assert!(pair.rho_minus.get(3, 3).is_finite());
    }

    #[test]
    fn suniward_evolved_constant_midgray() {
        let img = GrayImage::filled(40, 40, 128);
        let pair = suniward_evolved_cost(&img);
        let bank = db8_bank();
        let expect: f64 = bank
            .kernels
            .iter()
            .enumerate()
            .map(|(i, k)| {
                SUNIWARD_EVOLVED_BETA[i]
                    * SUNIWARD_EVOLVED_ALPHA[i]
                    * k.taps().iter().map(|t| t.abs()).sum::<f64>()
            })
            .sum();
        for &v in pair.rho_plus.values() {
            assert!((v - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn suniward_evolved_degenerate_params_match_original() {
        let img = fixture(33);
        let degenerate = suniward_cost_with(&img, [1.0; 3], [1.0; 3], 0, SUNIWARD_EPSILON);
        let original = suniward_cost(&img);
        assert_eq!(degenerate, original);
    }

    #[test]
    fn all_six_have_valid_outputs() {
        let img = fixture(35);
        for algo in CostAlgo::ALL {
            let pair = algo.compute(&img);
            assert_eq!(pair.width(), img.width());
            assert_eq!(pair.height(), img.height());
            assert!(!pair.rho_plus.has_nan() && !pair.rho_minus.has_nan());
            assert!(pair.rho_plus.values().iter().all(|&v| v >= 0.0));
            assert!(pair.rho_minus.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn texture_gets_cheaper_costs_than_flat() {
        // left half flat, right half noise; finite mean cost must be higher
        // on the flat side for every function
        let img = synth::flat_vs_noise_cover(64, 64, 41);
        for algo in CostAlgo::ALL {
            let pair = algo.compute(&img);
            let mut flat = (0.0, 0usize);
            let mut noisy = (0.0, 0usize);
            for r in 0..64 {
                for c in 0..64 {
                    let v = pair.rho_plus.get(r, c);
                    if v.is_finite() {
                        if c < 32 {
                            flat = (flat.0 + v, flat.1 + 1);
                        } else {
                            noisy = (noisy.0 + v, noisy.1 + 1);
                        }
                    }
                }
            }
            let flat_mean = flat.0 / flat.1.max(1) as f64;
            let noisy_mean = noisy.0 / noisy.1.max(1) as f64;
            assert!(
                flat_mean > noisy_mean,
                "{algo}: flat {flat_mean} vs noisy {noisy_mean}"
            );
        }
    }

    #[test]
    fn algo_names_round_trip() {
        for algo in CostAlgo::ALL {
            assert_eq!(CostAlgo::parse(algo.name()), Some(algo));
        }
        assert_eq!(CostAlgo::parse("dct"), None);
    }
}
