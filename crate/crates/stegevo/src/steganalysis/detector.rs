//! Linear discriminant detector and exact detection-error evaluation.
//!
//! A detector is a Fisher linear discriminant over the co-occurrence
//! features with ridge regularization: direction
//! `w = (S + r I)^-1 (mu_stego - mu_cover)` with `S` the pooled
//! within-class scatter. The detection error P_E is the minimum average of
//! false-alarm and missed-detection rates over every decision threshold,
//! computed exactly by sweeping the sorted projections.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{extract_features, FeatureVector, FEATURE_SPEC_VERSION};
use crate::image::GrayImage;

/// Base ridge factor relative to `trace(S)/dim`; escalated tenfold until
/// the regularized scatter admits a Cholesky factorization.
const RIDGE_SCALE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("need at least {need} paired images per class, got {got}")]
    TooFewImages { need: usize, got: usize },
    #[error("cover and stego lists differ in length ({covers} vs {stegos})")]
    UnpairedLists { covers: usize, stegos: usize },
    #[error("evaluator i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("evaluator encoding: {0}")]
    Encoding(#[from] serde_json::Error),
    #[error("evaluator was built for feature spec {found}, expected {expected}")]
    FeatureSpecMismatch { found: String, expected: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvaluatorMetadata {
    /// Label of the cost function the training stegos came from.
    pub trained_on: String,
    pub rate_bpp: f64,
    pub train_seed: u64,
    pub feature_spec_version: String,
    /// Set when the scatter matrix needed escalated regularization.
    pub regularization_fallback: bool,
}

/// A trained cover-vs-stego detector: projection weights plus a decision
/// threshold (project > threshold reads "stego").
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Evaluator {
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub metadata: EvaluatorMetadata,
}

impl Evaluator {
    pub fn project(&self, features: &FeatureVector) -> f64 {
        self.weights
            .iter()
            .zip(features.values())
            .map(|(w, x)| w * x)
            .sum()
    }

    pub fn classify_as_stego(&self, features: &FeatureVector) -> bool {
        self.project(features) > self.threshold
    }

    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<(), DetectorError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Evaluator, DetectorError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let e: Evaluator = serde_json::from_reader(file)?;
        if e.metadata.feature_spec_version != FEATURE_SPEC_VERSION {
            return Err(DetectorError::FeatureSpecMismatch {
                found: e.metadata.feature_spec_version.clone(),
                expected: FEATURE_SPEC_VERSION.to_string(),
            });
        }
        Ok(e)
    }
}

/// Trains a Fisher discriminant from per-class feature sets. The threshold
/// is set to the sweep minimizer on the training projections.
pub fn train_from_features(
    cover_feats: &[FeatureVector],
    stego_feats: &[FeatureVector],
    mut metadata: EvaluatorMetadata,
) -> Result<Evaluator, DetectorError> {
    if cover_feats.len() != stego_feats.len() {
        return Err(DetectorError::UnpairedLists {
            covers: cover_feats.len(),
            stegos: stego_feats.len(),
        });
    }
    if cover_feats.len() < 2 {
        return Err(DetectorError::TooFewImages {
            need: 2,
            got: cover_feats.len(),
        });
    }
    let d = cover_feats[0].dim();
    let mean = |feats: &[FeatureVector]| -> DVector<f64> {
        let mut m = DVector::zeros(d);
        for f in feats {
            for (i, &v) in f.values().iter().enumerate() {
                m[i] += v;
            }
        }
        m / feats.len() as f64
    };
    let mu_c = mean(cover_feats);
    let mu_s = mean(stego_feats);

    let mut scatter = DMatrix::<f64>::zeros(d, d);
    let mut accumulate = |feats: &[FeatureVector], mu: &DVector<f64>| {
        for f in feats {
            let x = DVector::from_column_slice(f.values()) - mu;
            scatter.ger(1.0, &x, &x, 1.0);
        }
    };
    accumulate(cover_feats, &mu_c);
    accumulate(stego_feats, &mu_s);
    let denom = (cover_feats.len() + stego_feats.len()) as f64 - 2.0;
    scatter /= denom;

    let trace: f64 = scatter.diagonal().sum();
    let mut ridge = if trace > 0.0 {
        RIDGE_SCALE * trace / d as f64
    } else {
        metadata.regularization_fallback = true;
        1e-9
    };
    let diff = &mu_s - &mu_c;
    let weights = loop {
        let mut reg = scatter.clone();
        for i in 0..d {
            reg[(i, i)] += ridge;
        }
        match Cholesky::new(reg) {
            Some(chol) => break chol.solve(&diff),
            None => {
                metadata.regularization_fallback = true;
                ridge *= 10.0;
            }
        }
    };

    let project = |f: &FeatureVector| -> f64 {
        weights
            .iter()
            .zip(f.values())
            .map(|(w, x)| w * x)
            .sum()
    };
    let cover_scores: Vec<f64> = cover_feats.iter().map(project).collect();
    let stego_scores: Vec<f64> = stego_feats.iter().map(project).collect();
    let (_, threshold) = min_avg_error_with_threshold(&cover_scores, &stego_scores);

    Ok(Evaluator {
        weights: weights.as_slice().to_vec(),
        threshold,
        metadata,
    })
}

/// Trains a detector from paired cover/stego images.
pub fn train_detector(
    covers: &[GrayImage],
    stegos: &[GrayImage],
    seed: u64,
    trained_on: &str,
    rate_bpp: f64,
) -> Result<Evaluator, DetectorError> {
    let cover_feats: Vec<FeatureVector> = covers.iter().map(extract_features).collect();
    let stego_feats: Vec<FeatureVector> = stegos.iter().map(extract_features).collect();
    train_from_features(
        &cover_feats,
        &stego_feats,
        EvaluatorMetadata {
            trained_on: trained_on.to_string(),
            rate_bpp,
            train_seed: seed,
            feature_spec_version: FEATURE_SPEC_VERSION.to_string(),
            regularization_fallback: false,
        },
    )
}

/// Minimum average decision error over all thresholds; scores above the
/// threshold read "stego". Exact: the optimum is attained at one of the
/// `2N+1` cuts around the sorted scores.
pub fn min_avg_error(cover_scores: &[f64], stego_scores: &[f64]) -> f64 {
    min_avg_error_with_threshold(cover_scores, stego_scores).0
}

/// As [`min_avg_error`], also returning the minimizing threshold.
pub fn min_avg_error_with_threshold(cover_scores: &[f64], stego_scores: &[f64]) -> (f64, f64) {
    assert!(
        !cover_scores.is_empty() && !stego_scores.is_empty(),
        "score sets must be non-empty"
    );
    let mut covers = cover_scores.to_vec();
    let mut stegos = stego_scores.to_vec();
    covers.sort_by(|a, b| a.partial_cmp(b).expect("scores are not NaN"));
    stegos.sort_by(|a, b| a.partial_cmp(b).expect("scores are not NaN"));

    let mut all: Vec<f64> = covers.iter().chain(stegos.iter()).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("scores are not NaN"));
    let mut candidates = Vec::with_capacity(all.len() + 1);
    candidates.push(all[0] - 1.0);
    for pair in all.windows(2) {
        candidates.push(0.5 * (pair[0] + pair[1]));
    }
    candidates.push(all[all.len() - 1] + 1.0);

    let nc = covers.len() as f64;
    let ns = stegos.len() as f64;
    let mut best = (f64::INFINITY, 0.0);
    for &t in &candidates {
        // false alarm: covers scored above t; missed: stegos at or below t
        let fa = covers.len() - covers.partition_point(|&v| v <= t);
        let md = stegos.partition_point(|&v| v <= t);
        let pe = 0.5 * (fa as f64 / nc + md as f64 / ns);
        if pe < best.0 {
            best = (pe, t);
        }
    }
    best
}

/// P_E of an evaluator against cover/stego image sets.
pub fn detect_error(e: &Evaluator, covers: &[GrayImage], stegos: &[GrayImage]) -> f64 {
    let cover_scores: Vec<f64> = covers
        .iter()
        .map(|img| e.project(&extract_features(img)))
        .collect();
    let stego_scores: Vec<f64> = stegos
        .iter()
        .map(|img| e.project(&extract_features(img)))
        .collect();
    min_avg_error(&cover_scores, &stego_scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Prng;

    fn meta() -> EvaluatorMetadata {
        EvaluatorMetadata {
            trained_on: "synthetic".into(),
            rate_bpp: 0.4,
            train_seed: 0,
            feature_spec_version: FEATURE_SPEC_VERSION.into(),
            regularization_fallback: false,
        }
    }

    fn gaussian_features(
        rng: &mut Prng,
        n: usize,
        dim: usize,
        mean: &[f64],
        spread: f64,
    ) -> Vec<FeatureVector> {
        (0..n)
            .map(|_| {
                FeatureVector::from_raw(
                    (0..dim)
                        .map(|i| {
                            // sum of 4 uniforms, roughly gaussian
                            let z: f64 =
                                (0..4).map(|_| rng.next_f64() - 0.5).sum::<f64>() / 2.0;
                            mean[i] + spread * z
                        })
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn separable_classes_train_to_zero_error() {
        let mut rng = Prng::new(3);
        let dim = 5;
        let covers = gaussian_features(&mut rng, 20, dim, &[0.0; 5], 0.05);
        let stegos = gaussian_features(&mut rng, 20, dim, &[1.0; 5], 0.05);
        let e = train_from_features(&covers, &stegos, meta()).unwrap();
        let cs: Vec<f64> = covers.iter().map(|f| e.project(f)).collect();
        let ss: Vec<f64> = stegos.iter().map(|f| e.project(f)).collect();
        assert_eq!(min_avg_error(&cs, &ss), 0.0);
        assert!(stegos.iter().all(|f| e.classify_as_stego(f)));
        assert!(covers.iter().all(|f| !e.classify_as_stego(f)));
    }

    #[test]
    fn identical_classes_give_half_and_fallback() {
        let feats: Vec<FeatureVector> = (0..10)
            .map(|i| FeatureVector::from_raw(vec![i as f64, 1.0, 2.0]))
            .collect();
        let e = train_from_features(&feats, &feats, meta()).unwrap();
        let scores: Vec<f64> = feats.iter().map(|f| e.project(f)).collect();
        assert!((min_avg_error(&scores, &scores) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fld_direction_matches_dense_solve_oracle() {
        let mut rng = Prng::new(11);
        let dim = 6;
        let mu0 = [0.2, -0.1, 0.4, 0.0, 0.3, -0.2];
        let mu1 = [0.5, 0.1, 0.1, 0.2, 0.4, 0.0];
        let covers = gaussian_features(&mut rng, 40, dim, &mu0, 0.3);
        let stegos = gaussian_features(&mut rng, 40, dim, &mu1, 0.3);
        let e = train_from_features(&covers, &stegos, meta()).unwrap();

        // independent oracle: build the regularized scatter and invert by
        // Gauss-Jordan elimination, then compare directions
        let n = covers.len() + stegos.len();
        let mean = |fs: &[FeatureVector]| -> Vec<f64> {
            let mut m = vec![0.0; dim];
            for f in fs {
                for (i, v) in f.values().iter().enumerate() {
                    m[i] += v / fs.len() as f64;
                }
            }
            m
        };
        let m0 = mean(&covers);
        let m1 = mean(&stegos);
        let mut s = vec![vec![0.0f64; dim]; dim];
        for (fs, mu) in [(&covers, &m0), (&stegos, &m1)] {
            for f in fs.iter() {
                for i in 0..dim {
                    for j in 0..dim {
                        s[i][j] += (f.values()[i] - mu[i]) * (f.values()[j] - mu[j]);
                    }
                }
            }
        }
        let denom = n as f64 - 2.0;
        let trace: f64 = (0..dim).map(|i| s[i][i] / denom).sum();
        let ridge = RIDGE_SCALE * trace / dim as f64;
        let mut aug = vec![vec![0.0f64; 2 * dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                aug[i][j] = s[i][j] / denom + if i == j { ridge } else { 0.0 };
            }
            aug[i][dim + i] = 1.0;
        }
        for col in 0..dim {
            let pivot = (col..dim)
                .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
                .unwrap();
            aug.swap(col, pivot);
            let p = aug[col][col];
            for j in 0..2 * dim {
                aug[col][j] /= p;
            }
            for row in 0..dim {
                if row != col {
                    let factor = aug[row][col];
                    for j in 0..2 * dim {
                        aug[row][j] -= factor * aug[col][j];
                    }
                }
            }
        }
        let mut oracle_w = vec![0.0f64; dim];
        for i in 0..dim {
            for j in 0..dim {
                oracle_w[i] += aug[i][dim + j] * (m1[j] - m0[j]);
            }
        }

        let dot: f64 = e.weights.iter().zip(&oracle_w).map(|(a, b)| a * b).sum();
        let na: f64 = e.weights.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = oracle_w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cosine = dot / (na * nb);
        assert!(cosine > 1.0 - 1e-9, "cosine {cosine}");
    }

    #[test]
    fn perfectly_separated_scores() {
        let pe = min_avg_error(&[0.0, 1.0, 2.0], &[5.0, 6.0, 7.0]);
        assert_eq!(pe, 0.0);
    }

    #[test]
    fn identical_scores_give_half() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let pe = min_avg_error(&s, &s);
        assert!((pe - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hand_listed_projections_match_brute_force() {
        let covers = [0.1, 0.9, 0.35, 0.42, 0.55, 0.61];
        let stegos = [0.5, 0.45, 0.8, 0.3, 0.95, 0.7];
        let fast = min_avg_error(&covers, &stegos);

        // brute force over the same candidate cuts with naive counting
        let mut all: Vec<f64> = covers.iter().chain(stegos.iter()).copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut cands = vec![all[0] - 1.0, all[all.len() - 1] + 1.0];
        for w in all.windows(2) {
            cands.push(0.5 * (w[0] + w[1]));
        }
        let mut best = f64::INFINITY;
        for t in cands {
            let fa = covers.iter().filter(|&&v| v > t).count() as f64 / 6.0;
            let md = stegos.iter().filter(|&&v| v <= t).count() as f64 / 6.0;
            best = best.min(0.5 * (fa + md));
        }
        assert_eq!(fast, best);
    }

    #[test]
    fn monotone_transform_invariance() {
        let mut rng = Prng::new(5);
        let covers: Vec<f64> = (0..40).map(|_| rng.next_f64()).collect();
        let stegos: Vec<f64> = (0..40).map(|_| rng.next_f64() + 0.2).collect();
        let base = min_avg_error(&covers, &stegos);
        let warp = |v: f64| (3.0 * v).exp() + v;
        let wc: Vec<f64> = covers.iter().map(|&v| warp(v)).collect();
        let ws: Vec<f64> = stegos.iter().map(|&v| warp(v)).collect();
        assert_eq!(base, min_avg_error(&wc, &ws));
    }

    #[test]
    fn pe_never_exceeds_half_plus_slack() {
        let mut rng = Prng::new(9);
        for _ in 0..20 {
            let nc = 3 + rng.next_below(10) as usize;
            let ns = 3 + rng.next_below(10) as usize;
            let covers: Vec<f64> = (0..nc).map(|_| rng.next_f64()).collect();
            let stegos: Vec<f64> = (0..ns).map(|_| rng.next_f64()).collect();
            let pe = min_avg_error(&covers, &stegos);
            assert!(pe <= 0.5 + 1.0 / (2.0 * nc.min(ns) as f64) + 1e-12);
            assert!(pe >= 0.0);
        }
    }

    #[test]
    fn evaluator_round_trips_through_json() {
        let mut rng = Prng::new(17);
        let covers = gaussian_features(&mut rng, 5, 4, &[0.0; 4], 0.1);
        let stegos = gaussian_features(&mut rng, 5, 4, &[0.6; 4], 0.1);
        let e = train_from_features(&covers, &stegos, meta()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.json");
        e.save(&path).unwrap();
        let back = Evaluator::load(&path).unwrap();
        assert_eq!(e, back);
    }
}
