//! Desk-scale steganalysis: detectors, detection error, and the scoring
//! pipelines used by the evolutionary search.
//!
//! The detector family is deliberately lightweight (truncated-difference
//! co-occurrence features plus a regularized linear discriminant) so the
//! full pipeline trains in seconds on a desk corpus; everything behind the
//! [`Evaluator`] interface can be swapped for a heavier detector without
//! touching the callers.

pub mod detector;
pub mod features;

pub use detector::{
    detect_error, min_avg_error, min_avg_error_with_threshold, train_detector,
    train_from_features, DetectorError, Evaluator, EvaluatorMetadata,
};
pub use features::{extract_features, FeatureVector, FEATURE_DIM, FEATURE_SPEC_VERSION};

use thiserror::Error;

use crate::cost::CostFunction;
use crate::embed::{embed, per_image_seed, EmbedError};
use crate::image::GrayImage;
use crate::par::par_map;
use crate::prng::{splitmix64, Prng};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("cost function fault: {0}")]
    CostFault(#[from] crate::dsl::RuntimeFault),
    #[error("embedding failed: {0}")]
    Embed(#[from] EmbedError),
    #[error("detector: {0}")]
    Detector(#[from] DetectorError),
    #[error("corpus of {got} images cannot honor a 5:1:4 split (need at least {need})")]
    CorpusTooSmall { need: usize, got: usize },
    #[error("evaluator pool is empty")]
    EmptyPool,
    #[error("relative gain needs a positive baseline, got {0}")]
    ZeroBaseline(f64),
}

/// An append-only, non-empty collection of trained detectors.
#[derive(Debug, Clone)]
pub struct EvaluatorPool {
    evaluators: Vec<Evaluator>,
}

impl EvaluatorPool {
    pub fn new(initial: Vec<Evaluator>) -> Result<Self, ScoreError> {
        if initial.is_empty() {
            return Err(ScoreError::EmptyPool);
        }
        Ok(EvaluatorPool {
            evaluators: initial,
        })
    }

    /// Pools only grow during a run.
    pub fn push(&mut self, evaluator: Evaluator) {
        self.evaluators.push(evaluator);
    }

    pub fn len(&self) -> usize {
        self.evaluators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluators.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Evaluator> {
        self.evaluators.iter()
    }
}

/// Rounds a score to four decimals, the resolution that defines cluster
/// identity in the program database.
pub fn round_score(score: f64) -> f64 {
    (score * 1e4).round() / 1e4
}

/// Relative performance gain of an evolved detector error over the
/// original: `(pe_evolved - pe_original) / pe_original`.
pub fn relative_gain(pe_evolved: f64, pe_original: f64) -> Result<f64, ScoreError> {
    if pe_original <= 0.0 {
        return Err(ScoreError::ZeroBaseline(pe_original));
    }
    Ok((pe_evolved - pe_original) / pe_original)
}

/// Shared parameters of the scoring pipelines.
#[derive(Debug, Clone)]
pub struct Scoring {
    /// Embedding rate used to generate stegos.
    pub rate_bpp: f64,
    /// Entropy tolerance handed to the lambda solver, bits per pixel.
    pub tol: f64,
    /// Run-level seed; each image embeds with a seed derived from this and
    /// its content, so corpus order never matters.
    pub seed: u64,
    /// Worker threads for per-image work.
    pub threads: usize,
}

impl Default for Scoring {
    fn default() -> Self {
        Scoring {
            rate_bpp: 0.4,
            tol: 1e-3,
            seed: 0,
            threads: 1,
        }
    }
}

impl Scoring {
    /// Embeds every cover with the cost function at the configured rate.
    pub fn embed_corpus(
        &self,
        costfn: &dyn CostFunction,
        covers: &[GrayImage],
    ) -> Result<Vec<GrayImage>, ScoreError> {
        let results = par_map(covers, self.threads, |cover| -> Result<GrayImage, ScoreError> {
            let costs = costfn.cost_pair(cover)?;
            let result = embed(
                cover,
                &costs,
                self.rate_bpp,
                per_image_seed(self.seed, cover),
                self.tol,
            )?;
            Ok(result.stego)
        });
        results.into_iter().collect()
    }

    /// Mean detection error of the cost function against every evaluator
    /// in the pool, rounded to four decimals. Any cost-function fault or
    /// embedding failure is the caller's signal to discard the candidate.
    pub fn preliminary_score(
        &self,
        pool: &EvaluatorPool,
        costfn: &dyn CostFunction,
        covers: &[GrayImage],
    ) -> Result<f64, ScoreError> {
        if pool.is_empty() {
            return Err(ScoreError::EmptyPool);
        }
        let stegos = self.embed_corpus(costfn, covers)?;
        let cover_feats = par_map(covers, self.threads, extract_features);
        let stego_feats = par_map(&stegos, self.threads, extract_features);
        let mut total = 0.0;
        for evaluator in pool.iter() {
            let cs: Vec<f64> = cover_feats.iter().map(|f| evaluator.project(f)).collect();
            let ss: Vec<f64> = stego_feats.iter().map(|f| evaluator.project(f)).collect();
            total += min_avg_error(&cs, &ss);
        }
        Ok(round_score(total / pool.len() as f64))
    }

    /// Accurate evaluation: embeds the corpus, trains a dedicated detector
    /// on the train split, and reports held-out P_E on the test split of a
    /// 5:1:4 train/validation/test partition. The validation share is held
    /// out untouched (a linear discriminant has nothing to early-stop);
    /// the returned evaluator is the candidate for pool augmentation.
    pub fn accurate_score(
        &self,
        costfn: &dyn CostFunction,
        covers: &[GrayImage],
    ) -> Result<(f64, Evaluator), ScoreError> {
        let n = covers.len();
        if n < 10 {
            return Err(ScoreError::CorpusTooSmall { need: 10, got: n });
        }
        let n_train = n * 5 / 10;
        let n_val = n / 10;

        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = Prng::new(splitmix64(self.seed ^ 0x_5011_7000));
        for i in (1..n).rev() {
            let j = rng.next_below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        let train_idx = &order[..n_train];
        let test_idx = &order[n_train + n_val..];

        let stegos = self.embed_corpus(costfn, covers)?;
        let cover_feats = par_map(covers, self.threads, extract_features);
        let stego_feats = par_map(&stegos, self.threads, extract_features);

        let pick = |idx: &[usize], feats: &[FeatureVector]| -> Vec<FeatureVector> {
            idx.iter().map(|&i| feats[i].clone()).collect()
        };
        let evaluator = train_from_features(
            &pick(train_idx, &cover_feats),
            &pick(train_idx, &stego_feats),
            EvaluatorMetadata {
                trained_on: costfn.label(),
                rate_bpp: self.rate_bpp,
                train_seed: self.seed,
                feature_spec_version: FEATURE_SPEC_VERSION.to_string(),
                regularization_fallback: false,
            },
        )?;

        let cs: Vec<f64> = test_idx
            .iter()
            .map(|&i| evaluator.project(&cover_feats[i]))
            .collect();
        let ss: Vec<f64> = test_idx
            .iter()
            .map(|&i| evaluator.project(&stego_feats[i]))
            .collect();
        Ok((min_avg_error(&cs, &ss), evaluator))
    }

    /// Trains one pool evaluator per named algorithm on this corpus.
    pub fn initial_pool(
        &self,
        algos: &[crate::cost::CostAlgo],
        covers: &[GrayImage],
    ) -> Result<EvaluatorPool, ScoreError> {
        let mut evaluators = Vec::with_capacity(algos.len());
        for algo in algos {
            let stegos = self.embed_corpus(algo, covers)?;
            evaluators.push(train_detector(
                covers,
                &stegos,
                self.seed,
                algo.name(),
                self.rate_bpp,
            )?);
        }
        EvaluatorPool::new(evaluators)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostAlgo;
    use crate::synth;

    fn corpus() -> Vec<GrayImage> {
        synth::corpus(20, 48, 48, 99)
    }

    #[test]
    fn preliminary_score_is_pool_mean() {
        let covers = corpus();
        let scoring = Scoring {
            seed: 5,
            ..Default::default()
        };
        let pool1 = scoring.initial_pool(&[CostAlgo::Wow], &covers).unwrap();
        let pool2 = scoring.initial_pool(&[CostAlgo::Hill], &covers).unwrap();
        let both = scoring
            .initial_pool(&[CostAlgo::Wow, CostAlgo::Hill], &covers)
            .unwrap();
        let s1 = scoring
            .preliminary_score(&pool1, &CostAlgo::Suniward, &covers)
            .unwrap();
        let s2 = scoring
            .preliminary_score(&pool2, &CostAlgo::Suniward, &covers)
            .unwrap();
        let s12 = scoring
            .preliminary_score(&both, &CostAlgo::Suniward, &covers)
            .unwrap();
        // rounding happens after the mean, so allow one rounding step
        assert!((s12 - (s1 + s2) / 2.0).abs() <= 1e-4 + 1e-12);
    }

    #[test]
    fn preliminary_score_invariant_to_cover_order() {
        let covers = corpus();
        let scoring = Scoring {
            seed: 7,
            ..Default::default()
        };
        let pool = scoring.initial_pool(&[CostAlgo::Wow], &covers).unwrap();
        let forward = scoring
            .preliminary_score(&pool, &CostAlgo::Hill, &covers)
            .unwrap();
        let mut shuffled = covers.clone();
        shuffled.reverse();
        let backward = scoring
            .preliminary_score(&pool, &CostAlgo::Hill, &shuffled)
            .unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn accurate_score_deterministic() {
        let covers = corpus();
        let scoring = Scoring {
            seed: 11,
            ..Default::default()
        };
        let (a, ea) = scoring.accurate_score(&CostAlgo::Wow, &covers).unwrap();
        let (b, eb) = scoring.accurate_score(&CostAlgo::Wow, &covers).unwrap();
        assert_eq!(a, b);
        assert_eq!(ea, eb);
        assert!((0.0..=0.5 + 0.125).contains(&a));
    }

    #[test]
    fn accurate_score_small_corpus_rejected() {
        let covers = synth::corpus(6, 32, 32, 1);
        let scoring = Scoring::default();
        assert!(matches!(
            scoring.accurate_score(&CostAlgo::Wow, &covers),
            Err(ScoreError::CorpusTooSmall { .. })
        ));
    }

    #[test]
    fn threads_do_not_change_results() {
        let covers = corpus();
        let seq = Scoring {
            seed: 13,
            threads: 1,
            ..Default::default()
        };
        let par = Scoring {
            seed: 13,
            threads: 4,
            ..Default::default()
        };
        let pool = seq.initial_pool(&[CostAlgo::Wow], &covers).unwrap();
        let a = seq.preliminary_score(&pool, &CostAlgo::Hill, &covers).unwrap();
        let b = par.preliminary_score(&pool, &CostAlgo::Hill, &covers).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn relative_gain_values() {
        assert!((relative_gain(0.1385, 0.1053).unwrap() - 0.3153).abs() < 5e-4);
        assert!((relative_gain(0.3559, 0.3449).unwrap() - 0.0319).abs() < 5e-4);
        assert_eq!(relative_gain(0.25, 0.25).unwrap(), 0.0);
        assert!(matches!(
            relative_gain(0.1, 0.0),
            Err(ScoreError::ZeroBaseline(_))
        ));
    }

    #[test]
    fn round_score_examples() {
        assert_eq!(round_score(0.10534), 0.1053);
        assert_eq!(round_score(0.10535), 0.1054);
        assert_eq!(round_score(0.0), 0.0);
    }

    #[test]
    fn pool_is_append_only_and_nonempty() {
        assert!(matches!(EvaluatorPool::new(vec![]), Err(ScoreError::EmptyPool)));
        let covers = synth::corpus(10, 32, 32, 3);
        let scoring = Scoring::default();
        let mut pool = scoring.initial_pool(&[CostAlgo::Wow], &covers).unwrap();
        assert_eq!(pool.len(), 1);
        let (_, e) = scoring.accurate_score(&CostAlgo::Hill, &covers).unwrap();
        pool.push(e);
        assert_eq!(pool.len(), 2);
    }
}
