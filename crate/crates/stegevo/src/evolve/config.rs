//! Run configuration, loadable from TOML or JSON.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config parse: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which reading of the promotion threshold applies: accept candidates
/// whose accurate score is within epsilon below the initial score, or
/// require them to beat it by epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromotionRule {
    #[serde(rename = "init-minus-epsilon")]
    InitMinusEpsilon,
    #[serde(rename = "init-plus-epsilon")]
    InitPlusEpsilon,
}

impl PromotionRule {
    pub fn promotes(&self, accurate: f64, s_init: f64, epsilon: f64) -> bool {
        // 1e-12 slack so decimal thresholds like 0.1053 - 0.01 behave as
        // written rather than as their binary representations
        match self {
            PromotionRule::InitMinusEpsilon => accurate >= s_init - epsilon - 1e-12,
            PromotionRule::InitPlusEpsilon => accurate >= s_init + epsilon - 1e-12,
        }
    }
}

/// Where the cover corpus comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Directory of `.pgm` covers; mutually exclusive with `synthetic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticCorpus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCorpus {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

/// LLM provider settings. The API key itself never appears in config or
/// journals, only the name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    /// "mock" or "http".
    pub provider: String,
    #[serde(default)]
    pub mock_seed: u64,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_llm_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".into()
}
fn default_model() -> String {
    "gpt-4o".into()
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_llm_temperature() -> f64 {
    1.0
}
fn default_timeout_secs() -> u64 {
    60
}
fn default_max_retries() -> u32 {
    2
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            provider: "mock".into(),
            mock_seed: 0,
            endpoint: default_endpoint(),
            model: default_model(),
            api_key_env: default_api_key_env(),
            temperature: default_llm_temperature(),
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Master seed; with the mock provider the whole run is a pure
    /// function of this config.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    /// Sub-database count.
    #[serde(default = "default_n")]
    pub n: usize,
    /// References per prompt.
    #[serde(default = "default_r")]
    pub r: usize,
    /// Generations per prompt.
    #[serde(default = "default_n_p")]
    pub n_p: usize,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default = "default_t_decay")]
    pub t_decay: f64,
    #[serde(default = "default_t_floor")]
    pub t_floor: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in_iters: u64,
    #[serde(default = "default_stage2_period")]
    pub stage2_period: u64,
    /// Refresh trigger by iteration count; `refresh_every_hours` switches
    /// to wall clock for long unattended runs.
    #[serde(default = "default_refresh_iters", skip_serializing_if = "Option::is_none")]
    pub refresh_every_iters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refresh_every_hours: Option<f64>,
    #[serde(default = "default_refresh_fraction")]
    pub refresh_fraction: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon_margin: f64,
    #[serde(default = "default_promotion")]
    pub promotion_comparator: PromotionRule,
    /// Minimum preliminary score for pool augmentation; defaults to the
    /// initial program's accurate score when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aug_prelim_min: Option<f64>,
    #[serde(default = "default_ps_threshold")]
    pub ps_threshold: usize,
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    #[serde(default = "default_prelim_rate")]
    pub prelim_rate: f64,
    #[serde(default = "default_tol")]
    pub tol_bpp: f64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Seed programs: built-in names (`wow`, `hill`, ...) or paths to
    /// `.scf` files. The first entry is the initial program.
    pub seed_programs: Vec<String>,
    /// Algorithms behind the initial evaluator pool.
    #[serde(default = "default_pool_algos")]
    pub pool_algos: Vec<String>,
    /// Natural-language instruction appended to every prompt; a built-in
    /// instruction is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub llm: LlmConfig,
}

fn default_max_iters() -> u64 {
    20
}
fn default_n() -> usize {
    2
}
fn default_r() -> usize {
    1
}
fn default_n_p() -> usize {
    4
}
fn default_t0() -> f64 {
    0.1
}
fn default_t_decay() -> f64 {
    0.97
}
fn default_t_floor() -> f64 {
    0.01
}
fn default_burn_in() -> u64 {
    10
}
fn default_stage2_period() -> u64 {
    5
}
fn default_refresh_iters() -> Option<u64> {
    Some(40)
}
fn default_refresh_fraction() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_promotion() -> PromotionRule {
    PromotionRule::InitMinusEpsilon
}
fn default_ps_threshold() -> usize {
    10
}
fn default_rates() -> Vec<f64> {
    vec![0.4, 0.3, 0.2, 0.1]
}
fn default_prelim_rate() -> f64 {
    0.4
}
fn default_tol() -> f64 {
    1e-3
}
fn default_threads() -> usize {
    1
}
fn default_pool_algos() -> Vec<String> {
    vec!["wow".into(), "hill".into(), "suni".into()]
}

impl EvolutionConfig {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(&path)?;
        let config: EvolutionConfig =
            if path.as_ref().extension().map(|e| e == "json").unwrap_or(false) {
                serde_json::from_str(&text)?
            } else {
                toml::from_str(&text)?
            };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.n == 0 || self.r == 0 || self.n_p == 0 {
            return fail("n, r, and n_p must be positive");
        }
        if !(self.t0 > 0.0 && self.t_floor > 0.0 && self.t_decay > 0.0 && self.t_decay <= 1.0) {
            return fail("temperature schedule needs t0 > 0, t_floor > 0, 0 < t_decay <= 1");
        }
        if !(0.0..=1.0).contains(&self.refresh_fraction) {
            return fail("refresh_fraction must lie in [0, 1]");
        }
        if self.rates.is_empty()
            || self
                .rates
                .iter()
                .any(|r| !(*r > 0.0 && *r <= crate::embed::LOG2_3))
        {
            return fail("every rate must lie in (0, log2(3)]");
        }
        if !(self.prelim_rate > 0.0 && self.prelim_rate <= crate::embed::LOG2_3) {
            return fail("prelim_rate must lie in (0, log2(3)]");
        }
        if self.seed_programs.is_empty() {
            return fail("at least one seed program is required");
        }
        if self.corpus.dir.is_some() == self.corpus.synthetic.is_some() {
            return fail("corpus needs exactly one of `dir` or `synthetic`");
        }
        if self.llm.provider != "mock" && self.llm.provider != "http" {
            return fail("llm.provider must be \"mock\" or \"http\"");
        }
        if self.stage2_period == 0 {
            return fail("stage2_period must be positive");
        }
        Ok(())
    }

    /// Temperature at a 1-based iteration: `max(t_floor, t0 * decay^(k-1))`.
    pub fn temperature_at(&self, iteration: u64) -> f64 {
        let k = iteration.saturating_sub(1) as f64;
        (self.t0 * self.t_decay.powf(k)).max(self.t_floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        r#"
            seed_programs = ["hill"]

            [corpus.synthetic]
            count = 16
            width = 64
            height = 64
            seed = 7
        "#
    }

    #[test]
    fn defaults_match_reference_settings() {
        let c: EvolutionConfig = toml::from_str(minimal_toml()).unwrap();
        c.validate().unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.r, 1);
        assert_eq!(c.n_p, 4);
        assert_eq!(c.burn_in_iters, 10);
        assert_eq!(c.stage2_period, 5);
        assert_eq!(c.t0, 0.1);
        assert_eq!(c.refresh_fraction, 0.5);
        assert_eq!(c.epsilon_margin, 0.01);
        assert_eq!(c.ps_threshold, 10);
        assert_eq!(c.rates, vec![0.4, 0.3, 0.2, 0.1]);
        assert_eq!(c.promotion_comparator, PromotionRule::InitMinusEpsilon);
        assert_eq!(c.pool_algos, vec!["wow", "hill", "suni"]);
    }

    #[test]
    fn temperature_schedule() {
        let c: EvolutionConfig = toml::from_str(minimal_toml()).unwrap();
        assert_eq!(c.temperature_at(1), 0.1);
        assert!((c.temperature_at(2) - 0.097).abs() < 1e-12);
        assert_eq!(c.temperature_at(100_000), 0.01);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c: EvolutionConfig = toml::from_str(minimal_toml()).unwrap();
        c.n = 0;
        assert!(c.validate().is_err());
        let mut c: EvolutionConfig = toml::from_str(minimal_toml()).unwrap();
        c.rates = vec![2.0];
        assert!(c.validate().is_err());
        let mut c: EvolutionConfig = toml::from_str(minimal_toml()).unwrap();
        c.corpus.synthetic = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = format!("{}\nnot_a_field = 3\n", minimal_toml());
        assert!(toml::from_str::<EvolutionConfig>(&bad).is_err());
    }

    #[test]
    fn promotion_rules() {
        assert!(PromotionRule::InitMinusEpsilon.promotes(0.0953, 0.1053, 0.01));
        assert!(!PromotionRule::InitMinusEpsilon.promotes(0.0952, 0.1053, 0.01));
        assert!(!PromotionRule::InitPlusEpsilon.promotes(0.1053, 0.1053, 0.01));
        assert!(PromotionRule::InitPlusEpsilon.promotes(0.1154, 0.1053, 0.01));
    }

    #[test]
    fn round_trips_through_json() {
        let c: EvolutionConfig = toml::from_str(minimal_toml()).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: EvolutionConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c, back);
    }
}
