//! The two-stage evolution loop.
//!
//! Stage 1 (every iteration): sample reference(s), build a prompt, draw
//! `n_p` candidates from the LLM, keep the ones that parse and score, and
//! insert them into the program database. Stage 2 (after burn-in, every
//! `stage2_period` iterations): accurately evaluate the candidate set,
//! promote strong programs into the seed set, grow the evaluator pool
//! with detectors that expose preliminary blind spots, reset the database
//! from the seeds, and multi-rate-validate promising candidates. The run
//! stops at the iteration cap or on the first validated superior program.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, EvolutionConfig};
use super::database::{
    CandidateProgram, DbError, InsertOutcome, ProgramDatabase, ProgramId, ProgramStatus,
};
use super::journal::{read_journal, JournalError, JournalRecord, JournalWriter};
use super::llm::{llm_generate, HttpProvider, LlmClient, LlmError, MockProvider, PlaybackProvider};
use super::prompt::{build_prompt, PromptError, SampledRef, DEFAULT_INSTRUCTION};
use crate::cost::CostAlgo;
use crate::dsl::{self, DslCost};
use crate::image::{load_corpus, GrayImage, ImageError};
use crate::prng::Prng;
use crate::steganalysis::{EvaluatorPool, ScoreError, Scoring};

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("corpus: {0}")]
    Image(#[from] ImageError),
    #[error("corpus directory {0} is empty")]
    EmptyCorpus(PathBuf),
    #[error("seed program `{name}`: {message}")]
    BadSeed { name: String, message: String },
    #[error("unknown pool algorithm `{0}`")]
    BadPoolAlgo(String),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("scoring seed programs: {0}")]
    Score(#[from] ScoreError),
    #[error("run directory: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal has no {0} record")]
    IncompleteJournal(&'static str),
    #[error("llm: {0}")]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateOutcome {
    /// "inserted", "duplicate", or "discarded".
    pub disposition: String,
    /// Fault bucket for discarded candidates ("parse", a runtime fault
    /// kind, or "scoring").
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<ProgramId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationReport {
    pub iter: u64,
    pub temperature: f64,
    pub sub_db: usize,
    pub ref_ids: Vec<ProgramId>,
    pub n_p: usize,
    /// Executable candidates (parsed, interpreted, and scored).
    pub n_q: usize,
    pub llm_errors: usize,
    pub outcomes: Vec<CandidateOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage2Report {
    pub iter: u64,
    pub ps_size: usize,
    pub sampled: usize,
    /// (program id, accurate score); score absent when accurate
    /// evaluation failed and the program was discarded.
    pub evaluated: Vec<(ProgramId, Option<f64>)>,
    pub promoted: Vec<ProgramId>,
    pub pool_added: Vec<ProgramId>,
    pub pool_size_after: usize,
    pub seed_count_after: usize,
    /// Highest accurate score over the seed set; non-decreasing across
    /// stage-2 rounds because promotion only ever adds seeds.
    pub max_seed_accurate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateScore {
    pub rate_bpp: f64,
    pub candidate_pe: f64,
    pub baseline_pe: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub candidate: ProgramId,
    pub superior: bool,
    pub scores: Vec<RateScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations_run: u64,
    pub candidates_generated: usize,
    pub executable_candidates: usize,
    pub faults: BTreeMap<String, usize>,
    pub promoted_total: usize,
    pub pool_size: usize,
    pub seed_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superior: Option<ValidationReport>,
    pub stop_reason: String,
    pub final_db_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub rounds_replayed: u64,
    pub matches: bool,
    pub recorded_digest: String,
    pub replayed_digest: String,
    /// First diverging event, when any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<String>,
}

/// Builds the provider named by the config.
pub fn make_client(config: &EvolutionConfig) -> Result<Box<dyn LlmClient>, EvolveError> {
    match config.llm.provider.as_str() {
        "mock" => Ok(Box::new(MockProvider::new(config.llm.mock_seed))),
        "http" => Ok(Box::new(HttpProvider::new(config.llm.clone())?)),
        other => Err(EvolveError::Config(ConfigError::Invalid(format!(
            "unknown provider {other}"
        )))),
    }
}

pub struct EvolutionEngine {
    config: EvolutionConfig,
    covers: Vec<GrayImage>,
    corpus_digest: String,
    scoring: Scoring,
    client: Box<dyn LlmClient>,
    rng: Prng,
    db: ProgramDatabase,
    pool: EvaluatorPool,
    seeds: Vec<CandidateProgram>,
    p_init_source: String,
    p_init_prelim: f64,
    s_init: f64,
    baseline_rate_scores: Option<Vec<(f64, f64)>>,
    validated_sources: HashSet<String>,
    next_id: ProgramId,
    iter: u64,
    last_refresh: Instant,
    journal: Option<JournalWriter>,
    run_dir: PathBuf,
    // aggregates for the final report
    candidates_generated: usize,
    executable_candidates: usize,
    faults: BTreeMap<String, usize>,
    promoted_total: usize,
}

fn resolve_seed_source(name: &str) -> Result<String, EvolveError> {
    if let Some(algo) = CostAlgo::parse(name) {
        return Ok(dsl::shipped_source(algo).to_string());
    }
    let path = Path::new(name);
    let text = std::fs::read_to_string(path).map_err(|e| EvolveError::BadSeed {
        name: name.to_string(),
        message: e.to_string(),
    })?;
    Ok(text)
}

fn corpus_digest(covers: &[GrayImage]) -> String {
    let mut bytes = Vec::with_capacity(covers.len() * 8);
    for img in covers {
        bytes.extend_from_slice(&img.content_hash().to_le_bytes());
    }
    format!("{:016x}", crate::prng::fnv1a64(&bytes))
}

impl EvolutionEngine {
    pub fn new(
        config: EvolutionConfig,
        client: Box<dyn LlmClient>,
        run_dir: &Path,
    ) -> Result<Self, EvolveError> {
        config.validate()?;
        std::fs::create_dir_all(run_dir)?;

        let covers = match (&config.corpus.dir, &config.corpus.synthetic) {
            (Some(dir), None) => {
                let covers = load_corpus(dir)?;
                if covers.is_empty() {
                    return Err(EvolveError::EmptyCorpus(dir.clone()));
                }
                covers
            }
            (None, Some(synth)) => {
                crate::synth::corpus(synth.count, synth.width, synth.height, synth.seed)
            }
            _ => unreachable!("config validation enforces exactly one corpus source"),
        };

        let scoring = Scoring {
            rate_bpp: config.prelim_rate,
            tol: config.tol_bpp,
            seed: config.seed,
            threads: config.threads,
        };

        let pool_algos = config
            .pool_algos
            .iter()
            .map(|name| CostAlgo::parse(name).ok_or_else(|| EvolveError::BadPoolAlgo(name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let pool = scoring.initial_pool(&pool_algos, &covers)?;

        let mut next_id: ProgramId = 1;
        let mut seeds = Vec::with_capacity(config.seed_programs.len());
        for name in &config.seed_programs {
            let raw = resolve_seed_source(name)?;
            let program = dsl::parse(&raw).map_err(|e| EvolveError::BadSeed {
                name: name.clone(),
                message: e.to_string(),
            })?;
            seeds.push(CandidateProgram {
                id: next_id,
                dsl_source: program.canonical().to_string(),
                length: program.length(),
                parents: vec![],
                sub_db: None,
                prelim_score: None,
                accurate_score: None,
                status: ProgramStatus::Seed,
            });
            next_id += 1;
        }

        // score the seeds against the initial pool; the first seed is the
        // initial program whose accurate score anchors every comparison
        for seed in &mut seeds {
            let cost = dsl_cost(&seed.dsl_source);
            seed.prelim_score = Some(scoring.preliminary_score(&pool, &cost, &covers)?);
        }
        let p_init_source = seeds[0].dsl_source.clone();
        let p_init_prelim = seeds[0].prelim_score.expect("just scored");
        let (s_init, _) = scoring.accurate_score(&dsl_cost(&p_init_source), &covers)?;
        seeds[0].accurate_score = Some(s_init);

        let db = ProgramDatabase::init(&seeds, config.n)?;
        let journal = JournalWriter::create(run_dir.join("journal.jsonl"))?;
        let digest = corpus_digest(&covers);

        let mut engine = EvolutionEngine {
            rng: Prng::new(config.seed),
            corpus_digest: digest,
            config,
            covers,
            scoring,
            client,
            db,
            pool,
            seeds,
            p_init_source,
            p_init_prelim,
            s_init,
            baseline_rate_scores: None,
            validated_sources: HashSet::new(),
            next_id,
            iter: 0,
            last_refresh: Instant::now(),
            journal: Some(journal),
            run_dir: run_dir.to_path_buf(),
            candidates_generated: 0,
            executable_candidates: 0,
            faults: BTreeMap::new(),
            promoted_total: 0,
        };
        engine.log(
            "run_start",
            serde_json::json!({
                "config": engine.config,
                "corpus_digest": engine.corpus_digest,
                "corpus_size": engine.covers.len(),
                "seed_prelim_scores": engine.seeds.iter().map(|s| s.prelim_score).collect::<Vec<_>>(),
                "s_init": engine.s_init,
                "pool_size": engine.pool.len(),
                "provider": engine.client.describe(),
            }),
        )?;
        Ok(engine)
    }

    fn log(&mut self, event_type: &str, payload: serde_json::Value) -> Result<(), EvolveError> {
        let record = JournalRecord {
            iter: self.iter,
            event_type: event_type.to_string(),
            payload,
            rng_state_digest: self.rng.state_digest(),
        };
        if let Some(journal) = self.journal.as_mut() {
            journal.append(&record)?;
        }
        Ok(())
    }

    fn bump_fault(&mut self, bucket: &str) {
        *self.faults.entry(bucket.to_string()).or_insert(0) += 1;
    }

    /// One Stage-1 iteration.
    fn preliminary_round(&mut self, temperature: f64) -> Result<IterationReport, EvolveError> {
        let (sub_db, first) = {
            let (i, p) = self.db.sample_reference(temperature, &mut self.rng)?;
            (i, p.clone())
        };
        let mut refs = vec![SampledRef {
            sub_db,
            program: first,
        }];
        for _ in 1..self.config.r {
            let p = self.db.sample_within(sub_db, temperature, &mut self.rng)?.clone();
            refs.push(SampledRef {
                sub_db,
                program: p,
            });
        }
        let ref_ids: Vec<ProgramId> = refs.iter().map(|r| r.program.id).collect();
        let instruction = self
            .config
            .instruction
            .clone()
            .unwrap_or_else(|| DEFAULT_INSTRUCTION.to_string());
        let prompt = build_prompt(&refs, &instruction)?;

        let results = llm_generate(self.client.as_ref(), &prompt, self.config.n_p);
        let calls: Vec<serde_json::Value> = results
            .iter()
            .map(|r| match r {
                Ok(text) => serde_json::json!({"ok": text}),
                Err(e) => serde_json::json!({"err": e.to_string()}),
            })
            .collect();
        let llm_errors = results.iter().filter(|r| r.is_err()).count();
        let responses: Vec<&String> = results.iter().filter_map(|r| r.as_ref().ok()).collect();

        let mut outcomes = Vec::with_capacity(responses.len());
        let mut n_q = 0usize;
        for response in &responses {
            self.candidates_generated += 1;
            let code = dsl::extract_code(response);
            let program = match dsl::parse(&code) {
                Ok(p) => p,
                Err(_) => {
                    self.bump_fault("parse");
                    outcomes.push(CandidateOutcome {
                        disposition: "discarded".into(),
                        fault: Some("parse".into()),
                        score: None,
                        id: None,
                    });
                    continue;
                }
            };
            let cost = DslCost::new(program.clone());
            let score = match self.scoring.preliminary_score(&self.pool, &cost, &self.covers) {
                Ok(s) => s,
                Err(e) => {
                    let bucket = match &e {
                        ScoreError::CostFault(f) => f.kind.to_string(),
                        _ => "scoring".to_string(),
                    };
                    self.bump_fault(&bucket);
                    outcomes.push(CandidateOutcome {
                        disposition: "discarded".into(),
                        fault: Some(bucket),
                        score: None,
                        id: None,
                    });
                    continue;
                }
            };
            n_q += 1;
            self.executable_candidates += 1;
            let candidate = CandidateProgram {
                id: self.next_id,
                dsl_source: program.canonical().to_string(),
                length: program.length(),
                parents: ref_ids.clone(),
                sub_db: Some(sub_db),
                prelim_score: Some(score),
                accurate_score: None,
                status: ProgramStatus::Candidate,
            };
            self.next_id += 1;
            let inserted = self.db.insert(sub_db, candidate);
            outcomes.push(CandidateOutcome {
                disposition: match inserted {
                    InsertOutcome::Duplicate => "duplicate".into(),
                    _ => "inserted".into(),
                },
                fault: None,
                score: Some(score),
                id: Some(self.next_id - 1),
            });
        }
        self.db.assert_invariants();
        debug_assert!(n_q <= self.config.n_p);

        let report = IterationReport {
            iter: self.iter,
            temperature,
            sub_db,
            ref_ids,
            n_p: self.config.n_p,
            n_q,
            llm_errors,
            outcomes,
        };
        self.log(
            "round",
            serde_json::json!({
                "report": report,
                "prompt": prompt,
                "calls": calls,
                "db_digest": self.db.digest(),
            }),
        )?;
        Ok(report)
    }

    fn refresh_due(&self) -> bool {
        if let Some(every) = self.config.refresh_every_iters {
            if every > 0 && self.iter % every == 0 {
                return true;
            }
        }
        if let Some(hours) = self.config.refresh_every_hours {
            if self.last_refresh.elapsed().as_secs_f64() >= hours * 3600.0 {
                return true;
            }
        }
        false
    }

    fn refresh(&mut self) -> Result<(), EvolveError> {
        let report = self.db.refresh(self.config.refresh_fraction, &mut self.rng);
        self.db.assert_invariants();
        self.last_refresh = Instant::now();
        self.log(
            "refresh",
            serde_json::json!({
                "replaced": report.replaced,
                "db_digest": self.db.digest(),
            }),
        )?;
        Ok(())
    }

    /// Stage 2: accurate evaluation, promotion, pool augmentation, and the
    /// seed-only reset. Returns programs newly marked potential.
    fn stage2(&mut self) -> Result<(Stage2Report, Vec<CandidateProgram>), EvolveError> {
        let seed_sources: HashSet<String> =
            self.seeds.iter().map(|s| s.dsl_source.clone()).collect();
        let ps = self.db.candidate_set(&seed_sources);
        let ps_size = ps.len();

        let selected: Vec<CandidateProgram> = if ps_size < self.config.ps_threshold {
            ps
        } else {
            // uniform 50% sample without replacement
            let take = ps_size.div_ceil(2);
            let mut indices: Vec<usize> = (0..ps_size).collect();
            for i in 0..take {
                let j = i + self.rng.next_below((ps_size - i) as u64) as usize;
                indices.swap(i, j);
            }
            indices[..take].iter().map(|&i| ps[i].clone()).collect()
        };

        let mut evaluated = Vec::with_capacity(selected.len());
        let mut promoted = Vec::new();
        let mut pool_added = Vec::new();
        let mut potentials = Vec::new();
        let epsilon = self.config.epsilon_margin;
        let aug_min = self.config.aug_prelim_min.unwrap_or(self.s_init);

        for mut program in selected {
            let cost = dsl_cost(&program.dsl_source);
            match self.scoring.accurate_score(&cost, &self.covers) {
                Err(_) => {
                    program.status = ProgramStatus::Discarded;
                    evaluated.push((program.id, None));
                }
                Ok((accurate, evaluator)) => {
                    evaluated.push((program.id, Some(accurate)));
                    program.accurate_score = Some(accurate);
                    let prelim = program.prelim_score.expect("database resident");

                    if self
                        .config
                        .promotion_comparator
                        .promotes(accurate, self.s_init, epsilon)
                    {
                        program.status = ProgramStatus::Optimized;
                        promoted.push(program.id);
                        self.promoted_total += 1;
                        if !self.seeds.iter().any(|s| s.dsl_source == program.dsl_source) {
                            self.seeds.push(program.clone());
                        }
                        // strong in both evaluations: candidate for
                        // multi-rate validation
                        if prelim >= self.p_init_prelim
                            && !self.validated_sources.contains(&program.dsl_source)
                        {
                            program.status = ProgramStatus::Potential;
                            potentials.push(program.clone());
                        }
                    } else if prelim >= aug_min && accurate < self.s_init - epsilon {
                        // high preliminary but poor accurate score: its
                        // features are not covered by the pool yet
                        self.pool.push(evaluator);
                        pool_added.push(program.id);
                    }
                }
            }
        }

        // reset: clear and repopulate with all seeds, re-scored against
        // the (possibly grown) pool
        for seed in &mut self.seeds {
            let cost = dsl_cost(&seed.dsl_source);
            seed.prelim_score =
                Some(self.scoring.preliminary_score(&self.pool, &cost, &self.covers)?);
        }
        self.p_init_prelim = self.seeds[0].prelim_score.expect("just scored");
        self.db.reset_with_seeds(&self.seeds)?;
        self.db.assert_invariants();

        let max_seed_accurate = self
            .seeds
            .iter()
            .filter_map(|s| s.accurate_score)
            .fold(f64::NEG_INFINITY, f64::max);
        let report = Stage2Report {
            iter: self.iter,
            ps_size,
            sampled: evaluated.len(),
            evaluated,
            promoted,
            pool_added,
            pool_size_after: self.pool.len(),
            seed_count_after: self.seeds.len(),
            max_seed_accurate,
        };
        self.log(
            "stage2",
            serde_json::json!({
                "report": report,
                "db_digest": self.db.digest(),
            }),
        )?;
        Ok((report, potentials))
    }

    fn baseline_rate_scores(&mut self) -> Result<Vec<(f64, f64)>, EvolveError> {
        if let Some(cached) = &self.baseline_rate_scores {
            return Ok(cached.clone());
        }
        let baseline = dsl_cost(&self.p_init_source);
        let mut scores = Vec::with_capacity(self.config.rates.len());
        for &rate in &self.config.rates {
            let scoring = Scoring {
                rate_bpp: rate,
                ..self.scoring.clone()
            };
            let (pe, _) = scoring.accurate_score(&baseline, &self.covers)?;
            scores.push((rate, pe));
        }
        self.baseline_rate_scores = Some(scores.clone());
        Ok(scores)
    }

    /// Accurate evaluation of a candidate against the initial program at
    /// every configured rate; superior only on a strict win at all rates.
    fn multi_rate_validate(
        &mut self,
        candidate: &CandidateProgram,
    ) -> Result<ValidationReport, EvolveError> {
        let baseline = self.baseline_rate_scores()?;
        let cost = dsl_cost(&candidate.dsl_source);
        let mut scores = Vec::with_capacity(baseline.len());
        let mut superior = true;
        for (rate, baseline_pe) in baseline {
            let scoring = Scoring {
                rate_bpp: rate,
                ..self.scoring.clone()
            };
            let (candidate_pe, _) = scoring.accurate_score(&cost, &self.covers)?;
            superior &= candidate_pe > baseline_pe;
            scores.push(RateScore {
                rate_bpp: rate,
                candidate_pe,
                baseline_pe,
            });
        }
        self.validated_sources.insert(candidate.dsl_source.clone());
        let report = ValidationReport {
            candidate: candidate.id,
            superior,
            scores,
        };
        self.log("validate", serde_json::json!({ "report": report }))?;
        Ok(report)
    }

    /// Runs to the iteration cap or the first superior candidate.
    pub fn run(mut self) -> Result<RunReport, EvolveError> {
        let mut superior: Option<ValidationReport> = None;
        let mut stop_reason = "max-iterations".to_string();

        'outer: while self.iter < self.config.max_iters {
            self.iter += 1;
            let temperature = self.config.temperature_at(self.iter);
            self.preliminary_round(temperature)?;

            if self.refresh_due() {
                self.refresh()?;
            }

            let past_burn_in = self.iter >= self.config.burn_in_iters;
            if past_burn_in
                && (self.iter - self.config.burn_in_iters) % self.config.stage2_period == 0
            {
                let (_, potentials) = self.stage2()?;
                for candidate in potentials {
                    let report = self.multi_rate_validate(&candidate)?;
                    if report.superior {
                        superior = Some(report);
                        stop_reason = "superior-found".to_string();
                        break 'outer;
                    }
                }
            }
        }

        let final_db_digest = self.db.digest();
        let report = RunReport {
            iterations_run: self.iter,
            candidates_generated: self.candidates_generated,
            executable_candidates: self.executable_candidates,
            faults: self.faults.clone(),
            promoted_total: self.promoted_total,
            pool_size: self.pool.len(),
            seed_count: self.seeds.len(),
            superior,
            stop_reason,
            final_db_digest: final_db_digest.clone(),
        };
        self.log(
            "run_end",
            serde_json::json!({
                "report": report,
                "final_db_digest": final_db_digest,
            }),
        )?;
        self.write_snapshot()?;
        std::fs::write(
            self.run_dir.join("report.json"),
            serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
        Ok(report)
    }

    /// Writes `database/index.json` plus one `.scf` file per distinct
    /// resident program.
    fn write_snapshot(&self) -> Result<(), EvolveError> {
        let dir = self.run_dir.join("database");
        std::fs::create_dir_all(&dir)?;
        std::fs::write(
            dir.join("index.json"),
            serde_json::to_string_pretty(&self.db).expect("database serializes"),
        )?;
        let mut written = HashSet::new();
        for sub in &self.db.subs {
            for cluster in &sub.clusters {
                for p in &cluster.programs {
                    if written.insert(p.id) {
                        std::fs::write(dir.join(format!("{:06}.scf", p.id)), &p.dsl_source)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn dsl_cost(canonical_source: &str) -> DslCost {
    DslCost::new(dsl::parse(canonical_source).expect("database sources are canonical"))
}

/// Runs a full evolution with the provider named in the config.
pub fn run_evolution(config: EvolutionConfig, run_dir: &Path) -> Result<RunReport, EvolveError> {
    let client = make_client(&config)?;
    EvolutionEngine::new(config, client, run_dir)?.run()
}

/// Replays a journal: reruns the recorded configuration with the recorded
/// LLM responses and compares database digests event by event.
pub fn replay_journal(journal_path: &Path, run_dir: &Path) -> Result<ReplayReport, EvolveError> {
    let records = read_journal(journal_path)?;
    let start = records
        .iter()
        .find(|r| r.event_type == "run_start")
        .ok_or(EvolveError::IncompleteJournal("run_start"))?;
    let config: EvolutionConfig = serde_json::from_value(
        start
            .payload
            .get("config")
            .cloned()
            .ok_or(EvolveError::IncompleteJournal("config"))?,
    )
    .map_err(ConfigError::from)?;

    let mut calls = Vec::new();
    for record in records.iter().filter(|r| r.event_type == "round") {
        if let Some(list) = record.payload.get("calls").and_then(|c| c.as_array()) {
            for call in list {
                if let Some(ok) = call.get("ok").and_then(|v| v.as_str()) {
                    calls.push(Ok(ok.to_string()));
                } else {
                    let msg = call
                        .get("err")
                        .and_then(|v| v.as_str())
                        .unwrap_or("recorded failure");
                    calls.push(Err(msg.to_string()));
                }
            }
        }
    }
    let recorded_end = records
        .iter()
        .find(|r| r.event_type == "run_end")
        .ok_or(EvolveError::IncompleteJournal("run_end"))?;
    let recorded_digest = recorded_end
        .payload
        .get("final_db_digest")
        .and_then(|v| v.as_str())
        .ok_or(EvolveError::IncompleteJournal("final_db_digest"))?
        .to_string();

    let client = Box::new(PlaybackProvider::from_calls(calls));
    let report = EvolutionEngine::new(config, client, run_dir)?.run()?;

    let replayed = read_journal(&run_dir.join("journal.jsonl"))?;
    let mut first_divergence = None;
    for (a, b) in records.iter().zip(replayed.iter()) {
        if a.event_type != b.event_type
            || a.iter != b.iter
            || a.rng_state_digest != b.rng_state_digest
            || a.payload.get("db_digest") != b.payload.get("db_digest")
        {
            first_divergence = Some(format!("iter {} event {}", a.iter, a.event_type));
            break;
        }
    }
    if first_divergence.is_none() && records.len() != replayed.len() {
        first_divergence = Some("journal lengths differ".to_string());
    }

    Ok(ReplayReport {
        rounds_replayed: report.iterations_run,
        matches: report.final_db_digest == recorded_digest && first_divergence.is_none(),
        recorded_digest,
        replayed_digest: report.final_db_digest,
        first_divergence,
    })
}
