//! The two-stage evolutionary search for cost functions.
//!
//! Stage 1 generates candidates: a reference program is sampled from a
//! clustered program database, wrapped into a prompt with an empty
//! placeholder function and a fixed instruction, and handed to an LLM
//! provider several times; candidates that parse, interpret, and score
//! against the preliminary evaluator pool enter the database. Stage 2
//! periodically re-evaluates the accumulated candidates with dedicated
//! detectors, promotes the strong ones into the seed set, augments the
//! pool where the preliminary scores proved blind, resets the database
//! from the seeds, and validates promising candidates across every
//! configured embedding rate.
//!
//! Runs write an append-only journal sufficient for bit-exact replay; see
//! [`runner::replay_journal`].

pub mod config;
pub mod database;
pub mod journal;
pub mod llm;
pub mod prompt;
pub mod runner;

pub use config::{ConfigError, CorpusConfig, EvolutionConfig, LlmConfig, PromotionRule};
pub use database::{
    CandidateProgram, Cluster, DbError, InsertOutcome, ProgramDatabase, ProgramId, ProgramStatus,
    SubDatabase,
};
pub use journal::{read_journal, JournalRecord, JournalWriter};
pub use llm::{llm_generate, HttpProvider, LlmClient, LlmError, MockProvider, PlaybackProvider};
pub use prompt::{build_prompt, SampledRef, DEFAULT_INSTRUCTION};
pub use runner::{
    make_client, replay_journal, run_evolution, EvolutionEngine, EvolveError, IterationReport,
    ReplayReport, RunReport, Stage2Report, ValidationReport,
};
