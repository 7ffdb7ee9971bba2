//! Append-only run journal: one JSON record per line, one line per event.
//!
//! The journal captures everything non-deterministic-looking about a run
//! (sampled references, prompts, raw LLM responses, scores, and the RNG
//! state digest at each event), which is enough to replay a run bit-
//! exactly by feeding the recorded responses back through the engine.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JournalRecord {
    pub iter: u64,
    pub event_type: String,
    pub payload: Value,
    pub rng_state_digest: String,
}

pub struct JournalWriter {
    out: BufWriter<File>,
}

impl JournalWriter {
    pub fn create<P: AsRef<Path>>(path: P) -> Result<Self, JournalError> {
        Ok(JournalWriter {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn append(&mut self, record: &JournalRecord) -> Result<(), JournalError> {
        let line = serde_json::to_string(record).expect("journal records serialize");
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_journal<P: AsRef<Path>>(path: P) -> Result<Vec<JournalRecord>, JournalError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| JournalError::Malformed {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(records)
}
