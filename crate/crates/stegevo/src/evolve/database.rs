//! The clustered program database.
//!
//! The database holds `n` parallel sub-databases. Within a sub-database,
//! programs group into clusters keyed by their preliminary score rounded
//! to four decimals; cluster keys are unique per sub-database. Reference
//! sampling draws a sub-database uniformly, a cluster through a
//! temperature-scaled softmax over cluster scores, and a program within
//! the cluster through a softmax over negated normalized program lengths
//! (shorter programs are favored).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prng::Prng;

pub type ProgramId = u64;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("seed program {0} has no preliminary score")]
    UnscoredSeed(ProgramId),
    #[error("database must have at least one sub-database")]
    NoSubDatabases,
    #[error("cannot sample from an empty database")]
    Empty,
    #[error("no seeds to initialize with")]
    NoSeeds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgramStatus {
    Candidate,
    Seed,
    Optimized,
    Potential,
    Superior,
    Discarded,
}

/// A cost-function program with its evaluation state. `dsl_source` is the
/// canonical form; identity for deduplication is this text, identity for
/// lineage is `id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateProgram {
    pub id: ProgramId,
    pub dsl_source: String,
    /// Character count of the canonical form.
    pub length: usize,
    pub parents: Vec<ProgramId>,
    /// Sub-database the program was inserted into, when it came from a
    /// preliminary round.
    pub sub_db: Option<usize>,
    pub prelim_score: Option<f64>,
    pub accurate_score: Option<f64>,
    pub status: ProgramStatus,
}

/// Cluster key: the preliminary score in units of 1e-4, so equality is
/// exact integer equality.
pub fn score_key(score: f64) -> i64 {
    (score * 1e4).round() as i64
}

pub fn key_to_score(key: i64) -> f64 {
    key as f64 / 1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub key: i64,
    pub programs: Vec<CandidateProgram>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubDatabase {
    pub clusters: Vec<Cluster>,
}

impl SubDatabase {
    /// Highest cluster score key; `None` when empty.
    pub fn top_key(&self) -> Option<i64> {
        self.clusters.iter().map(|c| c.key).max()
    }

    pub fn top_cluster(&self) -> Option<&Cluster> {
        self.clusters.iter().max_by_key(|c| c.key)
    }

    fn insert(&mut self, program: CandidateProgram, key: i64) -> InsertOutcome {
        if self
            .clusters
            .iter()
            .flat_map(|c| c.programs.iter())
            .any(|p| p.dsl_source == program.dsl_source)
        {
            return InsertOutcome::Duplicate;
        }
        match self.clusters.iter_mut().find(|c| c.key == key) {
            Some(cluster) => {
                cluster.programs.push(program);
                InsertOutcome::JoinedCluster
            }
            None => {
                self.clusters.push(Cluster {
                    key,
                    programs: vec![program],
                });
                InsertOutcome::NewCluster
            }
        }
    }

    pub fn program_count(&self) -> usize {
        self.clusters.iter().map(|c| c.programs.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InsertOutcome {
    NewCluster,
    JoinedCluster,
    /// Byte-identical canonical source already present in this
    /// sub-database; not inserted.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDatabase {
    pub subs: Vec<SubDatabase>,
}

/// Report of one refresh pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefreshReport {
    /// (bad sub-database index, good source index) per replacement.
    pub replaced: Vec<(usize, usize)>,
}

impl ProgramDatabase {
    /// Builds `n` sub-databases, each containing every seed, clustered by
    /// rounded preliminary score.
    pub fn init(seeds: &[CandidateProgram], n: usize) -> Result<Self, DbError> {
        if n == 0 {
            return Err(DbError::NoSubDatabases);
        }
        if seeds.is_empty() {
            return Err(DbError::NoSeeds);
        }
        for seed in seeds {
            if seed.prelim_score.is_none() {
                return Err(DbError::UnscoredSeed(seed.id));
            }
        }
        let mut template = SubDatabase::default();
        for seed in seeds {
            let key = score_key(seed.prelim_score.expect("checked"));
            template.insert(seed.clone(), key);
        }
        Ok(ProgramDatabase {
            subs: vec![template; n],
        })
    }

    pub fn n(&self) -> usize {
        self.subs.len()
    }

    pub fn program_count(&self) -> usize {
        self.subs.iter().map(|s| s.program_count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.iter().all(|s| s.clusters.is_empty())
    }

    /// Inserts a scored program into the given sub-database, joining the
    /// cluster with a matching key or creating one.
    pub fn insert(
        &mut self,
        sub_idx: usize,
        mut program: CandidateProgram,
    ) -> InsertOutcome {
        let score = program
            .prelim_score
            .expect("only scored programs enter the database");
        program.sub_db = Some(sub_idx);
        self.subs[sub_idx].insert(program, score_key(score))
    }

    /// Draws `(sub index, program)` per the sampling law: uniform
    /// sub-database, softmax over cluster scores at temperature `t`,
    /// length-biased softmax within the cluster (a singleton cluster
    /// short-circuits to its only program).
    pub fn sample_reference(
        &self,
        t: f64,
        rng: &mut Prng,
    ) -> Result<(usize, &CandidateProgram), DbError> {
        if self.is_empty() {
            return Err(DbError::Empty);
        }
        let sub_idx = rng.next_below(self.subs.len() as u64) as usize;
        let program = self.sample_within(sub_idx, t, rng)?;
        Ok((sub_idx, program))
    }

    /// Samples a program from one sub-database (used for the extra
    /// references when a prompt carries more than one).
    pub fn sample_within(
        &self,
        sub_idx: usize,
        t: f64,
        rng: &mut Prng,
    ) -> Result<&CandidateProgram, DbError> {
        let sub = &self.subs[sub_idx];
        if sub.clusters.is_empty() {
            return Err(DbError::Empty);
        }
        let cluster = &sub.clusters[sample_cluster_index(sub, t, rng)];
        let k = sample_program_index(cluster, rng);
        Ok(&cluster.programs[k])
    }

    /// Replaces the lowest-ranked `fraction` of sub-databases (by top
    /// cluster score) with a copy of the top cluster of a uniformly chosen
    /// surviving sub-database. A full tie is a no-op. At least one
    /// sub-database always survives.
    pub fn refresh(&mut self, fraction: f64, rng: &mut Prng) -> RefreshReport {
        let n = self.subs.len();
        let tops: Vec<i64> = self
            .subs
            .iter()
            .map(|s| s.top_key().unwrap_or(i64::MIN))
            .collect();
        let hi = tops.iter().copied().max().unwrap_or(i64::MIN);
        let lo = tops.iter().copied().min().unwrap_or(i64::MIN);
        let k_bad = ((n as f64 * fraction).floor() as usize).min(n.saturating_sub(1));
        if hi == lo || k_bad == 0 {
            return RefreshReport { replaced: vec![] };
        }
        // stable rank: worst first, ties by index
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (tops[i], i));
        let bad: Vec<usize> = order[..k_bad].to_vec();
        let good: Vec<usize> = order[k_bad..].to_vec();

        let mut replaced = Vec::with_capacity(bad.len());
        for &b in &bad {
            let g = good[rng.next_below(good.len() as u64) as usize];
            let top = self.subs[g]
                .top_cluster()
                .expect("good sub-database is non-empty")
                .clone();
            self.subs[b] = SubDatabase {
                clusters: vec![top],
            };
            replaced.push((b, g));
        }
        RefreshReport { replaced }
    }

    /// Clears every sub-database and repopulates each with all seeds.
    pub fn reset_with_seeds(&mut self, seeds: &[CandidateProgram]) -> Result<(), DbError> {
        let n = self.subs.len();
        *self = ProgramDatabase::init(seeds, n)?;
        Ok(())
    }

    /// All non-seed programs across every cluster of every sub-database,
    /// deduplicated by canonical source in deterministic scan order.
    pub fn candidate_set(&self, seed_sources: &std::collections::HashSet<String>) -> Vec<CandidateProgram> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for sub in &self.subs {
            for cluster in &sub.clusters {
                for p in &cluster.programs {
                    if seed_sources.contains(&p.dsl_source) {
                        continue;
                    }
                    if seen.insert(p.dsl_source.clone()) {
                        out.push(p.clone());
                    }
                }
            }
        }
        out
    }

    /// Panics if a structural invariant is broken; used by tests and the
    /// acceptance suite after every mutation.
    pub fn assert_invariants(&self) {
        for (i, sub) in self.subs.iter().enumerate() {
            let mut keys: Vec<i64> = sub.clusters.iter().map(|c| c.key).collect();
            let unique_before = keys.len();
            keys.sort_unstable();
            keys.dedup();
            assert_eq!(unique_before, keys.len(), "duplicate cluster keys in sub {i}");
            for cluster in &sub.clusters {
                assert!(!cluster.programs.is_empty(), "empty cluster in sub {i}");
                for p in &cluster.programs {
                    let s = p.prelim_score.expect("resident programs are scored");
                    assert_eq!(
                        score_key(s),
                        cluster.key,
                        "program {} sits in cluster {} but scores {}",
                        p.id,
                        cluster.key,
                        s
                    );
                }
            }
        }
    }

    /// Stable digest of the full database state.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("database serializes");
        format!("{:016x}", crate::prng::fnv1a64(text.as_bytes()))
    }
}

/// Softmax over cluster score keys at temperature `t` (probabilities
/// `exp(s_j/t) / sum_r exp(s_r/t)`), drawn by CDF walk.
fn sample_cluster_index(sub: &SubDatabase, t: f64, rng: &mut Prng) -> usize {
    if sub.clusters.len() == 1 {
        return 0;
    }
    let scores: Vec<f64> = sub.clusters.iter().map(|c| key_to_score(c.key)).collect();
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| ((s - m) / t).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.next_f64() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Length-biased choice within a cluster: lengths are min-max normalized
/// with a 1e-6 widening of the denominator, and programs are drawn with
/// probability `exp(-l') / sum exp(-l')`. Equal lengths collapse to a
/// uniform draw.
fn sample_program_index(cluster: &Cluster, rng: &mut Prng) -> usize {
    if cluster.programs.len() == 1 {
        return 0;
    }
    let lens: Vec<f64> = cluster.programs.iter().map(|p| p.length as f64).collect();
    let lo = lens.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = lens
        .iter()
        .map(|l| (-((l - lo) / (hi - lo + 1e-6))).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let u = rng.next_f64() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}
