//! Profile and personality pools grown by iterative self-generation with
//! similarity-gated admission, and persona assembly from the two pools.
//!
//! A candidate joins a pool only if its highest cosine similarity against the
//! existing same-kind entries stays at or below the threshold; growth stops
//! when the acceptance rate collapses for several consecutive iterations.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{bindings, cosine, Embedding, Gateway};
use crate::seed::rng_for;
use crate::tree::schema_violation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Profile,
    Personality,
}

impl PoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::Profile => "profile",
            PoolKind::Personality => "personality",
        }
    }
}

/// One admitted description plus its admission provenance. Seed entries are
/// iteration 0 with similarity recorded as -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub id: String,
    pub kind: PoolKind,
    pub text: String,
    pub embedding: Embedding,
    pub admitted_at_iteration: usize,
    pub max_sim_at_admission: f64,
}

/// Growth parameters for one pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolConfig {
    pub similarity_threshold: f64,
    pub batch_size: usize,
    pub few_shot_count: usize,
    pub seed_entries: Vec<String>,
    pub stop_accept_rate: f64,
    pub stop_patience: usize,
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl PoolConfig {
    pub fn new(seed_entries: Vec<String>, max_iterations: usize, rng_seed: u64) -> Self {
        Self {
            similarity_threshold: 0.6,
            batch_size: 20,
            few_shot_count: 5,
            seed_entries,
            stop_accept_rate: 0.10,
            stop_patience: 3,
            max_iterations,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.similarity_threshold) || self.similarity_threshold == 0.0 {
            return Err(Error::Config(format!(
                "similarity_threshold {} must lie strictly between 0 and 1",
                self.similarity_threshold
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".to_string()));
        }
        if !(0.0..=1.0).contains(&self.stop_accept_rate) {
            return Err(Error::Config(format!(
                "stop_accept_rate {} must lie in [0, 1]",
                self.stop_accept_rate
            )));
        }
        if self.seed_entries.len() < self.few_shot_count {
            return Err(Error::FewShotExceedsPool {
                needed: self.few_shot_count,
                available: self.seed_entries.len(),
            });
        }
        if self.seed_entries.iter().any(|s| s.trim().is_empty()) {
            return Err(Error::Config("seed entries must be non-empty".to_string()));
        }
        Ok(())
    }
}

/// All admitted entries of one kind, in admission order.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub kind: PoolKind,
    pub entries: Vec<PoolEntry>,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admission {
    Accepted { max_sim: f64 },
    Rejected { max_sim: f64 },
}

/// Per-iteration growth statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub generated: usize,
    pub accepted: usize,
}

/// A grown pool along with its iteration history.
#[derive(Debug, Clone)]
pub struct PoolBuild {
    pub pool: Pool,
    pub stats: Vec<IterationStats>,
}

/// A composed (profile, personality) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Persona {
    pub persona_id: String,
    pub profile_text: String,
    pub personality_text: String,
    pub profile_id: String,
    pub personality_id: String,
}

fn entry_id(kind: PoolKind, index: usize) -> String {
    format!("{}-{index:04}", kind.as_str())
}

/// Embed the seed descriptions into a fresh pool.
pub fn seed_pool(gateway: &Gateway, kind: PoolKind, config: &PoolConfig) -> Result<Pool> {
    config.validate()?;
    let embeddings = gateway.embed(&config.seed_entries)?;
    let entries = config
        .seed_entries
        .iter()
        .zip(embeddings)
        .enumerate()
        .map(|(i, (text, embedding))| PoolEntry {
            id: entry_id(kind, i),
            kind,
            text: text.clone(),
            embedding,
            admitted_at_iteration: 0,
            max_sim_at_admission: -1.0,
        })
        .collect();
    Ok(Pool { kind, entries })
}

/// One self-generation step: sample few-shot exemplars from the pool, ask the
/// persona role for a batch, and split the completion into candidates.
pub fn generate_candidates(
    gateway: &Gateway,
    pool: &Pool,
    config: &PoolConfig,
    iteration: usize,
) -> Result<Vec<String>> {
    if pool.len() < config.few_shot_count {
        return Err(Error::FewShotExceedsPool {
            needed: config.few_shot_count,
            available: pool.len(),
        });
    }
    let mut rng = rng_for(
        config.rng_seed,
        &[pool.kind.as_str(), "few-shot", &iteration.to_string()],
    );
    let exemplars: Vec<&str> = sample(&mut rng, pool.len(), config.few_shot_count)
        .iter()
        .map(|i| pool.entries[i].text.as_str())
        .collect();
    let binds = bindings(&[
        ("Seed Examples", &exemplars.join("\n")),
        ("Batch Count", &config.batch_size.to_string()),
    ]);
    let template = gateway
        .templates()
        .persona_generation(pool.kind == PoolKind::Personality);
    let completion = gateway.complete_with_template(&template, &binds, &[])?;
    let candidates: Vec<String> = completion
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .take(config.batch_size)
        .map(str::to_string)
        .collect();
    if candidates.is_empty() {
        return Err(Error::ParseFailure);
    }
    Ok(candidates)
}

fn admit_embedded(
    candidate: &str,
    embedding: Embedding,
    pool: &mut Pool,
    config: &PoolConfig,
    iteration: usize,
) -> Result<Admission> {
    if pool.is_empty() {
        let id = entry_id(pool.kind, 0);
        pool.entries.push(PoolEntry {
            id,
            kind: pool.kind,
            text: candidate.to_string(),
            embedding,
            admitted_at_iteration: iteration,
            max_sim_at_admission: -1.0,
        });
        return Ok(Admission::Accepted { max_sim: -1.0 });
    }
    let mut max_sim = -1.0f64;
    for entry in &pool.entries {
        max_sim = max_sim.max(cosine(&entry.embedding, &embedding)?);
    }
    if max_sim > config.similarity_threshold {
        return Ok(Admission::Rejected { max_sim });
    }
    let id = entry_id(pool.kind, pool.len());
    pool.entries.push(PoolEntry {
        id,
        kind: pool.kind,
        text: candidate.to_string(),
        embedding,
        admitted_at_iteration: iteration,
        max_sim_at_admission: max_sim,
    });
    Ok(Admission::Accepted { max_sim })
}

/// Admit or reject one candidate against the pool's current contents.
pub fn admit(
    gateway: &Gateway,
    candidate: &str,
    pool: &mut Pool,
    config: &PoolConfig,
    iteration: usize,
) -> Result<Admission> {
    if candidate.trim().is_empty() {
        return Err(Error::EmptyInput("candidate"));
    }
    let embedding = gateway.embed(&[candidate.to_string()])?.remove(0);
    admit_embedded(candidate, embedding, pool, config, iteration)
}

/// Grow a pool from its seeds until the acceptance rate stays below
/// `stop_accept_rate` for `stop_patience` consecutive iterations or
/// `max_iterations` is reached. On a provider failure the partial pool is
/// checkpointed to `checkpoint` before the error propagates.
pub fn build_pool(
    gateway: &Gateway,
    kind: PoolKind,
    config: &PoolConfig,
    checkpoint: Option<&Path>,
) -> Result<PoolBuild> {
    let mut pool = seed_pool(gateway, kind, config)?;
    let mut stats = Vec::new();
    let mut lean_iterations = 0usize;
    for iteration in 1..=config.max_iterations {
        let step = grow_once(gateway, &mut pool, config, iteration);
        let accepted = match step {
            Ok(accepted) => accepted,
            Err(err) => {
                if let Some(path) = checkpoint {
                    let _ = write_pool(path, &pool);
                }
                return Err(err);
            }
        };
        let generated = accepted.generated;
        let rate = accepted.accepted as f64 / generated as f64;
        log::info!(
            "{} pool iteration {iteration}: generated {generated}, accepted {} (pool size {})",
            kind.as_str(),
            accepted.accepted,
            pool.len()
        );
        stats.push(IterationStats {
            iteration,
            generated,
            accepted: accepted.accepted,
        });
        if rate < config.stop_accept_rate {
            lean_iterations += 1;
            if lean_iterations >= config.stop_patience {
                break;
            }
        } else {
            lean_iterations = 0;
        }
    }
    Ok(PoolBuild { pool, stats })
}

struct GrowOutcome {
    generated: usize,
    accepted: usize,
}

fn grow_once(
    gateway: &Gateway,
    pool: &mut Pool,
    config: &PoolConfig,
    iteration: usize,
) -> Result<GrowOutcome> {
    let candidates = generate_candidates(gateway, pool, config, iteration)?;
    // Embed the whole batch up front; admission itself stays sequential.
    let embeddings = gateway.embed(&candidates)?;
    let mut accepted = 0;
    for (candidate, embedding) in candidates.iter().zip(embeddings) {
        if let Admission::Accepted { .. } =
            admit_embedded(candidate, embedding, pool, config, iteration)?
        {
            accepted += 1;
        }
    }
    Ok(GrowOutcome {
        generated: candidates.len(),
        accepted,
    })
}

/// Uniformly sample `count` distinct (profile, personality) pairs.
pub fn assemble_personas(
    profiles: &Pool,
    personalities: &Pool,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<Persona>> {
    let available = profiles.len() * personalities.len();
    if count > available {
        return Err(Error::CountExceedsCross { count, available });
    }
    let mut rng = rng_for(rng_seed, &["assemble-personas"]);
    let picks = sample(&mut rng, available, count);
    let width = count.max(2).to_string().len().max(4);
    let personas = picks
        .iter()
        .enumerate()
        .map(|(n, flat)| {
            let profile = &profiles.entries[flat / personalities.len()];
            let personality = &personalities.entries[flat % personalities.len()];
            Persona {
                persona_id: format!("persona-{n:0width$}"),
                profile_text: profile.text.clone(),
                personality_text: personality.text.clone(),
                profile_id: profile.id.clone(),
                personality_id: personality.id.clone(),
            }
        })
        .collect();
    Ok(personas)
}

/// Plain-text seed corpus: one description per line.
pub fn read_seed_file(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seeds = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            seeds.push(trimmed.to_string());
        }
    }
    Ok(seeds)
}

pub fn write_pool(path: &Path, pool: &Pool) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for entry in &pool.entries {
        writeln!(writer, "{}", serde_json::to_string(entry)?).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pool(path: &Path) -> Result<Pool> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries: Vec<PoolEntry> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let deserializer = &mut serde_json::Deserializer::from_str(&line);
        let entry: PoolEntry = serde_path_to_error::deserialize(deserializer)
            .map_err(|e| schema_violation(e.path().to_string(), e.inner().to_string()))?;
        entries.push(entry);
    }
    let kind = entries.first().map(|e| e.kind).unwrap_or(PoolKind::Profile);
    Ok(Pool { kind, entries })
}

pub fn write_personas(path: &Path, personas: &[Persona]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for persona in personas {
        writeln!(writer, "{}", serde_json::to_string(persona)?)
            .map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_personas(path: &Path) -> Result<Vec<Persona>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut personas = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let deserializer = &mut serde_json::Deserializer::from_str(&line);
        let persona: Persona = serde_path_to_error::deserialize(deserializer)
            .map_err(|e| schema_violation(e.path().to_string(), e.inner().to_string()))?;
        personas.push(persona);
    }
    Ok(personas)
}
