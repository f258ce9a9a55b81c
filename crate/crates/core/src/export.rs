//! Training-record export and the matching pure loss calculators.
//!
//! Every turn of every tree becomes one supervised record (context + target
//! reply) and one preference record (context + chosen/rejected pair). The
//! context is always the selected-path prefix plus the current user message,
//! under a fixed neutral system prompt recorded in the file metadata.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{ChatMessage, MessageRole, NEUTRAL_SYSTEM_PROMPT};
use crate::seed::rng_for;
use crate::tree::ConversationTree;

pub const EXPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    Aloe,
    AgentMix,
}

/// One supervised fine-tuning example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftRecord {
    pub context: Vec<ChatMessage>,
    pub target: String,
    pub source: RecordSource,
}

/// One preference pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpoRecord {
    pub context: Vec<ChatMessage>,
    pub chosen: String,
    pub rejected: String,
}

fn check_context(context: &[ChatMessage]) -> Result<()> {
    match context.last() {
        Some(last) if last.role == MessageRole::User => Ok(()),
        _ => Err(Error::SchemaViolation {
            path: "context".to_string(),
            message: "context must end with a user message".to_string(),
        }),
    }
}

impl SftRecord {
    pub fn validate(&self) -> Result<()> {
        check_context(&self.context)?;
        if self.target.trim().is_empty() {
            return Err(Error::SchemaViolation {
                path: "target".to_string(),
                message: "must be non-empty".to_string(),
            });
        }
        Ok(())
    }
}

impl DpoRecord {
    pub fn validate(&self) -> Result<()> {
        check_context(&self.context)?;
        for (field, text) in [("chosen", &self.chosen), ("rejected", &self.rejected)] {
            if text.trim().is_empty() {
                return Err(Error::SchemaViolation {
                    path: field.to_string(),
                    message: "must be non-empty".to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Training settings recorded in the export header for downstream trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub batch_size: u32,
    pub sft_epochs: u32,
    pub dpo_epochs: u32,
    pub dpo_beta: f64,
    pub system_prompt: String,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            batch_size: 48,
            sft_epochs: 3,
            dpo_epochs: 1,
            dpo_beta: 0.9,
            system_prompt: NEUTRAL_SYSTEM_PROMPT.to_string(),
        }
    }
}

/// First line of every export file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub v: u32,
    pub hyperparameters: Hyperparameters,
}

impl Default for ExportMeta {
    fn default() -> Self {
        Self {
            v: EXPORT_SCHEMA_VERSION,
            hyperparameters: Hyperparameters::default(),
        }
    }
}

/// Context for turn `index`: neutral system prompt, the selected path through
/// turn index-1, then m_index as the final user message.
fn turn_context(tree: &ConversationTree, index: usize) -> Result<Vec<ChatMessage>> {
    let mut context = Vec::with_capacity(2 * index + 1);
    context.push(ChatMessage::system(NEUTRAL_SYSTEM_PROMPT));
    context.extend(tree.selected_path(index - 1)?);
    context.push(ChatMessage::user(tree.turns[index - 1].user_message.clone()));
    Ok(context)
}

/// External agent-data record: a plain message list whose final entry is the
/// assistant target.
#[derive(Debug, Clone, Deserialize)]
struct AgentMixLine {
    messages: Vec<ChatMessage>,
}

fn read_agent_mix(path: &Path) -> Result<Vec<SftRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let line_no = number + 1;
        let fail = |reason: String| Error::AgentMixParseFailure {
            line: line_no,
            reason,
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: AgentMixLine =
            serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        if parsed.messages.len() < 2 {
            return Err(fail("need at least one context message and a target".to_string()));
        }
        let (target, context) = parsed.messages.split_last().expect("len checked");
        if target.role != MessageRole::Assistant {
            return Err(fail("final message must be from the assistant".to_string()));
        }
        let record = SftRecord {
            context: context.to_vec(),
            target: target.content.clone(),
            source: RecordSource::AgentMix,
        };
        record
            .validate()
            .map_err(|e| fail(e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

/// One SFT record per turn per tree, optionally interleaved with an external
/// agent corpus by a seeded shuffle.
pub fn export_sft(
    trees: &[ConversationTree],
    agent_mix: Option<&Path>,
    shuffle_seed: u64,
) -> Result<Vec<SftRecord>> {
    let mut records = Vec::new();
    for tree in trees {
        tree.validate()?;
        for index in 1..=tree.turns.len() {
            records.push(SftRecord {
                context: turn_context(tree, index)?,
                target: tree.turns[index - 1].preferred.clone(),
                source: RecordSource::Aloe,
            });
        }
    }
    if let Some(path) = agent_mix {
        records.extend(read_agent_mix(path)?);
        let mut rng = rng_for(shuffle_seed, &["sft-mix-shuffle"]);
        records.shuffle(&mut rng);
    }
    Ok(records)
}

/// One preference pair per turn per tree, ordered by (tree, turn).
pub fn export_dpo(trees: &[ConversationTree]) -> Result<Vec<DpoRecord>> {
    let mut records = Vec::new();
    for tree in trees {
        tree.validate()?;
        for index in 1..=tree.turns.len() {
            records.push(DpoRecord {
                context: turn_context(tree, index)?,
                chosen: tree.turns[index - 1].preferred.clone(),
                rejected: tree.turns[index - 1].rejected.clone(),
            });
        }
    }
    Ok(records)
}

fn write_export<T: Serialize>(path: &Path, meta: &ExportMeta, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    writeln!(writer, "{}", serde_json::to_string(meta)?).map_err(|e| Error::io(path, e))?;
    for record in records {
        writeln!(writer, "{}", serde_json::to_string(record)?)
            .map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sft(path: &Path, meta: &ExportMeta, records: &[SftRecord]) -> Result<()> {
    for record in records {
        record.validate()?;
    }
    write_export(path, meta, records)
}

pub fn write_dpo(path: &Path, meta: &ExportMeta, records: &[DpoRecord]) -> Result<()> {
    for record in records {
        record.validate()?;
    }
    write_export(path, meta, records)
}

fn read_export<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(ExportMeta, Vec<T>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::SchemaViolation {
            path: "(first line)".to_string(),
            message: "export file is empty".to_string(),
        })?
        .map_err(|e| Error::io(path, e))?;
    let meta: ExportMeta = serde_json::from_str(&meta_line)?;
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((meta, records))
}

pub fn read_sft(path: &Path) -> Result<(ExportMeta, Vec<SftRecord>)> {
    read_export(path)
}

pub fn read_dpo(path: &Path) -> Result<(ExportMeta, Vec<DpoRecord>)> {
    read_export(path)
}

/// Which model produced a sequence of log probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceOwner {
    Policy,
    Reference,
}

impl SequenceOwner {
    fn as_str(self) -> &'static str {
        match self {
            SequenceOwner::Policy => "policy",
            SequenceOwner::Reference => "reference",
        }
    }
}

/// Validated per-token (or per-turn total) log probabilities, each ≤ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbSequence {
    owner: SequenceOwner,
    values: Vec<f64>,
}

impl LogProbSequence {
    pub fn new(owner: SequenceOwner, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("log probabilities"));
        }
        for &value in &values {
            if value > 0.0 {
                return Err(Error::PositiveLogProb { value });
            }
        }
        Ok(Self { owner, values })
    }

    pub fn owner(&self) -> SequenceOwner {
        self.owner
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    fn expect_owner(&self, expected: SequenceOwner) -> Result<()> {
        if self.owner == expected {
            Ok(())
        } else {
            Err(Error::OwnerMismatch {
                expected: expected.as_str(),
                actual: self.owner.as_str(),
            })
        }
    }
}

/// Supervised loss: negative sum of the target's log probabilities under the
/// policy.
pub fn sft_loss(target_logprobs: &LogProbSequence) -> Result<f64> {
    target_logprobs.expect_owner(SequenceOwner::Policy)?;
    Ok(-target_logprobs.total())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpoConfig {
    pub beta: f64,
}

impl Default for DpoConfig {
    fn default() -> Self {
        Self { beta: 0.9 }
    }
}

impl DpoConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::Config(format!("dpo beta {beta} must be positive")));
        }
        Ok(Self { beta })
    }
}

/// Preference loss broken out per turn. `loss` is the minimization form
/// Σ -log σ(β·margin); `objective` is the raw signed sum Σ log σ(β·margin).
#[derive(Debug, Clone, PartialEq)]
pub struct DpoLoss {
    pub loss: f64,
    pub objective: f64,
    pub per_turn: Vec<f64>,
}

/// Numerically stable ln(1 + e^x).
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Preference loss over K aligned turns. Inputs are per-turn summed log
/// probabilities of the chosen and rejected replies under the policy and the
/// frozen reference.
pub fn dpo_loss(
    policy_chosen: &LogProbSequence,
    ref_chosen: &LogProbSequence,
    policy_rejected: &LogProbSequence,
    ref_rejected: &LogProbSequence,
    config: &DpoConfig,
) -> Result<DpoLoss> {
    DpoConfig::new(config.beta)?;
    policy_chosen.expect_owner(SequenceOwner::Policy)?;
    policy_rejected.expect_owner(SequenceOwner::Policy)?;
    ref_chosen.expect_owner(SequenceOwner::Reference)?;
    ref_rejected.expect_owner(SequenceOwner::Reference)?;
    let k = policy_chosen.len();
    for other in [ref_chosen.len(), policy_rejected.len(), ref_rejected.len()] {
        if other != k {
            return Err(Error::LengthMismatch {
                left: k,
                right: other,
            });
        }
    }
    let mut per_turn = Vec::with_capacity(k);
    for i in 0..k {
        let chosen_ratio = policy_chosen.values()[i] - ref_chosen.values()[i];
        let rejected_ratio = policy_rejected.values()[i] - ref_rejected.values()[i];
        let z = config.beta * (chosen_ratio - rejected_ratio);
        per_turn.push(softplus(-z));
    }
    let loss = per_turn.iter().sum::<f64>();
    Ok(DpoLoss {
        loss,
        objective: -loss,
        per_turn,
    })
}
