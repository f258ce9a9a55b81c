//! Tree-structured multi-turn preference data.
//!
//! Each conversation is a depth-K path with one off-path sibling per level:
//! every turn stores the user message, both candidate replies, and which one
//! the dialogue continued from. Trees persist as line-delimited JSON with a
//! schema version field.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::ChatMessage;

pub const TREE_SCHEMA_VERSION: u32 = 1;

/// What the induction step inferred about the user so far. Either field may
/// be the sentinel "None".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevealedPersona {
    pub profile_facts: String,
    pub personality_traits: String,
}

impl RevealedPersona {
    pub const NONE: &'static str = "None";

    pub fn empty() -> Self {
        Self {
            profile_facts: Self::NONE.to_string(),
            personality_traits: Self::NONE.to_string(),
        }
    }

    /// Single-line form used as the {Inferred Persona} binding.
    pub fn as_hint(&self) -> String {
        format!(
            "Profile: {}; Personalities: {}",
            self.profile_facts, self.personality_traits
        )
    }
}

/// Which candidate reply the conversation continued from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Preferred,
    Rejected,
}

/// One turn: user message m_i, the persona revealed so far, candidate replies
/// p_i and r_i, and the selected branch that defines s_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Turn {
    pub index: usize,
    pub user_message: String,
    pub revealed: RevealedPersona,
    pub preferred: String,
    pub rejected: String,
    pub selected: Branch,
}

impl Turn {
    /// The continuation text s_i.
    pub fn selected_text(&self) -> &str {
        match self.selected {
            Branch::Preferred => &self.preferred,
            Branch::Rejected => &self.rejected,
        }
    }
}

/// A persona-grounded conversation of up to `max_turns` turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversationTree {
    pub v: u32,
    pub tree_id: String,
    pub persona_id: String,
    pub rng_seed: u64,
    pub max_turns: usize,
    pub turns: Vec<Turn>,
}

impl ConversationTree {
    pub fn new(
        tree_id: impl Into<String>,
        persona_id: impl Into<String>,
        rng_seed: u64,
        max_turns: usize,
    ) -> Self {
        Self {
            v: TREE_SCHEMA_VERSION,
            tree_id: tree_id.into(),
            persona_id: persona_id.into(),
            rng_seed,
            max_turns,
            turns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.v != TREE_SCHEMA_VERSION {
            return Err(Error::SchemaViolation {
                path: "v".to_string(),
                message: format!("unsupported schema version {}", self.v),
            });
        }
        if self.turns.len() > self.max_turns {
            return Err(Error::SchemaViolation {
                path: "turns".to_string(),
                message: format!(
                    "{} turns exceed max_turns {}",
                    self.turns.len(),
                    self.max_turns
                ),
            });
        }
        for (i, turn) in self.turns.iter().enumerate() {
            let path = |field: &str| format!("turns[{i}].{field}");
            if turn.index != i + 1 {
                return Err(Error::SchemaViolation {
                    path: path("index"),
                    message: format!("expected contiguous index {}, got {}", i + 1, turn.index),
                });
            }
            for (field, text) in [
                ("user_message", &turn.user_message),
                ("preferred", &turn.preferred),
                ("rejected", &turn.rejected),
            ] {
                if text.trim().is_empty() {
                    return Err(Error::SchemaViolation {
                        path: path(field),
                        message: "must be non-empty".to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The conversation state after `upto` turns: alternating user/assistant
    /// messages [m_1, s_1, ..., m_upto, s_upto].
    pub fn selected_path(&self, upto: usize) -> Result<Vec<ChatMessage>> {
        if upto > self.turns.len() {
            return Err(Error::IndexOutOfRange {
                index: upto,
                len: self.turns.len(),
            });
        }
        let mut messages = Vec::with_capacity(upto * 2);
        for turn in &self.turns[..upto] {
            messages.push(ChatMessage::user(turn.user_message.clone()));
            messages.push(ChatMessage::assistant(turn.selected_text().to_string()));
        }
        Ok(messages)
    }

    /// Canonical single-line JSON form.
    pub fn serialize_line(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string(self)?)
    }

    /// Parse one dataset line; schema errors carry the offending field path.
    pub fn deserialize_line(line: &str) -> Result<Self> {
        let deserializer = &mut serde_json::Deserializer::from_str(line);
        let tree: ConversationTree = serde_path_to_error::deserialize(deserializer)
            .map_err(|e| schema_violation(e.path().to_string(), e.inner().to_string()))?;
        tree.validate()?;
        Ok(tree)
    }
}

/// Extend the tracked path with the field named by a "missing field" error,
/// which serde raises at the enclosing container.
pub(crate) fn schema_violation(mut path: String, message: String) -> Error {
    if let Some(field) = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next())
    {
        if path == "." || path.is_empty() {
            path = field.to_string();
        } else {
            path = format!("{path}.{field}");
        }
    }
    Error::SchemaViolation { path, message }
}

/// Fair coin over the two branches, driven by the tree's seeded stream.
pub fn select_branch<R: Rng>(rng: &mut R) -> Branch {
    if rng.random_bool(0.5) {
        Branch::Preferred
    } else {
        Branch::Rejected
    }
}

/// Write one tree per line.
pub fn write_dataset(path: &Path, trees: &[ConversationTree]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for tree in trees {
        writeln!(writer, "{}", tree.serialize_line()?).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Read a dataset file, preserving line order.
pub fn read_dataset(path: &Path) -> Result<Vec<ConversationTree>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut trees = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        trees.push(ConversationTree::deserialize_line(&line)?);
    }
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn sample_tree(turns: usize) -> ConversationTree {
        let mut tree = ConversationTree::new("tree-p1", "p1", 77, 10);
        for i in 1..=turns {
            tree.turns.push(Turn {
                index: i,
                user_message: format!("user message {i}"),
                revealed: RevealedPersona {
                    profile_facts: format!("fact {i}"),
                    personality_traits: RevealedPersona::NONE.to_string(),
                },
                preferred: format!("preferred reply {i}"),
                rejected: format!("rejected reply {i}"),
                selected: if i % 2 == 1 {
                    Branch::Preferred
                } else {
                    Branch::Rejected
                },
            });
        }
        tree
    }

    #[test]
    fn selected_path_alternates_roles_and_honors_selections() {
        let tree = sample_tree(3);
        assert!(tree.selected_path(0).unwrap().is_empty());
        let path = tree.selected_path(2).unwrap();
        assert_eq!(path.len(), 4);
        assert_eq!(path[0].role.as_str(), "user");
        assert_eq!(path[1].role.as_str(), "assistant");
        assert_eq!(path[2].role.as_str(), "user");
        assert_eq!(path[3].role.as_str(), "assistant");
        assert_eq!(path[1].content, "preferred reply 1");
        assert_eq!(path[3].content, "rejected reply 2");
    }

    #[test]
    fn selected_path_rejects_out_of_range_prefix() {
        let tree = sample_tree(2);
        assert!(matches!(
            tree.selected_path(3),
            Err(Error::IndexOutOfRange { index: 3, len: 2 })
        ));
    }

    #[test]
    fn branch_selection_is_reproducible_and_fair() {
        let seq = |seed: u64, n: usize| -> Vec<Branch> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| select_branch(&mut rng)).collect()
        };
        assert_eq!(seq(42, 50), seq(42, 50));
        assert_ne!(seq(42, 50), seq(43, 50));
        let draws = seq(7, 10_000);
        let preferred = draws.iter().filter(|b| **b == Branch::Preferred).count();
        let fraction = preferred as f64 / draws.len() as f64;
        assert!((0.47..=0.53).contains(&fraction), "fraction {fraction}");
    }

    #[test]
    fn round_trip_preserves_the_tree() {
        let tree = sample_tree(10);
        let line = tree.serialize_line().unwrap();
        let back = ConversationTree::deserialize_line(&line).unwrap();
        assert_eq!(tree, back);
        // Canonical form: serializing twice yields identical bytes.
        assert_eq!(line, back.serialize_line().unwrap());
    }

    #[test]
    fn missing_field_names_its_path() {
        let mut value: serde_json::Value =
            serde_json::from_str(&sample_tree(2).serialize_line().unwrap()).unwrap();
        value["turns"][1]
            .as_object_mut()
            .unwrap()
            .remove("rejected");
        let err = ConversationTree::deserialize_line(&value.to_string()).unwrap_err();
        match err {
            Error::SchemaViolation { path, .. } => assert_eq!(path, "turns[1].rejected"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_contiguous_indices_are_rejected() {
        let mut tree = sample_tree(2);
        tree.turns[1].index = 5;
        let err = tree.serialize_line().unwrap_err();
        match err {
            Error::SchemaViolation { path, .. } => assert_eq!(path, "turns[1].index"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dataset_files_round_trip_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trees.jsonl");
        let trees: Vec<ConversationTree> = (0..100)
            .map(|i| {
                let mut tree = sample_tree(3);
                tree.tree_id = format!("tree-{i:03}");
                tree.persona_id = format!("p{i:03}");
                tree
            })
            .collect();
        write_dataset(&path, &trees).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.len(), 100);
        assert_eq!(back, trees);
    }
}
