//! Conversation construction: drive the four dialogue roles per persona to
//! produce conversation trees, in bulk with checkpointing and resume.
//!
//! Within a turn the order is fixed: the role-play side produces the user
//! message, the induction step extracts what the conversation has revealed so
//! far (including that message), the preferred reply is generated with only
//! the induced persona, and the rejected reply with no persona at all.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{bindings, ChatMessage, Gateway, MessageRole, RoleId};
use crate::persona::Persona;
use crate::seed::derive_seed;
use crate::tree::{select_branch, ConversationTree, RevealedPersona, Turn};

/// One dataset construction run.
#[derive(Debug, Clone)]
pub struct BuildJob {
    pub personas: Vec<Persona>,
    pub max_turns: usize,
    pub parallelism: usize,
    pub checkpoint_path: PathBuf,
    pub global_seed: u64,
}

impl BuildJob {
    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".to_string()));
        }
        if self.max_turns == 0 {
            return Err(Error::Config("max_turns must be at least 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub completed: usize,
    pub failed: usize,
    pub turns_total: usize,
}

/// Written to the failures sidecar when a conversation aborts; carries the
/// partial tree so no completed turn is lost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub persona_id: String,
    pub error: String,
    pub turns_completed: usize,
    pub partial: ConversationTree,
}

/// History as seen by the role-play side, which speaks as the user: its own
/// past messages become assistant turns and the chatbot's become user turns.
fn invert_history(history: &[ChatMessage]) -> Vec<ChatMessage> {
    history
        .iter()
        .map(|m| match m.role {
            MessageRole::User => ChatMessage::assistant(m.content.clone()),
            MessageRole::Assistant => ChatMessage::user(m.content.clone()),
            MessageRole::System => m.clone(),
        })
        .collect()
}

/// Render the conversation for the induction prompt, "A" being the user.
fn conversation_as_ab(history: &[ChatMessage], current_message: &str) -> String {
    let mut lines = Vec::with_capacity(history.len() + 1);
    for message in history {
        let speaker = match message.role {
            MessageRole::User => "A",
            _ => "B",
        };
        lines.push(format!("{speaker}: {}", message.content));
    }
    lines.push(format!("A: {current_message}"));
    lines.join("\n")
}

/// Next user message m_i from the role-play side.
pub fn gen_user_message(
    gateway: &Gateway,
    persona: &Persona,
    history: &[ChatMessage],
) -> Result<String> {
    let binds = bindings(&[
        ("User Profile", &persona.profile_text),
        ("User Personalities", &persona.personality_text),
    ]);
    gateway.complete(RoleId::RolePlay, &binds, &invert_history(history))
}

fn parse_induction(completion: &str) -> Option<RevealedPersona> {
    let profile_label = completion.find("Profile:")?;
    let after_profile = &completion[profile_label + "Profile:".len()..];
    let personalities_label = after_profile.find("Personalities:")?;
    let profile = after_profile[..personalities_label].trim();
    let personalities = after_profile[personalities_label + "Personalities:".len()..].trim();
    let or_none = |s: &str| {
        if s.is_empty() {
            RevealedPersona::NONE.to_string()
        } else {
            s.to_string()
        }
    };
    Some(RevealedPersona {
        profile_facts: or_none(profile),
        personality_traits: or_none(personalities),
    })
}

/// What the conversation so far (through the current message) reveals about
/// the user. Retries a completion missing the two labels once.
pub fn induce_persona(
    gateway: &Gateway,
    persona: &Persona,
    history: &[ChatMessage],
    current_message: &str,
) -> Result<RevealedPersona> {
    let binds = bindings(&[
        ("Conversation History", &conversation_as_ab(history, current_message)),
        ("User Profile", &persona.profile_text),
        ("User Personalities", &persona.personality_text),
    ]);
    for _ in 0..2 {
        let completion = gateway.complete(RoleId::Induction, &binds, &[])?;
        if let Some(revealed) = parse_induction(&completion) {
            return Ok(revealed);
        }
    }
    Err(Error::InductionParseFailure)
}

/// Persona-aware reply p_i: the user message is delivered with the induced
/// persona hint appended, never the ground-truth persona.
pub fn gen_preferred(
    gateway: &Gateway,
    user_message: &str,
    history: &[ChatMessage],
    revealed: &RevealedPersona,
) -> Result<String> {
    let binds = bindings(&[
        ("User Message", user_message),
        ("Inferred Persona", &revealed.as_hint()),
    ]);
    gateway.complete(RoleId::Preferred, &binds, history)
}

/// Persona-blind reply r_i: same history, no hint of any kind.
pub fn gen_rejected(
    gateway: &Gateway,
    user_message: &str,
    history: &[ChatMessage],
) -> Result<String> {
    let binds = bindings(&[("User Message", user_message)]);
    gateway.complete(RoleId::Rejected, &binds, history)
}

fn run_turns(
    gateway: &Gateway,
    persona: &Persona,
    tree: &mut ConversationTree,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(tree.rng_seed);
    for index in 1..=tree.max_turns {
        let history = tree.selected_path(index - 1)?;
        let user_message = gen_user_message(gateway, persona, &history)?;
        let revealed = induce_persona(gateway, persona, &history, &user_message)?;
        let preferred = gen_preferred(gateway, &user_message, &history, &revealed)?;
        let rejected = gen_rejected(gateway, &user_message, &history)?;
        let selected = select_branch(&mut rng);
        tree.turns.push(Turn {
            index,
            user_message,
            revealed,
            preferred,
            rejected,
            selected,
        });
    }
    Ok(())
}

fn run_conversation_inner(
    gateway: &Gateway,
    persona: &Persona,
    max_turns: usize,
    seed: u64,
) -> (ConversationTree, Option<Error>) {
    let mut tree = ConversationTree::new(
        format!("tree-{}", persona.persona_id),
        persona.persona_id.clone(),
        seed,
        max_turns,
    );
    let err = run_turns(gateway, persona, &mut tree).err();
    (tree, err)
}

/// Build one persona's full K-turn tree.
pub fn run_conversation(
    gateway: &Gateway,
    persona: &Persona,
    max_turns: usize,
    seed: u64,
) -> Result<ConversationTree> {
    let (tree, err) = run_conversation_inner(gateway, persona, max_turns, seed);
    match err {
        None => Ok(tree),
        Some(err) => Err(err),
    }
}

fn conversation_seed(global_seed: u64, persona_id: &str) -> u64 {
    derive_seed(global_seed, &["conversation", persona_id])
}

/// Checkpoint lines that parse; torn trailing lines from an interrupted run
/// are skipped so the batch can resume past them.
fn read_checkpoint_lenient(path: &Path) -> Result<Vec<ConversationTree>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut trees = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match ConversationTree::deserialize_line(&line) {
            Ok(tree) => trees.push(tree),
            Err(err) => log::warn!("skipping malformed checkpoint line: {err}"),
        }
    }
    Ok(trees)
}

pub fn failures_path(checkpoint_path: &Path) -> PathBuf {
    let mut name = checkpoint_path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "checkpoint".to_string());
    name.push_str(".failures.jsonl");
    checkpoint_path.with_file_name(name)
}

struct BatchState {
    checkpoint: Mutex<BufWriter<File>>,
    failures: Mutex<Option<BufWriter<File>>>,
    stats: Mutex<BuildStats>,
}

impl BatchState {
    fn record_tree(&self, line: &str, turns: usize, path: &Path) -> Result<()> {
        let mut writer = self.checkpoint.lock().unwrap();
        writeln!(writer, "{line}").map_err(|e| Error::io(path, e))?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        let mut stats = self.stats.lock().unwrap();
        stats.completed += 1;
        stats.turns_total += turns;
        Ok(())
    }

    fn record_failure(&self, record: &FailureRecord, path: &Path) -> Result<()> {
        let mut guard = self.failures.lock().unwrap();
        if guard.is_none() {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            *guard = Some(BufWriter::new(file));
        }
        let writer = guard.as_mut().expect("just opened");
        writeln!(writer, "{}", serde_json::to_string(record)?).map_err(|e| Error::io(path, e))?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        self.stats.lock().unwrap().failed += 1;
        Ok(())
    }
}

/// Run every not-yet-completed persona through [`run_conversation`] with a
/// bounded worker pool, append finished trees to the checkpoint, then write
/// the dataset sorted by persona id. Individual failures are recorded in the
/// failures sidecar and do not stop the batch.
pub fn run_batch(gateway: &Gateway, job: &BuildJob, dataset_out: &Path) -> Result<BuildStats> {
    job.validate()?;
    let existing = read_checkpoint_lenient(&job.checkpoint_path)?;
    let done: std::collections::BTreeSet<&str> =
        existing.iter().map(|t| t.persona_id.as_str()).collect();
    let pending: Vec<&Persona> = job
        .personas
        .iter()
        .filter(|p| !done.contains(p.persona_id.as_str()))
        .collect();

    let checkpoint_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&job.checkpoint_path)
        .map_err(|e| Error::io(&job.checkpoint_path, e))?;
    let state = BatchState {
        checkpoint: Mutex::new(BufWriter::new(checkpoint_file)),
        failures: Mutex::new(None),
        stats: Mutex::new(BuildStats::default()),
    };
    let failures_file = failures_path(&job.checkpoint_path);
    let queue: Mutex<std::collections::VecDeque<&Persona>> =
        Mutex::new(pending.into_iter().collect());
    let first_error: Mutex<Option<Error>> = Mutex::new(None);

    let workers = job.parallelism.min(job.personas.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let persona = match queue.lock().unwrap().pop_front() {
                    Some(p) => p,
                    None => break,
                };
                let seed = conversation_seed(job.global_seed, &persona.persona_id);
                let (tree, err) =
                    run_conversation_inner(gateway, persona, job.max_turns, seed);
                let io_result = match err {
                    None => tree.serialize_line().and_then(|line| {
                        state.record_tree(&line, tree.turns.len(), &job.checkpoint_path)
                    }),
                    Some(err) => {
                        log::warn!("conversation for {} failed: {err}", persona.persona_id);
                        let record = FailureRecord {
                            persona_id: persona.persona_id.clone(),
                            error: err.to_string(),
                            turns_completed: tree.turns.len(),
                            partial: tree,
                        };
                        state.record_failure(&record, &failures_file)
                    }
                };
                if let Err(err) = io_result {
                    let mut slot = first_error.lock().unwrap();
                    if slot.is_none() {
                        *slot = Some(err);
                    }
                    break;
                }
            });
        }
    });

    if let Some(err) = first_error.into_inner().unwrap() {
        return Err(err);
    }

    // Finalize: merge checkpoint contents, dedup by persona keeping the
    // latest line, sort, and write the dataset.
    let mut by_persona: BTreeMap<String, ConversationTree> = BTreeMap::new();
    for tree in read_checkpoint_lenient(&job.checkpoint_path)? {
        by_persona.insert(tree.persona_id.clone(), tree);
    }
    let trees: Vec<ConversationTree> = by_persona.into_values().collect();
    crate::tree::write_dataset(dataset_out, &trees)?;

    let mut stats = state.stats.into_inner().unwrap();
    stats.completed = trees.len();
    stats.turns_total = trees.iter().map(|t| t.turns.len()).sum();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ChatProvider, ChatRequest, MockChat, MockEmbedding};
    use std::sync::Arc;

    fn persona(i: usize) -> Persona {
        Persona {
            persona_id: format!("p{i:02}"),
            profile_text: format!(
                "aged {}; repairs violins; collects transit maps; swims laps before work; \
                 lives with a younger brother; variant {i}",
                22 + i
            ),
            personality_text: "dry sense of humor; calm under pressure; restless indoors"
                .to_string(),
            profile_id: format!("profile-{i:04}"),
            personality_id: "personality-0000".to_string(),
        }
    }

    fn canonical_history(turns: usize) -> Vec<ChatMessage> {
        let mut history = Vec::new();
        for i in 1..=turns {
            history.push(ChatMessage::user(format!("user line {i}")));
            history.push(ChatMessage::assistant(format!("reply line {i}")));
        }
        history
    }

    #[test]
    fn first_user_message_is_a_nonempty_opener_and_deterministic() {
        let gateway = Gateway::mock(11);
        let m1 = gen_user_message(&gateway, &persona(1), &[]).unwrap();
        assert!(!m1.trim().is_empty());
        let again = gen_user_message(&Gateway::mock(11), &persona(1), &[]).unwrap();
        assert_eq!(m1, again);
        assert_ne!(
            m1,
            gen_user_message(&Gateway::mock(12), &persona(1), &[]).unwrap()
        );
    }

    #[test]
    fn role_play_request_carries_history_from_its_own_perspective() {
        let gateway = Gateway::mock(3);
        let history = canonical_history(3);
        gen_user_message(&gateway, &persona(1), &history).unwrap();
        let captured = gateway.request_log().for_label("role_play");
        assert_eq!(captured.len(), 1);
        let messages = &captured[0].messages;
        assert_eq!(messages.len(), 7);
        assert_eq!(messages[0].role, MessageRole::System);
        // m_j are the role player's own words, so they arrive as assistant.
        assert_eq!(messages[1].role, MessageRole::Assistant);
        assert_eq!(messages[1].content, "user line 1");
        assert_eq!(messages[2].role, MessageRole::User);
        assert_eq!(messages[2].content, "reply line 1");
        assert_eq!(messages[6].role, MessageRole::User);
    }

    #[test]
    fn induction_parses_labels_and_none_sentinel() {
        let parsed = parse_induction("Profile: lives in a city\nPersonalities: None").unwrap();
        assert_eq!(parsed.profile_facts, "lives in a city");
        assert_eq!(parsed.personality_traits, "None");
    }

    #[test]
    fn induction_captures_multi_line_profiles() {
        let parsed = parse_induction(
            "Profile: lives in a city\nworks with plants\nPersonalities: upbeat",
        )
        .unwrap();
        assert_eq!(parsed.profile_facts, "lives in a city\nworks with plants");
        assert_eq!(parsed.personality_traits, "upbeat");
    }

    struct LabelessChat {
        calls: Mutex<usize>,
    }

    impl ChatProvider for LabelessChat {
        fn chat(&self, _request: &ChatRequest) -> Result<String> {
            *self.calls.lock().unwrap() += 1;
            Ok("no labels here at all".to_string())
        }
    }

    #[test]
    fn unparseable_induction_retries_once_then_fails() {
        let provider = Arc::new(LabelessChat {
            calls: Mutex::new(0),
        });
        let gateway =
            Gateway::from_providers(provider.clone(), Arc::new(MockEmbedding::new()), 1);
        let err = induce_persona(&gateway, &persona(1), &[], "hello").unwrap_err();
        assert!(matches!(err, Error::InductionParseFailure));
        assert_eq!(*provider.calls.lock().unwrap(), 2);
    }

    #[test]
    fn induction_request_includes_the_current_message() {
        let gateway = Gateway::mock(5);
        let history = canonical_history(2);
        induce_persona(&gateway, &persona(1), &history, "brand new message").unwrap();
        let captured = gateway.request_log().for_label("induction");
        let text = captured[0].full_text();
        assert!(text.contains("A: user line 1"));
        assert!(text.contains("B: reply line 1"));
        assert!(text.ends_with("A: brand new message") || text.contains("A: brand new message"));
    }

    #[test]
    fn preferred_request_carries_hint_with_induced_persona_only() {
        let gateway = Gateway::mock(5);
        let p = persona(1);
        let revealed = RevealedPersona {
            profile_facts: "mentions a hands-on job".to_string(),
            personality_traits: "None".to_string(),
        };
        gen_preferred(&gateway, "what now?", &canonical_history(1), &revealed).unwrap();
        let captured = gateway.request_log().for_label("preferred");
        let text = captured[0].full_text();
        assert!(text.contains("(Hint: Below is the known user profile"));
        assert!(text.contains("mentions a hands-on job"));
        assert!(!text.contains(&p.profile_text));
    }

    #[test]
    fn fully_unrevealed_persona_still_renders_the_hint() {
        let gateway = Gateway::mock(5);
        gen_preferred(&gateway, "hi", &[], &RevealedPersona::empty()).unwrap();
        let text = gateway.request_log().for_label("preferred")[0].full_text();
        assert!(text.contains("Profile: None; Personalities: None"));
    }

    #[test]
    fn rejected_request_has_history_but_no_hint_and_no_persona() {
        let gateway = Gateway::mock(5);
        let p = persona(1);
        gen_rejected(&gateway, "what now?", &canonical_history(2)).unwrap();
        let captured = gateway.request_log().for_label("rejected");
        let messages = &captured[0].messages;
        assert_eq!(messages.len(), 6);
        let text = captured[0].full_text();
        assert!(!text.contains("Hint:"));
        assert!(!text.contains(&p.profile_text));
        assert!(!text.contains(&p.personality_text));
    }

    #[test]
    fn conversation_has_k_turns_and_is_deterministic() {
        let run = || {
            let gateway = Gateway::mock(21);
            run_conversation(&gateway, &persona(2), 4, 77).unwrap()
        };
        let tree = run();
        assert_eq!(tree.turns.len(), 4);
        tree.validate().unwrap();
        assert_eq!(tree.serialize_line().unwrap(), run().serialize_line().unwrap());
    }

    #[test]
    fn within_a_turn_roles_run_in_fixed_order() {
        let gateway = Gateway::mock(9);
        run_conversation(&gateway, &persona(3), 3, 5).unwrap();
        let labels: Vec<String> = gateway
            .request_log()
            .snapshot()
            .into_iter()
            .map(|r| r.label)
            .collect();
        let expected: Vec<String> = std::iter::repeat_n(
            ["role_play", "induction", "preferred", "rejected"],
            3,
        )
        .flatten()
        .map(str::to_string)
        .collect();
        assert_eq!(labels, expected);
    }

    #[test]
    fn blindness_holds_across_a_whole_conversation() {
        let gateway = Gateway::mock(31);
        let p = persona(4);
        let tree = run_conversation(&gateway, &p, 4, 13).unwrap();
        for request in gateway.request_log().for_label("rejected") {
            let text = request.full_text();
            assert!(!text.contains(&p.profile_text));
            assert!(!text.contains(&p.personality_text));
            assert!(!text.contains("Hint:"));
        }
        for (request, turn) in gateway
            .request_log()
            .for_label("preferred")
            .iter()
            .zip(&tree.turns)
        {
            let text = request.full_text();
            assert!(!text.contains(&p.profile_text));
            assert!(text.contains(&turn.revealed.profile_facts));
        }
    }

    #[test]
    fn parallel_and_serial_batches_produce_identical_datasets() {
        let personas: Vec<Persona> = (0..10).map(persona).collect();
        let run = |parallelism: usize, tag: &str| {
            let dir = tempfile::tempdir().unwrap();
            let checkpoint = dir.path().join(format!("{tag}.ckpt.jsonl"));
            let out = dir.path().join(format!("{tag}.jsonl"));
            let gateway = Gateway::mock(55);
            let job = BuildJob {
                personas: personas.clone(),
                max_turns: 3,
                parallelism,
                checkpoint_path: checkpoint,
                global_seed: 55,
            };
            let stats = run_batch(&gateway, &job, &out).unwrap();
            (std::fs::read_to_string(&out).unwrap(), stats)
        };
        let (serial, serial_stats) = run(1, "serial");
        let (parallel, parallel_stats) = run(4, "parallel");
        assert_eq!(serial, parallel);
        assert_eq!(serial_stats, parallel_stats);
        assert_eq!(serial_stats.completed, 10);
        assert_eq!(serial_stats.turns_total, 30);
        assert_eq!(serial_stats.failed, 0);
    }

    #[test]
    fn resume_skips_completed_personas_and_never_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let checkpoint = dir.path().join("ckpt.jsonl");
        let out = dir.path().join("dataset.jsonl");
        let personas: Vec<Persona> = (0..10).map(persona).collect();
        let job = |subset: &[Persona]| BuildJob {
            personas: subset.to_vec(),
            max_turns: 2,
            parallelism: 2,
            checkpoint_path: checkpoint.clone(),
            global_seed: 9,
        };
        let first = Gateway::mock(9);
        run_batch(&first, &job(&personas[..3]), &out).unwrap();
        // Simulate a torn final line from a killed process.
        {
            use std::io::Write;
            let mut f = OpenOptions::new().append(true).open(&checkpoint).unwrap();
            write!(f, "{{\"v\":1,\"tree_id\":\"tree-p0").unwrap();
            writeln!(f).unwrap();
        }
        let second = Gateway::mock(9);
        let stats = run_batch(&second, &job(&personas), &out).unwrap();
        assert_eq!(stats.completed, 10);
        let trees = crate::tree::read_dataset(&out).unwrap();
        let mut ids: Vec<&str> = trees.iter().map(|t| t.tree_id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 10);
        // Only the seven missing personas were driven on the second run.
        let second_run_roleplay = second.request_log().for_label("role_play").len();
        assert_eq!(second_run_roleplay, 7 * 2);
    }

    #[test]
    fn empty_job_writes_an_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("dataset.jsonl");
        let gateway = Gateway::mock(1);
        let job = BuildJob {
            personas: Vec::new(),
            max_turns: 5,
            parallelism: 2,
            checkpoint_path: dir.path().join("ckpt.jsonl"),
            global_seed: 1,
        };
        let stats = run_batch(&gateway, &job, &out).unwrap();
        assert_eq!(stats, BuildStats::default());
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    }

    /// Fails induction whenever the ground-truth profile carries the marker,
    /// leaving every other persona untouched.
    struct SabotagedChat {
        inner: MockChat,
    }

    impl ChatProvider for SabotagedChat {
        fn chat(&self, request: &ChatRequest) -> Result<String> {
            if request.label == "induction"
                && request.messages.iter().any(|m| m.content.contains("UNLUCKY"))
            {
                return Err(Error::ProviderFatal("scripted induction outage".to_string()));
            }
            self.inner.chat(request)
        }
    }

    #[test]
    fn per_conversation_failures_are_recorded_and_the_batch_continues() {
        let dir = tempfile::tempdir().unwrap();
        let checkpoint = dir.path().join("ckpt.jsonl");
        let out = dir.path().join("dataset.jsonl");
        let mut personas: Vec<Persona> = (0..5).map(persona).collect();
        personas[2].profile_text.push_str("; UNLUCKY");
        let gateway = Gateway::from_providers(
            Arc::new(SabotagedChat {
                inner: MockChat::new(7),
            }),
            Arc::new(MockEmbedding::new()),
            7,
        );
        let job = BuildJob {
            personas,
            max_turns: 2,
            parallelism: 2,
            checkpoint_path: checkpoint.clone(),
            global_seed: 7,
        };
        let stats = run_batch(&gateway, &job, &out).unwrap();
        assert_eq!(stats.completed, 4);
        assert_eq!(stats.failed, 1);
        let sidecar = std::fs::read_to_string(failures_path(&checkpoint)).unwrap();
        let record: FailureRecord = serde_json::from_str(sidecar.lines().next().unwrap()).unwrap();
        assert_eq!(record.persona_id, "p02");
        assert!(record.error.contains("induction outage"));
        assert_eq!(record.turns_completed, 0);
        let trees = crate::tree::read_dataset(&out).unwrap();
        assert_eq!(trees.len(), 4);
        assert!(trees.iter().all(|t| t.persona_id != "p02"));
    }
}
