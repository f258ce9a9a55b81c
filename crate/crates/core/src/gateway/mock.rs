//! Deterministic offline providers.
//!
//! Completions are a pure function of (seed, role label, model, messages):
//! the request is hashed into a ChaCha8 stream that drives a small grammar
//! per role. Embeddings hash character trigrams into a fixed-width bag, so
//! identical text always maps to the identical vector and near-duplicate
//! text maps to nearby vectors, independent of the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

use super::{ChatProvider, ChatRequest, Embedding, EmbeddingProvider, MessageRole};

const PROFILE_AGES: [u32; 8] = [23, 27, 31, 36, 42, 49, 58, 66];

const PROFILE_OCCUPATIONS: [&str; 12] = [
    "works as a florist",
    "works as a bus mechanic",
    "teaches middle school science",
    "runs a small bakery",
    "is a freelance translator",
    "is a hospital pharmacist",
    "does carpentry for a living",
    "manages a plant nursery",
    "is a court stenographer",
    "repairs violins",
    "is a park ranger",
    "draws storyboards for a studio",
];

const PROFILE_FACTS: [&str; 22] = [
    "grew up on a dairy farm",
    "keeps two elderly cats",
    "collects transit maps",
    "bakes sourdough every Sunday",
    "swims laps before work",
    "volunteers at a food bank",
    "is learning Portuguese",
    "restores old bicycles",
    "lives with a younger brother",
    "plays bass in a cover band",
    "grows chili peppers on a balcony",
    "has run three marathons",
    "cans vegetables every autumn",
    "paints watercolor landscapes",
    "coaches a youth chess club",
    "recently moved to a river town",
    "keeps a handwritten recipe book",
    "birdwatches at dawn on weekends",
    "is saving for a sailboat",
    "studied geology in college",
    "hosts a monthly board game night",
    "forages for mushrooms in fall",
];

const TRAIT_FACTS: [&str; 22] = [
    "fiercely independent",
    "soft-spoken and patient",
    "quick to laugh",
    "methodical about plans",
    "easily bored by routine",
    "openly sentimental",
    "dry sense of humor",
    "stubborn once decided",
    "curious about strangers",
    "calm under pressure",
    "blunt but warm",
    "prone to daydreaming",
    "competitive in games",
    "slow to trust",
    "generous with time",
    "restless indoors",
    "skeptical of hype",
    "tidy to a fault",
    "talks with their hands",
    "hates being late",
    "cries at films",
    "keeps worries private",
];

const MOCK_OPENERS: [&str; 10] = [
    "Hey! I finally cleared out the garage this weekend.",
    "You will not believe the line at the market today.",
    "I tried that new trail everyone keeps mentioning.",
    "So my neighbor gave me a crate of apples.",
    "I stayed up way too late reading again.",
    "The weather turned so fast this morning.",
    "Guess who signed up for a pottery class.",
    "I found an old photo album while cleaning.",
    "My commute was a total circus today.",
    "I have been humming the same tune all day.",
];

const MOCK_USER_LINES: [&str; 12] = [
    "Honestly it went better than I expected.",
    "I keep going back and forth on it.",
    "That part always trips me up.",
    "It reminded me of summers as a kid.",
    "I might give it another shot on Saturday.",
    "Everyone kept asking how I did it.",
    "I nearly gave up halfway through.",
    "The whole thing took twice as long as planned.",
    "I could not stop thinking about it after.",
    "It was louder than I would have liked.",
    "Somehow it all worked out in the end.",
    "I am still deciding whether it was worth it.",
];

const MOCK_ASSISTANT_LINES: [&str; 12] = [
    "That sounds like quite a day.",
    "Nice, how did that turn out?",
    "I can see why that stuck with you.",
    "That seems worth another try.",
    "What was the best part for you?",
    "That would have thrown me off too.",
    "Sounds like you handled it well.",
    "Did anything surprise you along the way?",
    "That has a good story behind it, I bet.",
    "Small wins like that add up.",
    "Would you do it differently next time?",
    "I like how you stuck with it.",
];

const INDUCED_PROFILE_PHRASES: [&str; 8] = [
    "mentions spending weekends outdoors",
    "refers to a hands-on job",
    "talks about cooking at home",
    "mentions living near family",
    "refers to a recent move",
    "talks about a long-running hobby",
    "mentions commuting across town",
    "refers to evenings spent reading",
];

const INDUCED_TRAIT_PHRASES: [&str; 8] = [
    "comes across as upbeat",
    "seems careful with decisions",
    "sounds direct and brief",
    "seems nostalgic",
    "comes across as persistent",
    "sounds easily amused",
    "seems private about feelings",
    "comes across as practical",
];

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

fn pick_distinct<'a, R: Rng>(rng: &mut R, pool: &[&'a str], n: usize) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::with_capacity(n);
    while out.len() < n.min(pool.len()) {
        let cand = pick(rng, pool);
        if !out.contains(&cand) {
            out.push(cand);
        }
    }
    out
}

/// Offline chat backend. One instance serves every role; the role label in
/// the request selects the output grammar.
#[derive(Debug, Clone)]
pub struct MockChat {
    seed: u64,
}

impl MockChat {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn rng_for(&self, request: &ChatRequest) -> ChaCha8Rng {
        let mut parts: Vec<&str> = vec!["mock-chat", &request.label, &request.model];
        for message in &request.messages {
            parts.push(message.role.as_str());
            parts.push(&message.content);
        }
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &parts))
    }

    fn persona_batch(&self, request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
        let system = request
            .messages
            .first()
            .map(|m| m.content.as_str())
            .unwrap_or("");
        let personality = system.contains("personality traits such as");
        let batch = system
            .split_whitespace()
            .find_map(|w| w.parse::<usize>().ok())
            .unwrap_or(20)
            .clamp(1, 50);
        let mut lines = Vec::with_capacity(batch);
        for _ in 0..batch {
            let count = rng.random_range(8..=10);
            let line = if personality {
                pick_distinct(rng, &TRAIT_FACTS, count).join("; ")
            } else {
                let mut facts = vec![format!(
                    "aged {}",
                    PROFILE_AGES[rng.random_range(0..PROFILE_AGES.len())]
                )];
                facts.push(pick(rng, &PROFILE_OCCUPATIONS).to_string());
                facts.extend(
                    pick_distinct(rng, &PROFILE_FACTS, count - 2)
                        .into_iter()
                        .map(str::to_string),
                );
                facts.join("; ")
            };
            lines.push(line);
        }
        lines.join("\n")
    }

    fn induction(&self, rng: &mut ChaCha8Rng) -> String {
        let profile_count = rng.random_range(1..=2);
        let profile = pick_distinct(rng, &INDUCED_PROFILE_PHRASES, profile_count).join("; ");
        let personalities = if rng.random_bool(0.3) {
            "None".to_string()
        } else {
            let trait_count = rng.random_range(1..=2);
            pick_distinct(rng, &INDUCED_TRAIT_PHRASES, trait_count).join("; ")
        };
        format!("Profile: {profile}\nPersonalities: {personalities}")
    }

    fn chat_line(&self, request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
        let non_system = request
            .messages
            .iter()
            .filter(|m| m.role != MessageRole::System)
            .count();
        if request.label == "role_play" {
            if non_system == 0 {
                return pick(rng, &MOCK_OPENERS).to_string();
            }
            let mut line = pick(rng, &MOCK_USER_LINES).to_string();
            if rng.random_bool(0.4) {
                line.push(' ');
                line.push_str(pick(rng, &MOCK_USER_LINES));
            }
            return line;
        }
        let mut line = pick(rng, &MOCK_ASSISTANT_LINES).to_string();
        if rng.random_bool(0.4) {
            line.push(' ');
            line.push_str(pick(rng, &MOCK_ASSISTANT_LINES));
        }
        line
    }
}

impl ChatProvider for MockChat {
    fn chat(&self, request: &ChatRequest) -> Result<String> {
        let mut rng = self.rng_for(request);
        let out = match request.label.as_str() {
            "persona_gen" => self.persona_batch(request, &mut rng),
            "induction" => self.induction(&mut rng),
            "judge" => rng.random_range(1..=5).to_string(),
            _ => self.chat_line(request, &mut rng),
        };
        Ok(out)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Offline embedding backend: a hashed bag of content words (4+ letters), L2
/// normalized. Word-level features keep unrelated texts well separated even
/// when they share ordinary English character patterns. Deliberately
/// seed-free so vectors are stable across runs.
#[derive(Debug, Clone)]
pub struct MockEmbedding {
    dim: usize,
}

impl MockEmbedding {
    pub fn new() -> Self {
        Self { dim: 256 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn embed_one(&self, text: &str) -> Result<Embedding> {
        let normalized = text.trim().to_lowercase();
        if normalized.is_empty() {
            return Err(Error::EmptyInput("embedding text"));
        }
        let mut vector = vec![0.0f64; self.dim];
        let mut hits = 0usize;
        for token in normalized.split(|c: char| !c.is_alphanumeric()) {
            if token.chars().count() >= 4 {
                vector[(fnv1a(token.as_bytes()) as usize) % self.dim] += 1.0;
                hits += 1;
            }
        }
        if hits == 0 {
            vector[(fnv1a(normalized.as_bytes()) as usize) % self.dim] += 1.0;
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        for value in &mut vector {
            *value /= norm;
        }
        Ok(vector)
    }
}

impl Default for MockEmbedding {
    fn default() -> Self {
        Self::new()
    }
}

impl EmbeddingProvider for MockEmbedding {
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}
