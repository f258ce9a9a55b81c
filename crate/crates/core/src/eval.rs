//! Benchmark protocol: a judge-side role player converses with an evaluated
//! endpoint for K turns, a judge rates every endpoint reply 1-5 against the
//! full persona, and ratings roll up into per-turn alignment levels with
//! fitted improvement rates.
//!
//! The evaluated endpoint never sees persona text; only the judge side does.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::builder::gen_user_message;
use crate::error::{Error, Result};
use crate::gateway::{
    bindings, ChatClient, ChatMessage, Gateway, RoleId, SamplingParams, NEUTRAL_SYSTEM_PROMPT,
};
use crate::metrics::{
    alignment_curve, cohen_kappa, fit_ir, normalize_al, AlignmentCurve, CaseScores, RegressionFit,
};
use crate::persona::Persona;
use crate::tree::schema_violation;

/// One benchmark instance: a persona the judge side will role-play.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub case_id: String,
    pub persona: Persona,
    pub verified: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseLine {
    case_id: String,
    profile_text: String,
    personality_text: String,
    verified: bool,
}

pub fn read_cases(path: &Path) -> Result<Vec<EvalCase>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cases = Vec::new();
    let mut seen = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let parsed: CaseLine = serde_path_to_error::deserialize(de)
            .map_err(|e| schema_violation(e.path().to_string(), e.inner().to_string()))?;
        if !seen.insert(parsed.case_id.clone()) {
            return Err(Error::SchemaViolation {
                path: "case_id".to_string(),
                message: format!("duplicate case_id {}", parsed.case_id),
            });
        }
        for (field, text) in [
            ("case_id", &parsed.case_id),
            ("profile_text", &parsed.profile_text),
            ("personality_text", &parsed.personality_text),
        ] {
            if text.trim().is_empty() {
                return Err(Error::SchemaViolation {
                    path: field.to_string(),
                    message: "must be non-empty".to_string(),
                });
            }
        }
        let persona = Persona {
            persona_id: parsed.case_id.clone(),
            profile_text: parsed.profile_text,
            personality_text: parsed.personality_text,
            profile_id: format!("{}-profile", parsed.case_id),
            personality_id: format!("{}-personality", parsed.case_id),
        };
        cases.push(EvalCase {
            case_id: parsed.case_id,
            persona,
            verified: parsed.verified,
        });
    }
    Ok(cases)
}

pub fn write_cases(path: &Path, cases: &[EvalCase]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for case in cases {
        let line = CaseLine {
            case_id: case.case_id.clone(),
            profile_text: case.persona.profile_text.clone(),
            personality_text: case.persona.personality_text.clone(),
            verified: case.verified,
        };
        writeln!(writer, "{}", serde_json::to_string(&line)?).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Run settings independent of the case list.
#[derive(Debug, Clone)]
pub struct EvalJob {
    pub run_id: String,
    pub model_label: String,
    pub max_turns: usize,
    pub parallelism: usize,
}

impl EvalJob {
    pub fn validate(&self) -> Result<()> {
        if self.max_turns == 0 {
            return Err(Error::Config("eval max_turns must be at least 1".to_string()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("eval parallelism must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Transcript and ratings for one completed case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub messages: Vec<ChatMessage>,
    pub scores: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub turn: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub run_id: String,
    pub model_label: String,
    pub max_turns: usize,
    pub completed: Vec<CaseResult>,
    pub failures: Vec<CaseFailure>,
    pub started_at: u64,
    pub finished_at: u64,
}

const ENDPOINT_SAMPLING: SamplingParams = SamplingParams {
    temperature: 1.0,
    max_tokens: 1024,
};

fn endpoint_reply(
    endpoint: &ChatClient,
    history: &[ChatMessage],
    user_message: &str,
) -> Result<String> {
    let mut messages = Vec::with_capacity(history.len() + 2);
    messages.push(ChatMessage::system(NEUTRAL_SYSTEM_PROMPT));
    messages.extend_from_slice(history);
    messages.push(ChatMessage::user(user_message));
    endpoint
        .chat(messages, &ENDPOINT_SAMPLING)
        .map_err(|e| Error::EndpointFailure(e.to_string()))
}

fn parse_rating(completion: &str) -> Option<i64> {
    let trimmed = completion.trim();
    if let Ok(value) = trimmed.parse::<i64>() {
        if (1..=5).contains(&value) {
            return Some(value);
        }
    }
    // Lenient pass: first in-range integer anywhere in the text.
    let mut digits = String::new();
    for ch in trimmed.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_digit() {
            digits.push(ch);
        } else if !digits.is_empty() {
            if let Ok(value) = digits.parse::<i64>() {
                if (1..=5).contains(&value) {
                    return Some(value);
                }
            }
            digits.clear();
        }
    }
    None
}

const RATING_REASK: &str = "Respond with only a single integer from 1 to 5.";

/// Score one endpoint reply 1-5. Strict parse, then lenient extraction, then
/// one terser re-ask before giving up.
pub fn judge_rate(
    gateway: &Gateway,
    persona: &Persona,
    user_message: &str,
    response: &str,
) -> Result<i64> {
    let binds = bindings(&[
        ("User Profile", &persona.profile_text),
        ("User Personalities", &persona.personality_text),
        ("User Message", user_message),
        ("Model's Response", response),
    ]);
    let first = gateway.complete(RoleId::Judge, &binds, &[])?;
    if let Some(rating) = parse_rating(&first) {
        return Ok(rating);
    }
    let retry_history = [
        ChatMessage::assistant(first),
        ChatMessage::user(RATING_REASK),
    ];
    let second = gateway.complete(RoleId::Judge, &binds, &retry_history)?;
    parse_rating(&second).ok_or(Error::RatingParseFailure)
}

fn run_case_inner(
    gateway: &Gateway,
    endpoint: &ChatClient,
    case: &EvalCase,
    max_turns: usize,
) -> std::result::Result<CaseResult, CaseFailure> {
    let mut history: Vec<ChatMessage> = Vec::with_capacity(2 * max_turns);
    let mut scores = Vec::with_capacity(max_turns);
    for turn in 1..=max_turns {
        let fail = |error: Error| CaseFailure {
            case_id: case.case_id.clone(),
            turn,
            error: error.to_string(),
        };
        let user_message = gen_user_message(gateway, &case.persona, &history).map_err(fail)?;
        let response = endpoint_reply(endpoint, &history, &user_message).map_err(fail)?;
        let rating = judge_rate(gateway, &case.persona, &user_message, &response).map_err(fail)?;
        history.push(ChatMessage::user(user_message));
        history.push(ChatMessage::assistant(response));
        scores.push(rating);
    }
    Ok(CaseResult {
        case_id: case.case_id.clone(),
        messages: history,
        scores,
    })
}

/// Drive one case for `max_turns` turns.
pub fn run_case(
    gateway: &Gateway,
    endpoint: &ChatClient,
    case: &EvalCase,
    max_turns: usize,
) -> Result<CaseResult> {
    run_case_inner(gateway, endpoint, case, max_turns).map_err(|f| {
        Error::EndpointFailure(format!("case {} turn {}: {}", f.case_id, f.turn, f.error))
    })
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Run every case with bounded parallelism. Individual case failures are
/// recorded and the run continues; output ordering follows the input case
/// list regardless of completion order.
pub fn run_eval(
    gateway: &Gateway,
    endpoint: &ChatClient,
    cases: &[EvalCase],
    job: &EvalJob,
) -> Result<EvalRun> {
    job.validate()?;
    let started_at = unix_now();
    let queue: Mutex<VecDeque<&EvalCase>> = Mutex::new(cases.iter().collect());
    let completed: Mutex<Vec<CaseResult>> = Mutex::new(Vec::new());
    let failures: Mutex<Vec<CaseFailure>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..job.parallelism.min(cases.len().max(1)) {
            scope.spawn(|| loop {
                let case = match queue.lock().unwrap().pop_front() {
                    Some(case) => case,
                    None => break,
                };
                match run_case_inner(gateway, endpoint, case, job.max_turns) {
                    Ok(result) => completed.lock().unwrap().push(result),
                    Err(failure) => failures.lock().unwrap().push(failure),
                }
            });
        }
    });
    let order: Vec<&str> = cases.iter().map(|c| c.case_id.as_str()).collect();
    let position = |id: &str| order.iter().position(|c| *c == id).unwrap_or(usize::MAX);
    let mut completed = completed.into_inner().unwrap();
    completed.sort_by_key(|r| position(&r.case_id));
    let mut failures = failures.into_inner().unwrap();
    failures.sort_by_key(|f| position(&f.case_id));
    Ok(EvalRun {
        run_id: job.run_id.clone(),
        model_label: job.model_label.clone(),
        max_turns: job.max_turns,
        completed,
        failures,
        started_at,
        finished_at: unix_now(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct RunMeta {
    run_id: String,
    model_label: String,
    max_turns: usize,
    completed: usize,
    failed: usize,
    started_at: u64,
    finished_at: u64,
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for item in items {
        writeln!(writer, "{}", serde_json::to_string(item)?).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Persist a run as four artifacts under `dir`: transcripts.jsonl,
/// ratings.jsonl, failures.jsonl, and meta.json. Timestamps appear only in
/// meta.json so the data files stay byte-reproducible under a fixed seed.
pub fn write_run(dir: &Path, run: &EvalRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join("transcripts.jsonl"), &run.completed)?;
    let ratings: Vec<CaseScores> = run
        .completed
        .iter()
        .map(|r| CaseScores::new(r.case_id.clone(), r.scores.clone()))
        .collect();
    write_jsonl(&dir.join("ratings.jsonl"), &ratings)?;
    write_jsonl(&dir.join("failures.jsonl"), &run.failures)?;
    let meta = RunMeta {
        run_id: run.run_id.clone(),
        model_label: run.model_label.clone(),
        max_turns: run.max_turns,
        completed: run.completed.len(),
        failed: run.failures.len(),
        started_at: run.started_at,
        finished_at: run.finished_at,
    };
    let meta_path = dir.join("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| Error::io(&meta_path, e))
}

/// Load the per-case rating vectors from a ratings file, checking every score
/// is an integer in 1..=5.
pub fn read_ratings(path: &Path) -> Result<Vec<CaseScores>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let scores: CaseScores = serde_json::from_str(&line)?;
        for &score in &scores.scores {
            if !(1..=5).contains(&score) {
                return Err(Error::RatingOutOfRange { value: score });
            }
        }
        out.push(scores);
    }
    Ok(out)
}

/// Table-1-shaped summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub al_by_turn: AlignmentCurve,
    pub average_al: f64,
    pub ir: RegressionFit,
    pub n_ir: RegressionFit,
    pub case_count: usize,
    pub failed_count: usize,
}

pub fn build_report(scores: &[CaseScores], turns: usize, failed_count: usize) -> Result<Report> {
    if scores.is_empty() {
        return Err(Error::NoCompletedCases);
    }
    let al_by_turn = alignment_curve(scores, turns)?;
    let ir = fit_ir(&al_by_turn)?;
    let n_ir = fit_ir(&normalize_al(&al_by_turn))?;
    Ok(Report {
        average_al: al_by_turn.mean(),
        case_count: al_by_turn.case_count,
        al_by_turn,
        ir,
        n_ir,
        failed_count,
    })
}

pub fn report_from_run(run: &EvalRun) -> Result<Report> {
    let scores: Vec<CaseScores> = run
        .completed
        .iter()
        .map(|r| CaseScores::new(r.case_id.clone(), r.scores.clone()))
        .collect();
    build_report(&scores, run.max_turns, run.failures.len())
}

/// Rebuild a report from a persisted run directory. Falls back to the rating
/// vectors' own length when meta.json is absent.
pub fn report_from_dir(dir: &Path) -> Result<Report> {
    let ratings = read_ratings(&dir.join("ratings.jsonl"))?;
    let meta_path = dir.join("meta.json");
    let (turns, failed) = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: RunMeta = serde_json::from_str(&text)?;
        (meta.max_turns, meta.failed)
    } else {
        (ratings.first().map(|c| c.scores.len()).unwrap_or(0), 0)
    };
    build_report(&ratings, turns, failed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Table,
    Csv,
    Plotdata,
}

impl std::str::FromStr for RenderFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "plotdata" => Ok(Self::Plotdata),
            other => Err(Error::Config(format!(
                "unknown report format {other:?} (expected table, csv, or plotdata)"
            ))),
        }
    }
}

fn render_table(report: &Report) -> String {
    let mut header: Vec<String> = (1..=report.al_by_turn.turns())
        .map(|k| format!("k={k}"))
        .collect();
    header.extend(
        ["Average", "IR", "N-IR", "R2", "N-R2"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut values: Vec<String> = report
        .al_by_turn
        .values
        .iter()
        .map(|v| format!("{v:.2}"))
        .collect();
    values.push(format!("{:.2}", report.average_al));
    values.push(format!("{:.3}", report.ir.slope));
    values.push(format!("{:.3}", report.n_ir.slope));
    values.push(format!("{:.3}", report.ir.r_squared));
    values.push(format!("{:.3}", report.n_ir.r_squared));
    let widths: Vec<usize> = header
        .iter()
        .zip(&values)
        .map(|(h, v)| h.len().max(v.len()))
        .collect();
    let row = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    format!(
        "{}\n{}\ncases: {} completed, {} failed\n",
        row(&header),
        row(&values),
        report.case_count,
        report.failed_count
    )
}

fn render_csv(report: &Report) -> String {
    let mut out = String::from("k,al\n");
    for (i, v) in report.al_by_turn.values.iter().enumerate() {
        out.push_str(&format!("{},{v:.4}\n", i + 1));
    }
    out.push_str(&format!("average,{:.4}\n", report.average_al));
    out.push_str(&format!(
        "ir,{:.4},n_ir,{:.4},r_squared,{:.4},n_r_squared,{:.4}\n",
        report.ir.slope, report.n_ir.slope, report.ir.r_squared, report.n_ir.r_squared
    ));
    out
}

fn render_plotdata(report: &Report) -> String {
    let mut out = String::new();
    for (i, v) in report.al_by_turn.values.iter().enumerate() {
        let fitted = report.ir.predict(i + 1);
        out.push_str(&format!("{}\t{v}\t{fitted}\n", i + 1));
    }
    out
}

pub fn render(report: &Report, format: RenderFormat) -> String {
    match format {
        RenderFormat::Table => render_table(report),
        RenderFormat::Csv => render_csv(report),
        RenderFormat::Plotdata => render_plotdata(report),
    }
}

/// Chance-corrected agreement between two rating files. Files must list the
/// same case_ids; scores are flattened in file order.
pub fn kappa_between_files(path_a: &Path, path_b: &Path) -> Result<f64> {
    let a = read_ratings(path_a)?;
    let b = read_ratings(path_b)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let flatten = |cases: &[CaseScores]| -> Vec<i64> {
        let mut sorted: Vec<&CaseScores> = cases.iter().collect();
        sorted.sort_by(|x, y| x.case_id.cmp(&y.case_id));
        sorted.iter().flat_map(|c| c.scores.iter().copied()).collect()
    };
    cohen_kappa(&flatten(&a), &flatten(&b))
}
