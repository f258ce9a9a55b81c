//! Subcommand implementations: thin, logged bindings from configuration to
//! the owning module's batch operation.

use std::fs;
use std::path::Path;

use log::info;

use crate::config::AppConfig;
use crate::error::{Error, Result};
use crate::eval::{
    read_cases, render, report_from_dir, report_from_run, run_eval, write_run, EvalJob,
    RenderFormat,
};
use crate::export::{self, ExportMeta};
use crate::persona::{
    assemble_personas, build_pool, read_personas, read_seed_file, write_personas, write_pool,
    PoolBuild, PoolKind,
};
use crate::seed::derive_seed;
use crate::tree::read_dataset;

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    Ok(())
}

fn pool_file_stem(kind: PoolKind) -> &'static str {
    match kind {
        PoolKind::Profile => "profiles",
        PoolKind::Personality => "personalities",
    }
}

fn print_pool_stats(kind: PoolKind, build: &PoolBuild) {
    for stat in &build.stats {
        let rate = if stat.generated == 0 {
            0.0
        } else {
            100.0 * stat.accepted as f64 / stat.generated as f64
        };
        println!(
            "{} pool iteration {}: {} generated, {} accepted ({rate:.1}%)",
            kind.as_str(),
            stat.iteration,
            stat.generated,
            stat.accepted
        );
    }
}

/// Grow both persona pools from their seed files, then assemble personas by
/// sampling the profile x personality cross product.
pub fn gen_personas(config: &AppConfig) -> Result<()> {
    let gateway = config.build_gateway()?;
    ensure_dir(&config.paths.pools)?;
    ensure_parent(&config.paths.personas)?;

    let mut pools = Vec::new();
    for (kind, seed_file) in [
        (PoolKind::Profile, &config.pool.seed_profiles),
        (PoolKind::Personality, &config.pool.seed_personalities),
    ] {
        let seeds = read_seed_file(seed_file)?;
        info!(
            "growing {} pool from {} seeds ({})",
            kind.as_str(),
            seeds.len(),
            seed_file.display()
        );
        let pool_config = config
            .pool
            .to_pool_config(seeds, kind.as_str(), config.global_seed);
        let checkpoint = config
            .paths
            .pools
            .join(format!("{}.partial.jsonl", pool_file_stem(kind)));
        let build = build_pool(&gateway, kind, &pool_config, Some(&checkpoint))?;
        let _ = fs::remove_file(&checkpoint);
        print_pool_stats(kind, &build);
        let out = config
            .paths
            .pools
            .join(format!("{}.jsonl", pool_file_stem(kind)));
        write_pool(&out, &build.pool)?;
        println!(
            "{} pool: {} entries -> {}",
            kind.as_str(),
            build.pool.len(),
            out.display()
        );
        pools.push(build.pool);
    }

    let personas = assemble_personas(
        &pools[0],
        &pools[1],
        config.pool.count,
        derive_seed(config.global_seed, &["personas"]),
    )?;
    write_personas(&config.paths.personas, &personas)?;
    println!(
        "personas: {} -> {}",
        personas.len(),
        config.paths.personas.display()
    );
    Ok(())
}

/// Run the multi-role conversation builder over every persona.
pub fn build_dataset(config: &AppConfig) -> Result<()> {
    let gateway = config.build_gateway()?;
    let personas = read_personas(&config.paths.personas)?;
    ensure_parent(&config.paths.dataset)?;
    let mut checkpoint = config.paths.dataset.clone();
    checkpoint.set_extension("checkpoint.jsonl");
    let job = crate::builder::BuildJob {
        personas,
        max_turns: config.build.max_turns,
        parallelism: config.build.parallelism,
        checkpoint_path: checkpoint,
        global_seed: config.global_seed,
    };
    let stats = crate::builder::run_batch(&gateway, &job, &config.paths.dataset)?;
    println!(
        "dataset: {} conversations ({} failed), {} turns -> {}",
        stats.completed,
        stats.failed,
        stats.turns_total,
        config.paths.dataset.display()
    );
    Ok(())
}

pub fn export_sft(config: &AppConfig, agent_mix: Option<&Path>) -> Result<()> {
    let trees = read_dataset(&config.paths.dataset)?;
    ensure_dir(&config.paths.exports)?;
    let records = export::export_sft(
        &trees,
        agent_mix,
        derive_seed(config.global_seed, &["sft-shuffle"]),
    )?;
    let out = config.paths.exports.join("sft.jsonl");
    export::write_sft(&out, &ExportMeta::default(), &records)?;
    println!("sft: {} records -> {}", records.len(), out.display());
    Ok(())
}

pub fn export_dpo(config: &AppConfig) -> Result<()> {
    let trees = read_dataset(&config.paths.dataset)?;
    ensure_dir(&config.paths.exports)?;
    let records = export::export_dpo(&trees)?;
    let out = config.paths.exports.join("dpo.jsonl");
    export::write_dpo(&out, &ExportMeta::default(), &records)?;
    println!("dpo: {} records -> {}", records.len(), out.display());
    Ok(())
}

/// Run the benchmark protocol against the configured endpoint and persist
/// the run artifacts.
pub fn evaluate(
    config: &AppConfig,
    cases_override: Option<&Path>,
    run_id: Option<String>,
) -> Result<()> {
    let cases_path = cases_override.unwrap_or(&config.eval.cases);
    let cases = read_cases(cases_path)?;
    if cases.is_empty() {
        return Err(Error::Config(format!(
            "cases file {} is empty",
            cases_path.display()
        )));
    }
    let gateway = config.build_gateway()?;
    let endpoint = config.build_endpoint(&gateway)?;
    let run_id = run_id.unwrap_or_else(|| {
        format!("run-{:016x}", derive_seed(config.global_seed, &["eval-run"]))
    });
    let job = EvalJob {
        run_id,
        model_label: config.endpoint.model_name.clone(),
        max_turns: config.eval.max_turns,
        parallelism: config.eval.parallelism,
    };
    info!(
        "evaluating {} cases against {} ({} turns each)",
        cases.len(),
        job.model_label,
        job.max_turns
    );
    let run = run_eval(&gateway, &endpoint, &cases, &job)?;
    let run_dir = config.paths.runs.join(&run.run_id);
    write_run(&run_dir, &run)?;
    println!("run artifacts -> {}", run_dir.display());
    let report = report_from_run(&run)?;
    print!("{}", render(&report, RenderFormat::Table));
    Ok(())
}

/// Summarize a persisted run directory in the requested format.
pub fn report(run_dir: &Path, format: RenderFormat) -> Result<()> {
    let report = report_from_dir(run_dir)?;
    print!("{}", render(&report, format));
    Ok(())
}

/// Chance-corrected agreement between two rating files.
pub fn kappa(file_a: &Path, file_b: &Path) -> Result<()> {
    let value = crate::eval::kappa_between_files(file_a, file_b)?;
    println!("{value:.3}");
    Ok(())
}
