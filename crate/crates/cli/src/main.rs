use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dimprobe_core::pipeline::{Pipeline, ProviderKind, RunConfig};

/// Environment variable that overrides `provider.endpoint`.
const ENDPOINT_ENV: &str = "DIMPROBE_ENDPOINT";

#[derive(Debug, Parser)]
#[command(
    name = "dimprobe",
    version,
    about = "Probe the dominant direction of sentence-embedding spaces"
)]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "dimprobe.toml")]
    config: PathBuf,
    /// Override the provider kind: mock, file or remote.
    #[arg(long, global = true)]
    provider: Option<ProviderKind>,
    /// Override the mock provider seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for per-language stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Restrict the run to one configured language.
    #[arg(long, global = true)]
    language: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fill templates and write prompts.<lang>.jsonl.
    Materialize,
    /// Embed every prompt into the cache.
    Embed,
    /// Run the per-language analyses.
    Analyze,
    /// Compare job axes across languages.
    Crosslang,
    /// Write aggregate tables, per-language tables and the heatmap.
    Report,
    /// Every stage in order.
    RunAll,
    /// Check the corpus and reference data; exit 1 on findings.
    Validate,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&cli.config)
        .with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(kind) = cli.provider {
        cfg.provider.kind = kind;
    }
    if let Some(seed) = cli.seed {
        cfg.mock.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.output_dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        anyhow::ensure!(jobs >= 1, "--jobs must be at least 1");
        cfg.run.jobs = jobs;
    }
    if let Some(language) = &cli.language {
        cfg.select_language(language)?;
    }
    if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
        if !endpoint.is_empty() {
            cfg.provider.endpoint = Some(endpoint);
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let pipeline = Pipeline::new(load_config(cli)?)?;
    match cli.command {
        Command::Materialize => {
            for path in pipeline.materialize()? {
                println!("wrote {}", path.display());
            }
        }
        Command::Embed => {
            let s = pipeline.embed()?;
            println!(
                "{} prompts embedded, {} sent to the provider",
                s.prompts, s.provider_texts
            );
        }
        Command::Analyze => {
            let (analyses, s) = pipeline.analyze()?;
            for a in &analyses {
                println!(
                    "{}: origin east-west {}, gdp r {:.3}; job accuracy {:.3}",
                    a.language,
                    a.country_origin.interpretation.east_west,
                    a.country_origin.interpretation.gdp_r,
                    a.job.accuracy
                );
            }
            println!(
                "{} prompts, {} sent to the provider",
                s.prompts, s.provider_texts
            );
        }
        Command::Crosslang => {
            let r = pipeline.crosslang()?;
            println!(
                "{} languages, {} pairs written to {}",
                r.matrix.languages.len(),
                r.second_order.n_pairs,
                pipeline.config().crosslang_dir().display()
            );
        }
        Command::Report => {
            for path in pipeline.report()? {
                println!("wrote {}", path.display());
            }
        }
        Command::RunAll => {
            let s = pipeline.run_all()?;
            println!(
                "done: {} prompts, {} sent to the provider; reports in {}",
                s.prompts,
                s.provider_texts,
                pipeline.config().report_dir().display()
            );
        }
        Command::Validate => {
            let outcome = pipeline.validate()?;
            for f in &outcome.corpus.findings {
                println!("corpus: {}", serde_json::to_string(f)?);
            }
            for c in &outcome.config {
                println!("config: {c}");
            }
            if !outcome.is_clean() {
                eprintln!(
                    "{} finding(s)",
                    outcome.corpus.findings.len() + outcome.config.len()
                );
                return Ok(ExitCode::from(1));
            }
            println!("ok");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
