use anyhow::Context;
use clap::{Parser, Subcommand};
use gazeq_cli::pipeline::{self, to_json, write_atomic, Stage, StageError};
use gazeq_cli::{logging, run_pipeline, PipelineConfig};
use gazeq_core::featurize::FeaturizeConfig;
use gazeq_core::ingest::SessionAggregate;
use gazeq_core::learn::{render_table, EvalConfig, VariantId};
use gazeq_core::synth::{generate, SynthConfig};
use gazeq_core::thesaurus::TopicParams;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gazeq", version, about = "Predict future query terms from word-eye-fixations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate session logs, write per-stem aggregates.
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank thesaurus concepts per session.
    Topics {
        aggregates: PathBuf,
        #[arg(long)]
        thesaurus: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long = "min-dur", default_value_t = 350)]
        min_dur: u64,
        #[arg(long, default_value_t = 3)]
        lev: usize,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the labeled feature matrix (and its baseline companion file).
    Featurize {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        thesaurus: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long = "min-dur", default_value_t = 350)]
        min_dur: u64,
        #[arg(long, default_value_t = 3)]
        lev: usize,
    },
    /// Cross-validate one variant on a matrix.
    Train {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        variant: VariantId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long = "train-fraction", default_value_t = 0.8)]
        train_fraction: f64,
        /// Baseline inputs; defaults to the `.glf.csv` sibling of the matrix.
        #[arg(long)]
        glf: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render report files as a table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    Synth {
        /// JSON config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        signal: Option<f64>,
        #[arg(long)]
        sessions: Option<usize>,
    },
    /// Run every stage from one config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<VariantId>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() {
    if let Some(n) = std::env::var("GAZEQ_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!(target: "gazeq", "could not size thread pool: {e}");
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), StageError> {
    use pipeline::InStageExt as _;
    match cmd {
        Command::Ingest { dir, out } => {
            let (_, aggs) = pipeline::ingest(&dir)?;
            write_atomic(&[(out, to_json(&aggs))]).in_stage(Stage::Ingest)
        }
        Command::Topics {
            aggregates,
            thesaurus,
            k,
            min_dur,
            lev,
            out,
        } => {
            let bytes = std::fs::read(&aggregates)
                .with_context(|| format!("reading {}", aggregates.display()))
                .in_stage(Stage::Topics)?;
            let aggs: Vec<SessionAggregate> = serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing {}", aggregates.display()))
                .in_stage(Stage::Topics)?;
            let th = pipeline::load_thesaurus(&thesaurus, Stage::Topics)?;
            let params = TopicParams {
                min_dur_ms: min_dur,
                k,
                lev_threshold: lev,
            };
            let topics = pipeline::topics(&aggs, &th, &params)?;
            match out {
                Some(path) => write_atomic(&[(path, to_json(&topics))]).in_stage(Stage::Topics),
                None => {
                    print!("{}", String::from_utf8_lossy(&to_json(&topics)));
                    Ok(())
                }
            }
        }
        Command::Featurize {
            sessions,
            taxonomy,
            thesaurus,
            embeddings,
            out,
            split,
            k,
            min_dur,
            lev,
        } => {
            let res = pipeline::load_resources(&taxonomy, &thesaurus, &embeddings)?;
            let (logs, _) = pipeline::ingest(&sessions)?;
            let cfg = FeaturizeConfig {
                split_fraction: split,
                topics: TopicParams {
                    min_dur_ms: min_dur,
                    k,
                    lev_threshold: lev,
                },
            };
            let feats = pipeline::featurize(&logs, &res, &cfg)?;
            let files = pipeline::matrix_files(&feats, &out)?;
            write_atomic(&files).in_stage(Stage::Featurize)
        }
        Command::Train {
            matrix,
            variant,
            seed,
            folds,
            train_fraction,
            glf,
            out,
        } => {
            let m = pipeline::read_matrix(&matrix, glf.as_deref())?;
            let cfg = EvalConfig {
                seed,
                folds,
                train_fraction,
                ..Default::default()
            };
            let report = pipeline::train(variant, &m, &cfg)?;
            write_atomic(&[(out, to_json(&report))]).in_stage(Stage::Train)
        }
        Command::Report { reports, out } => {
            let table = render_table(&pipeline::read_reports(&reports)?);
            print!("{table}");
            match out {
                Some(path) => write_atomic(&[(path, table.into_bytes())]).in_stage(Stage::Report),
                None => Ok(()),
            }
        }
        Command::Synth {
            config,
            out_dir,
            seed,
            signal,
            sessions,
        } => {
            let mut cfg: SynthConfig = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .in_stage(Stage::Synth)?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("parsing {}", path.display()))
                        .in_stage(Stage::Synth)?
                }
                None => SynthConfig::default(),
            };
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.signal = signal.unwrap_or(cfg.signal);
            cfg.n_sessions = sessions.unwrap_or(cfg.n_sessions);
            let data = generate(&cfg).in_stage(Stage::Synth)?;
            data.write_to_dir(&out_dir).in_stage(Stage::Synth)?;
            log::info!(
                target: "gazeq::synth",
                "{} sessions, {} positives of {} instances (prevalence {:.4})",
                data.sessions.len(),
                data.truth.positives_total,
                data.truth.instances_total,
                data.truth.prevalence
            );
            Ok(())
        }
        Command::Run {
            config,
            seed,
            variants,
            out,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            if let Some(v) = variants {
                cfg.variants = v;
            }
            if let Some(o) = out {
                cfg.paths.output = o;
            }
            let summary = run_pipeline(&cfg)?;
            print!("{}", summary.table);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logging::init();
    init_threads();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!(target: "gazeq", "stage={} {:#}", e.stage, e.source);
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
