use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use claimgraph::engine::{build_linker, Engine, EngineConfig, LinkerKind, ProviderKind};
use claimgraph::eval::{read_dataset_file, render_table, run_eval, write_report};
use claimgraph::ingest::ingest_file;
use claimgraph::service::{self, AppState, ClaimResponse};
use claimgraph::snapshot::{export_jsonl, load_or_empty, save_snapshot};
use claimgraph::wikifier::DEFAULT_ENDPOINT;
use claimgraph_core::{
    annotate_store, explain, map_label, LabelThresholds, LinkerConfig, PipelineLimits,
    SegmentationConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "claimgraph",
    version,
    about = "Entity-centric claim validation over an article graph"
)]
struct Cli {
    /// Snapshot file holding the graph.
    #[arg(
        long,
        global = true,
        env = "CLAIMGRAPH_STORE",
        default_value = "claimgraph.snap"
    )]
    store: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Load JSON-lines articles into the store.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = SegmentationConfig::default().min_section_chars)]
        min_section_chars: usize,
    },
    /// Link entities in every section of the store.
    Annotate {
        #[command(flatten)]
        linker: LinkerArgs,
    },
    /// Print node and edge counts.
    Stats,
    /// Evaluate one claim.
    Claim {
        #[arg(long)]
        text: String,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Evaluate a labelled dataset and write a per-claim report.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long, default_value_t = SegmentationConfig::default().min_section_chars)]
        min_section_chars: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Write every node and edge as JSON lines.
    Export {
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct LinkerArgs {
    #[arg(long, value_enum, default_value = "gazetteer")]
    linker: LinkerKind,
    /// Alias table: alias, entity id, label and optional types, tab separated.
    #[arg(long, env = "CLAIMGRAPH_GAZETTEER")]
    gazetteer: Option<PathBuf>,
    /// Minimum linker confidence.
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long, default_value = "el")]
    language: String,
    #[arg(long, env = "CLAIMGRAPH_WIKIFIER_URL", default_value = DEFAULT_ENDPOINT)]
    wikifier_url: String,
}

#[derive(Args)]
struct EngineArgs {
    #[command(flatten)]
    linker: LinkerArgs,
    #[arg(long, value_enum, default_value = "reference")]
    sts_provider: ProviderKind,
    #[arg(long, value_enum, default_value = "reference")]
    nli_provider: ProviderKind,
    #[arg(long, env = "CLAIMGRAPH_SCORER_URL")]
    scorer_url: Option<String>,
    /// Fail instead of degrading to reference scorers.
    #[arg(long)]
    strict_providers: bool,
    #[arg(long, default_value_t = PipelineLimits::default().max_candidates)]
    max_candidates: usize,
    /// Longest path considered, in relationships. Defaults to the minimum.
    #[arg(long)]
    max_hops: Option<usize>,
    #[arg(long, default_value_t = PipelineLimits::default().top_k)]
    top_k: usize,
    #[arg(long, default_value_t = PipelineLimits::default().nli_top_k)]
    nli_top_k: usize,
    /// Use single sections mentioning every claim entity in place of paths.
    #[arg(long)]
    prefer_covering_sections: bool,
    /// Minimum entailment probability for SUPPORTS.
    #[arg(long)]
    support_min_e: Option<f64>,
    /// Minimum contradiction probability for REFUTES.
    #[arg(long)]
    refute_min_c: Option<f64>,
}

impl LinkerArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            linker: self.linker,
            gazetteer: self.gazetteer.clone(),
            wikifier_url: self.wikifier_url.clone(),
            linker_cfg: LinkerConfig {
                threshold: self.threshold,
                language: self.language.clone(),
            },
            ..EngineConfig::default()
        }
    }
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            sts: self.sts_provider,
            nli: self.nli_provider,
            scorer_url: self.scorer_url.clone(),
            strict_providers: self.strict_providers,
            limits: PipelineLimits {
                max_hops: self.max_hops,
                max_candidates: self.max_candidates,
                top_k: self.top_k,
                nli_top_k: self.nli_top_k,
                prefer_covering_sections: self.prefer_covering_sections,
            },
            ..self.linker.config()
        }
    }

    fn thresholds(&self) -> LabelThresholds {
        LabelThresholds {
            support_min_e: self.support_min_e,
            refute_min_c: self.refute_min_c,
        }
    }
}

fn emit_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let store_path = cli.store;
    let load =
        || load_or_empty(&store_path).with_context(|| format!("loading {}", store_path.display()));
    match cli.command {
        Command::Ingest {
            input,
            min_section_chars,
        } => {
            let mut store = load()?;
            let cfg = SegmentationConfig {
                min_section_chars,
                ..SegmentationConfig::default()
            };
            let report = ingest_file(&mut store, &input, &cfg)?;
            save_snapshot(&store, &store_path)?;
            match cli.format {
                Format::Json => emit_json(&report.stats)?,
                Format::Text => {
                    let s = report.stats;
                    println!(
                        "articles: {} new, {} replaced, {} unchanged; sections: {} added, {} removed; skipped lines: {}",
                        s.articles, s.replaced, s.unchanged, s.sections, s.sections_removed, s.skipped
                    );
                    for m in &report.malformed {
                        println!("line {}: {}", m.line, m.reason);
                    }
                }
            }
        }
        Command::Annotate { linker } => {
            let cfg = linker.config();
            let linker = build_linker(&cfg)?;
            let mut store = load()?;
            let stats = annotate_store(&mut store, &linker, &cfg.linker_cfg)?;
            save_snapshot(&store, &store_path)?;
            match cli.format {
                Format::Json => emit_json(&stats)?,
                Format::Text => println!(
                    "sections: {}; mentions: {}; new edges: {}",
                    stats.sections, stats.mentions, stats.new_edges
                ),
            }
        }
        Command::Stats => {
            let stats = load()?.stats();
            match cli.format {
                Format::Json => emit_json(&stats)?,
                Format::Text => println!(
                    "articles: {}\nsections: {}\nentities: {}\nmention edges: {}",
                    stats.articles, stats.sections, stats.entities, stats.mention_edges
                ),
            }
        }
        Command::Claim { text, engine } => {
            let thresholds = engine.thresholds();
            let engine = Engine::build(&engine.config())?;
            let store = load()?;
            let out = engine.evaluate(&text, &store)?;
            let label = map_label(&out.evaluation, &thresholds);
            match cli.format {
                Format::Json => emit_json(&ClaimResponse {
                    evaluation: out.evaluation,
                    label,
                    degraded: out.degraded,
                })?,
                Format::Text => {
                    print!("{}", explain(&out.evaluation));
                    println!("label: {label}");
                    if out.degraded {
                        println!("degraded: reference scorers used");
                    }
                }
            }
        }
        Command::Eval {
            dataset,
            report,
            engine,
        } => {
            let thresholds = engine.thresholds();
            let engine = Engine::build(&engine.config())?;
            let store = load()?;
            let data = read_dataset_file(&dataset)?;
            let result = run_eval(&data, &store, &engine, &thresholds)?;
            let file = std::fs::File::create(&report)
                .with_context(|| format!("creating {}", report.display()))?;
            let mut w = std::io::BufWriter::new(file);
            write_report(&result, &mut w)?;
            w.flush()?;
            match cli.format {
                Format::Json => emit_json(&result.summary)?,
                Format::Text => print!("{}", render_table(&result.summary)),
            }
        }
        Command::Serve {
            listen,
            min_section_chars,
            engine,
        } => {
            let thresholds = engine.thresholds();
            let engine = Engine::build(&engine.config())?;
            let state = Arc::new(
                AppState::new(engine, Some(store_path.clone()))
                    .with_thresholds(thresholds)
                    .with_segmentation(SegmentationConfig {
                        min_section_chars,
                        ..SegmentationConfig::default()
                    }),
            );
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&listen)
                    .await
                    .with_context(|| format!("binding {listen}"))?;
                tracing::info!(addr = %listener.local_addr()?, "listening");
                let loader = state.clone();
                tokio::task::spawn_blocking(move || match load_or_empty(&store_path) {
                    Ok(store) => loader.install(store),
                    Err(e) => tracing::error!(error = %e, "store failed to load"),
                });
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                service::serve(listener, state, shutdown).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Export { output } => {
            let store = load()?;
            let file = std::fs::File::create(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            export_jsonl(&store, std::io::BufWriter::new(file))?;
            if cli.format == Format::Text {
                println!("exported to {}", output.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
