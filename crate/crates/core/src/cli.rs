//! Command-line entry points. Exit codes: 0 success, 2 validation, 3 stage
//! failure (and server startup failure).

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::dataset::MANIFEST_FILE;
use crate::model::{client_for, ModelClient, ModelMode};
use crate::pipeline::{
    run_pipeline, stage_bundle, stage_cluster, stage_embed, stage_ingest, stage_label, stage_layout, stage_persist,
    EmbeddingSource, PipelineConfig, PipelineError, PipelineInputs, Stage,
};
use crate::server::{serve, ServeConfig};

#[derive(Debug, Parser)]
#[command(name = "litmap", version, about = "Build and serve semantic literature maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
pub struct EmbeddingArgs {
    /// Precomputed embeddings (EMB1 binary or TSV).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Use the deterministic hashed tf-idf embedder.
    #[arg(long)]
    pub test_embedder: bool,
}

impl EmbeddingArgs {
    fn source(&self) -> EmbeddingSource {
        match (&self.embeddings, self.test_embedder) {
            (Some(p), _) => EmbeddingSource::File(p.clone()),
            (None, true) => EmbeddingSource::TestEmbedder,
            (None, false) => EmbeddingSource::Missing,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "stub")]
    pub model_client: ModelMode,
    /// Recorded responses for `--model-client replay`.
    #[arg(long)]
    pub replay_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// key = value pipeline config; must set `seed`.
    #[arg(long)]
    pub config: PathBuf,
    /// Dataset directory holding the intermediates.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage from input TSV to manifest.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        /// Edge list (`source target [weight]`) or citing lists (`citing cited`).
        #[arg(long)]
        edges: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
        /// Stages to leave out: layout, cluster, label, bundle.
        #[arg(long, value_delimiter = ',')]
        skip: Vec<Stage>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Parse and normalize the input into map.tsv.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        edges: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Load or compute embeddings aligned to map.tsv.
    Embed {
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Fit the 2D layout.
    Layout {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Build the cluster hierarchy on map coordinates.
    Cluster {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Label every cluster.
    Label {
        #[command(flatten)]
        stage: StageArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Bundle citation or co-citation edges.
    Bundle {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Write the manifest over whatever artifacts exist.
    Finalize {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Print the default config for a seed.
    Config {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Serve every dataset under a directory over HTTP.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))?;
    let config = PipelineConfig::parse(&text).map_err(|e| PipelineError::Validation(format!("{}: {e}", path.display())))?;
    config.validate().map_err(PipelineError::Validation)?;
    Ok(config)
}

fn model_client(args: &ModelArgs) -> Result<Box<dyn ModelClient>, PipelineError> {
    client_for(args.model_client, args.replay_dir.as_deref()).map_err(|e| PipelineError::Validation(e.to_string()))
}

/// Runs one stage in isolation. The manifest is removed first since the
/// directory no longer matches it.
fn single_stage(
    stage: Stage,
    args: &StageArgs,
    run: impl FnOnce(&PipelineConfig, &Path) -> Result<(), PipelineError>,
) -> Result<(), PipelineError> {
    let config = load_config(&args.config)?;
    if stage == Stage::Ingest {
        std::fs::create_dir_all(&args.out).map_err(|e| PipelineError::Validation(format!("{}: {e}", args.out.display())))?;
    }
    if stage != Stage::Persist {
        let _ = std::fs::remove_file(args.out.join(MANIFEST_FILE));
    }
    run(&config, &args.out)?;
    log::info!("{stage}: done");
    Ok(())
}

fn run_command(command: Command) -> Result<(), (i32, String)> {
    let stage_result = |r: Result<(), PipelineError>| r.map_err(|e| (e.exit_code(), e.to_string()));
    match command {
        Command::Pipeline {
            input,
            embeddings,
            edges,
            stage,
            skip,
            model,
        } => stage_result((|| {
            let config = load_config(&stage.config)?;
            let client = if config.relabel_with_model {
                Some(model_client(&model)?)
            } else {
                None
            };
            let inputs = PipelineInputs {
                input,
                embeddings: embeddings.source(),
                edges,
            };
            let m = run_pipeline(&inputs, &config, &stage.out, &skip, client.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&m).expect("manifest serializes"));
            Ok(())
        })()),
        Command::Ingest { input, edges, stage } => stage_result(single_stage(Stage::Ingest, &stage, |c, d| {
            stage_ingest(&input, edges.as_deref(), c, d).map(|_| ())
        })),
        Command::Embed { embeddings, stage } => stage_result(single_stage(Stage::Embed, &stage, |c, d| {
            stage_embed(&embeddings.source(), c, d).map(|_| ())
        })),
        Command::Layout { stage } => stage_result(single_stage(Stage::Layout, &stage, |c, d| {
            let r = stage_layout(c, d)?;
            log::info!("layout {:?}: final objective {}", r.method, r.final_objective);
            Ok(())
        })),
        Command::Cluster { stage } => stage_result(single_stage(Stage::Cluster, &stage, |c, d| {
            let t = stage_cluster(c, d)?;
            log::info!("{} clusters", t.nodes.len());
            Ok(())
        })),
        Command::Label { stage, model } => stage_result(single_stage(Stage::Label, &stage, |c, d| {
            let client = if c.relabel_with_model { Some(model_client(&model)?) } else { None };
            stage_label(c, d, client.as_deref()).map(|_| ())
        })),
        Command::Bundle { stage } => {
            stage_result(single_stage(Stage::Bundle, &stage, |c, d| stage_bundle(c, d).map(|_| ())))
        }
        Command::Finalize { stage } => stage_result(single_stage(Stage::Persist, &stage, |c, d| {
            let m = stage_persist(c, d)?;
            println!("{}", serde_json::to_string_pretty(&m).expect("manifest serializes"));
            Ok(())
        })),
        Command::Config { seed } => {
            print!("{}", PipelineConfig::with_seed(seed).to_text());
            Ok(())
        }
        Command::Serve { data, port, host, model } => {
            let client: Arc<dyn ModelClient> = client_for(model.model_client, model.replay_dir.as_deref())
                .map_err(|e| (2, e.to_string()))?
                .into();
            let rt = tokio::runtime::Runtime::new().map_err(|e| (3, e.to_string()))?;
            rt.block_on(serve(
                ServeConfig {
                    addr: SocketAddr::new(host, port),
                    data_dir: data,
                },
                client,
            ))
            .map_err(|e| (3, e.to_string()))
        }
    }
}

/// Parses `std::env::args`, runs the command, returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(()) => 0,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
