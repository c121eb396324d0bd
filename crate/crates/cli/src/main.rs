use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use angiosynth::pipeline::{evaluate, generate_dataset, preview_mip, Axis, DatasetConfig};
use angiosynth::treegen::{grow_tree, GrowthParams};
use angiosynth_server::ServerConfig;
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

#[derive(Parser)]
#[command(name = "angiosynth", version, about = "Synthetic vascular patch generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Full,
    Desk,
}

impl Preset {
    fn config(self) -> DatasetConfig {
        match self {
            Preset::Full => DatasetConfig::full(),
            Preset::Desk => DatasetConfig::desk(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and its manifest.
    Generate {
        /// JSON dataset config; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Used when no config file is given.
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Score predicted masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        postprocess: bool,
        #[arg(long, default_value_t = angiosynth::metrics::DEFAULT_MIN_VOLUME)]
        min_volume: usize,
        #[arg(long)]
        report: PathBuf,
    },
    /// Maximum-intensity projection of a volume as PNG or PGM.
    Preview {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "z")]
        axis: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grow one tree and write it as JSON.
    Grow {
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print every default setting as JSON.
    PrintConfig {
        #[arg(long, value_enum, default_value = "full")]
        preset: Preset,
        /// Print the server config instead.
        #[arg(long)]
        server: bool,
    },
    /// Run the HTTP sample server.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl From<angiosynth::Error> for CliError {
    fn from(e: angiosynth::Error) -> Self {
        let kind = match &e {
            angiosynth::Error::Io { .. } => "io",
            angiosynth::Error::InvalidParam { .. } => "invalid_param",
            angiosynth::Error::Generation(_) => "generation",
            angiosynth::Error::Evaluation(_) => "evaluation",
            angiosynth::Error::Nifti { .. } | angiosynth::Error::NotBinary { .. } => "volume",
            _ => "error",
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

fn fail(kind: &'static str, message: impl Into<String>) -> CliError {
    CliError {
        kind,
        message: message.into(),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| fail("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail("config", format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            config,
            preset,
            out,
            workers,
        } => {
            let mut cfg = match config {
                Some(p) => read_json::<DatasetConfig>(&p)?,
                None => preset.config(),
            };
            cfg.out_dir = Some(out);
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let (manifest, stats) = generate_dataset(&cfg)?;
            println!(
                "{}",
                pretty(&json!({ "manifest": manifest, "stats": stats }))
            );
        }
        Command::Eval {
            pred,
            gt,
            postprocess,
            min_volume,
            report,
        } => {
            let r = evaluate(&pred, &gt, postprocess, min_volume)?;
            write_text(&report, &pretty(&r))?;
            println!(
                "{}",
                pretty(&json!({ "dice": r.dice, "cl_dice": r.cl_dice, "cb_dice": r.cb_dice, "cases": r.cases.len() }))
            );
        }
        Command::Preview { input, axis, out } => {
            let axis: Axis = axis.parse()?;
            preview_mip(&input, axis, &out)?;
        }
        Command::Grow { params, seed, out } => {
            let p: GrowthParams<f64> = match params {
                Some(path) => read_json(&path)?,
                None => GrowthParams::default(),
            };
            let tree = grow_tree(&p, seed)?;
            write_text(&out, &tree.to_json()?)?;
            println!(
                "{}",
                json!({ "nodes": tree.nodes.len(), "segments": tree.segments.len() })
            );
        }
        Command::PrintConfig { preset, server } => {
            if server {
                let cfg = ServerConfig {
                    dataset: preset.config(),
                    ..ServerConfig::default()
                };
                println!("{}", pretty(&cfg));
            } else {
                println!("{}", pretty(&preset.config()));
            }
        }
        Command::Serve { config, bind } => {
            let mut cfg = match config {
                Some(p) => read_json::<ServerConfig>(&p)?,
                None => ServerConfig::default(),
            };
            if let Some(b) = bind {
                cfg.bind = b;
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| fail("io", e.to_string()))?;
            rt.block_on(angiosynth_server::serve(cfg))
                .map_err(|e| fail("server", e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.message, "kind": e.kind }));
            ExitCode::FAILURE
        }
    }
}
