//! Command-line front end: runs simulations, decoders, spectral reports, the
//! reference encoders, and the benchmark harness. Every run writes a manifest
//! with the fully resolved configuration; `rerun` replays a manifest and
//! reproduces the outputs bit-exactly.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use manifest::Manifest;
use wavecoder::formats::RecordingFormat;

#[derive(Parser)]
#[command(name = "wavecoder", version, about = "Traveling-wave sequence encoding sandbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML configuration; defaults apply for every missing field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the run seed (simulate) and master seed (bench).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a stimulus protocol through the lattice network and record it.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Protocol file (one `x y onset duration amplitude` per line);
        /// overrides the config's inline events.
        #[arg(long)]
        protocol: Option<PathBuf>,
        /// Recording format.
        #[arg(long, value_enum, default_value = "raw-f32")]
        format: FormatArg,
    },
    /// Decode events from a recorded field.
    Decode {
        #[command(flatten)]
        common: CommonArgs,
        /// Input recording (raw_f32 format).
        #[arg(long)]
        recording: PathBuf,
    },
    /// Eigenmode report of the configured circulant connectivity.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate the linear state-space system.
    SsmRun {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the attention encoder over a token sequence.
    AttnRun {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate encoders on the configured sequence task.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Render a recording as grayscale PGM frames.
    Render {
        #[command(flatten)]
        common: CommonArgs,
        /// Input recording (raw_f32 format).
        #[arg(long)]
        recording: PathBuf,
    },
    /// Re-execute a previous run from its manifest.
    Rerun {
        /// Manifest written by a previous run.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's own directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum FormatArg {
    RawF32,
    CsvFrames,
}

impl From<FormatArg> for RecordingFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::RawF32 => RecordingFormat::RawF32,
            FormatArg::CsvFrames => RecordingFormat::CsvFrames,
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.sim.seed = seed;
        config.bench.master_seed = seed;
    }
    Ok(config)
}

fn absolutize(path: &std::path::Path) -> anyhow::Result<PathBuf> {
    path.canonicalize()
        .with_context(|| format!("resolving {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            protocol,
            format,
        } => {
            let config = load_config(&common)?;
            let format: RecordingFormat = format.into();
            let protocol_file = protocol.as_deref().map(absolutize).transpose()?;
            let outputs =
                commands::simulate(&config, protocol_file.as_deref(), &common.out, format)?;
            Manifest {
                command: "simulate".into(),
                format: Some(format),
                recording: None,
                protocol_file,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::Decode { common, recording } => {
            let config = load_config(&common)?;
            let recording = absolutize(&recording)?;
            let outputs = commands::decode(&config, &recording, &common.out)?;
            Manifest {
                command: "decode".into(),
                format: None,
                recording: Some(recording),
                protocol_file: None,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::Spectrum { common } => {
            let config = load_config(&common)?;
            let outputs = commands::spectrum(&config, &common.out)?;
            Manifest {
                command: "spectrum".into(),
                format: None,
                recording: None,
                protocol_file: None,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::SsmRun { common } => {
            let config = load_config(&common)?;
            let outputs = commands::ssm_run(&config, &common.out)?;
            Manifest {
                command: "ssm-run".into(),
                format: None,
                recording: None,
                protocol_file: None,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::AttnRun { common } => {
            let config = load_config(&common)?;
            let outputs = commands::attn_run(&config, &common.out)?;
            Manifest {
                command: "attn-run".into(),
                format: None,
                recording: None,
                protocol_file: None,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::Bench { common } => {
            let config = load_config(&common)?;
            let outputs = commands::bench(&config, &common.out)?;
            Manifest {
                command: "bench".into(),
                format: None,
                recording: None,
                protocol_file: None,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::Render { common, recording } => {
            let config = load_config(&common)?;
            let recording = absolutize(&recording)?;
            let outputs = commands::render(&config, &recording, &common.out)?;
            Manifest {
                command: "render".into(),
                format: None,
                recording: Some(recording),
                protocol_file: None,
                outputs,
                config,
            }
            .write(&common.out)?;
        }
        Command::Rerun { manifest, out } => {
            let m = Manifest::load(&manifest)?;
            let out_dir = match out {
                Some(dir) => dir,
                None => manifest
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            let outputs = match m.command.as_str() {
                "simulate" => commands::simulate(
                    &m.config,
                    m.protocol_file.as_deref(),
                    &out_dir,
                    m.format.unwrap_or(RecordingFormat::RawF32),
                )?,
                "decode" => {
                    let rec = m
                        .recording
                        .as_ref()
                        .context("decode manifest is missing the recording path")?;
                    commands::decode(&m.config, rec, &out_dir)?
                }
                "spectrum" => commands::spectrum(&m.config, &out_dir)?,
                "ssm-run" => commands::ssm_run(&m.config, &out_dir)?,
                "attn-run" => commands::attn_run(&m.config, &out_dir)?,
                "bench" => commands::bench(&m.config, &out_dir)?,
                "render" => {
                    let rec = m
                        .recording
                        .as_ref()
                        .context("render manifest is missing the recording path")?;
                    commands::render(&m.config, rec, &out_dir)?
                }
                other => anyhow::bail!("manifest names unknown command {other:?}"),
            };
            Manifest {
                outputs,
                ..m.clone()
            }
            .write(&out_dir)?;
        }
    }
    Ok(())
}
