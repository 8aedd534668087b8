//! Command-line front end: simulate, profile, metrics, validate-config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmwave_sim::error::{Result, SimError};
use mmwave_sim::io::config::{parse_config, resolve, MetricKind, Overrides};
use mmwave_sim::io::run::{run_metrics, run_profile, run_simulate, Manifest};

#[derive(Parser)]
#[command(
    name = "mmwave-sim",
    version,
    about = "System-level mmWave simulator with configurable channel simplification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that builds an experiment spec.
#[derive(Args, Debug, Default)]
struct SpecArgs {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent drops.
    #[arg(long)]
    drops: Option<usize>,
    /// Cluster counts as LoS/NLoS/O2I, e.g. 12/20/12.
    #[arg(long)]
    clusters: Option<String>,
    /// Rays per cluster.
    #[arg(long)]
    rays: Option<usize>,
    /// UE array shape as ROWSxCOLS, e.g. 4x4.
    #[arg(long = "ue-ant")]
    ue_ant: Option<String>,
    /// gNB array shape as ROWSxCOLS, e.g. 8x8.
    #[arg(long = "gnb-ant")]
    gnb_ant: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SpecArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            drops: self.drops,
            clusters: self.clusters.clone(),
            rays: self.rays,
            ue_ant: self.ue_ant.clone(),
            gnb_ant: self.gnb_ant.clone(),
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run drops and emit metric CSVs plus a reproducibility manifest.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Re-execute a previous run from its manifest.json.
        #[arg(long = "from-manifest", conflicts_with = "config")]
        from_manifest: Option<PathBuf>,
        /// Comma-separated metric subset: sinr,sir,lcf,afbw,svr.
        #[arg(long)]
        metrics: Option<String>,
        /// Store per-drop realizations for the metrics subcommand.
        #[arg(long = "save-realizations")]
        save_realizations: bool,
    },
    /// Sweep array sizes and emit timing.csv / speedup.csv.
    Profile {
        #[command(flatten)]
        spec: SpecArgs,
        /// Comma-separated UE element counts.
        #[arg(long = "ue-sizes", default_value = "1,16")]
        ue_sizes: String,
        /// Comma-separated gNB element counts.
        #[arg(long = "gnb-sizes", default_value = "1,64,1024")]
        gnb_sizes: String,
        /// Timed repetitions per combination.
        #[arg(long, default_value_t = 50)]
        reps: usize,
        /// Discarded warm-up repetitions per combination.
        #[arg(long, default_value_t = 5)]
        warmup: usize,
    },
    /// Recompute metric CSVs from stored realizations.
    Metrics {
        /// Directory holding manifest.json and realizations/.
        #[arg(long)]
        input: PathBuf,
        /// Output directory for the recomputed CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a configuration without running anything.
    ValidateConfig {
        #[command(flatten)]
        spec: SpecArgs,
    },
}

fn parse_metric_list(text: &str) -> Result<Vec<MetricKind>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(MetricKind::parse)
        .collect()
}

fn parse_size_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| SimError::config(format!("invalid element count '{s}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { spec, from_manifest, metrics, save_realizations } => {
            let mut overrides = spec.overrides();
            if let Some(metrics) = &metrics {
                overrides.metrics = Some(parse_metric_list(metrics)?);
            }
            overrides.save_realizations = save_realizations;
            let (spec, table_text) = match from_manifest {
                Some(path) => {
                    let manifest = Manifest::read(&path)?;
                    let mut spec = manifest.spec;
                    // CLI output dir still wins so replays can't clobber
                    // the original run.
                    if let Some(out) = &overrides.out {
                        spec.run.output_dir = out.clone();
                    }
                    (spec, Some(manifest.parameter_table))
                }
                None => (parse_config(spec.config.as_deref(), &overrides)?, None),
            };
            let resolved = resolve(&spec, table_text.as_deref())?;
            let written = run_simulate(&resolved)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Profile { spec, ue_sizes, gnb_sizes, reps, warmup } => {
            let parsed = parse_config(spec.config.as_deref(), &spec.overrides())?;
            let resolved = resolve(&parsed, None)?;
            let written = run_profile(
                &resolved,
                &parse_size_list(&ue_sizes)?,
                &parse_size_list(&gnb_sizes)?,
                reps,
                warmup,
            )?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Metrics { input, out } => {
            let written = run_metrics(&input, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::ValidateConfig { spec } => {
            let parsed = parse_config(spec.config.as_deref(), &spec.overrides())?;
            let resolved = resolve(&parsed, None)?;
            println!(
                "configuration OK: {} drops, clusters {}, {} UE / {} gNB elements",
                resolved.spec.run.drops,
                resolved.simplification.label(),
                resolved.ue_dims.0 * resolved.ue_dims.1,
                resolved.gnb_dims.0 * resolved.gnb_dims.1,
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
