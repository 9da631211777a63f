//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{error, info};
use thzsim_core::channel::{derive_usage_sets, link_capacity};
use thzsim_core::routing::build_candidate_sets;
use thzsim_core::topology::{NodeKind, Topology};
use thzsim_core::Demand;

use crate::config::{parse_config, ConfigError, ExperimentConfig};
use crate::experiment::{
    evaluate_once, run_dynamic, run_static, static_demands, static_topology, dynamic_epoch_instance,
    ExperimentError, Technique,
};
use crate::output::{self, fmt_g6};
use crate::plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNROUTABLE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "THZSIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "thzsim", version, about = "RIS-assisted THz downlink load-balancing simulator")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Configuration file (TOML). Reference values are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the number of chunks and compare parallel vs serial distribution.
    RunStatic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Write the first evaluated program (first sweep point, replication 0,
        /// parallel distribution) in LP format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Move users every epoch and compare both techniques over time.
    RunDynamic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Write the program of epoch 0 (parallel distribution) in LP format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Print the replication-0 topology in canonical text form.
    DumpTopology {
        #[command(flatten)]
        common: Common,
    },
    /// Print the candidate paths of the first sweep point's demands.
    DumpPaths {
        #[command(flatten)]
        common: Common,
        /// Paths per demand; defaults to the parallel technique's k.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Print the capacity of every RIS outgoing link as CSV.
    CapacityTable {
        #[command(flatten)]
        common: Common,
    },
    /// Render SVG charts from a CSV produced by a run.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Plot(#[from] plot::PlotError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Experiment(ExperimentError::Unroutable { .. })
            | CliError::Experiment(ExperimentError::UnroutableDemands(_)) => EXIT_UNROUTABLE,
            CliError::Experiment(_) => EXIT_SOLVER,
            CliError::Plot(plot::PlotError::Csv(_)) | CliError::Plot(plot::PlotError::Row { .. }) => EXIT_CONFIG,
            CliError::Plot(plot::PlotError::UnknownSchema { .. }) => EXIT_CONFIG,
            CliError::Plot(plot::PlotError::Io(_)) | CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn io_ctx(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn first_instance(cfg: &ExperimentConfig) -> Result<(Topology, Vec<Demand>), CliError> {
    let topology = static_topology(cfg, 0);
    let draw = static_demands(cfg, &topology, 0, 0)?;
    Ok((topology, draw.demands))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_ctx(parent.display().to_string()))?;
    }
    std::fs::write(path, body).map_err(io_ctx(path.display().to_string()))
}

fn save_failure(err: &ExperimentError, out: &Path) {
    if let Some(dump) = err.instance_dump().filter(|d| !d.is_empty()) {
        let path = out.join("failed_instance.lp");
        if std::fs::write(&path, dump).is_ok() {
            error!("failing program written to {}", path.display());
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::RunStatic { common, out, dump_lp } => {
            let cfg = load(&common)?;
            output::preflight(&out).map_err(io_ctx(out.display().to_string()))?;
            write_file(&out.join(output::EFFECTIVE_CONFIG), &cfg.to_toml_string())?;
            if let Some(path) = dump_lp {
                let (topology, demands) = first_instance(&cfg)?;
                let eval = evaluate_once(&topology, &demands, Technique::Pddt.k(&cfg), &cfg)?;
                write_file(&path, &eval.model.to_lp_format())?;
            }
            let result = run_static(&cfg).inspect_err(|e| save_failure(e, &out))?;
            let mut files = output::emit_static(&result, &out).map_err(io_ctx(out.display().to_string()))?;
            files.extend(plot::plot_static(&result, &out).map_err(io_ctx(out.display().to_string()))?);
            for p in &result.points {
                info!(
                    "|D|={:>4}  λ_pddt={:.4}  λ_sddt={:.4}  G={}",
                    p.d_count,
                    p.pddt.interval.mean,
                    p.sddt.interval.mean,
                    p.mean_gain.map_or("-".into(), fmt_g6)
                );
            }
            for f in files {
                writeln!(stdout, "{}", f.display()).map_err(io_ctx("stdout"))?;
            }
        }
        Command::RunDynamic { common, out, dump_lp } => {
            let cfg = load(&common)?;
            output::preflight(&out).map_err(io_ctx(out.display().to_string()))?;
            write_file(&out.join(output::EFFECTIVE_CONFIG), &cfg.to_toml_string())?;
            if let Some(path) = dump_lp {
                let (topology, draw) = dynamic_epoch_instance(&cfg, 0)?;
                let eval = evaluate_once(&topology, &draw.demands, Technique::Pddt.k(&cfg), &cfg)?;
                write_file(&path, &eval.model.to_lp_format())?;
            }
            let result = run_dynamic(&cfg).inspect_err(|e| save_failure(e, &out))?;
            let mut files = output::emit_dynamic(&result, &out).map_err(io_ctx(out.display().to_string()))?;
            files.extend(plot::plot_dynamic(&result, &out).map_err(io_ctx(out.display().to_string()))?);
            for f in files {
                writeln!(stdout, "{}", f.display()).map_err(io_ctx("stdout"))?;
            }
        }
        Command::DumpTopology { common } => {
            let cfg = load(&common)?;
            write!(stdout, "{}", static_topology(&cfg, 0).to_canonical_string()).map_err(io_ctx("stdout"))?;
        }
        Command::DumpPaths { common, k } => {
            let cfg = load(&common)?;
            let k = k.unwrap_or(cfg.traffic.k_pddt).max(1);
            let (topology, demands) = first_instance(&cfg)?;
            let (sets, _) = build_candidate_sets(
                &topology,
                demands.iter().map(|d| (d.id, d.source, d.destination)),
                k,
            );
            let mut text = String::from("demand_id,rank,hops,total_distance_m,node_sequence\n");
            for set in &sets {
                for (rank, p) in set.paths.iter().enumerate() {
                    let seq: Vec<String> = p.nodes.iter().map(|n| n.to_string()).collect();
                    text += &format!(
                        "{},{},{},{:.6},{}\n",
                        set.demand_id,
                        rank,
                        p.hop_count(),
                        p.total_distance,
                        seq.join("-")
                    );
                }
            }
            stdout.write_all(text.as_bytes()).map_err(io_ctx("stdout"))?;
        }
        Command::CapacityTable { common } => {
            let cfg = load(&common)?;
            let params = cfg.channel_params();
            let (topology, demands) = first_instance(&cfg)?;
            let (sets, _) = build_candidate_sets(
                &topology,
                demands.iter().map(|d| (d.id, d.source, d.destination)),
                cfg.traffic.k_pddt,
            );
            let usage = derive_usage_sets(sets.iter().flat_map(|s| &s.paths), &topology, &params);
            let mut text = String::from("from,to,distance_m,z_count,capacity_gbps\n");
            for (i, l) in topology.links().iter().enumerate() {
                if topology.node(l.from).kind != NodeKind::Ris {
                    continue;
                }
                let id = thzsim_core::LinkId(i as u32);
                let c = link_capacity(id, &usage, &topology, &params)
                    .map_err(ExperimentError::from)?;
                text += &format!(
                    "{},{},{:.6},{},{}\n",
                    l.from,
                    l.to,
                    l.distance,
                    usage.z_of(id),
                    fmt_g6(c / 1e9)
                );
            }
            stdout.write_all(text.as_bytes()).map_err(io_ctx("stdout"))?;
        }
        Command::Plot { input, out } => {
            for f in plot::plot_csv(&input, &out)? {
                writeln!(stdout, "{}", f.display()).map_err(io_ctx("stdout"))?;
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
