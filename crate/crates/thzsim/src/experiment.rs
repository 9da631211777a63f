//! Static |D| sweeps and the dynamic mobility run.
//!
//! Each replication draws one topology and one demand set and evaluates both
//! distribution techniques on them, so every gain is a paired ratio.

use std::collections::BTreeMap;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thzsim_core::channel::{derive_usage_sets, ris_speed, ChannelError};
use thzsim_core::lp::simplex::SimplexOptions;
use thzsim_core::lp::{self, build_model, check_feasibility, Demand, LpError, SolveStatus};
use thzsim_core::routing::{build_candidate_sets, is_reachable};
use thzsim_core::topology::{sample_topology, NodeId, Topology};
use thzsim_core::{LpModel, LpSolution};

use crate::config::ExperimentConfig;
use crate::seeds;
use crate::stats::{confidence_interval, throughput_gain, Interval};

/// Attempts per demand before an unreachable draw is fatal.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    /// Parallel distribution over several candidate paths.
    Pddt,
    /// Serial distribution over the single best path.
    Sddt,
}

impl Technique {
    pub const ALL: [Technique; 2] = [Technique::Pddt, Technique::Sddt];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Pddt => "pddt",
            Technique::Sddt => "sddt",
        }
    }

    pub fn k(self, cfg: &ExperimentConfig) -> usize {
        match self {
            Technique::Pddt => cfg.traffic.k_pddt,
            Technique::Sddt => cfg.traffic.k_sddt,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("no base station can reach a VR user after {attempts} draws (demand {demand})")]
    Unroutable { demand: usize, attempts: usize },
    #[error("demands without candidate paths: {0:?}")]
    UnroutableDemands(Vec<usize>),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("solver failure: {source}")]
    Solver {
        source: LpError,
        /// The offending program in LP format, for replay elsewhere.
        instance: String,
    },
    #[error("multiplier is unbounded: no demand crosses a RIS")]
    Unbounded { instance: String },
    #[error("solution failed certification (max residual {residual:e})")]
    Uncertified { residual: f64, instance: String },
}

impl ExperimentError {
    pub fn instance_dump(&self) -> Option<&str> {
        match self {
            ExperimentError::Solver { instance, .. }
            | ExperimentError::Unbounded { instance }
            | ExperimentError::Uncertified { instance, .. } => Some(instance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandDraw {
    pub demands: Vec<Demand>,
    /// How many (source, destination) pairs were rejected as unreachable.
    pub redraws: usize,
}

/// `count` chunks with uniform source BS and destination VR user. A pair whose
/// destination cannot be reached is redrawn whole.
pub fn generate_demands(
    topology: &Topology,
    count: usize,
    chunk_gbit: f64,
    seed: u64,
) -> Result<DemandDraw, ExperimentError> {
    let bss: Vec<NodeId> = topology.base_stations().collect();
    let vrs: Vec<NodeId> = topology.vr_users().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reach: BTreeMap<(NodeId, NodeId), bool> = BTreeMap::new();
    let mut demands = Vec::with_capacity(count);
    let mut redraws = 0;
    for id in 0..count {
        let mut attempt = 0;
        let (source, destination) = loop {
            let s = bss[rng.gen_range(0..bss.len())];
            let d = vrs[rng.gen_range(0..vrs.len())];
            if *reach.entry((s, d)).or_insert_with(|| is_reachable(topology, s, d)) {
                break (s, d);
            }
            attempt += 1;
            redraws += 1;
            if attempt >= MAX_REDRAWS {
                return Err(ExperimentError::Unroutable { demand: id, attempts: attempt });
            }
        };
        demands.push(Demand { id, app: id, source, destination, chunk_gbit });
    }
    if redraws > 0 {
        info!("{redraws} unreachable demand endpoint pair(s) redrawn");
    }
    Ok(DemandDraw { demands, redraws })
}

/// Everything one evaluation produced.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub lambda: f64,
    pub model: LpModel,
    pub solution: LpSolution,
}

/// Candidate paths → usage sets → RIS speeds → program → λ.
pub fn evaluate_once(
    topology: &Topology,
    demands: &[Demand],
    k: usize,
    cfg: &ExperimentConfig,
) -> Result<Evaluation, ExperimentError> {
    let params = cfg.channel_params();
    let (sets, unroutable) = build_candidate_sets(
        topology,
        demands.iter().map(|d| (d.id, d.source, d.destination)),
        k,
    );
    if !unroutable.is_empty() {
        return Err(ExperimentError::UnroutableDemands(unroutable));
    }
    let usage = derive_usage_sets(sets.iter().flat_map(|s| &s.paths), topology, &params);
    let mut speeds = BTreeMap::new();
    for r in topology.ris_nodes() {
        speeds.insert(r, ris_speed(r, &usage, topology, &params)? / 1e9);
    }
    let model = build_model(demands, &sets, &speeds, cfg.traffic.queue_l_gbit, cfg.traffic.tau_s)
        .map_err(|e| match e {
            LpError::Unroutable(ids) => ExperimentError::UnroutableDemands(ids),
            other => ExperimentError::Solver { source: other, instance: String::new() },
        })?;
    let solution = lp::solve(&model, &SimplexOptions::default())
        .map_err(|source| ExperimentError::Solver { source, instance: model.to_lp_format() })?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Unbounded => {
            return Err(ExperimentError::Unbounded { instance: model.to_lp_format() })
        }
        SolveStatus::Infeasible => {
            return Err(ExperimentError::Solver {
                source: LpError::IterationLimit { phase: 1, iterations: solution.stats.iterations },
                instance: model.to_lp_format(),
            })
        }
    }
    let report = check_feasibility(&model, &solution, 1e-6);
    if !report.passed() {
        return Err(ExperimentError::Uncertified {
            residual: report.max_residual(),
            instance: model.to_lp_format(),
        });
    }
    debug!(
        "k={k} |D|={} λ={:.6} after {} pivots",
        demands.len(),
        solution.lambda,
        solution.stats.iterations
    );
    Ok(Evaluation { lambda: solution.lambda, model, solution })
}

/// Topology used by replication `rep` of the static sweep.
pub fn static_topology(cfg: &ExperimentConfig, rep: usize) -> Topology {
    let idx = if cfg.sweep.redraw_topology { rep as u64 } else { 0 };
    sample_topology(cfg.counts(), cfg.topology.range_m, seeds::derive(cfg.seed, seeds::TOPOLOGY, &[idx]))
}

/// Demands for sweep point `point` of replication `rep`.
pub fn static_demands(
    cfg: &ExperimentConfig,
    topology: &Topology,
    point: usize,
    rep: usize,
) -> Result<DemandDraw, ExperimentError> {
    let count = cfg.sweep.d_counts[point];
    if cfg.sweep.nested_demands {
        let max = cfg.sweep.d_counts.iter().copied().max().unwrap_or(count);
        let seed = seeds::derive(cfg.seed, seeds::DEMANDS, &[u64::MAX, rep as u64]);
        let mut draw = generate_demands(topology, max, cfg.traffic.chunk_gbit, seed)?;
        draw.demands.truncate(count);
        Ok(draw)
    } else {
        let seed = seeds::derive(cfg.seed, seeds::DEMANDS, &[point as u64, rep as u64]);
        generate_demands(topology, count, cfg.traffic.chunk_gbit, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TechniqueSummary {
    /// One λ per replication, in replication order.
    pub lambdas: Vec<f64>,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub d_count: usize,
    pub pddt: TechniqueSummary,
    pub sddt: TechniqueSummary,
    /// Paired per-replication gains.
    pub gains: Vec<Option<f64>>,
    /// Mean over the defined gains.
    pub mean_gain: Option<f64>,
    pub redraws: usize,
}

impl SweepPoint {
    pub fn summary(&self, t: Technique) -> &TechniqueSummary {
        match t {
            Technique::Pddt => &self.pddt,
            Technique::Sddt => &self.sddt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticResult {
    pub chunk_gbit: f64,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub index: usize,
    /// Elapsed time at the end of the epoch.
    pub minutes: u64,
    pub lambda_pddt: f64,
    pub lambda_sddt: f64,
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicResult {
    pub epochs: Vec<EpochRecord>,
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Evaluates both techniques for one (sweep point, replication) cell.
fn static_cell(
    cfg: &ExperimentConfig,
    point: usize,
    rep: usize,
) -> Result<(f64, f64, usize), ExperimentError> {
    let topology = static_topology(cfg, rep);
    let draw = static_demands(cfg, &topology, point, rep)?;
    let pddt = evaluate_once(&topology, &draw.demands, Technique::Pddt.k(cfg), cfg)?.lambda;
    let sddt = evaluate_once(&topology, &draw.demands, Technique::Sddt.k(cfg), cfg)?.lambda;
    Ok((pddt, sddt, draw.redraws))
}

pub fn run_static(cfg: &ExperimentConfig) -> Result<StaticResult, ExperimentError> {
    let reps = cfg.sweep.replications;
    let cells: Vec<(usize, usize)> = (0..cfg.sweep.d_counts.len())
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    // Collecting into a Vec keeps results in cell order whatever the schedule.
    let results: Vec<(f64, f64, usize)> = cells
        .par_iter()
        .map(|&(p, r)| static_cell(cfg, p, r))
        .collect::<Result<_, _>>()?;

    let points = cfg
        .sweep
        .d_counts
        .iter()
        .enumerate()
        .map(|(p, &d_count)| {
            let row = &results[p * reps..(p + 1) * reps];
            let pddt: Vec<f64> = row.iter().map(|c| c.0).collect();
            let sddt: Vec<f64> = row.iter().map(|c| c.1).collect();
            let gains: Vec<Option<f64>> = row.iter().map(|c| throughput_gain(c.0, c.1)).collect();
            SweepPoint {
                d_count,
                pddt: TechniqueSummary {
                    interval: confidence_interval(&pddt, cfg.sweep.ci_level),
                    lambdas: pddt,
                },
                sddt: TechniqueSummary {
                    interval: confidence_interval(&sddt, cfg.sweep.ci_level),
                    lambdas: sddt,
                },
                mean_gain: mean_defined(&gains),
                gains,
                redraws: row.iter().map(|c| c.2).sum(),
            }
        })
        .collect();
    Ok(StaticResult { chunk_gbit: cfg.traffic.chunk_gbit, points })
}

/// Topology and demands of epoch `epoch` in the dynamic run.
pub fn dynamic_epoch_instance(
    cfg: &ExperimentConfig,
    epoch: usize,
) -> Result<(Topology, DemandDraw), ExperimentError> {
    let base = sample_topology(
        cfg.counts(),
        cfg.topology.range_m,
        seeds::derive(cfg.seed, seeds::DYNAMIC_TOPOLOGY, &[]),
    );
    let topology = base.move_users(seeds::derive(cfg.seed, seeds::MOVES, &[epoch as u64]));
    let draw = generate_demands(
        &topology,
        cfg.dynamic.d_fixed,
        cfg.traffic.chunk_gbit,
        seeds::derive(cfg.seed, seeds::DYNAMIC_DEMANDS, &[epoch as u64]),
    )?;
    Ok((topology, draw))
}

pub fn run_dynamic(cfg: &ExperimentConfig) -> Result<DynamicResult, ExperimentError> {
    let epochs: Vec<EpochRecord> = (0..cfg.epoch_count())
        .into_par_iter()
        .map(|e| {
            let (topology, draw) = dynamic_epoch_instance(cfg, e)?;
            let pddt = evaluate_once(&topology, &draw.demands, Technique::Pddt.k(cfg), cfg)?.lambda;
            let sddt = evaluate_once(&topology, &draw.demands, Technique::Sddt.k(cfg), cfg)?.lambda;
            Ok(EpochRecord {
                index: e,
                minutes: (e as u64 + 1) * u64::from(cfg.dynamic.epoch_minutes),
                lambda_pddt: pddt,
                lambda_sddt: sddt,
                gain: throughput_gain(pddt, sddt),
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(DynamicResult { epochs })
}
