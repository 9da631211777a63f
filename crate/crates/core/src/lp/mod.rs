//! The max-multiplier load-balancing program.
//!
//! Every demand ships `chunk · λ` Gbit split across its candidate paths. A RIS
//! accumulates the flow of every path entering it and may hold at most
//! `L + S_r·τ` Gbit. The program maximizes λ.
//!
//! The per-RIS load variables are defined by equalities, so they are
//! substituted into the queue rows before solving and rebuilt afterwards.

pub mod simplex;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::ops::Range;

use thiserror::Error;

use crate::routing::CandidatePathSet;
use crate::topology::NodeId;
use simplex::{LinearProgram, Outcome, Relation, SimplexOptions, SolveStats};

/// One traffic chunk from a source BS to a destination VR user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub id: usize,
    /// Application the chunk belongs to. Reporting only.
    pub app: usize,
    pub source: NodeId,
    pub destination: NodeId,
    pub chunk_gbit: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("demand(s) without a candidate path: {0:?}")]
    Unroutable(Vec<usize>),
    #[error("candidate set {index} belongs to demand {found}, expected {expected}")]
    MismatchedSets { index: usize, expected: usize, found: usize },
    #[error("invalid model parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("simplex gave up in phase {phase} after {iterations} iterations")]
    IterationLimit { phase: u8, iterations: usize },
}

/// A flow variable: one (demand, path) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVar {
    /// Index into [`LpModel::demands`].
    pub demand: usize,
    /// Rank of the path within the demand's candidate set.
    pub path_rank: usize,
    /// RISs the path enters, each counted once.
    pub relays: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisQueue {
    pub ris: NodeId,
    /// Average serving speed S_r in Gbit/s.
    pub speed_gbps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub demands: Vec<Demand>,
    pub flows: Vec<FlowVar>,
    /// Flow indices of each demand, parallel to `demands`.
    pub demand_flows: Vec<Range<usize>>,
    pub queues: Vec<RisQueue>,
    /// Queue length L in Gbit.
    pub queue_l_gbit: f64,
    /// Observation window τ in seconds.
    pub tau_s: f64,
}

impl LpModel {
    /// λ, one flow per (demand, path), one load per RIS.
    pub fn variable_count(&self) -> usize {
        1 + self.flows.len() + self.queues.len()
    }

    /// One conservation row per demand plus a definition and a queue row per RIS.
    pub fn constraint_count(&self) -> usize {
        self.demands.len() + 2 * self.queues.len()
    }

    /// L + S_r·τ for the given queue.
    pub fn queue_budget(&self, q: &RisQueue) -> f64 {
        self.queue_l_gbit + q.speed_gbps * self.tau_s
    }

    /// Recomputes y_r from flow values, in `queues` order.
    pub fn loads_from_flows(&self, flows: &[f64]) -> Vec<f64> {
        let slot: BTreeMap<NodeId, usize> =
            self.queues.iter().enumerate().map(|(i, q)| (q.ris, i)).collect();
        let mut loads = alloc::vec![0.0; self.queues.len()];
        for (var, &f) in self.flows.iter().zip(flows) {
            for r in &var.relays {
                if let Some(&i) = slot.get(r) {
                    loads[i] += f;
                }
            }
        }
        loads
    }

    /// Standard form with loads substituted: variable 0 is λ, variable
    /// `1 + i` is flow `i`.
    pub fn to_linear_program(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(1 + self.flows.len());
        lp.objective = alloc::vec![(0, 1.0)];
        for (d, range) in self.demands.iter().zip(&self.demand_flows) {
            let mut row: Vec<(usize, f64)> = range.clone().map(|i| (1 + i, 1.0)).collect();
            row.push((0, -d.chunk_gbit));
            lp.add(row, Relation::Eq, 0.0);
        }
        for q in &self.queues {
            let row: Vec<(usize, f64)> = self
                .flows
                .iter()
                .enumerate()
                .flat_map(|(i, v)| {
                    v.relays.iter().filter(|&&r| r == q.ris).map(move |_| (1 + i, 1.0))
                })
                .collect();
            lp.add(row, Relation::Le, self.queue_budget(q));
        }
        lp
    }

    /// Text dump in the CPLEX LP format, with the load variables and their
    /// defining rows kept explicit.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ max-multiplier downlink load balancing");
        let _ = writeln!(
            out,
            "\\ {} demands, {} flows, {} RIS queues",
            self.demands.len(),
            self.flows.len(),
            self.queues.len()
        );
        let _ = writeln!(out, "Maximize\n obj: lambda\nSubject To");
        let flow_name = |i: usize| {
            let v = &self.flows[i];
            alloc::format!("f_{}_{}", self.demands[v.demand].id, v.path_rank)
        };
        for (d, range) in self.demands.iter().zip(&self.demand_flows) {
            let terms: Vec<String> = range.clone().map(|i| alloc::format!("+ {}", flow_name(i))).collect();
            write_row(&mut out, &alloc::format!("demand_{}", d.id), &terms, &alloc::format!("- {} lambda = 0", d.chunk_gbit));
        }
        for q in &self.queues {
            let mut terms = alloc::vec![alloc::format!("y_{}", q.ris)];
            for (i, v) in self.flows.iter().enumerate() {
                for _ in v.relays.iter().filter(|&&r| r == q.ris) {
                    terms.push(alloc::format!("- {}", flow_name(i)));
                }
            }
            write_row(&mut out, &alloc::format!("load_{}", q.ris), &terms, "= 0");
        }
        for q in &self.queues {
            let _ = writeln!(out, " queue_{}: y_{} <= {}", q.ris, q.ris, self.queue_budget(q));
        }
        let _ = writeln!(out, "End");
        out
    }
}

fn write_row(out: &mut String, name: &str, terms: &[String], tail: &str) {
    let _ = write!(out, " {name}:");
    for (i, t) in terms.iter().enumerate() {
        if i > 0 && i % 8 == 0 {
            let _ = write!(out, "\n   ");
        }
        let _ = write!(out, " {t}");
    }
    let _ = writeln!(out, " {tail}");
}

/// Assembles the program. `candidate_sets[i]` must belong to `demands[i]`;
/// `ris_speeds_gbps` lists every RIS of the topology (unused ones at 0).
pub fn build_model(
    demands: &[Demand],
    candidate_sets: &[CandidatePathSet],
    ris_speeds_gbps: &BTreeMap<NodeId, f64>,
    queue_l_gbit: f64,
    tau_s: f64,
) -> Result<LpModel, LpError> {
    if !(queue_l_gbit >= 0.0 && queue_l_gbit.is_finite()) {
        return Err(LpError::InvalidParameter { name: "queue_l_gbit", value: queue_l_gbit });
    }
    if !(tau_s >= 0.0 && tau_s.is_finite()) {
        return Err(LpError::InvalidParameter { name: "tau_s", value: tau_s });
    }
    for d in demands {
        if !(d.chunk_gbit > 0.0 && d.chunk_gbit.is_finite()) {
            return Err(LpError::InvalidParameter { name: "chunk_gbit", value: d.chunk_gbit });
        }
    }
    for &s in ris_speeds_gbps.values() {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(LpError::InvalidParameter { name: "ris_speed_gbps", value: s });
        }
    }
    for (i, (d, set)) in demands.iter().zip(candidate_sets).enumerate() {
        if d.id != set.demand_id {
            return Err(LpError::MismatchedSets { index: i, expected: d.id, found: set.demand_id });
        }
    }
    let unroutable: Vec<usize> = demands
        .iter()
        .zip(candidate_sets.iter().map(Some).chain(core::iter::repeat(None)))
        .filter(|(_, s)| s.is_none_or(|s| s.paths.is_empty()))
        .map(|(d, _)| d.id)
        .collect();
    if !unroutable.is_empty() {
        return Err(LpError::Unroutable(unroutable));
    }

    let mut flows = Vec::new();
    let mut demand_flows = Vec::with_capacity(demands.len());
    for (di, set) in candidate_sets.iter().take(demands.len()).enumerate() {
        let start = flows.len();
        for (rank, path) in set.paths.iter().enumerate() {
            let mut relays = path.relays().to_vec();
            relays.sort();
            relays.dedup();
            flows.push(FlowVar { demand: di, path_rank: rank, relays });
        }
        demand_flows.push(start..flows.len());
    }
    let queues = ris_speeds_gbps
        .iter()
        .map(|(&ris, &speed_gbps)| RisQueue { ris, speed_gbps })
        .collect();
    Ok(LpModel {
        demands: demands.to_vec(),
        flows,
        demand_flows,
        queues,
        queue_l_gbit,
        tau_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    /// Optimal multiplier; `+inf` when unbounded, NaN when infeasible.
    pub lambda: f64,
    /// Gbit per flow variable, parallel to [`LpModel::flows`].
    pub flows: Vec<f64>,
    /// y_r in Gbit, parallel to [`LpModel::queues`].
    pub loads: Vec<f64>,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn load_of(&self, model: &LpModel, ris: NodeId) -> Option<f64> {
        model.queues.iter().position(|q| q.ris == ris).map(|i| self.loads[i])
    }
}

pub fn solve(model: &LpModel, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    let lp = model.to_linear_program();
    let (outcome, stats) = simplex::solve(&lp, opts);
    match outcome {
        Outcome::Optimal { x, .. } => {
            let flows = x[1..].to_vec();
            let loads = model.loads_from_flows(&flows);
            Ok(LpSolution { status: SolveStatus::Optimal, lambda: x[0], flows, loads, stats })
        }
        Outcome::Unbounded => Ok(LpSolution {
            status: SolveStatus::Unbounded,
            lambda: f64::INFINITY,
            flows: Vec::new(),
            loads: Vec::new(),
            stats,
        }),
        Outcome::Infeasible => {
            // λ = 0 with zero flow satisfies every row.
            debug_assert!(false, "max-multiplier program reported infeasible");
            Ok(LpSolution {
                status: SolveStatus::Infeasible,
                lambda: f64::NAN,
                flows: Vec::new(),
                loads: Vec::new(),
                stats,
            })
        }
        Outcome::IterationLimit { phase } => {
            Err(LpError::IterationLimit { phase, iterations: stats.iterations })
        }
    }
}

/// Constraint residuals of a solution, recomputed from the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// max |Σ_P f − t·λ| over demands.
    pub demand_residual: f64,
    /// max |y_r − Σ f| over RISs.
    pub load_residual: f64,
    /// max (y_r − S_r·τ − L)⁺ over RISs.
    pub queue_violation: f64,
    /// max (−v)⁺ over λ, flows and loads.
    pub negativity: f64,
    pub tolerance: f64,
}

impl FeasibilityReport {
    pub fn max_residual(&self) -> f64 {
        self.demand_residual
            .max(self.load_residual)
            .max(self.queue_violation)
            .max(self.negativity)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= self.tolerance
    }
}

pub fn check_feasibility(model: &LpModel, solution: &LpSolution, tol: f64) -> FeasibilityReport {
    let flows = &solution.flows;
    let lambda = solution.lambda;
    let mut demand_residual: f64 = 0.0;
    for (d, range) in model.demands.iter().zip(&model.demand_flows) {
        let sent: f64 = range.clone().map(|i| flows.get(i).copied().unwrap_or(0.0)).sum();
        demand_residual = demand_residual.max((sent - d.chunk_gbit * lambda).abs());
    }
    let recomputed = model.loads_from_flows(flows);
    let mut load_residual: f64 = 0.0;
    let mut queue_violation: f64 = 0.0;
    for (i, q) in model.queues.iter().enumerate() {
        let y = solution.loads.get(i).copied().unwrap_or(0.0);
        load_residual = load_residual.max((y - recomputed[i]).abs());
        queue_violation = queue_violation.max(y - model.queue_budget(q));
    }
    let negativity = core::iter::once(lambda)
        .chain(flows.iter().copied())
        .chain(solution.loads.iter().copied())
        .fold(0.0f64, |m, v| m.max(-v));
    FeasibilityReport { demand_residual, load_residual, queue_violation, negativity, tolerance: tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::Path;
    use crate::topology::{NodeKind, Topology};
    use alloc::vec;

    /// BS 0, RIS 1, RIS 2, VR 3 on a line 10 m apart, plus a second
    /// BS 4 / RIS 5 / VR 6 chain far away.
    fn chains() -> Topology {
        Topology::from_positions(
            [
                (NodeKind::BaseStation, 0.0, 0.0),
                (NodeKind::Ris, 10.0, 0.0),
                (NodeKind::Ris, 22.0, 0.0),
                (NodeKind::VrUser, 34.0, 0.0),
                (NodeKind::BaseStation, 0.0, 100.0),
                (NodeKind::Ris, 10.0, 100.0),
                (NodeKind::VrUser, 20.0, 100.0),
            ],
            20.0,
        )
    }

    fn demand(id: usize, src: u32, dst: u32, t: f64) -> Demand {
        Demand { id, app: 0, source: NodeId(src), destination: NodeId(dst), chunk_gbit: t }
    }

    fn set(id: usize, t: &Topology, seqs: &[&[u32]]) -> CandidatePathSet {
        let paths = seqs
            .iter()
            .map(|s| {
                let nodes: Vec<NodeId> = s.iter().map(|&i| NodeId(i)).collect();
                Path::through(t, &nodes).expect("linked")
            })
            .collect();
        CandidatePathSet { demand_id: id, paths }
    }

    fn speeds(pairs: &[(u32, f64)]) -> BTreeMap<NodeId, f64> {
        pairs.iter().map(|&(r, s)| (NodeId(r), s)).collect()
    }

    #[test]
    fn single_relay_structure_and_optimum() {
        let t = chains();
        let d = [demand(0, 4, 6, 0.5)];
        let sets = [set(0, &t, &[&[4, 5, 6]])];
        let m = build_model(&d, &sets, &speeds(&[(5, 10.0)]), 10.0, 0.5).unwrap();
        assert_eq!(m.flows.len(), 1);
        assert_eq!(m.queues.len(), 1);
        assert_eq!(m.variable_count(), 3);
        assert_eq!(m.constraint_count(), 3);
        let s = solve(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.lambda - 30.0).abs() < 1e-9);
        assert!((s.flows[0] - 15.0).abs() < 1e-9);
        assert!((s.loads[0] - 15.0).abs() < 1e-9);
        assert!(check_feasibility(&m, &s, 1e-9).passed());
    }

    #[test]
    fn two_relay_path_feeds_both_loads() {
        let t = chains();
        let d = [demand(0, 0, 3, 0.5)];
        let sets = [set(0, &t, &[&[0, 1, 2, 3]])];
        // Budgets 10 + 10·0.5 = 15 and 10 + 4·0.5 = 12.
        let m = build_model(&d, &sets, &speeds(&[(1, 10.0), (2, 4.0)]), 10.0, 0.5).unwrap();
        let lp = m.to_linear_program();
        assert_eq!(lp.constraints[1].coeffs, vec![(1, 1.0)]);
        assert_eq!(lp.constraints[2].coeffs, vec![(1, 1.0)]);
        let s = solve(&m, &SimplexOptions::default()).unwrap();
        assert!((s.lambda - 24.0).abs() < 1e-9);
        assert!((s.load_of(&m, NodeId(2)).unwrap() - 12.0).abs() < 1e-9);
    }

    #[test]
    fn empty_candidate_set_is_reported() {
        let t = chains();
        let d = [demand(0, 4, 6, 0.5), demand(1, 0, 6, 0.5)];
        let sets = [set(0, &t, &[&[4, 5, 6]]), CandidatePathSet { demand_id: 1, paths: vec![] }];
        assert_eq!(
            build_model(&d, &sets, &speeds(&[(5, 1.0)]), 10.0, 0.5),
            Err(LpError::Unroutable(vec![1]))
        );
    }

    #[test]
    fn only_direct_paths_is_unbounded() {
        let t = Topology::from_positions(
            [(NodeKind::BaseStation, 0.0, 0.0), (NodeKind::VrUser, 10.0, 0.0), (NodeKind::Ris, 50.0, 50.0)],
            20.0,
        );
        let d = [demand(0, 0, 1, 0.5)];
        let sets = [set(0, &t, &[&[0, 1]])];
        let m = build_model(&d, &sets, &speeds(&[(2, 0.0)]), 10.0, 0.5).unwrap();
        let s = solve(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
        assert!(s.lambda.is_infinite());
    }

    #[test]
    fn rejects_bad_parameters() {
        let t = chains();
        let sets = [set(0, &t, &[&[4, 5, 6]])];
        let sp = speeds(&[(5, 1.0)]);
        assert!(build_model(&[demand(0, 4, 6, 0.0)], &sets, &sp, 10.0, 0.5).is_err());
        assert!(build_model(&[demand(0, 4, 6, 0.5)], &sets, &sp, -1.0, 0.5).is_err());
        assert!(matches!(
            build_model(&[demand(3, 4, 6, 0.5)], &sets, &sp, 10.0, 0.5),
            Err(LpError::MismatchedSets { .. })
        ));
    }

    #[test]
    fn feasibility_report_flags_injected_error() {
        let t = chains();
        let d = [demand(0, 4, 6, 0.5)];
        let sets = [set(0, &t, &[&[4, 5, 6]])];
        let m = build_model(&d, &sets, &speeds(&[(5, 10.0)]), 10.0, 0.5).unwrap();
        let mut s = solve(&m, &SimplexOptions::default()).unwrap();
        s.flows[0] += 0.1;
        let r = check_feasibility(&m, &s, 1e-6);
        assert!((r.demand_residual - 0.1).abs() < 1e-9);
        assert!(!r.passed());

        let zero = LpSolution {
            status: SolveStatus::Optimal,
            lambda: 0.0,
            flows: vec![0.0],
            loads: vec![0.0],
            stats: Default::default(),
        };
        let r = check_feasibility(&m, &zero, 1e-12);
        assert_eq!(r.max_residual(), 0.0);
        assert!(r.passed());
    }

    #[test]
    fn lp_format_dump_mentions_every_row() {
        let t = chains();
        let d = [demand(0, 0, 3, 0.5)];
        let sets = [set(0, &t, &[&[0, 1, 2, 3]])];
        let m = build_model(&d, &sets, &speeds(&[(1, 10.0), (2, 4.0)]), 10.0, 0.5).unwrap();
        let text = m.to_lp_format();
        assert!(text.contains("Maximize\n obj: lambda"));
        assert!(text.contains(" demand_0: + f_0_0 - 0.5 lambda = 0"));
        assert!(text.contains(" load_1: y_1 - f_0_0 = 0"));
        assert!(text.contains(" queue_2: y_2 <= 12"));
        assert!(text.trim_end().ends_with("End"));
    }
}
