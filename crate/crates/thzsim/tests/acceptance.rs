//! Acceptance suite. Run with `--nocapture` to see the per-criterion report.

use std::collections::BTreeMap;
use std::path::Path as FsPath;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thzsim::experiment::{run_dynamic, run_static, StaticResult};
use thzsim::ExperimentConfig;
use thzsim_core::channel::{
    absorption_gain, channel_gain, derive_usage_sets, link_capacity, thermal_noise, ChannelParams,
};
use thzsim_core::lp::{self, build_model, check_feasibility, simplex::SimplexOptions, Demand, LpModel};
use thzsim_core::routing::{k_shortest_paths, CandidatePathSet, Path};
use thzsim_core::topology::{NodeId, NodeKind, Topology};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// ---------------------------------------------------------------- 1

fn ac1_channel() -> Outcome {
    let pi = std::f64::consts::PI;
    let (c, f, k, w) = (3e8_f64, 1e12_f64, 0.0016_f64, 3e9_f64);
    let a = |d: f64| c * c / (16.0 * pi * pi * f * f * d * d) * (1.0 - (-k * d).exp());
    let h = |d: f64| (c / (4.0 * pi * d * f)).powi(2) * (-k * d).exp();
    let thermal = w * c * c / (4.0 * pi * f * f) * 1.380649e-23 * 300.0;

    let p = ChannelParams::default();
    let mut worst = 0.0_f64;
    worst = worst.max(rel(absorption_gain(10.0, &p).unwrap(), a(10.0)));
    worst = worst.max(rel(channel_gain(10.0, &p).unwrap(), h(10.0)));
    worst = worst.max(rel(thermal_noise(&p), thermal));

    // Transmitting RIS 15 m from the receiver, interfering RIS 15 m away and
    // a BS 25 m away.
    let t = Topology::from_positions(
        [
            (NodeKind::BaseStation, -25.0, 0.0),
            (NodeKind::Ris, 0.0, 15.0),
            (NodeKind::Ris, 0.0, -15.0),
            (NodeKind::VrUser, 0.0, 0.0),
        ],
        40.0,
    );
    let path = Path::through(&t, &[NodeId(0), NodeId(1), NodeId(3)]).unwrap();
    let mut usage = derive_usage_sets([&path], &t, &p);
    usage.i_ris.insert(NodeId(2));
    let link = t.find_link(NodeId(1), NodeId(3)).unwrap();
    let noise = thermal + 1.0 * a(15.0) + 10.0 * a(25.0);
    let expected = w * (1.0 + 1.0 * h(15.0) * 1.0 / noise).log2();
    let got = link_capacity(link, &usage, &t, &p).unwrap();
    worst = worst.max(rel(got, expected));

    let magnitudes = rel(a(10.0), 9.046e-14) < 1e-3 && rel(h(10.0), 5.609e-12) < 1e-3 && rel(got, 8.4e9) < 0.01;
    outcome(
        worst <= 1e-9 && magnitudes,
        format!("max relative error {worst:.2e}, capacity {:.4} Gbit/s", got / 1e9),
    )
}

// ---------------------------------------------------------------- 2, 6

/// Two isolated chains and one long chain:
/// BS0-RIS1-VR2, BS3-RIS4-VR5, BS6-RIS7-RIS8-VR9.
fn analytic_topology() -> Topology {
    Topology::from_positions(
        [
            (NodeKind::BaseStation, 0.0, 0.0),
            (NodeKind::Ris, 10.0, 0.0),
            (NodeKind::VrUser, 20.0, 0.0),
            (NodeKind::BaseStation, 0.0, 100.0),
            (NodeKind::Ris, 10.0, 100.0),
            (NodeKind::VrUser, 20.0, 100.0),
            (NodeKind::BaseStation, 0.0, 200.0),
            (NodeKind::Ris, 10.0, 200.0),
            (NodeKind::Ris, 22.0, 200.0),
            (NodeKind::VrUser, 34.0, 200.0),
        ],
        20.0,
    )
}

struct Analytic {
    name: &'static str,
    demands: Vec<Demand>,
    sets: Vec<CandidatePathSet>,
    speeds: BTreeMap<NodeId, f64>,
    expected: f64,
}

impl Analytic {
    fn model(&self, scale: f64) -> LpModel {
        let demands: Vec<Demand> =
            self.demands.iter().map(|d| Demand { chunk_gbit: d.chunk_gbit * scale, ..*d }).collect();
        build_model(&demands, &self.sets, &self.speeds, 10.0, 0.5).unwrap()
    }
}

fn analytic_instances() -> Vec<Analytic> {
    let t = analytic_topology();
    let demand = |id, s, d| Demand { id, app: 0, source: NodeId(s), destination: NodeId(d), chunk_gbit: 0.5 };
    let set = |id, seq: &[u32]| {
        let nodes: Vec<NodeId> = seq.iter().map(|&i| NodeId(i)).collect();
        CandidatePathSet { demand_id: id, paths: vec![Path::through(&t, &nodes).unwrap()] }
    };
    let speeds = |pairs: &[(u32, f64)]| pairs.iter().map(|&(r, s)| (NodeId(r), s)).collect();
    vec![
        // L + S·τ = 10 + 10·0.5 = 15 Gbit, t = 0.5 → λ = 30.
        Analytic {
            name: "single relay",
            demands: vec![demand(0, 0, 2)],
            sets: vec![set(0, &[0, 1, 2])],
            speeds: speeds(&[(1, 10.0), (4, 10.0), (7, 10.0), (8, 10.0)]),
            expected: 30.0,
        },
        // Budgets 15 and 12 on one path → λ = 24.
        Analytic {
            name: "two relays",
            demands: vec![demand(0, 6, 9)],
            sets: vec![set(0, &[6, 7, 8, 9])],
            speeds: speeds(&[(1, 10.0), (4, 10.0), (7, 10.0), (8, 4.0)]),
            expected: 24.0,
        },
        // Disjoint chains with bounds 30 and 24 → λ = min = 24.
        Analytic {
            name: "min pair",
            demands: vec![demand(0, 0, 2), demand(1, 3, 5)],
            sets: vec![set(0, &[0, 1, 2]), set(1, &[3, 4, 5])],
            speeds: speeds(&[(1, 10.0), (4, 4.0), (7, 10.0), (8, 10.0)]),
            expected: 24.0,
        },
    ]
}

fn ac2_lp() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for inst in analytic_instances() {
        let model = inst.model(1.0);
        let sol = lp::solve(&model, &SimplexOptions::default()).unwrap();
        let report = check_feasibility(&model, &sol, 1e-6);
        let good = sol.status == lp::SolveStatus::Optimal
            && (sol.lambda - inst.expected).abs() <= 1e-6
            && report.passed();
        ok &= good;
        notes.push(format!("{} λ={:.6}", inst.name, sol.lambda));
    }
    outcome(ok, notes.join(", "))
}

fn binding_set(model: &LpModel, sol: &lp::LpSolution) -> Vec<NodeId> {
    model
        .queues
        .iter()
        .zip(&sol.loads)
        .filter(|(q, &y)| y >= model.queue_budget(q) - 1e-6)
        .map(|(q, _)| q.ris)
        .collect()
}

fn ac6_scaling(base: &StaticResult, doubled: &StaticResult) -> Outcome {
    let mut worst = 0.0_f64;
    for (a, b) in base.points.iter().zip(&doubled.points) {
        for (sa, sb) in [(&a.pddt, &b.pddt), (&a.sddt, &b.sddt)] {
            for (&la, &lb) in sa.lambdas.iter().zip(&sb.lambdas) {
                worst = worst.max(rel(lb, la / 2.0));
            }
        }
    }
    let mut analytic_ok = true;
    for inst in analytic_instances() {
        let m1 = inst.model(1.0);
        let s1 = lp::solve(&m1, &SimplexOptions::default()).unwrap();
        for c in [0.25, 3.0, 7.5] {
            let mc = inst.model(c);
            let sc = lp::solve(&mc, &SimplexOptions::default()).unwrap();
            analytic_ok &= rel(sc.lambda, s1.lambda / c) <= 1e-6;
            analytic_ok &= binding_set(&m1, &s1) == binding_set(&mc, &sc);
            let total1: f64 = s1.flows.iter().sum();
            let totalc: f64 = sc.flows.iter().sum();
            for (f1, fc) in s1.flows.iter().zip(&sc.flows) {
                analytic_ok &= (f1 / total1 - fc / totalc).abs() <= 1e-9;
            }
        }
    }
    outcome(
        worst <= 1e-6 && analytic_ok,
        format!("max relative deviation from λ/2 {worst:.2e}, analytic invariance {analytic_ok}"),
    )
}

// ---------------------------------------------------------------- 3

fn brute_force(t: &Topology, src: NodeId, dst: NodeId) -> Vec<Vec<NodeId>> {
    fn dfs(t: &Topology, stack: &mut Vec<NodeId>, dst: NodeId, out: &mut Vec<(Vec<NodeId>, f64)>) {
        let at = *stack.last().unwrap();
        if at == dst {
            let d = stack.windows(2).map(|w| t.distance(w[0], w[1])).sum();
            out.push((stack.clone(), d));
            return;
        }
        if stack.len() > 1 && t.node(at).kind == NodeKind::VrUser {
            return;
        }
        for next in t.nodes().iter().map(|n| n.id) {
            if !stack.contains(&next) && t.find_link(at, next).is_some() {
                stack.push(next);
                dfs(t, stack, dst, out);
                stack.pop();
            }
        }
    }
    let mut found = Vec::new();
    dfs(t, &mut vec![src], dst, &mut found);
    found.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.1.total_cmp(&b.1)).then(a.0.cmp(&b.0)));
    found.into_iter().map(|(p, _)| p).collect()
}

fn random_graph(rng: &mut ChaCha8Rng) -> Topology {
    let n = rng.gen_range(3..=8);
    let mut kinds = vec![NodeKind::BaseStation, NodeKind::VrUser];
    for _ in 2..n {
        kinds.push(match rng.gen_range(0..4) {
            0 => NodeKind::BaseStation,
            1 => NodeKind::VrUser,
            _ => NodeKind::Ris,
        });
    }
    let nodes: Vec<(NodeKind, f64, f64)> =
        kinds.into_iter().map(|k| (k, rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0))).collect();
    Topology::from_positions(nodes, 20.0)
}

fn ac3_routing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut queries, mut mismatches) = (0usize, 0usize);
    for _ in 0..200 {
        let t = random_graph(&mut rng);
        for b in t.base_stations().collect::<Vec<_>>() {
            for v in t.vr_users().collect::<Vec<_>>() {
                let all = brute_force(&t, b, v);
                for k in 1..=10 {
                    queries += 1;
                    let got: Vec<Vec<NodeId>> = k_shortest_paths(&t, b, v, k).into_iter().map(|p| p.nodes).collect();
                    if got[..] != all[..all.len().min(k)] {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{queries} queries, {mismatches} mismatches"))
}

// ---------------------------------------------------------------- 4, 5

fn ac4_dominance(res: &StaticResult) -> Outcome {
    let mut pairs = 0;
    let mut violations = 0;
    let mut min_gain = f64::INFINITY;
    for p in &res.points {
        for (a, b) in p.pddt.lambdas.iter().zip(&p.sddt.lambdas) {
            pairs += 1;
            if *a < b - 1e-6 {
                violations += 1;
            }
        }
        min_gain = min_gain.min(p.mean_gain.unwrap_or(f64::NAN));
    }
    outcome(
        violations == 0 && min_gain >= 1.0,
        format!("{pairs} paired samples, {violations} violations, smallest mean gain {min_gain:.4}"),
    )
}

fn mean_pddt(res: &StaticResult, d: usize) -> Option<f64> {
    res.points.iter().find(|p| p.d_count == d).map(|p| p.pddt.interval.mean)
}

fn ac5_trend(res: &StaticResult, nested: &StaticResult) -> Outcome {
    let mut increases = 0;
    for w in nested.points.windows(2) {
        for (lo, hi) in [(&w[0].pddt, &w[1].pddt), (&w[0].sddt, &w[1].sddt)] {
            for (a, b) in lo.lambdas.iter().zip(&hi.lambdas) {
                if *b > a + 1e-6 {
                    increases += 1;
                }
            }
        }
    }
    let at100 = mean_pddt(res, 100).unwrap_or(f64::NAN);
    let at300 = mean_pddt(res, 300).unwrap_or(f64::NAN);
    let means: Vec<f64> = res.points.iter().map(|p| p.pddt.interval.mean).collect();
    let crosses = means.iter().any(|&m| m > 1.0) && means.iter().any(|&m| m < 1.0);
    outcome(
        increases == 0 && (0.5..=5.0).contains(&at100) && (0.1..=2.0).contains(&at300) && crosses,
        format!(
            "nested increases {increases}, λ(100)={at100:.4} (ref 1.86089), λ(300)={at300:.4} (ref 0.62776), crosses 1: {crosses}"
        ),
    )
}

// ---------------------------------------------------------------- 7

fn run_cli(out: &FsPath, seed: u64) -> i32 {
    let mut sink = Vec::new();
    thzsim::cli::run(
        ["thzsim", "run-static", "--out", out.to_str().unwrap(), "--seed", &seed.to_string()],
        &mut sink,
    )
}

fn ac7_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let codes = (run_cli(a.path(), 1), run_cli(b.path(), 1));
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") || n.ends_with(".svg"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .collect();
    outcome(
        codes == (0, 0) && names.len() >= 4 && differing.is_empty(),
        format!("{} files compared, differing: {differing:?}", names.len()),
    )
}

// ---------------------------------------------------------------- 8

fn ac8_dynamic() -> Outcome {
    let cfg = ExperimentConfig::default();
    let res = run_dynamic(&cfg).unwrap();
    let gains: Vec<f64> = res.epochs.iter().map(|e| e.gain.unwrap_or(f64::NAN)).collect();
    let ok = res.epochs.len() == 8 && cfg.dynamic.d_fixed == 300 && gains.iter().all(|&g| g >= 1.0 - 1e-9);
    let shown: Vec<String> = gains.iter().map(|g| format!("{g:.3}")).collect();
    outcome(ok, format!("{} epochs, G = [{}] (ref range 1.4 to 2.2)", res.epochs.len(), shown.join(", ")))
}

// ----------------------------------------------------------------

#[test]
fn acceptance() {
    let mut report: Vec<(u8, Outcome, Duration, Duration)> = Vec::new();
    let mut timed = |id: u8, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        report.push((id, o, start.elapsed(), limit));
    };
    let minute = Duration::from_secs(60);

    let cfg = ExperimentConfig::default();
    let sweep_start = Instant::now();
    let base = run_static(&cfg).expect("default static sweep");
    let sweep_time = sweep_start.elapsed();

    timed(1, Duration::from_secs(1), &mut ac1_channel);
    timed(2, Duration::from_secs(1), &mut ac2_lp);
    timed(3, Duration::from_secs(30), &mut ac3_routing);
    timed(4, 5 * minute, &mut || {
        let mut o = ac4_dominance(&base);
        o.detail += &format!(", sweep {:.1} s", sweep_time.as_secs_f64());
        o.passed &= sweep_time < 5 * minute;
        o
    });
    timed(5, 5 * minute, &mut || {
        let nested_cfg = ExperimentConfig {
            sweep: thzsim::config::SweepConfig { nested_demands: true, ..cfg.sweep.clone() },
            ..cfg.clone()
        };
        ac5_trend(&base, &run_static(&nested_cfg).expect("nested sweep"))
    });
    timed(6, 5 * minute, &mut || {
        let mut doubled_cfg = cfg.clone();
        doubled_cfg.traffic.chunk_gbit *= 2.0;
        ac6_scaling(&base, &run_static(&doubled_cfg).expect("doubled sweep"))
    });
    timed(7, 10 * minute, &mut ac7_determinism);
    timed(8, 5 * minute, &mut ac8_dynamic);

    let mut all = true;
    for (id, o, elapsed, limit) in &report {
        let pass = o.passed && elapsed < limit;
        all &= pass;
        println!(
            "AC{id} {} ({:.2} s, limit {} s): {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
    }
    assert!(all, "acceptance criteria failed");
}
