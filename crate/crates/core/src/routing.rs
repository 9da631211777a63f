//! Candidate downlink paths.
//!
//! Paths are ranked by hop count, then total geometric length, then the
//! lexicographic order of their node-id sequence. [`k_shortest_paths`] is
//! Yen's loopless procedure driven by a Dijkstra search under that order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::topology::{LinkId, NodeId, NodeKind, Topology};

/// A simple walk BS → (RIS)* → VR.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub links: Vec<LinkId>,
    /// Visited nodes, source first; always `links.len() + 1` entries.
    pub nodes: Vec<NodeId>,
    pub total_distance: f64,
}

impl Path {
    /// Path along `nodes`, or `None` when some consecutive pair is not linked.
    pub fn through(topology: &Topology, nodes: &[NodeId]) -> Option<Path> {
        let linked = nodes.len() >= 2
            && nodes.windows(2).all(|w| topology.find_link(w[0], w[1]).is_some());
        linked.then(|| Path::from_nodes(topology, nodes.to_vec()))
    }

    fn from_nodes(topology: &Topology, nodes: Vec<NodeId>) -> Path {
        let mut links = Vec::with_capacity(nodes.len().saturating_sub(1));
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let l = topology
                .find_link(w[0], w[1])
                .expect("path nodes must be joined by links");
            total += topology.link(l).distance;
            links.push(l);
        }
        Path { links, nodes, total_distance: total }
    }

    pub fn hop_count(&self) -> usize {
        self.links.len()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.nodes.last().expect("non-empty path")
    }

    /// RIS nodes traversed, in order (every node except the endpoints).
    pub fn relays(&self) -> &[NodeId] {
        let n = self.nodes.len();
        if n < 2 {
            &[]
        } else {
            &self.nodes[1..n - 1]
        }
    }

    /// The ranking order used everywhere in routing.
    pub fn rank_cmp(&self, other: &Path) -> Ordering {
        rank(self.hop_count(), self.total_distance, &self.nodes).cmp_with(&rank(
            other.hop_count(),
            other.total_distance,
            &other.nodes,
        ))
    }
}

struct Rank<'a> {
    hops: usize,
    distance: f64,
    nodes: &'a [NodeId],
}

fn rank(hops: usize, distance: f64, nodes: &[NodeId]) -> Rank<'_> {
    Rank { hops, distance, nodes }
}

impl Rank<'_> {
    fn cmp_with(&self, other: &Rank<'_>) -> Ordering {
        self.hops
            .cmp(&other.hops)
            .then_with(|| self.distance.total_cmp(&other.distance))
            .then_with(|| self.nodes.cmp(other.nodes))
    }
}

/// Up to `k` ranked paths for one demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePathSet {
    pub demand_id: usize,
    pub paths: Vec<Path>,
}

impl CandidatePathSet {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Best path from `src` to `dst` avoiding `banned_nodes` and `banned_links`.
/// Labels carry the whole node sequence so the lexicographic tie-break is
/// exact.
fn best_path(
    topology: &Topology,
    src: NodeId,
    dst: NodeId,
    banned_nodes: &BTreeSet<NodeId>,
    banned_links: &BTreeSet<LinkId>,
) -> Option<(usize, f64, Vec<NodeId>)> {
    let n = topology.nodes().len();
    // Label per node: (hops, distance, node sequence from src).
    let mut best: Vec<Option<(usize, f64, Vec<NodeId>)>> = alloc::vec![None; n];
    let mut done = alloc::vec![false; n];
    best[src.index()] = Some((0, 0.0, alloc::vec![src]));

    // Graphs are tiny (tens of nodes), so a linear scan for the next label is
    // simpler than a heap keyed on whole paths.
    loop {
        let mut pick: Option<usize> = None;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let Some(cand) = &best[i] else { continue };
            pick = match pick {
                None => Some(i),
                Some(j) => {
                    let cur = best[j].as_ref().unwrap();
                    if rank(cand.0, cand.1, &cand.2).cmp_with(&rank(cur.0, cur.1, &cur.2))
                        == Ordering::Less
                    {
                        Some(i)
                    } else {
                        Some(j)
                    }
                }
            };
        }
        let u = pick?;
        done[u] = true;
        let (hops, dist, seq) = best[u].clone().unwrap();
        if u == dst.index() {
            return Some((hops, dist, seq));
        }
        for &l in topology.out_links(NodeId(u as u32)) {
            if banned_links.contains(&l) {
                continue;
            }
            let link = topology.link(l);
            let v = link.to;
            if done[v.index()] || banned_nodes.contains(&v) {
                continue;
            }
            // Only the destination may be a VR user; VR nodes never relay.
            if topology.node(v).kind == NodeKind::VrUser && v != dst {
                continue;
            }
            let mut next = seq.clone();
            next.push(v);
            let cand = (hops + 1, dist + link.distance, next);
            let better = match &best[v.index()] {
                None => true,
                Some(cur) => {
                    rank(cand.0, cand.1, &cand.2).cmp_with(&rank(cur.0, cur.1, &cur.2))
                        == Ordering::Less
                }
            };
            if better {
                best[v.index()] = Some(cand);
            }
        }
    }
}

/// The top-ranked path from `src` to `dst`, or `None` when unreachable.
pub fn shortest_path(topology: &Topology, src: NodeId, dst: NodeId) -> Option<Path> {
    best_path(topology, src, dst, &BTreeSet::new(), &BTreeSet::new())
        .map(|(_, _, nodes)| Path::from_nodes(topology, nodes))
}

/// Whether any path leads from `src` to `dst`.
pub fn is_reachable(topology: &Topology, src: NodeId, dst: NodeId) -> bool {
    let mut seen = alloc::vec![false; topology.nodes().len()];
    let mut stack = alloc::vec![src];
    seen[src.index()] = true;
    while let Some(u) = stack.pop() {
        if u == dst {
            return true;
        }
        if u != src && topology.node(u).kind == NodeKind::VrUser {
            continue;
        }
        for &l in topology.out_links(u) {
            let v = topology.link(l).to;
            if !seen[v.index()] {
                seen[v.index()] = true;
                stack.push(v);
            }
        }
    }
    false
}

/// Owned sort key for the candidate heap in Yen's procedure.
#[derive(Debug, Clone)]
struct Candidate {
    hops: usize,
    distance: f64,
    nodes: Vec<NodeId>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        rank(self.hops, self.distance, &self.nodes).cmp_with(&rank(
            other.hops,
            other.distance,
            &other.nodes,
        ))
    }
}

/// The `k` best simple paths from `src` to `dst` (fewer if fewer exist).
pub fn k_shortest_paths(topology: &Topology, src: NodeId, dst: NodeId, k: usize) -> Vec<Path> {
    let mut accepted: Vec<Path> = Vec::new();
    if k == 0 {
        return accepted;
    }
    let Some(first) = shortest_path(topology, src, dst) else {
        return accepted;
    };
    accepted.push(first);
    let mut pending: BTreeSet<Candidate> = BTreeSet::new();

    while accepted.len() < k {
        let last = accepted.last().unwrap().clone();
        for i in 0..last.hop_count() {
            let spur = last.nodes[i];
            let root = &last.nodes[..=i];

            let mut banned_links = BTreeSet::new();
            for p in &accepted {
                if p.nodes.len() > i + 1 && p.nodes[..=i] == *root {
                    banned_links.insert(p.links[i]);
                }
            }
            let banned_nodes: BTreeSet<NodeId> = root[..i].iter().copied().collect();

            if let Some((hops, _, spur_nodes)) =
                best_path(topology, spur, dst, &banned_nodes, &banned_links)
            {
                let mut nodes = root[..i].to_vec();
                nodes.extend(spur_nodes);
                // Recompute the distance in path order so sums are bitwise
                // identical to those of any other route to the same sequence.
                let path = Path::from_nodes(topology, nodes);
                debug_assert_eq!(path.hop_count(), i + hops);
                pending.insert(Candidate {
                    hops: path.hop_count(),
                    distance: path.total_distance,
                    nodes: path.nodes,
                });
            }
        }
        let Some(next) = pending.pop_first() else { break };
        accepted.push(Path::from_nodes(topology, next.nodes));
    }
    accepted
}

/// One candidate set per `(demand id, source, destination)` triple.
///
/// Demands whose destination is unreachable come back with empty sets; the
/// returned list of unroutable demand ids lets callers report them.
pub fn build_candidate_sets<I>(
    topology: &Topology,
    demands: I,
    k: usize,
) -> (Vec<CandidatePathSet>, Vec<usize>)
where
    I: IntoIterator<Item = (usize, NodeId, NodeId)>,
{
    // Many demands share endpoints; compute each pair once.
    let mut cache: BTreeMap<(NodeId, NodeId), Vec<Path>> = BTreeMap::new();
    let mut sets = Vec::new();
    let mut unroutable = Vec::new();
    for (id, src, dst) in demands {
        let paths = cache
            .entry((src, dst))
            .or_insert_with(|| k_shortest_paths(topology, src, dst, k))
            .clone();
        if paths.is_empty() {
            unroutable.push(id);
        }
        sets.push(CandidatePathSet { demand_id: id, paths });
    }
    (sets, unroutable)
}
