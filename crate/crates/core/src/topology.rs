//! Node layout and directed connectivity.
//!
//! Nodes are split into three roles. Base stations only transmit, VR users
//! only receive, and RISs relay in both directions. Two nodes are linked when
//! their Euclidean distance is within the connectivity range and the ordered
//! pair is role-compatible (BS→RIS, BS→VR, RIS→RIS, RIS→VR).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default connectivity range in meters.
pub const DEFAULT_RANGE_M: f64 = 20.0;

/// Placement box (inclusive, both axes) used by the default sampler.
pub const BS_BOX: (f64, f64) = (1.0, 10.0);
pub const RIS_BOX: (f64, f64) = (11.0, 21.0);
pub const VR_BOX: (f64, f64) = (22.0, 32.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl core::fmt::Display for NodeId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index into [`Topology::links`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    BaseStation,
    Ris,
    VrUser,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::BaseStation => "bs",
            NodeKind::Ris => "ris",
            NodeKind::VrUser => "vr",
        }
    }

    /// Whether a link may run from a node of kind `self` to one of kind `to`.
    pub fn can_link_to(self, to: NodeKind) -> bool {
        matches!(
            (self, to),
            (NodeKind::BaseStation, NodeKind::Ris)
                | (NodeKind::BaseStation, NodeKind::VrUser)
                | (NodeKind::Ris, NodeKind::Ris)
                | (NodeKind::Ris, NodeKind::VrUser)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Position in meters.
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn distance_to(&self, other: &Node) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedLink {
    pub from: NodeId,
    pub to: NodeId,
    /// Euclidean length in meters.
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCounts {
    pub bs: usize,
    pub ris: usize,
    pub vr: usize,
}

impl Default for NodeCounts {
    fn default() -> Self {
        NodeCounts { bs: 7, ris: 7, vr: 7 }
    }
}

/// An immutable node set plus the directed link graph derived from it.
///
/// Node ids equal their index in [`Topology::nodes`]. Links are stored in
/// ascending `(from, to)` order and addressed by [`LinkId`].
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<DirectedLink>,
    range: f64,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
}

impl Topology {
    /// Builds a topology from `(kind, x, y)` triples. Ids are assigned in order.
    pub fn from_positions<I>(positions: I, range: f64) -> Self
    where
        I: IntoIterator<Item = (NodeKind, f64, f64)>,
    {
        let nodes = positions
            .into_iter()
            .enumerate()
            .map(|(i, (kind, x, y))| Node { id: NodeId(i as u32), kind, x, y })
            .collect();
        Self::with_nodes(nodes, range)
    }

    fn with_nodes(nodes: Vec<Node>, range: f64) -> Self {
        let mut topo = Topology {
            nodes,
            links: Vec::new(),
            range,
            out_links: Vec::new(),
            in_links: Vec::new(),
        };
        topo.relink();
        topo
    }

    fn relink(&mut self) {
        let n = self.nodes.len();
        self.links.clear();
        self.out_links = alloc::vec![Vec::new(); n];
        self.in_links = alloc::vec![Vec::new(); n];
        for a in &self.nodes {
            for b in &self.nodes {
                if a.id == b.id || !a.kind.can_link_to(b.kind) {
                    continue;
                }
                let d = a.distance_to(b);
                if d <= self.range {
                    let id = LinkId(self.links.len() as u32);
                    self.links.push(DirectedLink { from: a.id, to: b.id, distance: d });
                    self.out_links[a.id.index()].push(id);
                    self.in_links[b.id.index()].push(id);
                }
            }
        }
    }

    /// Returns a copy whose link set is recomputed from the node positions.
    pub fn rebuild_links(&self) -> Topology {
        Self::with_nodes(self.nodes.clone(), self.range)
    }

    /// Repositions every VR user uniformly in the VR box; BS and RIS nodes keep
    /// their positions bit for bit.
    pub fn move_users(&self, seed: u64) -> Topology {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::VrUser => {
                    let (x, y) = sample_in(&mut rng, VR_BOX);
                    Node { x, y, ..*n }
                }
                _ => *n,
            })
            .collect();
        Self::with_nodes(nodes, self.range)
    }

    /// Returns a copy with one node moved. Used to build test scenarios.
    pub fn with_node_position(&self, id: NodeId, x: f64, y: f64) -> Topology {
        let mut nodes = self.nodes.clone();
        nodes[id.index()].x = x;
        nodes[id.index()].y = y;
        Self::with_nodes(nodes, self.range)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn links(&self) -> &[DirectedLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &DirectedLink {
        &self.links[id.index()]
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn out_links(&self, id: NodeId) -> &[LinkId] {
        &self.out_links[id.index()]
    }

    pub fn in_links(&self, id: NodeId) -> &[LinkId] {
        &self.in_links[id.index()]
    }

    /// Link from `from` to `to`, if one exists.
    pub fn find_link(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.out_links(from).iter().copied().find(|&l| self.link(l).to == to)
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.node(a).distance_to(self.node(b))
    }

    pub fn ids_of(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id)
    }

    pub fn base_stations(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids_of(NodeKind::BaseStation)
    }

    pub fn ris_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids_of(NodeKind::Ris)
    }

    pub fn vr_users(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids_of(NodeKind::VrUser)
    }

    /// Canonical text form: one `id,kind,x,y` line per node followed by one
    /// `from,to,distance` line per link, all reals with 6 decimals.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let _ = writeln!(out, "{},{},{:.6},{:.6}", n.id, n.kind.as_str(), n.x, n.y);
        }
        for l in &self.links {
            let _ = writeln!(out, "{},{},{:.6}", l.from, l.to, l.distance);
        }
        out
    }

    /// Human label such as `ris3` (1-based within the role).
    pub fn label(&self, id: NodeId) -> String {
        let kind = self.node(id).kind;
        let rank = self.nodes[..id.index()].iter().filter(|n| n.kind == kind).count() + 1;
        format!("{}{}", kind.as_str(), rank)
    }
}

fn sample_in<R: Rng>(rng: &mut R, bounds: (f64, f64)) -> (f64, f64) {
    let x = rng.gen_range(bounds.0..=bounds.1);
    let y = rng.gen_range(bounds.0..=bounds.1);
    (x, y)
}

/// Samples a topology with positions uniform in the role boxes. BSs get the
/// lowest ids, then RISs, then VR users.
pub fn sample_topology(counts: NodeCounts, range: f64, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roles = [
        (NodeKind::BaseStation, counts.bs, BS_BOX),
        (NodeKind::Ris, counts.ris, RIS_BOX),
        (NodeKind::VrUser, counts.vr, VR_BOX),
    ];
    let mut positions = Vec::with_capacity(counts.bs + counts.ris + counts.vr);
    for (kind, count, bounds) in roles {
        for _ in 0..count {
            let (x, y) = sample_in(&mut rng, bounds);
            positions.push((kind, x, y));
        }
    }
    Topology::from_positions(positions, range)
}
