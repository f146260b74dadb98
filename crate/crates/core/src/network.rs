//! Radial feeder networks: segments, nodes, validation and the sample grid.
//!
//! Every segment points away from the root, so the junction sums
//! `s_up = sum(s_down)`, `w_up = sum(w_down)` always use the same signs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A feeder section with constant per-unit conductance `g` and susceptance `b`
/// per km.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub length: f64,
    pub conductance: f64,
    pub susceptance: f64,
    pub upstream: String,
    pub downstream: String,
}

impl Segment {
    pub fn new(
        id: impl Into<String>,
        length: f64,
        conductance: f64,
        susceptance: f64,
        upstream: impl Into<String>,
        downstream: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            length,
            conductance,
            susceptance,
            upstream: upstream.into(),
            downstream: downstream.into(),
        }
    }

    /// `G^2 + B^2`.
    pub fn admittance_sq(&self) -> f64 {
        self.conductance * self.conductance + self.susceptance * self.susceptance
    }

    /// Coefficients `(G/Y^2, B/Y^2)` with `Y^2 = G^2 + B^2`.
    pub(crate) fn coefficients(&self) -> (f64, f64) {
        let y2 = self.admittance_sq();
        (self.conductance / y2, self.susceptance / y2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// Substation bank: `theta = 0`, `v = 1`.
    Root,
    /// Bifurcation: one upstream segment, two or more downstream.
    Junction,
    /// Step voltage regulator between exactly two segments with
    /// `v(xi+) = n v(xi-)` and `w(xi-) = n w(xi+)`.
    Svr { turn_ratio: f64 },
    /// Unloaded open end: `s = w = 0`.
    Leaf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Self { id: id.into(), kind }
    }
}

/// A violated structural or parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveLength(String),
    ZeroAdmittance(String),
    NonFiniteParameter(String),
    DuplicateSegmentId(String),
    DuplicateNodeId(String),
    UnknownNode { segment: String, node: String },
    NoRoot,
    MultipleRoots,
    RootHasUpstream(String),
    RootWithoutDownstream(String),
    JunctionUpstream { node: String, count: usize },
    JunctionBranching { node: String, count: usize },
    SvrDegree { node: String, upstream: usize, downstream: usize },
    NonPositiveTurnRatio(String),
    LeafUpstream { node: String, count: usize },
    LeafHasDownstream(String),
    Unreachable(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NonPositiveLength(id) => write!(f, "segment `{id}` has non-positive length"),
            ZeroAdmittance(id) => write!(f, "segment `{id}` has G^2 + B^2 = 0"),
            NonFiniteParameter(id) => write!(f, "`{id}` has a non-finite parameter"),
            DuplicateSegmentId(id) => write!(f, "duplicate segment id `{id}`"),
            DuplicateNodeId(id) => write!(f, "duplicate node id `{id}`"),
            UnknownNode { segment, node } => {
                write!(f, "segment `{segment}` references unknown node `{node}`")
            }
            NoRoot => f.write_str("network has no root node"),
            MultipleRoots => f.write_str("network has more than one root node"),
            RootHasUpstream(id) => write!(f, "root `{id}` has an upstream segment"),
            RootWithoutDownstream(id) => write!(f, "root `{id}` feeds no segment"),
            JunctionUpstream { node, count } => {
                write!(f, "junction `{node}` has {count} upstream segments (need 1)")
            }
            JunctionBranching { node, count } => {
                write!(f, "junction `{node}` has {count} downstream segments (need >= 2)")
            }
            SvrDegree { node, upstream, downstream } => {
                write!(f, "regulator `{node}` has {upstream} upstream / {downstream} downstream segments (need 1/1)")
            }
            NonPositiveTurnRatio(id) => write!(f, "regulator `{id}` has non-positive turn ratio"),
            LeafUpstream { node, count } => {
                write!(f, "leaf `{node}` has {count} upstream segments (need 1)")
            }
            LeafHasDownstream(id) => write!(f, "leaf `{id}` has downstream segments"),
            Unreachable(id) => write!(f, "`{id}` is not reachable from the root"),
        }
    }
}

/// A rooted tree of feeder segments. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeederNetwork {
    pub segments: Vec<Segment>,
    pub nodes: Vec<Node>,
}

impl FeederNetwork {
    pub fn new(segments: Vec<Segment>, nodes: Vec<Node>) -> Self {
        Self { segments, nodes }
    }

    /// Root, one segment, leaf.
    pub fn single(id: &str, length: f64, conductance: f64, susceptance: f64) -> Self {
        Self::new(
            vec![Segment::new(id, length, conductance, susceptance, "root", "end")],
            vec![Node::new("root", NodeKind::Root), Node::new("end", NodeKind::Leaf)],
        )
    }

    pub fn segment_index(&self, id: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.id == id)
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Every violated invariant; empty iff the network is a well-formed rooted
    /// tree with valid parameters.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let mut seg_ids = BTreeMap::new();
        for seg in &self.segments {
            if seg_ids.insert(seg.id.as_str(), ()).is_some() {
                out.push(Violation::DuplicateSegmentId(seg.id.clone()));
            }
            let finite = seg.length.is_finite() && seg.conductance.is_finite() && seg.susceptance.is_finite();
            if !finite {
                out.push(Violation::NonFiniteParameter(seg.id.clone()));
            } else {
                if seg.length <= 0.0 {
                    out.push(Violation::NonPositiveLength(seg.id.clone()));
                }
                if seg.admittance_sq() <= 0.0 {
                    out.push(Violation::ZeroAdmittance(seg.id.clone()));
                }
            }
        }

        let mut node_index = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node_index.insert(node.id.as_str(), i).is_some() {
                out.push(Violation::DuplicateNodeId(node.id.clone()));
            }
        }

        let mut up = vec![0usize; self.nodes.len()];
        let mut down: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        let mut edges_ok = true;
        for (si, seg) in self.segments.iter().enumerate() {
            for id in [&seg.upstream, &seg.downstream] {
                if !node_index.contains_key(id.as_str()) {
                    edges_ok = false;
                    out.push(Violation::UnknownNode { segment: seg.id.clone(), node: id.clone() });
                }
            }
            if let (Some(&u), Some(&d)) =
                (node_index.get(seg.upstream.as_str()), node_index.get(seg.downstream.as_str()))
            {
                down[u].push(si);
                up[d] += 1;
            }
        }

        let roots: Vec<usize> =
            self.nodes.iter().enumerate().filter(|(_, n)| n.kind == NodeKind::Root).map(|(i, _)| i).collect();
        match roots.len() {
            0 => out.push(Violation::NoRoot),
            1 => {}
            _ => out.push(Violation::MultipleRoots),
        }

        for (i, node) in self.nodes.iter().enumerate() {
            let (u, d) = (up[i], down[i].len());
            match node.kind {
                NodeKind::Root => {
                    if u > 0 {
                        out.push(Violation::RootHasUpstream(node.id.clone()));
                    }
                    if d == 0 {
                        out.push(Violation::RootWithoutDownstream(node.id.clone()));
                    }
                }
                NodeKind::Junction => {
                    if u != 1 {
                        out.push(Violation::JunctionUpstream { node: node.id.clone(), count: u });
                    }
                    if d < 2 {
                        out.push(Violation::JunctionBranching { node: node.id.clone(), count: d });
                    }
                }
                NodeKind::Svr { turn_ratio } => {
                    if u != 1 || d != 1 {
                        out.push(Violation::SvrDegree { node: node.id.clone(), upstream: u, downstream: d });
                    }
                    if !turn_ratio.is_finite() {
                        out.push(Violation::NonFiniteParameter(node.id.clone()));
                    } else if turn_ratio <= 0.0 {
                        out.push(Violation::NonPositiveTurnRatio(node.id.clone()));
                    }
                }
                NodeKind::Leaf => {
                    if u != 1 {
                        out.push(Violation::LeafUpstream { node: node.id.clone(), count: u });
                    }
                    if d > 0 {
                        out.push(Violation::LeafHasDownstream(node.id.clone()));
                    }
                }
            }
        }

        if roots.len() == 1 && edges_ok {
            let mut seen = vec![false; self.nodes.len()];
            let mut stack = vec![roots[0]];
            seen[roots[0]] = true;
            while let Some(n) = stack.pop() {
                for &si in &down[n] {
                    let d = node_index[self.segments[si].downstream.as_str()];
                    if !seen[d] {
                        seen[d] = true;
                        stack.push(d);
                    }
                }
            }
            for (i, node) in self.nodes.iter().enumerate() {
                if !seen[i] {
                    out.push(Violation::Unreachable(node.id.clone()));
                }
            }
        }

        out
    }

    /// Index structure for traversal; fails with every violation if the network
    /// is not valid.
    pub fn topology(&self) -> Result<Topology> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        Ok(Topology::build(self))
    }
}

/// What sits at one end of a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndKind {
    Root,
    Junction,
    Svr(f64),
    Leaf,
}

/// Traversal indices of a validated network.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    preorder: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    start: Vec<EndKind>,
    end: Vec<EndKind>,
    start_km: Vec<f64>,
}

impl Topology {
    fn build(net: &FeederNetwork) -> Self {
        let n = net.segments.len();
        let node_of = |id: &str| net.nodes.iter().find(|nd| nd.id == id).map(|nd| nd.kind);
        let kind = |k: NodeKind| match k {
            NodeKind::Root => EndKind::Root,
            NodeKind::Junction => EndKind::Junction,
            NodeKind::Svr { turn_ratio } => EndKind::Svr(turn_ratio),
            NodeKind::Leaf => EndKind::Leaf,
        };

        let mut start = Vec::with_capacity(n);
        let mut end = Vec::with_capacity(n);
        for seg in &net.segments {
            start.push(kind(node_of(&seg.upstream).expect("validated")));
            end.push(kind(node_of(&seg.downstream).expect("validated")));
        }

        let mut children = vec![Vec::new(); n];
        let mut parent = vec![None; n];
        for (i, seg) in net.segments.iter().enumerate() {
            for (j, other) in net.segments.iter().enumerate() {
                if other.upstream == seg.downstream {
                    children[i].push(j);
                    parent[j] = Some(i);
                }
            }
        }

        let mut preorder = Vec::with_capacity(n);
        let mut start_km = vec![0.0; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| start[i] == EndKind::Root).rev().collect();
        while let Some(i) = stack.pop() {
            preorder.push(i);
            for &c in children[i].iter().rev() {
                start_km[c] = start_km[i] + net.segments[i].length;
                stack.push(c);
            }
        }

        Self { preorder, parent, children, start, end, start_km }
    }

    /// Segments ordered so that every parent precedes its children.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Children after parents reversed: leaves first.
    pub fn postorder(&self) -> impl Iterator<Item = usize> + '_ {
        self.preorder.iter().rev().copied()
    }

    pub fn parent(&self, segment: usize) -> Option<usize> {
        self.parent[segment]
    }

    pub fn children(&self, segment: usize) -> &[usize] {
        &self.children[segment]
    }

    pub fn start(&self, segment: usize) -> EndKind {
        self.start[segment]
    }

    pub fn end(&self, segment: usize) -> EndKind {
        self.end[segment]
    }

    /// Arclength from the root to the upstream end of `segment`.
    pub fn start_km(&self, segment: usize) -> f64 {
        self.start_km[segment]
    }

    pub fn num_segments(&self) -> usize {
        self.preorder.len()
    }
}

/// Uniform samples along one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGrid {
    start_km: f64,
    length: f64,
    h: f64,
    x: Vec<f64>,
}

impl SegmentGrid {
    pub fn new(start_km: f64, length: f64, intervals: usize) -> Self {
        let x =
            (0..=intervals)
                .map(|k| {
                    if k == intervals {
                        start_km + length
                    } else {
                        start_km + length * (k as f64) / (intervals as f64)
                    }
                })
                .collect();
        Self { start_km, length, h: length / intervals as f64, x }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start_km(&self) -> f64 {
        self.start_km
    }

    /// Arclength from the root of every sample.
    pub fn abscissae(&self) -> &[f64] {
        &self.x
    }

    /// Segment-local coordinate of sample `k`.
    pub fn local(&self, k: usize) -> f64 {
        let n = self.x.len() - 1;
        if k == n {
            self.length
        } else {
            self.length * (k as f64) / (n as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grid {
    segments: Vec<SegmentGrid>,
}

impl Grid {
    pub fn from_segments(segments: Vec<SegmentGrid>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[SegmentGrid] {
        &self.segments
    }

    pub fn segment(&self, i: usize) -> &SegmentGrid {
        &self.segments[i]
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn num_samples(&self) -> usize {
        self.segments.iter().map(SegmentGrid::len).sum()
    }

    pub fn matches(&self, network: &FeederNetwork) -> bool {
        self.segments.len() == network.segments.len()
            && self.segments.iter().zip(&network.segments).all(|(g, s)| g.length == s.length && g.len() >= 3)
    }
}

/// Uniform per-segment grid with spacing at most `target_h`; both segment ends
/// are samples.
pub fn discretize(network: &FeederNetwork, target_h: f64) -> Result<Grid> {
    let topo = network.topology()?;
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {target_h}")));
    }
    let mut segments = Vec::with_capacity(network.segments.len());
    for (i, seg) in network.segments.iter().enumerate() {
        if target_h >= seg.length / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "grid spacing {target_h} km leaves fewer than 3 samples on segment `{}` ({} km)",
                seg.id, seg.length
            )));
        }
        // Shave a relative 1e-12 so an exact divisor is not bumped by rounding.
        let intervals = libm::ceil(seg.length / target_h * (1.0 - 1e-12)) as usize;
        segments.push(SegmentGrid::new(topo.start_km(i), seg.length, intervals.max(2)));
    }
    Ok(Grid { segments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> FeederNetwork {
        FeederNetwork::single("A", 5.0, 3.881, 6.856)
    }

    fn branched() -> FeederNetwork {
        FeederNetwork::new(
            vec![
                Segment::new("A", 1.0, 2.329, 4.113, "bank", "T"),
                Segment::new("B", 0.8, 2.329, 4.113, "T", "b"),
                Segment::new("C", 0.72, 2.329, 4.113, "T", "c"),
            ],
            vec![
                Node::new("bank", NodeKind::Root),
                Node::new("T", NodeKind::Junction),
                Node::new("b", NodeKind::Leaf),
                Node::new("c", NodeKind::Leaf),
            ],
        )
    }

    #[test]
    fn simple_feeder_is_valid() {
        assert!(simple().validate().is_empty());
        assert!(branched().validate().is_empty());
    }

    #[test]
    fn zero_length_reported() {
        let mut net = simple();
        net.segments[0].length = 0.0;
        assert_eq!(net.validate(), vec![Violation::NonPositiveLength("A".into())]);
    }

    #[test]
    fn two_roots_reported() {
        let mut net = simple();
        net.nodes[1].kind = NodeKind::Root;
        let v = net.validate();
        assert!(v.contains(&Violation::MultipleRoots), "{v:?}");
    }

    #[test]
    fn zero_admittance_and_bad_turn_ratio() {
        let mut net = simple();
        net.segments[0].conductance = 0.0;
        net.segments[0].susceptance = 0.0;
        assert_eq!(net.validate(), vec![Violation::ZeroAdmittance("A".into())]);

        let net = FeederNetwork::new(
            vec![Segment::new("A", 1.0, 1.0, 1.0, "r", "t"), Segment::new("B", 1.0, 1.0, 1.0, "t", "l")],
            vec![
                Node::new("r", NodeKind::Root),
                Node::new("t", NodeKind::Svr { turn_ratio: 0.0 }),
                Node::new("l", NodeKind::Leaf),
            ],
        );
        assert_eq!(net.validate(), vec![Violation::NonPositiveTurnRatio("t".into())]);
    }

    #[test]
    fn junction_with_one_branch_and_dangling_node() {
        let mut net = branched();
        net.segments.pop();
        net.nodes.push(Node::new("island", NodeKind::Leaf));
        let v = net.validate();
        assert!(v.contains(&Violation::JunctionBranching { node: "T".into(), count: 1 }));
        assert!(v.contains(&Violation::LeafUpstream { node: "c".into(), count: 0 }));
        assert!(v.contains(&Violation::Unreachable("island".into())));
    }

    #[test]
    fn unknown_node_and_cycle() {
        let mut net = simple();
        net.segments[0].downstream = "nowhere".into();
        let v = net.validate();
        assert!(v.contains(&Violation::UnknownNode { segment: "A".into(), node: "nowhere".into() }));

        // Two junctions feeding each other, detached from the root.
        let mut net = simple();
        net.nodes.push(Node::new("j1", NodeKind::Svr { turn_ratio: 1.0 }));
        net.nodes.push(Node::new("j2", NodeKind::Svr { turn_ratio: 1.0 }));
        net.segments.push(Segment::new("x", 1.0, 1.0, 1.0, "j1", "j2"));
        net.segments.push(Segment::new("y", 1.0, 1.0, 1.0, "j2", "j1"));
        let v = net.validate();
        assert!(v.contains(&Violation::Unreachable("j1".into())));
        assert!(v.contains(&Violation::Unreachable("j2".into())));
    }

    #[test]
    fn tree_property_holds_for_valid_networks() {
        for net in [simple(), branched()] {
            assert_eq!(net.segments.len(), net.nodes.len() - 1);
        }
    }

    #[test]
    fn topology_orders_and_offsets() {
        let net = branched();
        let topo = net.topology().unwrap();
        assert_eq!(topo.preorder(), &[0, 1, 2]);
        assert_eq!(topo.children(0), &[1, 2]);
        assert_eq!(topo.parent(2), Some(0));
        assert_eq!(topo.start_km(1), 1.0);
        assert_eq!(topo.end(0), EndKind::Junction);
        assert_eq!(topo.end(2), EndKind::Leaf);
        assert_eq!(topo.postorder().collect::<Vec<_>>(), vec![2, 1, 0]);
    }

    #[test]
    fn discretize_examples() {
        let g = discretize(&simple(), 0.01).unwrap();
        assert_eq!(g.segment(0).len(), 501);
        assert!((g.segment(0).h() - 0.01).abs() < 1e-15);

        let g = discretize(&FeederNetwork::single("A", 1.0, 1.0, 1.0), 0.3).unwrap();
        assert_eq!(g.segment(0).len(), 5);
        assert_eq!(g.segment(0).h(), 0.25);

        assert!(matches!(discretize(&simple(), 3.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(discretize(&simple(), 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn discretize_is_idempotent_and_ends_exact() {
        let net = branched();
        let g = discretize(&net, 0.013).unwrap();
        for (seg, sg) in net.segments.iter().zip(g.segments()) {
            assert!(sg.h() <= 0.013);
            let last = *sg.abscissae().last().unwrap();
            assert_eq!(last, sg.start_km() + seg.length);
            assert_eq!(sg.abscissae()[0], sg.start_km());
        }
        let h = g.segment(0).h();
        let single = FeederNetwork::single("A", 1.0, 2.329, 4.113);
        let g1 = discretize(&single, h).unwrap();
        let g2 = discretize(&single, g1.segment(0).h()).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn discretize_rejects_invalid_network() {
        let mut net = simple();
        net.nodes.clear();
        assert!(matches!(discretize(&net, 0.1), Err(Error::InvalidNetwork(_))));
    }
}
