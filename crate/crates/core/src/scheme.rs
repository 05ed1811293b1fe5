//! Workloads and tree indexing schemes.
//!
//! An [`IndexScheme`] is a rooted tree whose leaves carry blocks of dataset
//! indices and whose inner nodes carry decision functions choosing which
//! children a query descends into. [`IndexScheme::answer`] runs the
//! level-by-level traversal: every chosen inner node expands, every reached
//! leaf block is scanned point by point with the exact membership test.
//!
//! Certification-function trees are the main way to obtain consistent schemes:
//! each non-root node `s` carries a function `f_s` that is at most zero on its
//! own block and left 1-Lipschitz (`f(x) - f(y) <= rho(x, y)`), and the
//! decision at `t` keeps the children with `f_s(center) <= radius`. Such a
//! scheme never loses a true answer, under a quasi-metric as well as a metric.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distance::Distance;

pub type NodeId = usize;

/// A decision function `F_t`: maps a query to a subset of the children of `t`.
pub type DecisionFn<Q> = Arc<dyn Fn(&Q) -> Vec<NodeId> + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("decision at node {node} returned {child}, which is not one of its children")]
    CorruptDecision { node: NodeId, child: NodeId },
    #[error("block at node {node} references point {index}, dataset has {len}")]
    BlockOutOfRange { node: NodeId, index: usize, len: usize },
    #[error("malformed tree: {0}")]
    Structure(String),
    #[error("dataset point {point} is in no leaf block")]
    Uncovered { point: usize },
    #[error("point {point} of node {node} is not in the parent block")]
    ChildEscapes { node: NodeId, point: usize },
    #[error("node {node} has no certification function")]
    MissingCertification { node: NodeId },
    #[error("certification of node {node} is {value} > 0 at its own point {point}")]
    CertificationPositive { node: NodeId, point: usize, value: f64 },
    #[error("certification of node {node} is not left 1-Lipschitz: f({x}) - f({y}) = {gap} > rho = {bound}")]
    Lipschitz { node: NodeId, x: usize, y: usize, gap: f64, bound: f64 },
    #[error("{family} certification requires a symmetric distance")]
    FamilyMismatch { family: CertFamily },
    #[error("invalid query radius {0}")]
    InvalidRadius(f64),
    #[error("disjoint sum of zero schemes")]
    EmptySum,
    #[error("no probe queries supplied")]
    NoProbes,
}

/// A similarity workload: a finite dataset indexed `0..len` and a query family.
pub trait Workload {
    type Query;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Some(distance)` iff dataset point `index` belongs to `query`.
    fn score(&self, query: &Self::Query, index: usize) -> Option<f64>;
}

impl<W: Workload + ?Sized> Workload for &W {
    type Query = W::Query;
    fn len(&self) -> usize {
        (**self).len()
    }
    fn score(&self, query: &Self::Query, index: usize) -> Option<f64> {
        (**self).score(query, index)
    }
}

/// A closed left ball `{x : rho(center, x) <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeQuery<P> {
    pub center: P,
    pub radius: f64,
}

impl<P> RangeQuery<P> {
    pub fn new(center: P, radius: f64) -> Result<Self, SchemeError> {
        if radius.is_nan() || radius < 0.0 {
            return Err(SchemeError::InvalidRadius(radius));
        }
        Ok(RangeQuery { center, radius })
    }
}

/// Dataset points under a distance oracle, queried by left balls.
#[derive(Debug, Clone)]
pub struct SimilarityWorkload<P, D> {
    pub domain: String,
    pub points: Vec<P>,
    pub dist: D,
}

impl<P, D: Distance<P>> SimilarityWorkload<P, D> {
    pub fn new(domain: impl Into<String>, points: Vec<P>, dist: D) -> Self {
        SimilarityWorkload { domain: domain.into(), points, dist }
    }
}

impl<P, D: Distance<P>> Workload for SimilarityWorkload<P, D> {
    type Query = RangeQuery<P>;

    fn len(&self) -> usize {
        self.points.len()
    }

    fn score(&self, query: &RangeQuery<P>, index: usize) -> Option<f64> {
        let d = self.dist.distance(&query.center, &self.points[index]);
        (d <= query.radius).then_some(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match<D = f64> {
    pub index: usize,
    pub distance: D,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub decision_evaluations: u64,
    pub leaves_opened: u64,
    pub points_scanned: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.nodes_visited += other.nodes_visited;
        self.decision_evaluations += other.decision_evaluations;
        self.leaves_opened += other.leaves_opened;
        self.points_scanned += other.points_scanned;
    }
}

/// Matched points ordered by `(distance, index)`, plus traversal counters.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<D = f64> {
    pub matches: Vec<Match<D>>,
    pub stats: SearchStats,
}

impl<D> SearchResult<D> {
    pub fn indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.matches.iter().map(|m| m.index).collect();
        v.sort_unstable();
        v
    }
}

pub(crate) fn sort_matches(matches: &mut [Match<f64>]) {
    matches.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
}

/// Anything that answers queries of type `Q` over some dataset.
pub trait AccessMethod<Q> {
    fn answer(&self, query: &Q) -> Result<SearchResult, SchemeError>;
}

/// Scans every dataset point.
pub struct LinearScan<'a, W>(pub &'a W);

impl<W: Workload> AccessMethod<W::Query> for LinearScan<'_, W> {
    fn answer(&self, query: &W::Query) -> Result<SearchResult, SchemeError> {
        let mut matches: Vec<Match> = (0..self.0.len())
            .filter_map(|index| self.0.score(query, index).map(|distance| Match { index, distance }))
            .collect();
        sort_matches(&mut matches);
        let n = self.0.len() as u64;
        Ok(SearchResult {
            matches,
            stats: SearchStats { nodes_visited: 2, decision_evaluations: 1, leaves_opened: 1, points_scanned: n },
        })
    }
}

/// A scheme paired with the workload it indexes.
pub struct SchemeAccess<'a, Q, W> {
    pub scheme: &'a IndexScheme<Q>,
    pub workload: &'a W,
}

impl<Q, W: Workload<Query = Q>> AccessMethod<Q> for SchemeAccess<'_, Q, W> {
    fn answer(&self, query: &Q) -> Result<SearchResult, SchemeError> {
        self.scheme.answer(self.workload, query)
    }
}

enum NodeKind<Q> {
    Inner(DecisionFn<Q>),
    Leaf(Vec<usize>),
}

impl<Q> Clone for NodeKind<Q> {
    fn clone(&self) -> Self {
        match self {
            NodeKind::Inner(f) => NodeKind::Inner(Arc::clone(f)),
            NodeKind::Leaf(b) => NodeKind::Leaf(b.clone()),
        }
    }
}

struct Node<Q> {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    kind: NodeKind<Q>,
}

impl<Q> Clone for Node<Q> {
    fn clone(&self) -> Self {
        Node { parent: self.parent, children: self.children.clone(), kind: self.kind.clone() }
    }
}

/// The triple (tree, leaf blocks, decision functions). Immutable once built.
pub struct IndexScheme<Q> {
    nodes: Vec<Node<Q>>,
}

impl<Q> Clone for IndexScheme<Q> {
    fn clone(&self) -> Self {
        IndexScheme { nodes: self.nodes.clone() }
    }
}

impl<Q> fmt::Debug for IndexScheme<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexScheme")
            .field("nodes", &self.nodes.len())
            .field("leaves", &self.leaves().count())
            .finish()
    }
}

/// Incremental construction of an [`IndexScheme`]; node 0 is the root.
pub struct SchemeBuilder<Q> {
    parents: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    kinds: Vec<Option<NodeKind<Q>>>,
    leaf: Vec<bool>,
}

impl<Q> Default for SchemeBuilder<Q> {
    fn default() -> Self {
        Self::new()
    }
}

impl<Q> SchemeBuilder<Q> {
    pub fn new() -> Self {
        SchemeBuilder { parents: vec![None], children: vec![Vec::new()], kinds: vec![None], leaf: vec![false] }
    }

    pub const ROOT: NodeId = 0;

    fn push(&mut self, parent: NodeId, kind: Option<NodeKind<Q>>, leaf: bool) -> NodeId {
        let id = self.parents.len();
        self.parents.push(Some(parent));
        self.children.push(Vec::new());
        self.kinds.push(kind);
        self.leaf.push(leaf);
        self.children[parent].push(id);
        id
    }

    pub fn add_inner(&mut self, parent: NodeId) -> NodeId {
        self.push(parent, None, false)
    }

    pub fn add_leaf(&mut self, parent: NodeId, members: Vec<usize>) -> NodeId {
        self.push(parent, Some(NodeKind::Leaf(members)), true)
    }

    pub fn set_decision(&mut self, node: NodeId, decision: DecisionFn<Q>) {
        assert!(!self.leaf[node], "leaf {node} cannot carry a decision function");
        self.kinds[node] = Some(NodeKind::Inner(decision));
    }

    pub fn build(self) -> Result<IndexScheme<Q>, SchemeError> {
        let mut nodes = Vec::with_capacity(self.parents.len());
        for (id, ((parent, children), kind)) in self.parents.into_iter().zip(self.children).zip(self.kinds).enumerate() {
            let kind = kind.ok_or_else(|| SchemeError::Structure(format!("inner node {id} has no decision function")))?;
            match &kind {
                NodeKind::Leaf(_) if !children.is_empty() => {
                    return Err(SchemeError::Structure(format!("leaf {id} has children")));
                }
                NodeKind::Inner(_) if children.is_empty() => {
                    return Err(SchemeError::Structure(format!("inner node {id} has no children")));
                }
                _ => {}
            }
            nodes.push(Node { parent, children, kind });
        }
        Ok(IndexScheme { nodes })
    }
}

impl<Q> IndexScheme<Q> {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node].parent
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.nodes[node].children
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        matches!(self.nodes[node].kind, NodeKind::Leaf(_))
    }

    /// The block of a leaf; `None` for inner nodes.
    pub fn block(&self, node: NodeId) -> Option<&[usize]> {
        match &self.nodes[node].kind {
            NodeKind::Leaf(b) => Some(b),
            NodeKind::Inner(_) => None,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&t| self.is_leaf(t))
    }

    /// Evaluates `F_t(query)` for an inner node.
    pub fn decide(&self, node: NodeId, query: &Q) -> Option<Vec<NodeId>> {
        match &self.nodes[node].kind {
            NodeKind::Inner(f) => Some(f(query)),
            NodeKind::Leaf(_) => None,
        }
    }

    /// Root-to-node path.
    pub fn path_to(&self, node: NodeId) -> Vec<NodeId> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Checks that every index in `0..len` sits in at least one leaf block and
    /// that no block points outside the dataset.
    pub fn check_covering(&self, len: usize) -> Result<(), SchemeError> {
        let mut covered = vec![false; len];
        for t in self.leaves() {
            for &x in self.block(t).expect("leaf") {
                if x >= len {
                    return Err(SchemeError::BlockOutOfRange { node: t, index: x, len });
                }
                covered[x] = true;
            }
        }
        match covered.iter().position(|c| !c) {
            Some(point) => Err(SchemeError::Uncovered { point }),
            None => Ok(()),
        }
    }

    /// Level-by-level traversal: expand inner nodes through their decision
    /// functions, scan leaf blocks with the exact membership test. A point
    /// reachable through several blocks is scanned once.
    pub fn answer<W: Workload<Query = Q> + ?Sized>(&self, workload: &W, query: &Q) -> Result<SearchResult, SchemeError> {
        let n = workload.len();
        let mut stats = SearchStats::default();
        let mut scanned = vec![false; n];
        let mut reached = vec![false; self.nodes.len()];
        let mut matches = Vec::new();
        let mut level = vec![self.root()];
        reached[self.root()] = true;
        while !level.is_empty() {
            let mut next = Vec::new();
            for &t in &level {
                stats.nodes_visited += 1;
                match &self.nodes[t].kind {
                    NodeKind::Inner(decide) => {
                        stats.decision_evaluations += 1;
                        for child in decide(query) {
                            if self.nodes.get(child).and_then(|c| c.parent) != Some(t) {
                                return Err(SchemeError::CorruptDecision { node: t, child });
                            }
                            if !reached[child] {
                                reached[child] = true;
                                next.push(child);
                            }
                        }
                    }
                    NodeKind::Leaf(block) => {
                        stats.leaves_opened += 1;
                        for &x in block {
                            if x >= n {
                                return Err(SchemeError::BlockOutOfRange { node: t, index: x, len: n });
                            }
                            if std::mem::replace(&mut scanned[x], true) {
                                continue;
                            }
                            stats.points_scanned += 1;
                            if let Some(distance) = workload.score(query, x) {
                                matches.push(Match { index: x, distance });
                            }
                        }
                    }
                }
            }
            level = next;
        }
        sort_matches(&mut matches);
        Ok(SearchResult { matches, stats })
    }

    /// Rebuilds the scheme over another query type: `F'_t(Q) = F_t(map(Q))`,
    /// blocks rewritten by `blocks`.
    pub fn pull_back<Q2: 'static>(
        &self,
        query_map: Arc<dyn Fn(&Q2) -> Q + Send + Sync>,
        mut blocks: impl FnMut(&[usize]) -> Vec<usize>,
    ) -> IndexScheme<Q2>
    where
        Q: 'static,
    {
        let nodes = self
            .nodes
            .iter()
            .map(|node| {
                let kind = match &node.kind {
                    NodeKind::Inner(f) => {
                        let f = Arc::clone(f);
                        let map = Arc::clone(&query_map);
                        NodeKind::Inner(Arc::new(move |q: &Q2| f(&map(q))) as DecisionFn<Q2>)
                    }
                    NodeKind::Leaf(b) => NodeKind::Leaf(blocks(b)),
                };
                Node { parent: node.parent, children: node.children.clone(), kind }
            })
            .collect();
        IndexScheme { nodes }
    }
}

/// The two-node scheme whose only block is the whole dataset.
pub fn linear_scan<Q>(len: usize) -> IndexScheme<Q> {
    let mut b = SchemeBuilder::new();
    let leaf = b.add_leaf(SchemeBuilder::<Q>::ROOT, (0..len).collect());
    b.set_decision(SchemeBuilder::<Q>::ROOT, Arc::new(move |_: &Q| vec![leaf]));
    b.build().expect("linear scan is well formed")
}

/// Outcome of comparing a scheme against a linear scan on probe queries.
#[derive(Debug, Clone, PartialEq)]
pub enum Consistency {
    Consistent { probes: usize },
    Inconsistent(MissWitness),
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent { .. })
    }
}

/// A true answer the scheme lost, and where along its path it was pruned.
#[derive(Debug, Clone, PartialEq)]
pub struct MissWitness {
    pub probe: usize,
    pub missed: usize,
    /// First leaf whose block holds the missed point (`None`: uncovered).
    pub leaf: Option<NodeId>,
    /// Root-to-leaf path of that leaf.
    pub path: Vec<NodeId>,
    /// The node whose decision dropped the next node on `path`.
    pub pruning_node: Option<NodeId>,
}

/// Runs every probe through the scheme and through a linear scan and reports
/// the first lost answer.
pub fn check_consistency<Q, W: Workload<Query = Q> + ?Sized>(
    scheme: &IndexScheme<Q>,
    workload: &W,
    probes: &[Q],
) -> Result<Consistency, SchemeError> {
    if probes.is_empty() {
        return Err(SchemeError::NoProbes);
    }
    for (p, query) in probes.iter().enumerate() {
        let got = scheme.answer(workload, query)?.indices();
        let expected: Vec<usize> = (0..workload.len()).filter(|&x| workload.score(query, x).is_some()).collect();
        let Some(&missed) = expected.iter().find(|x| got.binary_search(x).is_err()) else {
            continue;
        };
        let leaf = scheme.leaves().find(|&t| scheme.block(t).is_some_and(|b| b.contains(&missed)));
        let path = leaf.map(|t| scheme.path_to(t)).unwrap_or_default();
        let pruning_node = path.windows(2).find_map(|w| {
            let chosen = scheme.decide(w[0], query).unwrap_or_default();
            (!chosen.contains(&w[1])).then_some(w[0])
        });
        return Ok(Consistency::Inconsistent(MissWitness { probe: p, missed, leaf, path, pruning_node }));
    }
    Ok(Consistency::Consistent { probes: probes.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertFamily {
    Gnat,
    VantagePair,
    MTree,
    QmMTree,
    Cylinder,
    Custom,
}

impl CertFamily {
    /// Families whose certification is only 1-Lipschitz under a metric.
    pub fn requires_metric(self) -> bool {
        matches!(self, CertFamily::Gnat | CertFamily::VantagePair | CertFamily::MTree)
    }
}

impl fmt::Display for CertFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CertFamily::Gnat => "gnat",
            CertFamily::VantagePair => "vp",
            CertFamily::MTree => "mtree",
            CertFamily::QmMTree => "qm_mtree",
            CertFamily::Cylinder => "cylinder",
            CertFamily::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Which side of a GNAT median split a child holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnatSide {
    /// `rho(x, anchor) <= median`; certification `rho(w, anchor) - median`.
    Inner,
    /// `rho(x, anchor) >= median`; certification `median - rho(w, anchor)`.
    Outer,
}

/// A certification function `f_t`, evaluated against a distance oracle.
pub enum Certification<P> {
    Gnat { anchor: P, median: f64, side: GnatSide },
    /// `(rho(near, w) - rho(far, w)) / 2`.
    VantagePair { near: P, far: P },
    /// `rho(anchor, w) - radius`, radius = `sup rho(anchor, tau)` over the block.
    MTree { anchor: P, radius: f64 },
    /// `rho(w, anchor) - radius`, radius = `sup rho(tau, anchor)` over the block.
    QmMTree { anchor: P, radius: f64 },
    Custom { family: CertFamily, f: Arc<dyn Fn(&P) -> f64 + Send + Sync> },
}

impl<P: Clone> Clone for Certification<P> {
    fn clone(&self) -> Self {
        match self {
            Certification::Gnat { anchor, median, side } => {
                Certification::Gnat { anchor: anchor.clone(), median: *median, side: *side }
            }
            Certification::VantagePair { near, far } => Certification::VantagePair { near: near.clone(), far: far.clone() },
            Certification::MTree { anchor, radius } => Certification::MTree { anchor: anchor.clone(), radius: *radius },
            Certification::QmMTree { anchor, radius } => Certification::QmMTree { anchor: anchor.clone(), radius: *radius },
            Certification::Custom { family, f } => Certification::Custom { family: *family, f: Arc::clone(f) },
        }
    }
}

impl<P> fmt::Debug for Certification<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Certification({})", self.family())
    }
}

impl<P> Certification<P> {
    pub fn gnat<D: Distance<P>>(anchor: P, median: f64, side: GnatSide, dist: &D) -> Result<Self, SchemeError> {
        require_metric(CertFamily::Gnat, dist)?;
        Ok(Certification::Gnat { anchor, median, side })
    }

    pub fn vantage_pair<D: Distance<P>>(near: P, far: P, dist: &D) -> Result<Self, SchemeError> {
        require_metric(CertFamily::VantagePair, dist)?;
        Ok(Certification::VantagePair { near, far })
    }

    pub fn mtree<D: Distance<P>>(anchor: P, radius: f64, dist: &D) -> Result<Self, SchemeError> {
        require_metric(CertFamily::MTree, dist)?;
        Ok(Certification::MTree { anchor, radius })
    }

    /// Accepts any quasi-metric.
    pub fn qm_mtree(anchor: P, radius: f64) -> Self {
        Certification::QmMTree { anchor, radius }
    }

    /// The M-tree radius is computed from the block, on the side matching the
    /// family: `rho(anchor, tau)` for the metric form, `rho(tau, anchor)` for
    /// the quasi-metric form.
    pub fn covering_radius<'a, D: Distance<P>>(anchor: &P, block: impl IntoIterator<Item = &'a P>, dist: &D, left: bool) -> f64
    where
        P: 'a,
    {
        block
            .into_iter()
            .map(|tau| if left { dist.distance(tau, anchor) } else { dist.distance(anchor, tau) })
            .fold(0.0, f64::max)
    }

    pub fn family(&self) -> CertFamily {
        match self {
            Certification::Gnat { .. } => CertFamily::Gnat,
            Certification::VantagePair { .. } => CertFamily::VantagePair,
            Certification::MTree { .. } => CertFamily::MTree,
            Certification::QmMTree { .. } => CertFamily::QmMTree,
            Certification::Custom { family, .. } => *family,
        }
    }

    pub fn evaluate<D: Distance<P> + ?Sized>(&self, omega: &P, dist: &D) -> f64 {
        match self {
            Certification::Gnat { anchor, median, side: GnatSide::Inner } => dist.distance(omega, anchor) - median,
            Certification::Gnat { anchor, median, side: GnatSide::Outer } => median - dist.distance(omega, anchor),
            Certification::VantagePair { near, far } => 0.5 * (dist.distance(near, omega) - dist.distance(far, omega)),
            Certification::MTree { anchor, radius } => dist.distance(anchor, omega) - radius,
            Certification::QmMTree { anchor, radius } => dist.distance(omega, anchor) - radius,
            Certification::Custom { f, .. } => f(omega),
        }
    }
}

fn require_metric<P, D: Distance<P>>(family: CertFamily, dist: &D) -> Result<(), SchemeError> {
    if family.requires_metric() && !dist.is_symmetric() {
        return Err(SchemeError::FamilyMismatch { family });
    }
    Ok(())
}

/// A tree of dataset blocks `B_t ∩ X`; leaves are nodes without children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTree {
    parents: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    members: Vec<Vec<usize>>,
}

impl BlockTree {
    pub fn new(root_members: Vec<usize>) -> Self {
        BlockTree { parents: vec![None], children: vec![Vec::new()], members: vec![root_members] }
    }

    pub fn add_child(&mut self, parent: NodeId, members: Vec<usize>) -> NodeId {
        let id = self.parents.len();
        self.parents.push(Some(parent));
        self.children.push(Vec::new());
        self.members.push(members);
        self.children[parent].push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parents[node]
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    pub fn members(&self, node: NodeId) -> &[usize] {
        &self.members[node]
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.children[node].is_empty()
    }

    pub fn depth(&self) -> usize {
        (0..self.len())
            .map(|mut t| {
                let mut d = 0;
                while let Some(p) = self.parents[t] {
                    t = p;
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }
}

/// One certification per block-tree node (the root's entry is unused).
#[derive(Debug, Clone)]
pub struct CertSpec<P> {
    pub certs: Vec<Option<Certification<P>>>,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Random `(node, x, y)` triples drawn to spot-check left 1-Lipschitz.
    pub lipschitz_samples: usize,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { lipschitz_samples: 10_000, seed: 0x5eed }
    }
}

const LIPSCHITZ_SLACK: f64 = 1e-9;

/// Assembles a certification tree: `F_t(B_eps(w)) = {s in C_t : f_s(w) <= eps}`.
///
/// Verifies both covering conditions exhaustively over the dataset, checks
/// `f_s <= 0` on every member of `B_s`, and spot-checks the left 1-Lipschitz
/// inequality on random dataset pairs.
pub fn build_cert_tree<P, D>(
    points: &[P],
    tree: &BlockTree,
    spec: &CertSpec<P>,
    dist: D,
    options: BuildOptions,
) -> Result<IndexScheme<RangeQuery<P>>, SchemeError>
where
    P: Clone + Send + Sync + 'static,
    D: Distance<P> + Send + Sync + 'static,
{
    let n = points.len();
    if spec.certs.len() != tree.len() {
        return Err(SchemeError::Structure(format!(
            "{} certifications for {} block-tree nodes",
            spec.certs.len(),
            tree.len()
        )));
    }
    let mut covered = vec![false; n];
    for t in 0..tree.len() {
        for &x in tree.members(t) {
            if x >= n {
                return Err(SchemeError::BlockOutOfRange { node: t, index: x, len: n });
            }
            if tree.is_leaf(t) {
                covered[x] = true;
            }
        }
        if let Some(p) = tree.parent(t) {
            let mut parent = tree.members(p).to_vec();
            parent.sort_unstable();
            if let Some(&point) = tree.members(t).iter().find(|x| parent.binary_search(x).is_err()) {
                return Err(SchemeError::ChildEscapes { node: t, point });
            }
        }
    }
    if let Some(point) = covered.iter().position(|c| !c) {
        return Err(SchemeError::Uncovered { point });
    }

    let certified: Vec<NodeId> = (1..tree.len()).collect();
    for &t in &certified {
        let cert = spec.certs[t].as_ref().ok_or(SchemeError::MissingCertification { node: t })?;
        require_metric(cert.family(), &dist)?;
        for &x in tree.members(t) {
            let value = cert.evaluate(&points[x], &dist);
            if value > LIPSCHITZ_SLACK {
                return Err(SchemeError::CertificationPositive { node: t, point: x, value });
            }
        }
    }
    if n > 0 && !certified.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        for _ in 0..options.lipschitz_samples {
            let t = *certified.choose(&mut rng).expect("non-empty");
            let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let cert = spec.certs[t].as_ref().expect("checked");
            let gap = cert.evaluate(&points[x], &dist) - cert.evaluate(&points[y], &dist);
            let bound = dist.distance(&points[x], &points[y]);
            if gap > bound + LIPSCHITZ_SLACK {
                return Err(SchemeError::Lipschitz { node: t, x, y, gap, bound });
            }
        }
    }

    let dist = Arc::new(dist);
    let certs: Arc<Vec<Option<Certification<P>>>> = Arc::new(spec.certs.clone());
    let mut builder = SchemeBuilder::new();
    // Block-tree nodes are created parent-first, so ids line up one to one.
    for t in 1..tree.len() {
        let parent = tree.parent(t).expect("non-root");
        let id = if tree.is_leaf(t) {
            builder.add_leaf(parent, tree.members(t).to_vec())
        } else {
            builder.add_inner(parent)
        };
        debug_assert_eq!(id, t);
    }
    if tree.is_leaf(0) {
        // A lone root block still needs an inner root to hang from.
        return Err(SchemeError::Structure("block tree has no children under the root".into()));
    }
    for t in (0..tree.len()).filter(|&t| !tree.is_leaf(t)) {
        let children = tree.children(t).to_vec();
        let certs = Arc::clone(&certs);
        let dist = Arc::clone(&dist);
        builder.set_decision(
            t,
            Arc::new(move |q: &RangeQuery<P>| {
                children
                    .iter()
                    .copied()
                    .filter(|&s| certs[s].as_ref().expect("checked").evaluate(&q.center, &*dist) <= q.radius)
                    .collect()
            }),
        );
    }
    builder.build()
}

/// Block-tree shape parameters for the generic builders.
#[derive(Debug, Clone, Copy)]
pub struct LayoutOptions {
    pub leaf_capacity: usize,
    pub seed: u64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions { leaf_capacity: 32, seed: 7 }
    }
}

/// Splits `members` into (near, far) halves by a key, keeping both non-empty.
fn median_split(mut keyed: Vec<(f64, usize)>) -> (Vec<usize>, Vec<usize>) {
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let half = keyed.len().div_ceil(2);
    let far = keyed.split_off(half);
    (keyed.into_iter().map(|k| k.1).collect(), far.into_iter().map(|k| k.1).collect())
}

/// M-tree layout: binary splits by the median distance to a random anchor.
/// With `left = true` distances are measured towards the anchor
/// (`rho(tau, anchor)`) and children get quasi-metric M-tree certifications.
pub fn mtree_layout<P: Clone, D: Distance<P>>(
    points: &[P],
    dist: &D,
    options: LayoutOptions,
    left: bool,
) -> Result<(BlockTree, CertSpec<P>), SchemeError> {
    if !left {
        require_metric(CertFamily::MTree, dist)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut tree = BlockTree::new((0..points.len()).collect());
    let mut certs = vec![None];
    let mut anchors = vec![rng.gen_range(0..points.len().max(1))];
    let key = |x: usize, a: usize| if left { dist.distance(&points[x], &points[a]) } else { dist.distance(&points[a], &points[x]) };
    let mut stack = vec![0];
    while let Some(t) = stack.pop() {
        let members = tree.members(t).to_vec();
        if members.len() <= options.leaf_capacity.max(1) {
            continue;
        }
        let anchor = anchors[t];
        let (near, far) = median_split(members.iter().map(|&x| (key(x, anchor), x)).collect());
        for part in [near, far] {
            let a = *part.choose(&mut rng).expect("halves are non-empty");
            let radius = part.iter().map(|&x| key(x, a)).fold(0.0, f64::max);
            let cert = if left {
                Certification::qm_mtree(points[a].clone(), radius)
            } else {
                Certification::MTree { anchor: points[a].clone(), radius }
            };
            let c = tree.add_child(t, part);
            certs.push(Some(cert));
            anchors.push(a);
            stack.push(c);
        }
    }
    Ok((tree, CertSpec { certs }))
}

/// Vantage-pair layout: each split sends points to the closer of two vantage
/// points (a random member and the member farthest from it).
pub fn vp_layout<P: Clone, D: Distance<P>>(
    points: &[P],
    dist: &D,
    options: LayoutOptions,
) -> Result<(BlockTree, CertSpec<P>), SchemeError> {
    require_metric(CertFamily::VantagePair, dist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut tree = BlockTree::new((0..points.len()).collect());
    let mut certs = vec![None];
    let mut stack = vec![0];
    while let Some(t) = stack.pop() {
        let members = tree.members(t).to_vec();
        if members.len() <= options.leaf_capacity.max(1) {
            continue;
        }
        let a = *members.choose(&mut rng).expect("non-empty");
        let b = *members
            .iter()
            .max_by(|&&x, &&y| dist.distance(&points[a], &points[x]).total_cmp(&dist.distance(&points[a], &points[y])))
            .expect("non-empty");
        let (near_a, near_b): (Vec<usize>, Vec<usize>) = members
            .iter()
            .partition(|&&x| dist.distance(&points[a], &points[x]) <= dist.distance(&points[b], &points[x]));
        if near_a.is_empty() || near_b.is_empty() {
            continue;
        }
        for (part, near, far) in [(near_a, a, b), (near_b, b, a)] {
            let c = tree.add_child(t, part);
            certs.push(Some(Certification::VantagePair { near: points[near].clone(), far: points[far].clone() }));
            stack.push(c);
        }
    }
    Ok((tree, CertSpec { certs }))
}

/// GNAT-style layout: split at the median distance from a random anchor; the
/// two children carry `±(rho(w, anchor) - median)`.
pub fn gnat_layout<P: Clone, D: Distance<P>>(
    points: &[P],
    dist: &D,
    options: LayoutOptions,
) -> Result<(BlockTree, CertSpec<P>), SchemeError> {
    require_metric(CertFamily::Gnat, dist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut tree = BlockTree::new((0..points.len()).collect());
    let mut certs = vec![None];
    let mut stack = vec![0];
    while let Some(t) = stack.pop() {
        let members = tree.members(t).to_vec();
        if members.len() <= options.leaf_capacity.max(1) {
            continue;
        }
        let a = *members.choose(&mut rng).expect("non-empty");
        let mut ds: Vec<f64> = members.iter().map(|&x| dist.distance(&points[x], &points[a])).collect();
        ds.sort_by(f64::total_cmp);
        let median = ds[(ds.len() - 1) / 2];
        let (inner, outer): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&x| dist.distance(&points[x], &points[a]) <= median);
        if outer.is_empty() {
            continue;
        }
        for (part, side) in [(inner, GnatSide::Inner), (outer, GnatSide::Outer)] {
            let c = tree.add_child(t, part);
            certs.push(Some(Certification::Gnat { anchor: points[a].clone(), median, side }));
            stack.push(c);
        }
    }
    Ok((tree, CertSpec { certs }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    MTree,
    QmMTree,
    VantagePair,
    Gnat,
}

/// Lays out and assembles one of the named certification trees.
pub fn build_tree<P, D>(
    points: &[P],
    dist: D,
    kind: TreeKind,
    layout: LayoutOptions,
    options: BuildOptions,
) -> Result<IndexScheme<RangeQuery<P>>, SchemeError>
where
    P: Clone + Send + Sync + 'static,
    D: Distance<P> + Send + Sync + 'static,
{
    let (tree, spec) = match kind {
        TreeKind::MTree => mtree_layout(points, &dist, layout, false)?,
        TreeKind::QmMTree => mtree_layout(points, &dist, layout, true)?,
        TreeKind::VantagePair => vp_layout(points, &dist, layout)?,
        TreeKind::Gnat => gnat_layout(points, &dist, layout)?,
    };
    if tree.is_leaf(0) {
        return Ok(linear_scan(points.len()));
    }
    build_cert_tree(points, &tree, &spec, dist, options)
}

/// Hangs each scheme under a new root that forwards every query to all of
/// them. Each part is paired with the size of its dataset; blocks are
/// re-based so part `i` addresses indices after those of parts `0..i`.
pub fn disjoint_sum<Q: 'static>(parts: Vec<(IndexScheme<Q>, usize)>) -> Result<IndexScheme<Q>, SchemeError> {
    if parts.is_empty() {
        return Err(SchemeError::EmptySum);
    }
    let mut nodes: Vec<Node<Q>> = vec![Node { parent: None, children: Vec::new(), kind: NodeKind::Leaf(Vec::new()) }];
    let mut point_base = 0usize;
    let mut roots = Vec::new();
    for (scheme, len) in parts {
        let node_base = nodes.len();
        roots.push(node_base);
        for (i, node) in scheme.nodes.into_iter().enumerate() {
            let parent = match node.parent {
                Some(p) => Some(p + node_base),
                None => {
                    debug_assert_eq!(i, 0);
                    Some(0)
                }
            };
            let children = node.children.iter().map(|c| c + node_base).collect();
            let kind = match node.kind {
                NodeKind::Inner(f) => {
                    NodeKind::Inner(Arc::new(move |q: &Q| f(q).into_iter().map(|c| c + node_base).collect()) as DecisionFn<Q>)
                }
                NodeKind::Leaf(block) => NodeKind::Leaf(block.into_iter().map(|x| x + point_base).collect()),
            };
            nodes.push(Node { parent, children, kind });
        }
        point_base += len;
    }
    let forward = roots.clone();
    nodes[0] = Node { parent: None, children: roots, kind: NodeKind::Inner(Arc::new(move |_: &Q| forward.clone())) };
    Ok(IndexScheme { nodes })
}

/// Compares two f64 slices as sets of `(index)` answers.
pub fn same_answers(a: &SearchResult, b: &SearchResult) -> bool {
    a.indices() == b.indices()
}

/// Orders distances for multiset comparison.
pub fn sorted_distances<D: Copy + PartialOrd>(r: &SearchResult<D>) -> Vec<D> {
    let mut v: Vec<D> = r.matches.iter().map(|m| m.distance).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}
