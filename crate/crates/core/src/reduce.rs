//! Workload reductions.
//!
//! A projective reduction maps the points of `W1` into `W2` by `r` and each
//! query `Q` of `W1` to a query `r->(Q)` of `W2` with `r(Q) ⊆ r->(Q)`. Any
//! access method for `W2` then answers `W1`: answer `r->(Q)`, pull every hit
//! back through `r^-1` and filter with the exact predicate of `Q`. An
//! inductive reduction goes the other way: points of `W2` map onto those of
//! `W1` by `i`, and `i^-1(Q) ⊆ i<-(Q)`.
//!
//! Both maps are kept only over datasets, as index vectors.

use std::sync::Arc;

use thiserror::Error;

use crate::fragment::{BinWorkload, CylinderQuery, FragmentIndex};
use crate::matrix::{MetricMode, SymbolMetric, SymbolQuasiMetric};
use crate::scheme::{sort_matches, AccessMethod, IndexScheme, Match, RangeQuery, SchemeError, SearchResult, SearchStats, Workload};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReduceError {
    #[error("point {point} maps to {image}, outside a target dataset of {len}")]
    PointOutOfRange { point: usize, image: usize, len: usize },
    #[error("dataset point {point} is not the image of any target point")]
    NotSurjective { point: usize },
    #[error("probe {probe}: point {point} is an answer but its image is not covered")]
    Violation { probe: usize, point: usize },
    #[error("reductions do not compose: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

pub type QueryMap<Q1, Q2> = Arc<dyn Fn(&Q1) -> Q2 + Send + Sync>;

/// Candidates pulled back through a reduction versus true answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overhead {
    pub candidates: usize,
    pub answers: usize,
}

impl Overhead {
    /// `candidates / answers`, or `+inf` when there are no answers.
    pub fn ratio(&self) -> f64 {
        if self.answers == 0 {
            f64::INFINITY
        } else {
            self.candidates as f64 / self.answers as f64
        }
    }
}

/// A reduction-mediated answer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedAnswer {
    pub result: SearchResult,
    pub overhead: Overhead,
}

pub struct ProjectiveReduction<Q1, Q2> {
    point_map: Vec<usize>,
    preimage: Vec<Vec<usize>>,
    query_map: QueryMap<Q1, Q2>,
}

impl<Q1, Q2> Clone for ProjectiveReduction<Q1, Q2> {
    fn clone(&self) -> Self {
        ProjectiveReduction {
            point_map: self.point_map.clone(),
            preimage: self.preimage.clone(),
            query_map: Arc::clone(&self.query_map),
        }
    }
}

impl<Q1, Q2> ProjectiveReduction<Q1, Q2> {
    /// `point_map[x]` is the index of `r(x)` in a target dataset of `target_len` points.
    pub fn new(point_map: Vec<usize>, target_len: usize, query_map: QueryMap<Q1, Q2>) -> Result<Self, ReduceError> {
        let mut preimage = vec![Vec::new(); target_len];
        for (point, &image) in point_map.iter().enumerate() {
            preimage.get_mut(image).ok_or(ReduceError::PointOutOfRange { point, image, len: target_len })?.push(point);
        }
        Ok(ProjectiveReduction { point_map, preimage, query_map })
    }

    pub fn source_len(&self) -> usize {
        self.point_map.len()
    }

    pub fn target_len(&self) -> usize {
        self.preimage.len()
    }

    pub fn image(&self, x: usize) -> usize {
        self.point_map[x]
    }

    pub fn preimage(&self, y: usize) -> &[usize] {
        &self.preimage[y]
    }

    pub fn map_query(&self, q: &Q1) -> Q2 {
        (self.query_map)(q)
    }

    /// Checks `r(Q ∩ X1) ⊆ r->(Q)` on each probe.
    pub fn verify<W1, W2>(&self, w1: &W1, w2: &W2, probes: &[Q1]) -> Result<(), ReduceError>
    where
        W1: Workload<Query = Q1> + ?Sized,
        W2: Workload<Query = Q2> + ?Sized,
    {
        for (probe, q) in probes.iter().enumerate() {
            let q2 = self.map_query(q);
            for x in 0..w1.len() {
                if w1.score(q, x).is_some() && w2.score(&q2, self.point_map[x]).is_none() {
                    return Err(ReduceError::Violation { probe, point: x });
                }
            }
        }
        Ok(())
    }

    /// Answers `r->(Q)` with `method`, then filters `r^-1` of every hit with
    /// the predicate of `Q`.
    pub fn answer<W1, M>(&self, w1: &W1, method: &M, q: &Q1) -> Result<ReducedAnswer, ReduceError>
    where
        W1: Workload<Query = Q1> + ?Sized,
        M: AccessMethod<Q2> + ?Sized,
    {
        let inner = method.answer(&self.map_query(q))?;
        let mut stats = inner.stats;
        let mut matches = Vec::new();
        let mut candidates = 0;
        for m in &inner.matches {
            for &x in &self.preimage[m.index] {
                candidates += 1;
                if let Some(distance) = w1.score(q, x) {
                    matches.push(Match { index: x, distance });
                }
            }
        }
        stats.points_scanned += candidates as u64;
        sort_matches(&mut matches);
        let overhead = Overhead { candidates, answers: matches.len() };
        Ok(ReducedAnswer { result: SearchResult { matches, stats }, overhead })
    }

    /// `beta_r(Q) = |r^-1(r->(Q)) ∩ X1| / |Q ∩ X1|`.
    pub fn access_overhead<W1, M>(&self, w1: &W1, method: &M, q: &Q1) -> Result<Overhead, ReduceError>
    where
        W1: Workload<Query = Q1> + ?Sized,
        M: AccessMethod<Q2> + ?Sized,
    {
        Ok(self.answer(w1, method, q)?.overhead)
    }

    /// `W1 -> W2 -> W3` as one reduction.
    pub fn compose<Q3>(&self, next: &ProjectiveReduction<Q2, Q3>) -> Result<ProjectiveReduction<Q1, Q3>, ReduceError>
    where
        Q1: 'static,
        Q2: 'static,
        Q3: 'static,
    {
        if next.source_len() != self.target_len() {
            return Err(ReduceError::Mismatch(format!(
                "first target has {} points, second source has {}",
                self.target_len(),
                next.source_len()
            )));
        }
        let point_map = self.point_map.iter().map(|&y| next.point_map[y]).collect();
        let (f, g) = (Arc::clone(&self.query_map), Arc::clone(&next.query_map));
        ProjectiveReduction::new(point_map, next.target_len(), Arc::new(move |q: &Q1| g(&f(q))))
    }

    /// `r*(I)`: the same tree, blocks `r^-1(B_t)`, decisions `F_t ∘ r->`.
    pub fn induced_scheme(&self, scheme: &IndexScheme<Q2>) -> Result<IndexScheme<Q1>, ReduceError>
    where
        Q1: 'static,
        Q2: 'static,
    {
        scheme.check_covering(self.target_len()).or_else(|e| match e {
            // Target points outside every block are fine as long as nothing maps there.
            SchemeError::Uncovered { point } if self.preimage[point].is_empty() => Ok(()),
            SchemeError::Uncovered { .. } => Err(e),
            other => Err(other),
        })?;
        let preimage = &self.preimage;
        Ok(scheme.pull_back(Arc::clone(&self.query_map), |block| {
            let mut b: Vec<usize> = block.iter().flat_map(|&y| preimage[y].iter().copied()).collect();
            b.sort_unstable();
            b
        }))
    }
}

impl<Q1> ProjectiveReduction<Q1, Q1> {
    pub fn identity(len: usize) -> Self
    where
        Q1: Clone + 'static,
    {
        ProjectiveReduction::new((0..len).collect(), len, Arc::new(|q: &Q1| q.clone())).expect("identity is in range")
    }
}

/// The workload with a single point answering every query.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrivialWorkload;

impl Workload for TrivialWorkload {
    type Query = ();
    fn len(&self) -> usize {
        1
    }
    fn score(&self, _: &(), _: usize) -> Option<f64> {
        Some(0.0)
    }
}

/// Collapses every point and every query onto the trivial workload. Answering
/// through it is a linear scan.
pub fn trivial_reduction<Q1: 'static>(len: usize) -> ProjectiveReduction<Q1, ()> {
    ProjectiveReduction::new(vec![0; len], 1, Arc::new(|_: &Q1| ())).expect("single target point")
}

pub struct InductiveReduction<Q1, Q2> {
    point_map: Vec<Option<usize>>,
    query_map: QueryMap<Q1, Q2>,
}

impl<Q1, Q2> InductiveReduction<Q1, Q2> {
    /// `point_map[y]` is `i(y)` as an index into `X1`, or `None` when `i(y)`
    /// falls outside `X1`. Every point of `X1` must be hit.
    pub fn new(point_map: Vec<Option<usize>>, source_len: usize, query_map: QueryMap<Q1, Q2>) -> Result<Self, ReduceError> {
        let mut hit = vec![false; source_len];
        for (point, image) in point_map.iter().enumerate() {
            if let Some(x) = *image {
                *hit.get_mut(x).ok_or(ReduceError::PointOutOfRange { point, image: x, len: source_len })? = true;
            }
        }
        if let Some(point) = hit.iter().position(|h| !h) {
            return Err(ReduceError::NotSurjective { point });
        }
        Ok(InductiveReduction { point_map, query_map })
    }

    pub fn map_query(&self, q: &Q1) -> Q2 {
        (self.query_map)(q)
    }

    /// Checks `i^-1(Q) ∩ X2 ⊆ i<-(Q)` on each probe.
    pub fn verify<W1, W2>(&self, w1: &W1, w2: &W2, probes: &[Q1]) -> Result<(), ReduceError>
    where
        W1: Workload<Query = Q1> + ?Sized,
        W2: Workload<Query = Q2> + ?Sized,
    {
        for (probe, q) in probes.iter().enumerate() {
            let q2 = self.map_query(q);
            for (y, image) in self.point_map.iter().enumerate() {
                if let Some(x) = *image {
                    if w1.score(q, x).is_some() && w2.score(&q2, y).is_none() {
                        return Err(ReduceError::Violation { probe, point: y });
                    }
                }
            }
        }
        Ok(())
    }

    /// Answers `i<-(Q)` with `method` and keeps `i(y)` for every hit `y` with
    /// `i(y) ∈ Q`, once each.
    pub fn answer<W1, M>(&self, w1: &W1, method: &M, q: &Q1) -> Result<ReducedAnswer, ReduceError>
    where
        W1: Workload<Query = Q1> + ?Sized,
        M: AccessMethod<Q2> + ?Sized,
    {
        let inner = method.answer(&self.map_query(q))?;
        let mut seen = vec![false; w1.len()];
        let mut matches = Vec::new();
        let mut candidates = 0;
        for m in &inner.matches {
            let Some(x) = self.point_map[m.index] else { continue };
            if std::mem::replace(&mut seen[x], true) {
                continue;
            }
            candidates += 1;
            if let Some(distance) = w1.score(q, x) {
                matches.push(Match { index: x, distance });
            }
        }
        let mut stats = inner.stats;
        stats.points_scanned += candidates as u64;
        sort_matches(&mut matches);
        let overhead = Overhead { candidates, answers: matches.len() };
        Ok(ReducedAnswer { result: SearchResult { matches, stats }, overhead })
    }
}

/// Non-empty bins found by prefix enumeration, as an access method for the
/// bin workload.
pub struct BinEnumeration(pub Arc<FragmentIndex>);

impl AccessMethod<CylinderQuery> for BinEnumeration {
    fn answer(&self, q: &CylinderQuery) -> Result<SearchResult, SchemeError> {
        let sel = self.0.enumerate_bins(&q.omega, q.eps);
        let g = self.0.partition().len();
        let matches = sel
            .bins
            .iter()
            .map(|&b| {
                let digits = self.0.directory()[b].code.digits(self.0.m(), g);
                Match { index: b, distance: self.0.cylinder_lb(&q.omega, &digits) as f64 }
            })
            .collect();
        let stats = SearchStats {
            nodes_visited: sel.prefixes_visited,
            decision_evaluations: sel.lb_evaluations,
            leaves_opened: sel.bins.len() as u64,
            points_scanned: sel.bins.len() as u64,
        };
        Ok(SearchResult { matches, stats })
    }
}

/// The fragment index read as a reduction: each fragment maps to its bin and
/// each ball `B_eps(w)` to the set of cylinders within left distance `eps`.
pub fn fragment_reduction(index: &FragmentIndex) -> ProjectiveReduction<RangeQuery<Vec<u8>>, CylinderQuery> {
    let mut point_map = vec![0; index.len()];
    for (b, entry) in index.directory().iter().enumerate() {
        point_map[entry.start..entry.end].fill(b);
    }
    ProjectiveReduction::new(point_map, index.directory().len(), Arc::new(CylinderQuery::from_ball))
        .expect("bins are in range")
}

/// The bin workload paired with the fragment reduction.
pub fn bin_workload(index: Arc<FragmentIndex>) -> BinWorkload {
    BinWorkload { index }
}

/// A ball of a symbol metric with a rational radius: `{x : den * d(w, x) <= bound}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledBall {
    pub center: Vec<u8>,
    pub bound: u64,
    pub den: u64,
}

/// Strings under an associated symbol metric, queried by scaled balls.
#[derive(Debug, Clone)]
pub struct MetricBallWorkload {
    pub points: Vec<Vec<u8>>,
    pub metric: SymbolMetric,
}

impl Workload for MetricBallWorkload {
    type Query = ScaledBall;

    fn len(&self) -> usize {
        self.points.len()
    }

    fn score(&self, q: &ScaledBall, index: usize) -> Option<f64> {
        let d = self.metric.encoded_distance(&q.center, &self.points[index]);
        (d as u64 * q.den <= q.bound).then_some(d as f64)
    }
}

/// Replacing a quasi-metric `rho` by a symmetric `d >= rho`.
///
/// A `d`-ball of the same radius is smaller than the `rho`-ball, so the
/// radius is stretched by `c = max_{a != b} d(a, b) / rho(a, b)`: since
/// `d <= c * rho` letter by letter, and string distances are sums,
/// `B^rho_eps(w) ⊆ B^d_{c eps}(w)`. `c` is kept as an exact fraction.
#[derive(Debug, Clone)]
pub struct MetricReplacement {
    pub metric: SymbolMetric,
    pub num: u64,
    pub den: u64,
}

impl MetricReplacement {
    pub fn new(qm: &SymbolQuasiMetric, mode: MetricMode) -> Self {
        let metric = qm.associated_metric(mode);
        let n = qm.alphabet().len();
        let (mut num, mut den) = (1u64, 1u64);
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                let (d, r) = (metric.get(a, b) as u64, qm.get(a, b) as u64);
                if d * den > num * r {
                    (num, den) = (d, r);
                }
            }
        }
        let g = gcd(num, den);
        MetricReplacement { metric, num: num / g, den: den / g }
    }

    pub fn query(&self, q: &RangeQuery<Vec<u8>>) -> ScaledBall {
        ScaledBall { center: q.center.clone(), bound: q.radius.floor() as u64 * self.num, den: self.den }
    }

    pub fn reduction(&self, len: usize) -> ProjectiveReduction<RangeQuery<Vec<u8>>, ScaledBall> {
        let this = self.clone();
        ProjectiveReduction::new((0..len).collect(), len, Arc::new(move |q: &RangeQuery<Vec<u8>>| this.query(q)))
            .expect("identity on points")
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
