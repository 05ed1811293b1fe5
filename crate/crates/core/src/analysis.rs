//! Geometry diagnostics.
//!
//! Concentration functions of finite metric spaces with a probability
//! measure, the access lower bounds they imply for indexing schemes, and
//! empirical descriptions of a fragment dataset: ball growth, the distance
//! exponent, bin occupancy, quasi-metric versus metric ball sizes and the
//! distribution of certification values.
//!
//! Neighbourhoods `A_eps = {x : rho(x, A) <= eps}` and balls are closed.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distance::{Distance, DistanceTable};
use crate::fragment::{BinCode, FragmentIndex};
use crate::matrix::SymbolMetric;
use crate::sampling::SymbolDistribution;

/// Largest space handled by exhaustive subset enumeration.
pub const EXACT_CAP: usize = 20;

const MAJORITY_SLACK: f64 = 1e-12;
const CEIL_SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("concentration requires a symmetric distance")]
    Asymmetric,
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("exact concentration is limited to {cap} points, got {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("xi = {0} is outside (0, 1/4]")]
    Xi(f64),
    #[error("eps = {eps} does not exceed delta = {delta}")]
    Domain { eps: f64, delta: f64 },
    #[error("alpha never drops to {0} on the estimated grid")]
    NoInverse(f64),
    #[error("fit window holds fewer than two usable points")]
    DegenerateWindow,
    #[error("k = {k} exceeds the dataset size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("metric {metric} is below quasi-metric {qm} on a probe pair")]
    NotMajorizing { qm: f64, metric: f64 },
}

/// A finite metric space with a probability measure on its points.
#[derive(Debug, Clone)]
pub struct EmpiricalMMSpace {
    table: DistanceTable,
    weights: Vec<f64>,
}

impl EmpiricalMMSpace {
    /// `weights = None` gives the normalized counting measure.
    pub fn new(table: DistanceTable, weights: Option<Vec<f64>>) -> Result<Self, AnalysisError> {
        let n = table.len();
        if n == 0 {
            return Err(AnalysisError::Empty("points"));
        }
        if !table.is_symmetric() {
            return Err(AnalysisError::Asymmetric);
        }
        let weights = weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        if weights.len() != n {
            return Err(AnalysisError::Weights(format!("{} weights for {n} points", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(AnalysisError::Weights("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(AnalysisError::Weights(format!("weights sum to {total}")));
        }
        Ok(EmpiricalMMSpace { table, weights })
    }

    pub fn from_points<P, D: Distance<P>>(points: &[P], dist: &D, weights: Option<Vec<f64>>) -> Result<Self, AnalysisError> {
        if !dist.is_symmetric() {
            return Err(AnalysisError::Asymmetric);
        }
        EmpiricalMMSpace::new(DistanceTable::from_points(points, dist), weights)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.table.get(i, j)
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.dist(i, j)).fold(0.0, f64::max)
    }

    /// Sorted distinct pairwise distances.
    pub fn distance_values(&self) -> Vec<f64> {
        let n = self.len();
        let mut v: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.dist(i, j)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Exact,
    /// Each value is a lower bound on the true concentration function.
    AnchorLowerBound,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Exact => "exact",
            EstimatorKind::AnchorLowerBound => "anchor_lower_bound",
        })
    }
}

/// Concentration function values on an increasing radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationEstimate {
    pub eps: Vec<f64>,
    pub alpha: Vec<f64>,
    pub kind: EstimatorKind,
}

impl ConcentrationEstimate {
    /// `alpha` at the largest grid radius `<= r`. Since `alpha` is
    /// non-increasing this never underestimates the value at `r`.
    pub fn alpha_at(&self, r: f64) -> f64 {
        match self.eps.partition_point(|&e| e <= r) {
            0 => 0.5,
            i => self.alpha[i - 1],
        }
    }

    /// `eps,alpha_hat,kind` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,alpha_hat,kind\n");
        for (e, a) in self.eps.iter().zip(&self.alpha) {
            out.push_str(&format!("{e},{a},{}\n", self.kind));
        }
        out
    }
}

fn check_grid(eps_grid: &[f64]) -> Result<(), AnalysisError> {
    if eps_grid.is_empty() {
        return Err(AnalysisError::Empty("radius grid"));
    }
    if eps_grid.windows(2).any(|w| w[0] >= w[1]) || eps_grid[0] < 0.0 {
        return Err(AnalysisError::Empty("radius grid must be non-negative and increasing"));
    }
    Ok(())
}

/// `alpha(eps) = 1 - inf { mu(A_eps) : mu(A) >= 1/2 }` by enumerating every
/// subset; `alpha(0) = 1/2`.
pub fn concentration_exact(space: &EmpiricalMMSpace, eps_grid: &[f64]) -> Result<ConcentrationEstimate, AnalysisError> {
    let n = space.len();
    if n > EXACT_CAP {
        return Err(AnalysisError::TooLarge { n, cap: EXACT_CAP });
    }
    check_grid(eps_grid)?;
    let full = 1usize << n;
    let mut mass = vec![0.0f64; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + space.weight(low);
    }
    // The whole space has measure exactly one, whatever the rounding of the sum.
    mass[full - 1] = 1.0;
    let mut hull = vec![0u32; full];
    let mut alpha = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if eps == 0.0 {
            alpha.push(0.5);
            continue;
        }
        let near: Vec<u32> = (0..n)
            .map(|i| (0..n).filter(|&j| space.dist(i, j) <= eps).fold(0u32, |m, j| m | (1 << j)))
            .collect();
        let mut inf = f64::INFINITY;
        for mask in 1..full {
            let low = mask.trailing_zeros() as usize;
            hull[mask] = hull[mask & (mask - 1)] | near[low];
            if mass[mask] >= 0.5 - MAJORITY_SLACK {
                inf = inf.min(mass[hull[mask] as usize]);
            }
        }
        alpha.push((1.0 - inf).clamp(0.0, 0.5));
    }
    Ok(ConcentrationEstimate { eps: eps_grid.to_vec(), alpha, kind: EstimatorKind::Exact })
}

/// Lower bound on `alpha`: for each anchor, `A` is the smallest closed ball
/// around it of measure at least one half, and the estimate is the largest
/// `1 - mu(A_eps)` seen.
pub fn concentration_anchor(
    space: &EmpiricalMMSpace,
    eps_grid: &[f64],
    anchors: &[usize],
) -> Result<ConcentrationEstimate, AnalysisError> {
    if anchors.is_empty() {
        return Err(AnalysisError::Empty("anchors"));
    }
    check_grid(eps_grid)?;
    let n = space.len();
    let mut alpha = vec![0.0f64; eps_grid.len()];
    for &w in anchors {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| space.dist(w, a).total_cmp(&space.dist(w, b)));
        let mut acc = 0.0;
        let mut radius = 0.0;
        for &x in &order {
            acc += space.weight(x);
            if acc >= 0.5 - MAJORITY_SLACK {
                radius = space.dist(w, x);
                break;
            }
        }
        let ball: Vec<usize> = (0..n).filter(|&x| space.dist(w, x) <= radius).collect();
        let to_ball: Vec<f64> =
            (0..n).map(|x| ball.iter().map(|&a| space.dist(x, a)).fold(f64::INFINITY, f64::min)).collect();
        for (slot, &eps) in alpha.iter_mut().zip(eps_grid) {
            let value = if eps == 0.0 {
                0.5
            } else {
                let inside: Vec<usize> = (0..n).filter(|&x| to_ball[x] <= eps).collect();
                let covered: f64 = if inside.len() == n { 1.0 } else { inside.iter().map(|&x| space.weight(x)).sum() };
                (1.0 - covered).clamp(0.0, 0.5)
            };
            *slot = slot.max(value);
        }
    }
    Ok(ConcentrationEstimate { eps: eps_grid.to_vec(), alpha, kind: EstimatorKind::AnchorLowerBound })
}

/// Smallest grid radius with `alpha <= x`; `None` stands for `+inf`.
pub fn alpha_inverse(est: &ConcentrationEstimate, x: f64) -> Option<f64> {
    est.eps.iter().zip(&est.alpha).find(|(_, &a)| a <= x).map(|(&e, _)| e)
}

/// Lower bounds on the number of blocks a query ball meets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessBounds {
    pub average: u64,
    pub worst_case: u64,
    pub delta: f64,
    pub alpha: f64,
}

fn snapped_ceil(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() < CEIL_SNAP {
        r as u64
    } else {
        v.ceil() as u64
    }
}

/// `(min(ceil(1/(2 xi)), ceil(1/(4 a))), min(ceil(1/(2 xi)), ceil(1/a - 1)))`
/// with `a = alpha(eps - delta)`; `a = 0` leaves only the `xi` term.
pub fn bounds_from_values(xi: f64, alpha: f64) -> (u64, u64) {
    let cover = snapped_ceil(1.0 / (2.0 * xi));
    if alpha <= 0.0 {
        return (cover, cover);
    }
    let average = cover.min(snapped_ceil(1.0 / (4.0 * alpha)));
    let worst = cover.min(snapped_ceil(1.0 / alpha - 1.0));
    (average, worst)
}

/// Block-access lower bounds for a cover whose blocks all have measure at
/// most `xi`, queried by balls of radius `eps`.
pub fn rngconc_bounds(xi: f64, eps: f64, est: &ConcentrationEstimate) -> Result<AccessBounds, AnalysisError> {
    if !(xi > 0.0 && xi <= 0.25) {
        return Err(AnalysisError::Xi(xi));
    }
    let delta = alpha_inverse(est, xi).ok_or(AnalysisError::NoInverse(xi))?;
    if eps <= delta {
        return Err(AnalysisError::Domain { eps, delta });
    }
    let alpha = est.alpha_at(eps - delta);
    let (average, worst_case) = bounds_from_values(xi, alpha);
    Ok(AccessBounds { average, worst_case, delta, alpha })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub radius: f64,
    pub fraction: f64,
}

/// Mean over centers of `|{x : rho(w, x) <= r}| / |X|` for each radius.
pub fn ball_growth<P, D: Distance<P>>(
    points: &[P],
    dist: &D,
    centers: &[P],
    radii: &[f64],
) -> Result<Vec<GrowthRow>, AnalysisError> {
    if points.is_empty() {
        return Err(AnalysisError::Empty("points"));
    }
    if centers.is_empty() {
        return Err(AnalysisError::Empty("centers"));
    }
    let mut sums = vec![0usize; radii.len()];
    let mut ds = Vec::with_capacity(points.len());
    for w in centers {
        ds.clear();
        ds.extend(points.iter().map(|x| dist.distance(w, x)));
        ds.sort_by(f64::total_cmp);
        for (s, &r) in sums.iter_mut().zip(radii) {
            *s += ds.partition_point(|&d| d <= r);
        }
    }
    let denom = (centers.len() * points.len()) as f64;
    Ok(radii.iter().zip(sums).map(|(&radius, s)| GrowthRow { radius, fraction: s as f64 / denom }).collect())
}

pub fn growth_csv(rows: &[GrowthRow]) -> String {
    let mut out = String::from("radius,fraction\n");
    for r in rows {
        out.push_str(&format!("{},{}\n", r.radius, r.fraction));
    }
    out
}

/// Least-squares slope of `ln(value)` against `ln(radius)` over rows with
/// radius in `[lo, hi]` and both coordinates positive.
pub fn distance_exponent(rows: &[(f64, f64)], lo: f64, hi: f64) -> Result<f64, AnalysisError> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(r, v)| *r >= lo && *r <= hi && *r > 0.0 && *v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Err(AnalysisError::DegenerateWindow);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateWindow);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Occupancy of the `|groups|^m` bins of an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinHistogram {
    /// `(bin size, number of bins of that size)`, sizes ascending, size 0 excluded.
    pub rows: Vec<(usize, u64)>,
    pub empty: u64,
    pub total_bins: u64,
}

impl BinHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,bins\n");
        if self.empty > 0 {
            out.push_str(&format!("0,{}\n", self.empty));
        }
        for (size, bins) in &self.rows {
            out.push_str(&format!("{size},{bins}\n"));
        }
        out
    }
}

pub fn bin_histogram(index: &FragmentIndex) -> BinHistogram {
    let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
    for b in index.directory() {
        *sizes.entry(b.len()).or_insert(0) += 1;
    }
    let total_bins = index.code_space();
    BinHistogram { rows: sizes.into_iter().collect(), empty: total_bins - index.directory().len() as u64, total_bins }
}

/// Per-k summary of metric/quasi-metric ball size ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSummary {
    pub k: usize,
    pub mean: f64,
    pub max: f64,
    pub ratios: Vec<f64>,
}

/// For each probe `w` and each `k`: `r_qm` is the quasi-metric distance to
/// the `k`-th nearest point, `S_qm` the size of that closed ball, `r_m` the
/// largest metric distance from `w` to any point of the ball, and `S_m` the
/// size of the closed metric ball of radius `r_m`. Reports `S_m / S_qm`.
pub fn qm_metric_ratio<P, Q: Distance<P>, M: Distance<P>>(
    points: &[P],
    qm: &Q,
    metric: &M,
    ks: &[usize],
    probes: &[P],
) -> Result<Vec<RatioSummary>, AnalysisError> {
    let n = points.len();
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n) {
        return Err(AnalysisError::KTooLarge { k, n });
    }
    if probes.is_empty() {
        return Err(AnalysisError::Empty("probes"));
    }
    let mut ratios = vec![Vec::with_capacity(probes.len()); ks.len()];
    for w in probes {
        let dq: Vec<f64> = points.iter().map(|x| qm.distance(w, x)).collect();
        let dm: Vec<f64> = points.iter().map(|x| metric.distance(w, x)).collect();
        if let Some(i) = (0..n).find(|&i| dm[i] < dq[i]) {
            return Err(AnalysisError::NotMajorizing { qm: dq[i], metric: dm[i] });
        }
        let mut sorted = dq.clone();
        sorted.sort_by(f64::total_cmp);
        for (slot, &k) in ratios.iter_mut().zip(ks) {
            let r_qm = sorted[k - 1];
            let inside: Vec<usize> = (0..n).filter(|&i| dq[i] <= r_qm).collect();
            let r_m = inside.iter().map(|&i| dm[i]).fold(0.0, f64::max);
            let s_m = dm.iter().filter(|&&d| d <= r_m).count();
            slot.push(s_m as f64 / inside.len() as f64);
        }
    }
    Ok(ks
        .iter()
        .zip(ratios)
        .map(|(&k, r)| RatioSummary {
            k,
            mean: r.iter().sum::<f64>() / r.len() as f64,
            max: r.iter().copied().fold(0.0, f64::max),
            ratios: r,
        })
        .collect())
}

pub fn ratio_csv(rows: &[RatioSummary]) -> String {
    let mut out = String::from("k,ratio_mean,ratio_max\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.k, r.mean, r.max));
    }
    out
}

/// What a certification value is measured against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertAnchor {
    /// `d(w, x)` for a fixed string `x`.
    Point(Vec<u8>),
    /// The left distance from `w` to a cylinder.
    Bin(BinCode),
}

pub fn cert_values(index: &FragmentIndex, anchor: &CertAnchor, omegas: &[Vec<u8>]) -> Vec<u32> {
    match anchor {
        CertAnchor::Point(x) => omegas.iter().map(|w| index.quasi_metric().encoded_distance(w, x)).collect(),
        CertAnchor::Bin(code) => {
            let digits = code.digits(index.m(), index.partition().len());
            omegas.iter().map(|w| index.cylinder_lb(w, &digits)).collect()
        }
    }
}

/// `(value, count)` pairs, ascending.
pub fn histogram(values: &[u32]) -> Vec<(u32, u64)> {
    let mut h: BTreeMap<u32, u64> = BTreeMap::new();
    for &v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h.into_iter().collect()
}

pub fn histogram_csv(h: &[(u32, u64)]) -> String {
    let mut out = String::from("value,count\n");
    for (v, c) in h {
        out.push_str(&format!("{v},{c}\n"));
    }
    out
}

/// Histogram of certification values over `samples` random strings.
pub fn cert_value_distribution(
    index: &FragmentIndex,
    anchor: &CertAnchor,
    dist: &SymbolDistribution,
    samples: usize,
    seed: u64,
) -> Vec<(u32, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omegas = dist.sample_strings(&mut rng, index.m(), samples);
    histogram(&cert_values(index, anchor, &omegas))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighbourhoodRow {
    pub radius: f64,
    /// Fraction of random strings within quasi-metric distance `radius` of the dataset.
    pub quasi_metric: f64,
    /// The same under the supplied metric.
    pub metric: f64,
}

/// Monte Carlo measure of the `eps`-neighbourhoods of the dataset in the
/// whole string space, under the quasi-metric and under `metric`.
pub fn neighbourhood_growth(
    index: &FragmentIndex,
    metric: &SymbolMetric,
    dist: &SymbolDistribution,
    samples: usize,
    radii: &[f64],
    seed: u64,
) -> Vec<NeighbourhoodRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut near_qm = Vec::with_capacity(samples);
    let mut near_m = Vec::with_capacity(samples);
    for _ in 0..samples {
        let w = dist.sample_string(&mut rng, index.m());
        let nn = index.knn_encoded(&w, 1).expect("k = 1 on a non-empty index");
        near_qm.push(nn.matches[0].distance);
        let dm = (0..index.len()).map(|i| metric.encoded_distance(&w, index.fragment(i))).min().expect("non-empty");
        near_m.push(dm as f64);
    }
    let frac = |v: &[f64], r: f64| v.iter().filter(|&&d| d <= r).count() as f64 / samples.max(1) as f64;
    radii
        .iter()
        .map(|&radius| NeighbourhoodRow { radius, quasi_metric: frac(&near_qm, radius), metric: frac(&near_m, radius) })
        .collect()
}
