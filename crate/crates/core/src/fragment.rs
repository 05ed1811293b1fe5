//! The partition-coded fragment index.
//!
//! The alphabet is split into groups; a fragment of length `m` falls in the
//! cylinder (bin) fixing the group of each position. Bins are identified by a
//! base-`|groups|` code, most significant digit first, and fragments are
//! stored sorted by `(code, ordinals)` so that each bin is a contiguous range.
//!
//! The left distance from a query to a cylinder decomposes over positions:
//! `d(w, bin) = sum_i min_{b in A_i} d(w_i, b)`. Prefix sums of that quantity
//! are the certification values of the prefix tree over codes, so a range
//! query descends only into prefixes whose partial sum stays within the
//! radius. The tree is never materialized: prefixes are generated on the fly
//! and checked against the sorted bin directory.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use thiserror::Error;

use crate::matrix::{Alphabet, MatrixError, SymbolQuasiMetric};
use crate::scheme::{
    sort_matches, DecisionFn, IndexScheme, Match, RangeQuery, SchemeBuilder, SearchResult, SearchStats, Workload,
};

/// Groups of the default amino-acid partition, in digit order.
pub const DEFAULT_GROUPS: [&str; 5] = ["TSAN", "IVLM", "KRDEQ", "WFYH", "GPC"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FragmentError {
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("no fragments to index")]
    Empty,
    #[error("fragment {index} has length {found}, expected {expected}")]
    MixedLength { index: usize, expected: usize, found: usize },
    #[error("{groups}^{m} bin codes do not fit in 64 bits")]
    CodeOverflow { groups: usize, m: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("inconsistent index data: {0}")]
    Corrupt(String),
}

/// A partition of the alphabet into disjoint, non-empty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    alphabet: Alphabet,
    group_of: Vec<u8>,
    groups: Vec<Vec<u8>>,
}

impl Partition {
    /// Groups are given as symbol strings; every alphabet symbol must appear
    /// in exactly one group.
    pub fn new<S: AsRef<[u8]>>(alphabet: &Alphabet, groups: &[S]) -> Result<Self, FragmentError> {
        let mut group_of = vec![u8::MAX; alphabet.len()];
        for (g, group) in groups.iter().enumerate() {
            let group = group.as_ref();
            if group.is_empty() {
                return Err(FragmentError::Partition(format!("group {g} is empty")));
            }
            for &s in group {
                let a = alphabet
                    .index_of(s)
                    .ok_or_else(|| FragmentError::Partition(format!("symbol {:?} is not in the alphabet", s as char)))?;
                if group_of[a] != u8::MAX {
                    return Err(FragmentError::Partition(format!("symbol {:?} is in two groups", s as char)));
                }
                group_of[a] = g as u8;
            }
        }
        Partition::from_group_of(alphabet, group_of)
    }

    /// Rebuilds a partition from the group ordinal of each alphabet symbol.
    pub fn from_group_of(alphabet: &Alphabet, group_of: Vec<u8>) -> Result<Self, FragmentError> {
        if group_of.len() != alphabet.len() {
            return Err(FragmentError::Partition("group table does not match the alphabet".into()));
        }
        if let Some(a) = group_of.iter().position(|&g| g == u8::MAX) {
            return Err(FragmentError::Partition(format!("symbol {:?} is in no group", alphabet.symbol(a) as char)));
        }
        let count = group_of.iter().map(|&g| g as usize + 1).max().unwrap_or(0);
        let mut groups = vec![Vec::new(); count];
        for (a, &g) in group_of.iter().enumerate() {
            groups[g as usize].push(a as u8);
        }
        if let Some(g) = groups.iter().position(Vec::is_empty) {
            return Err(FragmentError::Partition(format!("group {g} is empty")));
        }
        if count < 2 {
            return Err(FragmentError::Partition("at least two groups are required".into()));
        }
        Ok(Partition { alphabet: alphabet.clone(), group_of, groups })
    }

    /// `[TSAN, IVLM, KRDEQ, WFYH, GPC]` over the standard amino acids.
    pub fn amino_default(alphabet: &Alphabet) -> Result<Self, FragmentError> {
        Partition::new(alphabet, &DEFAULT_GROUPS)
    }

    /// One group per line, symbols concatenated; blank and `#` lines ignored.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, FragmentError> {
        let groups: Vec<&str> =
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        Partition::new(alphabet, &groups)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_of(&self, ordinal: usize) -> usize {
        self.group_of[ordinal] as usize
    }

    pub fn group_of_symbol(&self, symbol: u8) -> Option<usize> {
        self.alphabet.index_of(symbol).map(|a| self.group_of(a))
    }

    pub fn group_table(&self) -> &[u8] {
        &self.group_of
    }

    /// Member ordinals of group `g`.
    pub fn members(&self, g: usize) -> &[u8] {
        &self.groups[g]
    }

    pub fn group_strings(&self) -> Vec<String> {
        self.groups.iter().map(|g| self.alphabet.decode(g)).collect()
    }

    /// Number of cylinders over strings of length `m`.
    pub fn code_space(&self, m: usize) -> Result<u64, FragmentError> {
        u32::try_from(m)
            .ok()
            .and_then(|m| (self.len() as u64).checked_pow(m))
            .ok_or(FragmentError::CodeOverflow { groups: self.len(), m })
    }

    pub fn bin_code(&self, fragment: &[u8]) -> BinCode {
        BinCode(fragment.iter().fold(0u64, |acc, &a| acc * self.len() as u64 + self.group_of[a as usize] as u64))
    }
}

/// Left distances from each symbol to each group: `left[a][A] = min_{b in A} d(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDistTable {
    groups: usize,
    left: Vec<u32>,
}

impl GroupDistTable {
    pub fn new(qm: &SymbolQuasiMetric, partition: &Partition) -> Result<Self, FragmentError> {
        if qm.alphabet() != partition.alphabet() {
            return Err(MatrixError::AlphabetMismatch.into());
        }
        let (n, groups) = (qm.alphabet().len(), partition.len());
        let mut left = vec![u32::MAX; n * groups];
        for a in 0..n {
            for b in 0..n {
                let cell = &mut left[a * groups + partition.group_of(b)];
                *cell = (*cell).min(qm.get(a, b));
            }
        }
        Ok(GroupDistTable { groups, left })
    }

    #[inline]
    pub fn get(&self, a: usize, group: usize) -> u32 {
        self.left[a * self.groups + group]
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn max_entry(&self) -> u32 {
        self.left.iter().copied().max().unwrap_or(0)
    }

    #[inline]
    fn row(&self, a: u8) -> &[u32] {
        let a = a as usize;
        &self.left[a * self.groups..(a + 1) * self.groups]
    }
}

/// A cylinder identifier: base-`|groups|` digits, digit 0 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinCode(pub u64);

impl BinCode {
    pub fn from_digits(digits: &[u8], groups: usize) -> Self {
        BinCode(digits.iter().fold(0u64, |acc, &d| acc * groups as u64 + d as u64))
    }

    pub fn digits(self, m: usize, groups: usize) -> Vec<u8> {
        let mut out = vec![0u8; m];
        let mut v = self.0;
        for d in out.iter_mut().rev() {
            *d = (v % groups as u64) as u8;
            v /= groups as u64;
        }
        out
    }
}

/// A non-empty bin and its fragment range `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinEntry {
    pub code: BinCode,
    pub start: usize,
    pub end: usize,
}

impl BinEntry {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Bins reached by a prefix-tree traversal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinSelection {
    /// Positions in [`FragmentIndex::directory`], in code order.
    pub bins: Vec<usize>,
    pub prefixes_visited: u64,
    pub lb_evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct FragmentIndex {
    m: usize,
    partition: Partition,
    qm: SymbolQuasiMetric,
    table: GroupDistTable,
    fragments: Vec<u8>,
    codes: Vec<BinCode>,
    counts: Vec<u32>,
    directory: Vec<BinEntry>,
    /// `|groups|^(m - l)` for `l = 0..=m`.
    spans: Vec<u64>,
}

impl FragmentIndex {
    /// Indexes ordinal-encoded fragments with occurrence counts. Duplicates
    /// are merged and their counts summed.
    pub fn build<I>(qm: SymbolQuasiMetric, partition: Partition, m: usize, fragments: I) -> Result<Self, FragmentError>
    where
        I: IntoIterator<Item = (Vec<u8>, u32)>,
    {
        if qm.alphabet() != partition.alphabet() {
            return Err(MatrixError::AlphabetMismatch.into());
        }
        partition.code_space(m)?;
        let sigma = qm.alphabet().len();
        let mut items: Vec<(BinCode, Vec<u8>, u32)> = Vec::new();
        for (index, (f, count)) in fragments.into_iter().enumerate() {
            if f.len() != m {
                return Err(FragmentError::MixedLength { index, expected: m, found: f.len() });
            }
            if let Some(position) = f.iter().position(|&a| a as usize >= sigma) {
                return Err(MatrixError::ForeignSymbol { symbol: '?', position }.into());
            }
            items.push((partition.bin_code(&f), f, count));
        }
        if items.is_empty() || m == 0 {
            return Err(FragmentError::Empty);
        }
        items.sort_unstable_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let mut fragments = Vec::with_capacity(items.len() * m);
        let mut codes: Vec<BinCode> = Vec::with_capacity(items.len());
        let mut counts: Vec<u32> = Vec::with_capacity(items.len());
        let mut last: Option<&[u8]> = None;
        for (code, f, count) in &items {
            if last == Some(f.as_slice()) {
                let c = counts.last_mut().expect("previous entry");
                *c = c.saturating_add(*count);
                continue;
            }
            fragments.extend_from_slice(f);
            codes.push(*code);
            counts.push(*count);
            last = Some(f);
        }
        let directory = directory_of(&codes);
        FragmentIndex::assemble(qm, partition, m, fragments, codes, counts, directory)
    }

    /// Convenience: index ASCII fragments, each with count 1.
    pub fn from_strings<S: AsRef<[u8]>>(
        qm: SymbolQuasiMetric,
        partition: Partition,
        fragments: &[S],
    ) -> Result<Self, FragmentError> {
        let m = fragments.first().map(|f| f.as_ref().len()).ok_or(FragmentError::Empty)?;
        let encoded = fragments
            .iter()
            .map(|f| qm.alphabet().encode(f.as_ref()).map(|e| (e, 1)))
            .collect::<Result<Vec<_>, _>>()?;
        FragmentIndex::build(qm, partition, m, encoded)
    }

    /// Reassembles an index from stored parts, checking every invariant the
    /// builder establishes.
    pub fn from_parts(
        qm: SymbolQuasiMetric,
        partition: Partition,
        m: usize,
        fragments: Vec<u8>,
        directory: Vec<BinEntry>,
        counts: Vec<u32>,
    ) -> Result<Self, FragmentError> {
        if qm.alphabet() != partition.alphabet() {
            return Err(MatrixError::AlphabetMismatch.into());
        }
        partition.code_space(m)?;
        if m == 0 || fragments.is_empty() || fragments.len() % m != 0 {
            return Err(FragmentError::Corrupt("fragment array is not a multiple of m".into()));
        }
        let n = fragments.len() / m;
        if counts.len() != n {
            return Err(FragmentError::Corrupt("count array does not match the fragment array".into()));
        }
        let sigma = qm.alphabet().len() as u8;
        if fragments.iter().any(|&a| a >= sigma) {
            return Err(FragmentError::Corrupt("fragment ordinal outside the alphabet".into()));
        }
        let codes: Vec<BinCode> = fragments.chunks(m).map(|f| partition.bin_code(f)).collect();
        let sorted = fragments.chunks(m).zip(&codes).collect::<Vec<_>>().windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0));
        if !sorted {
            return Err(FragmentError::Corrupt("fragments are not sorted and unique".into()));
        }
        if directory != directory_of(&codes) {
            return Err(FragmentError::Corrupt("bin directory does not match the fragments".into()));
        }
        FragmentIndex::assemble(qm, partition, m, fragments, codes, counts, directory)
    }

    fn assemble(
        qm: SymbolQuasiMetric,
        partition: Partition,
        m: usize,
        fragments: Vec<u8>,
        codes: Vec<BinCode>,
        counts: Vec<u32>,
        directory: Vec<BinEntry>,
    ) -> Result<Self, FragmentError> {
        let table = GroupDistTable::new(&qm, &partition)?;
        let g = partition.len() as u64;
        let spans = (0..=m).map(|l| g.pow((m - l) as u32)).collect();
        Ok(FragmentIndex { m, partition, qm, table, fragments, codes, counts, directory, spans })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of unique fragments.
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.qm.alphabet()
    }

    pub fn quasi_metric(&self) -> &SymbolQuasiMetric {
        &self.qm
    }

    pub fn table(&self) -> &GroupDistTable {
        &self.table
    }

    #[inline]
    pub fn fragment(&self, i: usize) -> &[u8] {
        &self.fragments[i * self.m..(i + 1) * self.m]
    }

    pub fn fragment_string(&self, i: usize) -> String {
        self.alphabet().decode(self.fragment(i))
    }

    /// The flattened, sorted fragment array.
    pub fn fragment_data(&self) -> &[u8] {
        &self.fragments
    }

    pub fn code(&self, i: usize) -> BinCode {
        self.codes[i]
    }

    pub fn count(&self, i: usize) -> u32 {
        self.counts[i]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Total occurrences over all unique fragments.
    pub fn total_count(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn directory(&self) -> &[BinEntry] {
        &self.directory
    }

    pub fn code_space(&self) -> u64 {
        self.spans[0]
    }

    /// Index of a fragment, if present.
    pub fn position(&self, fragment: &[u8]) -> Option<usize> {
        if fragment.len() != self.m {
            return None;
        }
        let code = self.partition.bin_code(fragment);
        let bin = self.directory.binary_search_by_key(&code, |b| b.code).ok()?;
        let entry = self.directory[bin];
        (entry.start..entry.end).find(|&i| self.fragment(i) == fragment)
    }

    pub fn encode(&self, text: &[u8]) -> Result<Vec<u8>, FragmentError> {
        if text.len() != self.m {
            return Err(MatrixError::LengthMismatch { left: text.len(), right: self.m }.into());
        }
        Ok(self.alphabet().encode(text)?)
    }

    /// `d(omega, fragment i)`.
    #[inline]
    pub fn distance_to(&self, omega: &[u8], i: usize) -> u32 {
        self.qm.encoded_distance(omega, self.fragment(i))
    }

    /// Left distance from `omega` to the cylinder fixing the first
    /// `prefix.len()` groups.
    pub fn cylinder_lb(&self, omega: &[u8], prefix: &[u8]) -> u32 {
        omega.iter().zip(prefix).map(|(&a, &g)| self.table.get(a as usize, g as usize)).sum()
    }

    /// Non-empty bins whose cylinder lies within left distance `eps` of
    /// `omega`, found by depth-first descent over code prefixes.
    pub fn enumerate_bins(&self, omega: &[u8], eps: u32) -> BinSelection {
        let mut sel = BinSelection { bins: Vec::new(), prefixes_visited: 0, lb_evaluations: 0 };
        self.descend(omega, eps, 0, 0, 0, 0, self.directory.len(), &mut sel);
        sel
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(&self, omega: &[u8], eps: u32, depth: usize, prefix: u64, lb: u32, lo: usize, hi: usize, sel: &mut BinSelection) {
        sel.prefixes_visited += 1;
        if depth == self.m {
            sel.bins.push(lo);
            return;
        }
        let row = self.table.row(omega[depth]);
        let span = self.spans[depth + 1];
        let mut start = lo;
        for (g, &cost) in row.iter().enumerate() {
            if start >= hi {
                break;
            }
            let child = prefix * row.len() as u64 + g as u64;
            let end = start + self.directory[start..hi].partition_point(|b| b.code.0 < (child + 1) * span);
            if end > start {
                sel.lb_evaluations += 1;
                let child_lb = lb + cost;
                if child_lb <= eps {
                    self.descend(omega, eps, depth + 1, child, child_lb, start, end, sel);
                }
            }
            start = end;
        }
    }

    /// Exact left-ball search on ordinals.
    pub fn range_search_encoded(&self, omega: &[u8], eps: u32) -> Result<SearchResult, FragmentError> {
        if omega.len() != self.m {
            return Err(MatrixError::LengthMismatch { left: omega.len(), right: self.m }.into());
        }
        let sel = self.enumerate_bins(omega, eps);
        let mut stats = SearchStats {
            nodes_visited: sel.prefixes_visited,
            decision_evaluations: sel.lb_evaluations,
            leaves_opened: sel.bins.len() as u64,
            points_scanned: 0,
        };
        let mut matches = Vec::new();
        for &b in &sel.bins {
            let entry = self.directory[b];
            stats.points_scanned += entry.len() as u64;
            for i in entry.start..entry.end {
                let d = self.distance_to(omega, i);
                if d <= eps {
                    matches.push(Match { index: i, distance: d as f64 });
                }
            }
        }
        sort_matches(&mut matches);
        Ok(SearchResult { matches, stats })
    }

    pub fn range_search(&self, omega: &[u8], eps: u32) -> Result<SearchResult, FragmentError> {
        let omega = self.encode(omega)?;
        self.range_search_encoded(&omega, eps)
    }

    /// The `k` fragments nearest to `omega` on the left, by best-first
    /// branch and bound over code prefixes. Equal distances are ordered by
    /// fragment index, i.e. by `(code, ordinals)`.
    pub fn knn_encoded(&self, omega: &[u8], k: usize) -> Result<SearchResult, FragmentError> {
        if k == 0 {
            return Err(FragmentError::ZeroK);
        }
        if omega.len() != self.m {
            return Err(MatrixError::LengthMismatch { left: omega.len(), right: self.m }.into());
        }
        let mut stats = SearchStats::default();
        let mut best: BinaryHeap<(u32, usize)> = BinaryHeap::with_capacity(k + 1);
        // (lb, deeper-first, prefix, lo, hi)
        let mut queue: BinaryHeap<Reverse<(u32, Reverse<usize>, u64, usize, usize)>> = BinaryHeap::new();
        queue.push(Reverse((0, Reverse(0), 0, 0, self.directory.len())));
        while let Some(Reverse((lb, Reverse(depth), prefix, lo, hi))) = queue.pop() {
            if best.len() == k && lb > best.peek().expect("k >= 1").0 {
                break;
            }
            stats.nodes_visited += 1;
            if depth == self.m {
                let entry = self.directory[lo];
                stats.leaves_opened += 1;
                stats.points_scanned += entry.len() as u64;
                for i in entry.start..entry.end {
                    let cand = (self.distance_to(omega, i), i);
                    if best.len() < k {
                        best.push(cand);
                    } else if cand < *best.peek().expect("k >= 1") {
                        best.pop();
                        best.push(cand);
                    }
                }
                continue;
            }
            let row = self.table.row(omega[depth]);
            let span = self.spans[depth + 1];
            let mut start = lo;
            for (g, &cost) in row.iter().enumerate() {
                if start >= hi {
                    break;
                }
                let child = prefix * row.len() as u64 + g as u64;
                let end = start + self.directory[start..hi].partition_point(|b| b.code.0 < (child + 1) * span);
                if end > start {
                    stats.decision_evaluations += 1;
                    let child_lb = lb + cost;
                    if best.len() < k || child_lb <= best.peek().expect("k >= 1").0 {
                        queue.push(Reverse((child_lb, Reverse(depth + 1), child, start, end)));
                    }
                }
                start = end;
            }
        }
        let mut matches: Vec<Match> = best.into_iter().map(|(d, index)| Match { index, distance: d as f64 }).collect();
        sort_matches(&mut matches);
        Ok(SearchResult { matches, stats })
    }

    pub fn knn(&self, omega: &[u8], k: usize) -> Result<SearchResult, FragmentError> {
        let omega = self.encode(omega)?;
        self.knn_encoded(&omega, k)
    }

    /// Materializes the prefix tree over non-empty code prefixes as an
    /// [`IndexScheme`] on the bin workload: each node's certification is the
    /// cylinder distance of its prefix. One leaf per non-empty bin, holding
    /// that bin's directory position.
    pub fn bin_scheme(self: &Arc<Self>) -> IndexScheme<CylinderQuery> {
        let mut builder = SchemeBuilder::new();
        // (node, depth, prefix digits, lo, hi)
        let mut stack = vec![(SchemeBuilder::<CylinderQuery>::ROOT, 0usize, Vec::<u8>::new(), 0usize, self.directory.len())];
        let mut decisions = Vec::new();
        while let Some((node, depth, digits, lo, hi)) = stack.pop() {
            let span = self.spans[depth + 1];
            let prefix = BinCode::from_digits(&digits, self.partition.len()).0;
            let mut children: Vec<(u8, usize)> = Vec::new();
            let mut start = lo;
            for g in 0..self.partition.len() {
                let child = prefix * self.partition.len() as u64 + g as u64;
                let end = start + self.directory[start..hi].partition_point(|b| b.code.0 < (child + 1) * span);
                if end > start {
                    let mut d = digits.clone();
                    d.push(g as u8);
                    let id = if depth + 1 == self.m {
                        builder.add_leaf(node, vec![start])
                    } else {
                        let id = builder.add_inner(node);
                        stack.push((id, depth + 1, d, start, end));
                        id
                    };
                    children.push((g as u8, id));
                }
                start = end;
            }
            decisions.push((node, depth, digits, children));
        }
        for (node, depth, digits, children) in decisions {
            let index = Arc::clone(self);
            let decide: DecisionFn<CylinderQuery> = Arc::new(move |q: &CylinderQuery| {
                let base = index.cylinder_lb(&q.omega, &digits);
                children
                    .iter()
                    .filter(|(g, _)| base + index.table.get(q.omega[depth] as usize, *g as usize) <= q.eps)
                    .map(|&(_, id)| id)
                    .collect()
            });
            builder.set_decision(node, decide);
        }
        builder.build().expect("prefix tree is well formed")
    }
}

fn directory_of(codes: &[BinCode]) -> Vec<BinEntry> {
    let mut directory: Vec<BinEntry> = Vec::new();
    for (i, &code) in codes.iter().enumerate() {
        match directory.last_mut() {
            Some(last) if last.code == code => last.end = i + 1,
            _ => directory.push(BinEntry { code, start: i, end: i + 1 }),
        }
    }
    directory
}

/// Fragments under the string quasi-metric, queried by closed left balls.
impl Workload for FragmentIndex {
    type Query = RangeQuery<Vec<u8>>;

    fn len(&self) -> usize {
        self.codes.len()
    }

    fn score(&self, query: &RangeQuery<Vec<u8>>, index: usize) -> Option<f64> {
        let d = self.distance_to(&query.center, index) as f64;
        (d <= query.radius).then_some(d)
    }
}

/// A query on the bin workload: all cylinders within left distance `eps` of
/// `omega`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderQuery {
    pub omega: Vec<u8>,
    pub eps: u32,
}

impl CylinderQuery {
    /// The image of a fragment ball `B_eps(omega)` on the bin workload.
    pub fn from_ball(query: &RangeQuery<Vec<u8>>) -> Self {
        CylinderQuery { omega: query.center.clone(), eps: query.radius.floor().min(u32::MAX as f64) as u32 }
    }
}

/// The workload whose dataset is the non-empty bins of an index (ordered as
/// in the directory) and whose queries are [`CylinderQuery`]s.
#[derive(Debug, Clone)]
pub struct BinWorkload {
    pub index: Arc<FragmentIndex>,
}

impl Workload for BinWorkload {
    type Query = CylinderQuery;

    fn len(&self) -> usize {
        self.index.directory.len()
    }

    fn score(&self, query: &CylinderQuery, bin: usize) -> Option<f64> {
        let digits = self.index.directory[bin].code.digits(self.index.m, self.index.partition.len());
        let lb = self.index.cylinder_lb(&query.omega, &digits);
        (lb <= query.eps).then_some(lb as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ScoringMatrix;

    fn qm() -> SymbolQuasiMetric {
        SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62()).unwrap()
    }

    fn default_partition() -> Partition {
        Partition::amino_default(&Alphabet::amino_acids()).unwrap()
    }

    #[test]
    fn default_partition_shape() {
        let p = default_partition();
        assert_eq!(p.group_of_symbol(b'T'), Some(0));
        assert_eq!(p.group_of_symbol(b'C'), Some(4));
        assert_eq!(p.len(), 5);
        assert_eq!((0..5).map(|g| p.members(g).len()).sum::<usize>(), 20);
        assert_eq!(p.code_space(10).unwrap(), 9_765_625);
        let sorted = |s: &str| {
            let mut b = s.as_bytes().to_vec();
            b.sort_unstable();
            b
        };
        for (got, want) in p.group_strings().iter().zip(DEFAULT_GROUPS) {
            assert_eq!(sorted(got), sorted(want));
        }
    }

    #[test]
    fn partition_errors() {
        let a = Alphabet::amino_acids();
        assert!(Partition::new(&a, &["TSAN", "IVLM", "KRDEQ", "WFYH"]).is_err());
        assert!(Partition::new(&a, &["TSANT", "IVLM", "KRDEQ", "WFYH", "GPC"]).is_err());
        assert!(Partition::new(&a, &["TSANIVLMKRDEQWFYHGPC"]).is_err());
        assert!(Partition::new(&a, &["TSAN", "IVLM", "KRDEQ", "WFYH", "GPCX"]).is_err());
        let parsed = Partition::parse(&a, "# groups\nTSAN\nIVLM\n\nKRDEQ\nWFYH\nGPC\n").unwrap();
        assert_eq!(parsed, default_partition());
        assert!(matches!(default_partition().code_space(40), Err(FragmentError::CodeOverflow { .. })));
    }

    #[test]
    fn group_distance_table() {
        let q = qm();
        let t = GroupDistTable::new(&q, &default_partition()).unwrap();
        let a = q.alphabet();
        let tt = a.index_of(b'T').unwrap();
        assert_eq!(t.get(tt, 0), 0);
        assert_eq!(t.get(tt, 1), 5);
        for s in 0..20 {
            assert!((0..5).any(|g| t.get(s, g) == 0));
        }
    }

    #[test]
    fn codes_and_lower_bounds() {
        let p = default_partition();
        let a = Alphabet::amino_acids();
        let code = p.bin_code(&a.encode(b"TTIIK").unwrap());
        assert_eq!(code.digits(5, 5), vec![0, 0, 1, 1, 2]);
        assert_eq!(BinCode::from_digits(&[0, 0, 1, 1, 2], 5), code);
        let idx = FragmentIndex::from_strings(qm(), p, &["SS", "II"]).unwrap();
        let tt = a.encode(b"TT").unwrap();
        assert_eq!(idx.cylinder_lb(&tt, &[1, 1]), 10);
        assert_eq!(idx.cylinder_lb(&tt, &[]), 0);
        assert_eq!(idx.cylinder_lb(&tt, &[0, 0]), 0);
    }

    #[test]
    fn build_dedups_and_orders() {
        let idx = FragmentIndex::from_strings(qm(), default_partition(), &["II", "SS", "SS", "KK"]).unwrap();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.directory().len(), 3);
        assert!(idx.directory().iter().all(|b| b.len() == 1));
        let ss = idx.position(&idx.alphabet().encode(b"SS").unwrap()).unwrap();
        assert_eq!(idx.count(ss), 2);
        assert_eq!(idx.total_count(), 4);
        assert_eq!(idx.fragment_string(0), "SS");
        assert!(matches!(
            FragmentIndex::from_strings(qm(), default_partition(), &["II", "SSS"]),
            Err(FragmentError::MixedLength { index: 1, .. })
        ));
        assert!(matches!(
            FragmentIndex::from_strings::<&str>(qm(), default_partition(), &[]),
            Err(FragmentError::Empty)
        ));
    }

    #[test]
    fn toy_queries() {
        let idx = FragmentIndex::from_strings(qm(), default_partition(), &["SS", "II"]).unwrap();
        let r = idx.knn(b"TT", 1).unwrap();
        assert_eq!(r.matches.len(), 1);
        assert_eq!(idx.fragment_string(r.matches[0].index), "SS");
        assert_eq!(r.matches[0].distance, 8.0);
        assert_eq!(idx.knn(b"TT", 5).unwrap().matches.len(), 2);
        assert_eq!(idx.knn(b"TT", 0).unwrap_err(), FragmentError::ZeroK);
        let r = idx.range_search(b"SS", 0).unwrap();
        assert_eq!(r.matches.len(), 1);
        assert!(idx.range_search(b"TX", 3).is_err());
        assert!(idx.range_search(b"TTT", 3).is_err());
    }

    #[test]
    fn bin_scheme_matches_enumeration() {
        let idx = Arc::new(
            FragmentIndex::from_strings(qm(), default_partition(), &["SSA", "IIV", "KKR", "WWF", "GPC", "TTI", "SAN"]).unwrap(),
        );
        let scheme = idx.bin_scheme();
        let w = BinWorkload { index: Arc::clone(&idx) };
        for eps in [0, 3, 8, 15, 30] {
            let omega = idx.alphabet().encode(b"TSL").unwrap();
            let q = CylinderQuery { omega: omega.clone(), eps };
            assert_eq!(scheme.answer(&w, &q).unwrap().indices(), idx.enumerate_bins(&omega, eps).bins);
        }
    }
}
