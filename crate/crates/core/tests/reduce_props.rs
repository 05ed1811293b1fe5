mod common;

use std::sync::Arc;

use proptest::prelude::*;

use common::AMINO;
use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::reduce::{
    bin_workload, fragment_reduction, trivial_reduction, BinEnumeration, InductiveReduction, MetricBallWorkload,
    MetricReplacement, ProjectiveReduction, ReduceError, TrivialWorkload,
};
use qmindex::scheme::{
    check_consistency, AccessMethod, LinearScan, RangeQuery, SchemeAccess, SchemeError, SearchResult, SimilarityWorkload,
    Workload,
};

fn qm() -> SymbolQuasiMetric {
    SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62()).unwrap()
}

fn index_of(xs: &[Vec<u8>]) -> Arc<FragmentIndex> {
    Arc::new(FragmentIndex::from_strings(qm(), Partition::amino_default(&Alphabet::amino_acids()).unwrap(), xs).unwrap())
}

fn peptide(m: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(AMINO.to_vec()), m)
}

fn scan<W: Workload>(w: &W, q: &W::Query) -> Vec<usize> {
    (0..w.len()).filter(|&i| w.score(q, i).is_some()).collect()
}

/// Answers target queries through a second reduction, so two reductions can
/// be chained without composing them.
struct Through<'a, Q2, Q3, W2, M> {
    r: &'a ProjectiveReduction<Q2, Q3>,
    w2: &'a W2,
    method: &'a M,
}

impl<Q2, Q3, W2: Workload<Query = Q2>, M: AccessMethod<Q3>> AccessMethod<Q2> for Through<'_, Q2, Q3, W2, M> {
    fn answer(&self, q: &Q2) -> Result<SearchResult, SchemeError> {
        Ok(self.r.answer(self.w2, self.method, q).map_err(|e| SchemeError::Structure(e.to_string()))?.result)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fragment_reduction_answers_exactly(
        xs in prop::collection::vec(peptide(6), 1..300),
        omega in peptide(6),
        eps in 0u32..40,
    ) {
        let index = index_of(&xs);
        let red = fragment_reduction(&index);
        let w = index.encode(&omega).unwrap();
        let q = RangeQuery::new(w, eps as f64).unwrap();
        red.verify(&*index, &bin_workload(Arc::clone(&index)), std::slice::from_ref(&q)).unwrap();
        let got = red.answer(&*index, &BinEnumeration(Arc::clone(&index)), &q).unwrap();
        let want = scan(&*index, &q);
        prop_assert_eq!(got.result.indices(), want.clone());
        if !want.is_empty() {
            prop_assert!(got.overhead.ratio() >= 1.0);
        } else {
            prop_assert!(got.overhead.ratio().is_infinite());
        }
        // The same answers through the scheme induced from the bin prefix tree.
        let induced = red.induced_scheme(&index.bin_scheme()).unwrap();
        prop_assert_eq!(induced.answer(&*index, &q).unwrap().indices(), want);
    }

    #[test]
    fn metric_replacement_answers_exactly(
        xs in prop::collection::vec(prop::collection::vec(0u8..20, 6), 1..200),
        omega in prop::collection::vec(0u8..20, 6),
        eps in 0u32..40,
        sum in any::<bool>(),
    ) {
        let qm = qm();
        let mode = if sum { MetricMode::Sum } else { MetricMode::Max };
        let rep = MetricReplacement::new(&qm, mode);
        let w1 = SimilarityWorkload::new("Sigma^6", xs.clone(), qm);
        let w2 = MetricBallWorkload { points: xs.clone(), metric: rep.metric.clone() };
        let red = rep.reduction(xs.len());
        let q = RangeQuery::new(omega, eps as f64).unwrap();
        red.verify(&w1, &w2, std::slice::from_ref(&q)).unwrap();
        let got = red.answer(&w1, &LinearScan(&w2), &q).unwrap();
        let want = scan(&w1, &q);
        prop_assert_eq!(got.result.indices(), want.clone());
        if !want.is_empty() {
            prop_assert!(got.overhead.ratio() >= 1.0);
        }
    }

    #[test]
    fn chained_reductions_equal_composite(
        xs in prop::collection::vec(peptide(5), 1..200),
        omega in peptide(5),
        eps in 0u32..35,
    ) {
        let index = index_of(&xs);
        let bins = bin_workload(Arc::clone(&index));
        let first = ProjectiveReduction::<RangeQuery<Vec<u8>>, _>::identity(index.len());
        let second = fragment_reduction(&index);
        let composite = first.compose(&second).unwrap();
        let q = RangeQuery::new(index.encode(&omega).unwrap(), eps as f64).unwrap();
        let access = BinEnumeration(Arc::clone(&index));
        let chained = first.answer(&*index, &Through { r: &second, w2: &*index, method: &access }, &q).unwrap();
        let direct = composite.answer(&*index, &access, &q).unwrap();
        prop_assert_eq!(chained.result.indices(), direct.result.indices());

        // Bins collapsed onto the trivial workload: answering degenerates to a scan.
        let collapse = second.compose(&trivial_reduction(bins.len())).unwrap();
        let via_trivial = collapse.answer(&*index, &LinearScan(&TrivialWorkload), &q).unwrap();
        prop_assert_eq!(via_trivial.overhead.candidates, index.len());
        prop_assert_eq!(via_trivial.result.indices(), direct.result.indices());
    }

    #[test]
    fn induced_scheme_preserves_consistency(
        xs in prop::collection::vec(peptide(5), 1..150),
        probes in prop::collection::vec((peptide(5), 0u32..35), 1..10),
    ) {
        let index = index_of(&xs);
        let red = fragment_reduction(&index);
        let bins = bin_workload(Arc::clone(&index));
        let scheme = index.bin_scheme();
        let cyl: Vec<_> = probes
            .iter()
            .map(|(w, e)| red.map_query(&RangeQuery::new(index.encode(w).unwrap(), *e as f64).unwrap()))
            .collect();
        prop_assert!(check_consistency(&scheme, &bins, &cyl).unwrap().is_consistent());
        let balls: Vec<_> =
            probes.iter().map(|(w, e)| RangeQuery::new(index.encode(w).unwrap(), *e as f64).unwrap()).collect();
        let induced = red.induced_scheme(&scheme).unwrap();
        prop_assert!(check_consistency(&induced, &*index, &balls).unwrap().is_consistent());
        // And the bin scheme itself answers like bin enumeration.
        let access = SchemeAccess { scheme: &scheme, workload: &bins };
        for q in &cyl {
            prop_assert_eq!(access.answer(q).unwrap().indices(), BinEnumeration(Arc::clone(&index)).answer(q).unwrap().indices());
        }
    }

    /// A multiset corpus `X2` indexes the deduplicated dataset `X1` by induction.
    #[test]
    fn inductive_reduction_deduplicates(
        xs in prop::collection::vec(prop::collection::vec(0u8..4, 4), 1..120),
        omega in prop::collection::vec(0u8..20, 4),
        eps in 0u32..30,
    ) {
        let qm = qm();
        let unique = common::unique(xs.clone());
        let map: Vec<Option<usize>> = xs.iter().map(|x| unique.binary_search(x).ok()).collect();
        let w1 = SimilarityWorkload::new("X1", unique.clone(), qm.clone());
        let w2 = SimilarityWorkload::new("X2", xs.clone(), qm);
        let red = InductiveReduction::new(map, unique.len(), Arc::new(|q: &RangeQuery<Vec<u8>>| q.clone())).unwrap();
        let q = RangeQuery::new(omega, eps as f64).unwrap();
        red.verify(&w1, &w2, std::slice::from_ref(&q)).unwrap();
        let got = red.answer(&w1, &LinearScan(&w2), &q).unwrap();
        let want = scan(&w1, &q);
        prop_assert_eq!(got.result.indices(), want.clone());
        prop_assert_eq!(got.overhead.answers, want.len());
        prop_assert!(got.overhead.candidates >= got.overhead.answers);
    }
}

#[test]
fn invalid_reductions_are_rejected() {
    let id = |q: &()| *q;
    assert!(matches!(
        ProjectiveReduction::<(), ()>::new(vec![0, 3], 2, Arc::new(id)),
        Err(ReduceError::PointOutOfRange { .. })
    ));
    assert!(matches!(
        InductiveReduction::<(), ()>::new(vec![Some(0), None], 2, Arc::new(id)),
        Err(ReduceError::NotSurjective { point: 1 })
    ));
    let a = ProjectiveReduction::<(), ()>::identity(3);
    let b = ProjectiveReduction::<(), ()>::identity(4);
    assert!(matches!(a.compose(&b), Err(ReduceError::Mismatch(_))));
}

#[test]
fn unsound_query_map_is_caught_by_verify() {
    let qm = qm();
    let xs: Vec<Vec<u8>> = (0..20u8).map(|a| vec![a, a]).collect();
    let w1 = SimilarityWorkload::new("Sigma^2", xs.clone(), qm.clone());
    let rep = MetricReplacement::new(&qm, MetricMode::Max);
    let w2 = MetricBallWorkload { points: xs.clone(), metric: rep.metric.clone() };
    // Keeps the radius unscaled: the metric ball is too small.
    let naive = ProjectiveReduction::new(
        (0..xs.len()).collect(),
        xs.len(),
        Arc::new(|q: &RangeQuery<Vec<u8>>| qmindex::reduce::ScaledBall { center: q.center.clone(), bound: q.radius as u64, den: 1 }),
    )
    .unwrap();
    let probes: Vec<_> = xs.iter().map(|x| RangeQuery::new(x.clone(), 12.0).unwrap()).collect();
    assert!(matches!(naive.verify(&w1, &w2, &probes), Err(ReduceError::Violation { .. })));
    rep.reduction(xs.len()).verify(&w1, &w2, &probes).unwrap();
}
