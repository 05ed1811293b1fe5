use std::sync::Arc;

use proptest::prelude::*;

use qmindex::distance::{Distance, Euclidean, FnDistance};
use qmindex::matrix::{MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::scheme::{
    build_cert_tree, build_tree, check_consistency, disjoint_sum, gnat_layout, linear_scan, mtree_layout, vp_layout,
    BlockTree, BuildOptions, CertSpec, Certification, Consistency, LayoutOptions, RangeQuery, SchemeBuilder, SchemeError,
    SimilarityWorkload, TreeKind, Workload,
};

fn qm() -> SymbolQuasiMetric {
    SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62()).unwrap()
}

fn points_2d() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 1..120)
}

fn encoded_strings(n: std::ops::Range<usize>, m: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..20, m), n)
}

fn scan<P, D: Distance<P>>(w: &SimilarityWorkload<P, D>, q: &RangeQuery<P>) -> Vec<usize> {
    (0..w.len()).filter(|&i| w.score(q, i).is_some()).collect()
}

const KINDS: [TreeKind; 4] = [TreeKind::MTree, TreeKind::QmMTree, TreeKind::VantagePair, TreeKind::Gnat];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn euclidean_trees_equal_linear_scan(
        points in points_2d(),
        centers in prop::collection::vec(prop::collection::vec(-12.0f64..12.0, 2), 1..8),
        radius in 0.0f64..8.0,
        cap in 1usize..10,
        kind in prop::sample::select(KINDS.to_vec()),
    ) {
        let layout = LayoutOptions { leaf_capacity: cap, seed: 3 };
        let scheme = build_tree(&points, Euclidean, kind, layout, BuildOptions::default()).unwrap();
        scheme.check_covering(points.len()).unwrap();
        let w = SimilarityWorkload::new("R^2", points, Euclidean);
        for c in centers {
            let q = RangeQuery::new(c, radius).unwrap();
            let got = scheme.answer(&w, &q).unwrap();
            prop_assert_eq!(got.indices(), scan(&w, &q));
            prop_assert!(got.stats.points_scanned as usize >= got.matches.len());
            for m in &got.matches {
                prop_assert!(m.distance <= radius);
            }
        }
    }

    #[test]
    fn quasi_metric_tree_equals_linear_scan(
        points in encoded_strings(1..150, 6),
        centers in encoded_strings(1..6, 6),
        radius in 0u32..40,
    ) {
        let qm = qm();
        let layout = LayoutOptions { leaf_capacity: 6, seed: 5 };
        let scheme = build_tree(&points, qm.clone(), TreeKind::QmMTree, layout, BuildOptions::default()).unwrap();
        let w = SimilarityWorkload::new("Sigma^6", points, qm);
        let probes: Vec<_> = centers.into_iter().map(|c| RangeQuery::new(c, radius as f64).unwrap()).collect();
        prop_assert!(check_consistency(&scheme, &w, &probes).unwrap().is_consistent());
    }

    #[test]
    fn answers_grow_with_radius(
        points in encoded_strings(20..120, 5),
        center in prop::collection::vec(0u8..20, 5),
        r1 in 0u32..30,
        extra in 0u32..15,
    ) {
        let qm = qm();
        let metric = qm.associated_metric(MetricMode::Max);
        let layout = LayoutOptions { leaf_capacity: 4, seed: 9 };
        let scheme = build_tree(&points, qm.clone(), TreeKind::QmMTree, layout, BuildOptions::default()).unwrap();
        let w = SimilarityWorkload::new("Sigma^5", points.clone(), qm);
        let small = scheme.answer(&w, &RangeQuery::new(center.clone(), r1 as f64).unwrap()).unwrap();
        let large = scheme.answer(&w, &RangeQuery::new(center.clone(), (r1 + extra) as f64).unwrap()).unwrap();
        let li = large.indices();
        prop_assert!(small.indices().iter().all(|i| li.binary_search(i).is_ok()));
        prop_assert!(small.stats.points_scanned <= large.stats.points_scanned);
        let scheme = build_tree(&points, metric.clone(), TreeKind::VantagePair, layout, BuildOptions::default()).unwrap();
        let w = SimilarityWorkload::new("Sigma^5", points, metric);
        let small = scheme.answer(&w, &RangeQuery::new(center.clone(), r1 as f64).unwrap()).unwrap();
        let large = scheme.answer(&w, &RangeQuery::new(center, (r1 + extra) as f64).unwrap()).unwrap();
        prop_assert!(small.stats.points_scanned <= large.stats.points_scanned);
        let li = large.indices();
        prop_assert!(small.indices().iter().all(|i| li.binary_search(i).is_ok()));
    }

    /// `f_t(w) <= rho(w, x)` for every `x` in the block: the pruning test never
    /// discards a true answer.
    #[test]
    fn certifications_lower_bound_left_distances(
        points in encoded_strings(10..80, 6),
        omegas in encoded_strings(1..10, 6),
        left in any::<bool>(),
    ) {
        let qm = qm();
        let metric = qm.associated_metric(MetricMode::Sum);
        let layout = LayoutOptions { leaf_capacity: 4, seed: 11 };
        let (tree, spec) = if left {
            mtree_layout(&points, &qm, layout, true).unwrap()
        } else {
            vp_layout(&points, &metric, layout).unwrap()
        };
        for node in 1..tree.len() {
            let cert = spec.certs[node].as_ref().unwrap();
            for w in &omegas {
                for &x in tree.members(node) {
                    let (f, d) = if left {
                        (cert.evaluate(w, &qm), qm.distance(w, &points[x]))
                    } else {
                        (cert.evaluate(w, &metric), metric.distance(w, &points[x]))
                    };
                    prop_assert!(f <= d + 1e-9, "node {node}: f = {f} > d = {d}");
                }
            }
        }
    }

    #[test]
    fn gnat_layout_covers_and_answers(points in points_2d(), cap in 1usize..8) {
        let layout = LayoutOptions { leaf_capacity: cap, seed: 13 };
        let (tree, spec) = gnat_layout(&points, &Euclidean, layout).unwrap();
        // A single block has no certification tree; build_tree scans linearly then.
        prop_assume!(tree.len() > 1);
        let scheme = build_cert_tree(&points, &tree, &spec, Euclidean, BuildOptions::default()).unwrap();
        scheme.check_covering(points.len()).unwrap();
        let w = SimilarityWorkload::new("R^2", points.clone(), Euclidean);
        let q = RangeQuery::new(points[0].clone(), 3.0).unwrap();
        prop_assert_eq!(scheme.answer(&w, &q).unwrap().indices(), scan(&w, &q));
    }
}

#[test]
fn metric_families_reject_asymmetric_oracles() {
    let qm = qm();
    let a = vec![0u8; 4];
    let b = vec![1u8; 4];
    assert!(matches!(Certification::mtree(a.clone(), 1.0, &qm), Err(SchemeError::FamilyMismatch { .. })));
    assert!(matches!(Certification::vantage_pair(a.clone(), b, &qm), Err(SchemeError::FamilyMismatch { .. })));
    assert!(matches!(
        Certification::gnat(a.clone(), 1.0, qmindex::scheme::GnatSide::Inner, &qm),
        Err(SchemeError::FamilyMismatch { .. })
    ));
    let points = vec![a.clone(), vec![2u8; 4], vec![3u8; 4]];
    let layout = LayoutOptions { leaf_capacity: 1, seed: 0 };
    assert!(build_tree(&points, qm.clone(), TreeKind::VantagePair, layout, BuildOptions::default()).is_err());
    assert!(build_tree(&points, qm, TreeKind::QmMTree, layout, BuildOptions::default()).is_ok());
}

#[test]
fn non_lipschitz_certification_is_rejected() {
    let points: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let mut tree = BlockTree::new((0..20).collect());
    tree.add_child(0, (0..10).collect());
    tree.add_child(0, (10..20).collect());
    // Slope 3 in the coordinate: not 1-Lipschitz.
    let steep = |lo: f64| {
        Certification::Custom {
            family: qmindex::scheme::CertFamily::Custom,
            f: Arc::new(move |p: &Vec<f64>| 3.0 * (p[0] - lo).abs() - 100.0),
        }
    };
    let spec = CertSpec { certs: vec![None, Some(steep(0.0)), Some(steep(10.0))] };
    let err = build_cert_tree(&points, &tree, &spec, Euclidean, BuildOptions::default()).unwrap_err();
    assert!(matches!(err, SchemeError::Lipschitz { .. }), "{err:?}");
}

#[test]
fn positive_certification_on_block_is_rejected() {
    let points: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
    let mut tree = BlockTree::new((0..4).collect());
    tree.add_child(0, vec![0, 1]);
    tree.add_child(0, vec![2, 3]);
    let spec = CertSpec {
        certs: vec![
            None,
            Some(Certification::mtree(vec![0.0], 0.5, &Euclidean).unwrap()),
            Some(Certification::mtree(vec![2.5], 0.5, &Euclidean).unwrap()),
        ],
    };
    let err = build_cert_tree(&points, &tree, &spec, Euclidean, BuildOptions::default()).unwrap_err();
    assert!(matches!(err, SchemeError::CertificationPositive { .. }), "{err:?}");
}

#[test]
fn broken_scheme_yields_miss_witness() {
    let points: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
    let mut b = SchemeBuilder::new();
    let l = b.add_leaf(SchemeBuilder::<RangeQuery<Vec<f64>>>::ROOT, vec![0, 1, 2]);
    b.add_leaf(SchemeBuilder::<RangeQuery<Vec<f64>>>::ROOT, vec![3, 4, 5]);
    // Always descends into the left leaf only.
    b.set_decision(SchemeBuilder::<RangeQuery<Vec<f64>>>::ROOT, Arc::new(move |_| vec![l]));
    let scheme = b.build().unwrap();
    let w = SimilarityWorkload::new("R", points, Euclidean);
    let probes = vec![RangeQuery::new(vec![0.0], 0.5).unwrap(), RangeQuery::new(vec![5.0], 0.5).unwrap()];
    match check_consistency(&scheme, &w, &probes).unwrap() {
        Consistency::Inconsistent(wit) => {
            assert_eq!(wit.probe, 1);
            assert_eq!(wit.missed, 5);
        }
        c => panic!("expected a miss, got {c:?}"),
    }
}

#[test]
fn decision_outside_children_is_reported() {
    let mut b = SchemeBuilder::<()>::new();
    let leaf = b.add_leaf(SchemeBuilder::<()>::ROOT, vec![0]);
    let inner = b.add_inner(SchemeBuilder::<()>::ROOT);
    let deep = b.add_leaf(inner, vec![1]);
    b.set_decision(inner, Arc::new(move |_| vec![deep]));
    b.set_decision(SchemeBuilder::<()>::ROOT, Arc::new(move |_| vec![leaf, deep]));
    let scheme = b.build().unwrap();
    struct Two;
    impl Workload for Two {
        type Query = ();
        fn len(&self) -> usize {
            2
        }
        fn score(&self, _: &(), _: usize) -> Option<f64> {
            Some(0.0)
        }
    }
    assert!(matches!(scheme.answer(&Two, &()), Err(SchemeError::CorruptDecision { .. })));
}

#[test]
fn disjoint_sum_answers_both_parts() {
    let a: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
    let b: Vec<Vec<f64>> = (0..20).map(|i| vec![100.0 + i as f64]).collect();
    let layout = LayoutOptions { leaf_capacity: 4, seed: 1 };
    let sa = build_tree(&a, Euclidean, TreeKind::MTree, layout, BuildOptions::default()).unwrap();
    let sb = build_tree(&b, Euclidean, TreeKind::VantagePair, layout, BuildOptions::default()).unwrap();
    let sum = disjoint_sum(vec![(sa, a.len()), (sb, b.len())]).unwrap();
    let all: Vec<Vec<f64>> = a.into_iter().chain(b).collect();
    sum.check_covering(all.len()).unwrap();
    let w = SimilarityWorkload::new("R", all, Euclidean);
    for c in [5.0, 29.5, 110.0, 60.0] {
        let q = RangeQuery::new(vec![c], 3.0).unwrap();
        assert_eq!(sum.answer(&w, &q).unwrap().indices(), scan(&w, &q));
    }
}

#[test]
fn linear_scan_scheme_touches_everything() {
    let points: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let w = SimilarityWorkload::new("R", points, Euclidean);
    let r = linear_scan(10).answer(&w, &RangeQuery::new(vec![0.0], 1.0).unwrap()).unwrap();
    assert_eq!(r.indices(), vec![0, 1]);
    assert_eq!(r.stats.points_scanned, 10);
}

#[test]
fn invalid_radius_is_rejected() {
    assert!(RangeQuery::new(0u8, -1.0).is_err());
    assert!(RangeQuery::new(0u8, f64::NAN).is_err());
    let d = FnDistance::new(|a: &f64, b: &f64| (a - b).abs(), true);
    assert_eq!(d.distance(&1.0, &4.0), 3.0);
}
