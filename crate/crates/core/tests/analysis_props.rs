mod common;

use proptest::prelude::*;

use qmindex::analysis::{
    alpha_inverse, ball_growth, bounds_from_values, cert_values, concentration_anchor, concentration_exact,
    distance_exponent, qm_metric_ratio, rngconc_bounds, AnalysisError, CertAnchor, EmpiricalMMSpace, EstimatorKind,
    EXACT_CAP,
};
use qmindex::distance::{DistanceTable, Euclidean, FnDistance};
use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolQuasiMetric};

fn qm() -> SymbolQuasiMetric {
    SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62()).unwrap()
}

fn small_space() -> impl Strategy<Value = (Vec<Vec<f64>>, Option<Vec<f64>>)> {
    (2usize..11).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0i32..6, 2), n),
            prop::option::of(prop::collection::vec(1u32..5, n)),
        )
            .prop_map(|(pts, w)| {
                let pts = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
                let w = w.map(|w| {
                    let t: u32 = w.iter().sum();
                    w.into_iter().map(|x| x as f64 / t as f64).collect()
                });
                (pts, w)
            })
    })
}

fn grid(space: &EmpiricalMMSpace) -> Vec<f64> {
    (0..=((space.diameter() + 1.0) * 4.0) as usize).map(|i| i as f64 * 0.25).collect()
}

/// The definition, summed in index order.
fn brute_alpha(space: &EmpiricalMMSpace, eps: f64) -> f64 {
    if eps == 0.0 {
        return 0.5;
    }
    let n = space.len();
    let full = (1u32 << n) - 1;
    let mu = |mask: u32| if mask == full { 1.0 } else { (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| space.weight(i)).sum::<f64>() };
    let mut best = f64::INFINITY;
    for a in 1u32..(1 << n) {
        if mu(a) < 0.5 - 1e-12 {
            continue;
        }
        let hull = (0..n).filter(|&x| (0..n).any(|y| a >> y & 1 == 1 && space.dist(x, y) <= eps)).fold(0, |m, x| m | 1 << x);
        best = best.min(mu(hull));
    }
    (1.0 - best).clamp(0.0, 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_concentration_matches_definition((pts, w) in small_space()) {
        let space = EmpiricalMMSpace::from_points(&pts, &Euclidean, w).unwrap();
        let g = grid(&space);
        let est = concentration_exact(&space, &g).unwrap();
        prop_assert_eq!(est.kind, EstimatorKind::Exact);
        prop_assert_eq!(est.alpha[0], 0.5);
        for (i, &e) in g.iter().enumerate() {
            prop_assert!((est.alpha[i] - brute_alpha(&space, e)).abs() < 1e-12);
            if i > 0 {
                prop_assert!(est.alpha[i] <= est.alpha[i - 1]);
            }
        }
        prop_assert_eq!(*est.alpha.last().unwrap(), 0.0);
    }

    #[test]
    fn anchor_estimate_never_exceeds_exact((pts, w) in small_space()) {
        let space = EmpiricalMMSpace::from_points(&pts, &Euclidean, w).unwrap();
        let g = grid(&space);
        let exact = concentration_exact(&space, &g).unwrap();
        let anchors: Vec<usize> = (0..space.len()).collect();
        let lb = concentration_anchor(&space, &g, &anchors).unwrap();
        prop_assert_eq!(lb.kind, EstimatorKind::AnchorLowerBound);
        for i in 0..g.len() {
            prop_assert!(lb.alpha[i] <= exact.alpha[i] + 1e-12);
            if i > 0 {
                prop_assert!(lb.alpha[i] <= lb.alpha[i - 1]);
            }
        }
    }

    /// The lower bounds hold against exhaustive block-access counts.
    #[test]
    fn access_bounds_hold_on_random_covers(
        (pts, _) in small_space(),
        blocks in prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..3), 1..12),
    ) {
        let n = pts.len();
        prop_assume!(n >= 4);
        let space = EmpiricalMMSpace::from_points(&pts, &Euclidean, None).unwrap();
        let g = grid(&space);
        let est = concentration_exact(&space, &g).unwrap();
        let mut cover: Vec<Vec<usize>> = blocks.iter().map(|b| b.iter().map(|i| i.index(n)).collect()).collect();
        cover.extend((0..n).map(|x| vec![x]));
        let mass = |b: &Vec<usize>| { let mut b = b.clone(); b.sort(); b.dedup(); b.len() as f64 / n as f64 };
        cover.retain(|b| mass(b) <= 0.25);
        let heaviest = cover.iter().map(mass).fold(0.0, f64::max);
        for xi in [heaviest, (heaviest + 0.25) / 2.0, 0.25] {
            for &eps in &g {
                let Ok(b) = rngconc_bounds(xi, eps, &est) else { continue };
                let met: Vec<usize> = (0..n)
                    .map(|w| cover.iter().filter(|blk| blk.iter().any(|&x| space.dist(w, x) <= eps)).count())
                    .collect();
                let avg = met.iter().sum::<usize>() as f64 / n as f64;
                prop_assert!(avg + 1e-12 >= b.average as f64, "xi {} eps {}: avg {} < {}", xi, eps, avg, b.average);
                prop_assert!(*met.iter().max().unwrap() as u64 >= b.worst_case);
            }
        }
    }

    #[test]
    fn ball_growth_is_a_monotone_fraction(
        pts in prop::collection::vec(prop::collection::vec(0u8..20, 5), 1..60),
        centers in prop::collection::vec(prop::collection::vec(0u8..20, 5), 1..5),
    ) {
        let radii: Vec<f64> = (0..30).map(|r| 2.0 * r as f64).collect();
        let q = qm();
        let rows = ball_growth(&pts, &q, &centers, &radii).unwrap();
        for c in &centers {
            let per = ball_growth(&pts, &q, std::slice::from_ref(c), &radii).unwrap();
            prop_assert!(per.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        }
        prop_assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.fraction)));
    }

    #[test]
    fn exponent_ignores_count_scale(scale in 0.001f64..1000.0, power in 0.5f64..4.0) {
        let rows: Vec<(f64, f64)> = (1..40).map(|r| (r as f64, (r as f64).powf(power))).collect();
        let scaled: Vec<(f64, f64)> = rows.iter().map(|&(r, c)| (r, c * scale)).collect();
        let a = distance_exponent(&rows, 1.0, 39.0).unwrap();
        let b = distance_exponent(&scaled, 1.0, 39.0).unwrap();
        prop_assert!((a - power).abs() < 1e-9);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn metric_balls_never_smaller(
        pts in prop::collection::vec(prop::collection::vec(0u8..20, 6), 5..80),
        probes in prop::collection::vec(prop::collection::vec(0u8..20, 6), 1..6),
    ) {
        let q = qm();
        for mode in [MetricMode::Max, MetricMode::Sum] {
            let rows = qm_metric_ratio(&pts, &q, &q.associated_metric(mode), &[1, 3], &probes).unwrap();
            for r in rows {
                prop_assert!(r.ratios.iter().all(|&x| x >= 1.0));
                prop_assert!(r.max >= r.mean && r.mean >= 1.0);
            }
        }
    }

    #[test]
    fn bin_anchor_below_point_anchor(
        xs in prop::collection::vec(prop::collection::vec(prop::sample::select(common::AMINO.to_vec()), 6), 1..50),
        omegas in prop::collection::vec(prop::collection::vec(0u8..20, 6), 1..20),
        pick in any::<prop::sample::Index>(),
    ) {
        let index = FragmentIndex::from_strings(qm(), Partition::amino_default(&Alphabet::amino_acids()).unwrap(), &xs).unwrap();
        let i = pick.index(index.len());
        let bins = cert_values(&index, &CertAnchor::Bin(index.code(i)), &omegas);
        let points = cert_values(&index, &CertAnchor::Point(index.fragment(i).to_vec()), &omegas);
        prop_assert!(bins.iter().zip(&points).all(|(b, p)| b <= p));
    }
}

#[test]
fn bounds_from_known_values() {
    assert_eq!(bounds_from_values(0.25, 0.0), (2, 2));
    assert_eq!(bounds_from_values(0.01, 0.05), (5, 19));
    assert_eq!(bounds_from_values(0.1, 0.25), (1, 3));
}

#[test]
fn inverse_and_domain_errors() {
    let space = EmpiricalMMSpace::new(DistanceTable::new(2, vec![0.0, 1.0, 1.0, 0.0]), None).unwrap();
    let est = concentration_exact(&space, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(alpha_inverse(&est, 0.25), Some(1.0));
    assert!(matches!(rngconc_bounds(0.25, 0.5, &est), Err(AnalysisError::Domain { .. })));
    assert!(matches!(rngconc_bounds(0.3, 2.0, &est), Err(AnalysisError::Xi(_))));
    assert!(matches!(rngconc_bounds(0.0, 2.0, &est), Err(AnalysisError::Xi(_))));
}

#[test]
fn space_validation() {
    let asym = FnDistance::new(|a: &f64, b: &f64| if a < b { 2.0 * (b - a) } else { a - b }, false);
    assert!(matches!(EmpiricalMMSpace::from_points(&[0.0, 1.0], &asym, None), Err(AnalysisError::Asymmetric { .. })));
    let t = DistanceTable::new(2, vec![0.0, 1.0, 1.0, 0.0]);
    assert!(matches!(EmpiricalMMSpace::new(t.clone(), Some(vec![0.7, 0.7])), Err(AnalysisError::Weights(_))));
    assert!(matches!(EmpiricalMMSpace::new(t, Some(vec![-0.5, 1.5])), Err(AnalysisError::Weights(_))));
    let pts: Vec<f64> = (0..=EXACT_CAP).map(|i| i as f64).collect();
    let line = FnDistance::new(|a: &f64, b: &f64| (a - b).abs(), true);
    let big = EmpiricalMMSpace::from_points(&pts, &line, None).unwrap();
    assert!(matches!(concentration_exact(&big, &[0.0, 1.0]), Err(AnalysisError::TooLarge { .. })));
    assert!(concentration_anchor(&big, &[0.0, 1.0], &[0, 10]).is_ok());
}
