//! Build M-tree, vantage-pair and GNAT schemes and check them against a scan.
//!
//! cargo run --release --example certification_trees

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmindex::distance::Euclidean;
use qmindex::matrix::{MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::scheme::{build_tree, check_consistency, BuildOptions, LayoutOptions, RangeQuery, SimilarityWorkload, TreeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layout = LayoutOptions { leaf_capacity: 16, seed: 2 };

    let vectors: Vec<Vec<f64>> = (0..2000).map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let probes: Vec<_> =
        (0..50).map(|i| RangeQuery::new(vectors[i * 7].clone(), 0.15).unwrap()).collect();
    let w = SimilarityWorkload::new("R^4", vectors.clone(), Euclidean);
    for kind in [TreeKind::MTree, TreeKind::VantagePair, TreeKind::Gnat] {
        let scheme = build_tree(&vectors, Euclidean, kind, layout, BuildOptions::default())?;
        let scanned: u64 = probes.iter().map(|q| scheme.answer(&w, q).unwrap().stats.points_scanned).sum();
        println!(
            "{kind:?} on R^4: {} nodes, consistent = {}, mean scanned {:.1} of {}",
            scheme.node_count(),
            check_consistency(&scheme, &w, &probes)?.is_consistent(),
            scanned as f64 / probes.len() as f64,
            vectors.len()
        );
    }

    // Strings under the asymmetric distance: only the left-ball M-tree applies.
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let strings: Vec<Vec<u8>> = (0..2000).map(|_| (0..8).map(|_| rng.gen_range(0..20)).collect()).collect();
    let probes: Vec<_> = (0..50).map(|i| RangeQuery::new(strings[i].clone(), 20.0).unwrap()).collect();
    let w = SimilarityWorkload::new("Sigma^8", strings.clone(), qm.clone());
    let scheme = build_tree(&strings, qm.clone(), TreeKind::QmMTree, layout, BuildOptions::default())?;
    println!("QmMTree on Sigma^8: consistent = {}", check_consistency(&scheme, &w, &probes)?.is_consistent());
    match build_tree(&strings, qm.clone(), TreeKind::VantagePair, layout, BuildOptions::default()) {
        Err(e) => println!("VantagePair on the quasi-metric: {e}"),
        Ok(_) => println!("VantagePair on the quasi-metric unexpectedly built"),
    }
    let metric = qm.associated_metric(MetricMode::Max);
    let scheme = build_tree(&strings, metric.clone(), TreeKind::VantagePair, layout, BuildOptions::default())?;
    let w = SimilarityWorkload::new("Sigma^8", strings, metric);
    println!("VantagePair on the max metric: consistent = {}", check_consistency(&scheme, &w, &probes)?.is_consistent());
    Ok(())
}
