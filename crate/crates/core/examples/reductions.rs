//! The fragment index as a reduction to the bin workload, and metric
//! replacement, with their access overheads.
//!
//! cargo run --release --example reductions

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::ingest::{extract_fragments, read_fasta};
use qmindex::matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::reduce::{fragment_reduction, BinEnumeration, MetricBallWorkload, MetricReplacement};
use qmindex::sampling::SymbolDistribution;
use qmindex::scheme::{LinearScan, RangeQuery};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alphabet = Alphabet::amino_acids();
    let records = read_fasta(concat!(env!("CARGO_MANIFEST_DIR"), "/data/hg003687_head.faa"))?;
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let counts = extract_fragments(&records, 10, &alphabet);
    let index = Arc::new(FragmentIndex::build(qm.clone(), Partition::amino_default(&alphabet)?, 10, counts.fragments)?);

    let bins = fragment_reduction(&index);
    let access = BinEnumeration(Arc::clone(&index));
    let replacement = MetricReplacement::new(&qm, MetricMode::Max);
    let points: Vec<Vec<u8>> = (0..index.len()).map(|i| index.fragment(i).to_vec()).collect();
    let metric_w = MetricBallWorkload { points, metric: replacement.metric.clone() };
    let metric_red = replacement.reduction(index.len());
    println!("metric replacement stretches radii by {}/{}", replacement.num, replacement.den);

    let dist = SymbolDistribution::uniform(&alphabet);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("{:>4} {:>6} {:>8} {:>10} {:>10}", "k", "radius", "answers", "bin beta", "metric beta");
    for k in [1, 10, 100] {
        let w = dist.sample_string(&mut rng, 10);
        let radius = index.knn_encoded(&w, k)?.matches.last().unwrap().distance;
        let q = RangeQuery::new(w, radius)?;
        let a = bins.access_overhead(&*index, &access, &q)?;
        let b = metric_red.access_overhead(&*index, &LinearScan(&metric_w), &q)?;
        println!("{k:>4} {radius:>6} {:>8} {:>10.1} {:>10.1}", a.answers, a.ratio(), b.ratio());
    }
    Ok(())
}
