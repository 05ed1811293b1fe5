//! Bin occupancy, ball growth, metric/quasi-metric ball ratios and
//! certification-value histograms on the bundled proteome.
//!
//! cargo run --release --example geometry_diagnostics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmindex::analysis::{
    ball_growth, bin_histogram, cert_value_distribution, distance_exponent, neighbourhood_growth, qm_metric_ratio,
    CertAnchor,
};
use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::ingest::{extract_fragments, read_fasta};
use qmindex::matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::sampling::SymbolDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alphabet = Alphabet::amino_acids();
    let records = read_fasta(concat!(env!("CARGO_MANIFEST_DIR"), "/data/hg003687_head.faa"))?;
    let counts = extract_fragments(&records, 10, &alphabet);
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let index = FragmentIndex::build(qm.clone(), Partition::amino_default(&alphabet)?, 10, counts.fragments)?;

    let h = bin_histogram(&index);
    println!("bins: {} empty of {}; largest bin holds {}", h.empty, h.total_bins, h.rows.last().unwrap().0);

    let uniform = SymbolDistribution::uniform(&alphabet);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let centers = uniform.sample_strings(&mut rng, 10, 50);
    let points: Vec<Vec<u8>> = (0..index.len()).map(|i| index.fragment(i).to_vec()).collect();
    let radii: Vec<f64> = (0..=12).map(|i| 5.0 * i as f64).collect();
    let rows = ball_growth(&points, &qm, &centers, &radii)?;
    for r in &rows {
        println!("  radius {:>3}: {:.2e} of the dataset", r.radius, r.fraction);
    }
    let fit: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.fraction)).collect();
    println!("distance exponent between 30 and 60: {:.2}", distance_exponent(&fit, 30.0, 60.0)?);

    let metric = qm.associated_metric(MetricMode::Max);
    for r in qm_metric_ratio(&points, &qm, &metric, &[1, 10, 100], &centers[..20])? {
        println!("k = {:>3}: metric ball / quasi-metric ball mean {:.1}, max {:.1}", r.k, r.mean, r.max);
    }

    let x = index.encode(b"SEDRELLTEQ")?;
    let to_point = cert_value_distribution(&index, &CertAnchor::Point(x.clone()), &uniform, 2000, 1);
    let to_bin = cert_value_distribution(&index, &CertAnchor::Bin(index.partition().bin_code(&x)), &uniform, 2000, 1);
    let mode = |h: &[(u32, u64)]| h.iter().max_by_key(|p| p.1).unwrap().0;
    println!("distance to SEDRELLTEQ peaks at {}, to its bin at {}", mode(&to_point), mode(&to_bin));

    for r in neighbourhood_growth(&index, &metric, &uniform, 100, &[20.0, 30.0, 40.0], 3) {
        println!("within {:>2}: {:.2} (quasi-metric) vs {:.2} (metric)", r.radius, r.quasi_metric, r.metric);
    }
    Ok(())
}
