//! Fraction of the dataset scanned by k-NN queries, for growing k.
//!
//! cargo run --release --example knn_benchmark [PROBES]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmindex::analysis::distance_exponent;
use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::ingest::{extract_fragments, read_fasta};
use qmindex::matrix::{Alphabet, ScoringMatrix, SymbolQuasiMetric};
use qmindex::sampling::SymbolDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let probes: usize = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let alphabet = Alphabet::amino_acids();
    let records = read_fasta(concat!(env!("CARGO_MANIFEST_DIR"), "/data/hg003687_head.faa"))?;
    let counts = extract_fragments(&records, 10, &alphabet);
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let index = FragmentIndex::build(qm, Partition::amino_default(&alphabet)?, 10, counts.fragments)?;

    // Probes follow the residue frequencies of the dataset itself.
    let dist = SymbolDistribution::empirical(&alphabet, (0..index.len()).map(|i| index.fragment(i)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let omegas = dist.sample_strings(&mut rng, 10, probes);

    let mut fit = Vec::new();
    println!("{:>5} {:>10} {:>10} {:>10}", "k", "mean %", "max %", "mean bins");
    for k in [1, 3, 10, 30, 100] {
        let (mut sum, mut max, mut bins) = (0.0f64, 0.0f64, 0u64);
        for w in &omegas {
            let s = index.knn_encoded(w, k)?.stats;
            let f = s.points_scanned as f64 / index.len() as f64;
            sum += f;
            max = max.max(f);
            bins += s.leaves_opened;
        }
        let mean = sum / probes as f64;
        fit.push((k as f64, mean));
        println!("{k:>5} {:>10.3} {:>10.3} {:>10.1}", 100.0 * mean, 100.0 * max, bins as f64 / probes as f64);
    }
    println!("log-log slope: {:.3}", distance_exponent(&fit, 1.0, 100.0)?);
    Ok(())
}
