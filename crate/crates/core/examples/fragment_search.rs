//! Index the 10-mers of a proteome and run range and k-NN queries.
//!
//! cargo run --release --example fragment_search [FASTA]

use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::ingest::{extract_fragments, read_fasta};
use qmindex::matrix::{Alphabet, ScoringMatrix, SymbolQuasiMetric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/hg003687_head.faa").to_string());
    let alphabet = Alphabet::amino_acids();
    let records = read_fasta(&path)?;
    let counts = extract_fragments(&records, 10, &alphabet);
    println!("{} records, {} fragments, {} unique", records.len(), counts.total, counts.unique());

    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let index = FragmentIndex::build(qm, Partition::amino_default(&alphabet)?, 10, counts.fragments)?;
    println!("{} of {} bins non-empty", index.directory().len(), index.code_space());

    let probe = b"SEDRELLTEQ";
    for eps in [0, 10, 20] {
        let r = index.range_search(probe, eps)?;
        println!(
            "range eps={eps:>2}: {:>4} matches, {:>6} points scanned",
            r.matches.len(),
            r.stats.points_scanned
        );
    }
    let r = index.knn(probe, 5)?;
    println!("5 nearest to {}:", String::from_utf8_lossy(probe));
    for m in &r.matches {
        println!("  {} {}", index.fragment_string(m.index), m.distance);
    }
    println!(
        "scanned {:.3}% of the dataset in {} bins",
        100.0 * r.stats.points_scanned as f64 / index.len() as f64,
        r.stats.leaves_opened
    );
    Ok(())
}
