//! Save an index, load it back and confirm the archive is reproduced exactly.
//!
//! cargo run --example persistence

use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::ingest::{encode_index, load_index, parse_fasta, save_index};
use qmindex::ingest::extract_fragments;
use qmindex::matrix::{Alphabet, ScoringMatrix, SymbolQuasiMetric};

const FASTA: &str = ">sp|P1\nMKVLAAGIVGLLLAHWERTYSEDRELLTEQ\n>sp|P2 masked\nMKVLAxxxxxSEDRELLTEQKK\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alphabet = Alphabet::amino_acids();
    let records = parse_fasta(FASTA.as_bytes())?;
    let counts = extract_fragments(&records, 6, &alphabet);
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let index = FragmentIndex::build(qm, Partition::amino_default(&alphabet)?, 6, counts.fragments)?;

    let path = std::env::temp_dir().join("qmindex-example.qmix");
    save_index(&index, &path)?;
    let loaded = load_index(&path)?;
    let bytes = std::fs::read(&path)?;
    println!("{} fragments, archive of {} bytes at {}", index.len(), bytes.len(), path.display());
    println!("re-encoded archive identical: {}", encode_index(&loaded) == bytes);
    let (a, b) = (index.knn(b"SEDREL", 3)?, loaded.knn(b"SEDREL", 3)?);
    println!("3-NN identical after reload: {}", a == b);
    for m in &b.matches {
        println!("  {} {} (seen {}x)", loaded.fragment_string(m.index), m.distance, loaded.count(m.index));
    }
    std::fs::remove_file(path)?;
    Ok(())
}
