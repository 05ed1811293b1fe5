//! Derive the asymmetric BLOSUM62 distance and its symmetrizations.
//!
//! cargo run --example blosum_quasimetric

use qmindex::matrix::{MetricMode, ScoringMatrix, SymbolQuasiMetric};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let a = qm.alphabet();

    // Rows and columns in the order of the default alphabet partition.
    let order = b"TSANIVLMKRDEQWFYHGPC";
    print!("   ");
    for &c in order {
        print!("{:>3}", c as char);
    }
    println!();
    for &r in order {
        print!("{:>3}", r as char);
        for &c in order {
            print!("{:>3}", qm.get_symbols(r, c).unwrap());
        }
        println!();
    }

    println!("\nd(T,S) = {}, d(S,T) = {}", qm.get_symbols(b'T', b'S').unwrap(), qm.get_symbols(b'S', b'T').unwrap());
    let (x, y) = (b"SEDRELLTEQ", b"SEDKELLTEN");
    println!("d({}, {}) = {}", String::from_utf8_lossy(x), String::from_utf8_lossy(y), qm.string_qdist(x, y)?);
    println!("d({}, {}) = {}", String::from_utf8_lossy(y), String::from_utf8_lossy(x), qm.string_qdist(y, x)?);

    for mode in [MetricMode::Max, MetricMode::Sum] {
        let m = qm.associated_metric(mode);
        let (ex, ey) = (a.encode(x)?, a.encode(y)?);
        println!("{mode:?} metric: {}", m.encoded_distance(&ex, &ey));
    }
    Ok(())
}
