//! Concentration function of a small metric sample, exact and estimated, and
//! the block-access lower bounds it implies.
//!
//! cargo run --release --example concentration

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmindex::analysis::{concentration_anchor, concentration_exact, rngconc_bounds, EmpiricalMMSpace};
use qmindex::matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::sampling::SymbolDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62())?;
    let metric = qm.associated_metric(MetricMode::Max);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points = SymbolDistribution::uniform(&Alphabet::amino_acids()).sample_strings(&mut rng, 4, 16);
    let space = EmpiricalMMSpace::from_points(&points, &metric, None)?;

    let grid: Vec<f64> = (0..=space.diameter() as usize + 1).step_by(2).map(|e| e as f64).collect();
    let exact = concentration_exact(&space, &grid)?;
    let anchors: Vec<usize> = (0..space.len()).collect();
    let lower = concentration_anchor(&space, &grid, &anchors)?;
    println!("{:>5} {:>8} {:>8}", "eps", "exact", "anchor");
    for i in 0..grid.len() {
        println!("{:>5} {:>8.4} {:>8.4}", grid[i], exact.alpha[i], lower.alpha[i]);
    }

    let xi = 1.0 / 16.0;
    println!("\nblocks of measure at most {xi}:");
    for &eps in &grid {
        if let Ok(b) = rngconc_bounds(xi, eps, &exact) {
            println!("  eps {eps:>4}: at least {} blocks on average, {} in the worst case", b.average, b.worst_case);
        }
    }
    Ok(())
}
