//! Similarity search under quasi-metrics.
//!
//! - [`matrix`]: scoring matrices, the derived symbol quasi-metric and its
//!   symmetrizations.
//! - [`scheme`]: workloads, tree indexing schemes, certification trees.
//! - [`fragment`]: the partition-coded cylinder index over fixed-length
//!   peptide fragments.
//! - [`reduce`]: projective and inductive workload reductions.
//! - [`analysis`]: concentration functions, access lower bounds and geometry
//!   diagnostics.
//! - [`ingest`]: FASTA parsing, fragment extraction and index archives.

pub mod analysis;
pub mod distance;
pub mod fragment;
pub mod ingest;
pub mod matrix;
pub mod reduce;
pub mod sampling;
pub mod scheme;

pub use distance::Distance;
pub use fragment::{FragmentIndex, Partition};
pub use matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolMetric, SymbolQuasiMetric};
pub use scheme::{IndexScheme, RangeQuery, SearchResult, Workload};
