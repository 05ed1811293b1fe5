//! Product-measure sampling of random query strings.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::matrix::Alphabet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid symbol weights: {0}")]
    Weights(String),
}

/// A probability distribution over alphabet ordinals; strings are drawn
/// position by position independently.
#[derive(Debug, Clone)]
pub struct SymbolDistribution {
    probabilities: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl SymbolDistribution {
    pub fn uniform(alphabet: &Alphabet) -> Self {
        Self::from_weights(&vec![1.0; alphabet.len()]).expect("uniform weights are valid")
    }

    /// Non-negative weights, one per ordinal, normalized to sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self, SamplingError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SamplingError::Weights("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(SamplingError::Weights("weights sum to zero".into()));
        }
        let sampler = WeightedIndex::new(weights).map_err(|e| SamplingError::Weights(e.to_string()))?;
        Ok(SymbolDistribution { probabilities: weights.iter().map(|w| w / total).collect(), sampler })
    }

    /// `symbol probability` per line; `#` comments and blank lines ignored;
    /// unlisted symbols get weight zero.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Result<Self, SamplingError> {
        let mut weights = vec![0.0; alphabet.len()];
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| SamplingError::Parse { line: n + 1, message };
            let mut parts = line.split_whitespace();
            let (Some(sym), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `symbol probability`".into()));
            };
            let &[s] = sym.as_bytes() else {
                return Err(err(format!("{sym:?} is not a single symbol")));
            };
            let a = alphabet.index_of(s).ok_or_else(|| err(format!("{sym:?} is not in the alphabet")))?;
            weights[a] = p.parse::<f64>().map_err(|e| err(format!("{p:?}: {e}")))?;
        }
        Self::from_weights(&weights)
    }

    /// Symbol frequencies of ordinal-encoded strings.
    pub fn empirical<'a>(alphabet: &Alphabet, strings: impl IntoIterator<Item = &'a [u8]>) -> Result<Self, SamplingError> {
        let mut weights = vec![0.0; alphabet.len()];
        for s in strings {
            for &a in s {
                weights[a as usize] += 1.0;
            }
        }
        Self::from_weights(&weights)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample_symbol<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        self.sampler.sample(rng) as u8
    }

    pub fn sample_string<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<u8> {
        (0..m).map(|_| self.sample_symbol(rng)).collect()
    }

    pub fn sample_strings<R: Rng + ?Sized>(&self, rng: &mut R, m: usize, count: usize) -> Vec<Vec<u8>> {
        (0..count).map(|_| self.sample_string(rng, m)).collect()
    }
}
