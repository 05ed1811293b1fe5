//! Independent oracles shared by the integration tests. Nothing here goes
//! through the library's distance code: scores are read straight from the
//! vendored matrix file and distances are summed over ASCII strings.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const AMINO: &[u8] = b"ARNDCQEGHILKMFPSTWYV";

/// Background amino-acid frequencies (percent) used for the biased corpus.
pub const BACKGROUND: [(u8, f64); 20] = [
    (b'A', 8.25), (b'R', 5.53), (b'N', 4.06), (b'D', 5.45), (b'C', 1.37),
    (b'Q', 3.93), (b'E', 6.75), (b'G', 7.07), (b'H', 2.27), (b'I', 5.96),
    (b'L', 9.66), (b'K', 5.84), (b'M', 2.42), (b'F', 3.86), (b'P', 4.70),
    (b'S', 6.56), (b'T', 5.34), (b'W', 1.08), (b'Y', 2.92), (b'V', 6.87),
];

pub struct Oracle {
    score: HashMap<(u8, u8), i64>,
}

impl Oracle {
    pub fn blosum62() -> Self {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/blosum62.txt")).unwrap();
        let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let header: Vec<u8> = lines.next().unwrap().split_whitespace().map(|s| s.as_bytes()[0]).collect();
        let mut score = HashMap::new();
        for line in lines {
            let mut cells = line.split_whitespace();
            let row = cells.next().unwrap().as_bytes()[0];
            for (&col, v) in header.iter().zip(cells) {
                score.insert((row, col), v.parse::<i64>().unwrap());
            }
        }
        Oracle { score }
    }

    pub fn s(&self, a: u8, b: u8) -> i64 {
        self.score[&(a, b)]
    }

    pub fn d(&self, a: u8, b: u8) -> i64 {
        self.s(a, a) - self.s(a, b)
    }

    pub fn qd(&self, x: &[u8], y: &[u8]) -> i64 {
        assert_eq!(x.len(), y.len());
        x.iter().zip(y).map(|(&a, &b)| self.d(a, b)).sum()
    }

    pub fn max_metric(&self, x: &[u8], y: &[u8]) -> i64 {
        x.iter().zip(y).map(|(&a, &b)| self.d(a, b).max(self.d(b, a))).sum()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_string(rng: &mut ChaCha8Rng, m: usize) -> Vec<u8> {
    (0..m).map(|_| AMINO[rng.gen_range(0..20)]).collect()
}

pub fn biased_string(rng: &mut ChaCha8Rng, m: usize) -> Vec<u8> {
    let total: f64 = BACKGROUND.iter().map(|p| p.1).sum();
    (0..m)
        .map(|_| {
            let mut u = rng.gen_range(0.0..total);
            for &(s, p) in &BACKGROUND {
                if u < p {
                    return s;
                }
                u -= p;
            }
            BACKGROUND[19].0
        })
        .collect()
}

pub fn uniform_corpus(seed: u64, n: usize, m: usize) -> Vec<Vec<u8>> {
    let mut r = rng(seed);
    (0..n).map(|_| uniform_string(&mut r, m)).collect()
}

pub fn biased_corpus(seed: u64, n: usize, m: usize) -> Vec<Vec<u8>> {
    let mut r = rng(seed);
    (0..n).map(|_| biased_string(&mut r, m)).collect()
}

/// Mutations of `seeds` random centers, each position replaced with probability `p`.
pub fn clustered_corpus(seed: u64, n: usize, m: usize, seeds: usize, p: f64) -> Vec<Vec<u8>> {
    let mut r = rng(seed);
    let centers: Vec<Vec<u8>> = (0..seeds).map(|_| uniform_string(&mut r, m)).collect();
    (0..n)
        .map(|_| {
            let c = &centers[r.gen_range(0..seeds)];
            c.iter().map(|&a| if r.gen_bool(p) { AMINO[r.gen_range(0..20)] } else { a }).collect()
        })
        .collect()
}

pub fn unique(mut v: Vec<Vec<u8>>) -> Vec<Vec<u8>> {
    v.sort();
    v.dedup();
    v
}

/// Sorted distances of the `k` nearest strings.
pub fn brute_knn(dists: &[i64], k: usize) -> Vec<i64> {
    let mut d = dists.to_vec();
    d.sort_unstable();
    d.truncate(k);
    d
}

/// Sorted strings within `eps`.
pub fn brute_range(corpus: &[Vec<u8>], dists: &[i64], eps: i64) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = corpus.iter().zip(dists).filter(|(_, &d)| d <= eps).map(|(x, _)| x.clone()).collect();
    out.sort();
    out
}
