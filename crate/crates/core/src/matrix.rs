//! Integer scoring matrices and the quasi-metrics derived from them.
//!
//! A similarity matrix `s` over a finite alphabet induces the distance
//! `d(a, b) = s(a, a) - s(a, b)`. For BLOSUM62 this is a quasi-metric: it
//! separates points and satisfies the triangle inequality, but it is not
//! symmetric. Over strings of equal length the distance is summed position by
//! position (the ungapped score).
//!
//! Everything in this module is exact integer arithmetic.

use std::fmt;

use thiserror::Error;

/// The vendored NCBI BLOSUM62 matrix (24 symbols, including `B`, `Z`, `X`, `*`).
pub const BLOSUM62_TEXT: &str = include_str!("../data/blosum62.txt");

/// The 20 standard amino acids in BLOSUM column order.
pub const AMINO_ACIDS: &str = "ARNDCQEGHILKMFPSTWYV";

const ABSENT: u8 = u8::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("quasi-metric axiom violated: {0}")]
    Axiom(AxiomWitness),
    #[error("string lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("symbol {symbol:?} at position {position} is not in the alphabet")]
    ForeignSymbol { symbol: char, position: usize },
    #[error("alphabets do not match")]
    AlphabetMismatch,
}

/// The first entry (or triple) found violating a quasi-metric axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomWitness {
    Negative { a: char, b: char, value: i64 },
    ZeroOffDiagonal { a: char, b: char },
    NonZeroDiagonal { a: char, value: i64 },
    Triangle { a: char, b: char, c: char, direct: i64, via: i64 },
    Asymmetric { a: char, b: char },
}

impl fmt::Display for AxiomWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomWitness::Negative { a, b, value } => write!(f, "d({a},{b}) = {value} < 0"),
            AxiomWitness::ZeroOffDiagonal { a, b } => write!(f, "d({a},{b}) = 0 for distinct symbols"),
            AxiomWitness::NonZeroDiagonal { a, value } => write!(f, "d({a},{a}) = {value} != 0"),
            AxiomWitness::Triangle { a, b, c, direct, via } => {
                write!(f, "d({a},{c}) = {direct} > d({a},{b}) + d({b},{c}) = {via}")
            }
            AxiomWitness::Asymmetric { a, b } => write!(f, "d({a},{b}) != d({b},{a})"),
        }
    }
}

/// An ordered set of single-byte symbols with dense ordinals.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<u8>,
    index: [u8; 256],
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?})", String::from_utf8_lossy(&self.symbols))
    }
}

impl Alphabet {
    pub fn new(symbols: &[u8]) -> Result<Self, MatrixError> {
        if symbols.is_empty() {
            return Err(MatrixError::Alphabet("empty alphabet".into()));
        }
        if symbols.len() >= ABSENT as usize {
            return Err(MatrixError::Alphabet("too many symbols".into()));
        }
        let mut index = [ABSENT; 256];
        for (i, &s) in symbols.iter().enumerate() {
            if !s.is_ascii_graphic() {
                return Err(MatrixError::Alphabet(format!("symbol byte {s:#x} is not printable ASCII")));
            }
            if index[s as usize] != ABSENT {
                return Err(MatrixError::Alphabet(format!("duplicate symbol {:?}", s as char)));
            }
            index[s as usize] = i as u8;
        }
        Ok(Alphabet { symbols: symbols.to_vec(), index })
    }

    /// The 20 standard amino acids, in BLOSUM order.
    pub fn amino_acids() -> Self {
        Alphabet::new(AMINO_ACIDS.as_bytes()).expect("standard alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn symbol(&self, ordinal: usize) -> u8 {
        self.symbols[ordinal]
    }

    pub fn index_of(&self, symbol: u8) -> Option<usize> {
        match self.index[symbol as usize] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, symbol: u8) -> bool {
        self.index[symbol as usize] != ABSENT
    }

    /// Maps a symbol string to ordinals.
    pub fn encode(&self, text: &[u8]) -> Result<Vec<u8>, MatrixError> {
        text.iter()
            .enumerate()
            .map(|(position, &s)| match self.index[s as usize] {
                ABSENT => Err(MatrixError::ForeignSymbol { symbol: s as char, position }),
                i => Ok(i),
            })
            .collect()
    }

    pub fn decode(&self, ordinals: &[u8]) -> String {
        ordinals.iter().map(|&o| self.symbols[o as usize] as char).collect()
    }
}

/// A total integer similarity table over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringMatrix {
    alphabet: Alphabet,
    scores: Vec<i32>,
}

impl ScoringMatrix {
    pub fn new(alphabet: Alphabet, scores: Vec<i32>) -> Result<Self, MatrixError> {
        let n = alphabet.len();
        if scores.len() != n * n {
            return Err(MatrixError::Alphabet(format!(
                "expected {} scores for {n} symbols, got {}",
                n * n,
                scores.len()
            )));
        }
        Ok(ScoringMatrix { alphabet, scores })
    }

    /// Parses the whitespace-separated layout: `#` comment lines, a header row
    /// of column symbols, then one `SYMBOL v1 v2 ...` row per symbol.
    ///
    /// The header order defines the alphabet order; rows may come in any order.
    pub fn parse(text: &str) -> Result<Self, MatrixError> {
        let mut header: Option<(usize, Alphabet)> = None;
        let mut rows: Vec<Option<Vec<i32>>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| MatrixError::Parse { line, message };
            let Some((_, alphabet)) = &header else {
                let mut symbols = Vec::new();
                for tok in trimmed.split_whitespace() {
                    symbols.push(single_symbol(tok).ok_or_else(|| err(format!("header token {tok:?} is not a single symbol")))?);
                }
                let alphabet = Alphabet::new(&symbols).map_err(|e| err(e.to_string()))?;
                rows = vec![None; alphabet.len()];
                header = Some((line, alphabet));
                continue;
            };
            let mut tokens = trimmed.split_whitespace();
            let label = tokens.next().expect("non-empty line");
            let symbol = single_symbol(label).ok_or_else(|| err(format!("row label {label:?} is not a single symbol")))?;
            let ordinal = alphabet
                .index_of(symbol)
                .ok_or_else(|| err(format!("row symbol {:?} is not in the header", symbol as char)))?;
            if rows[ordinal].is_some() {
                return Err(err(format!("duplicate row for symbol {:?}", symbol as char)));
            }
            let values = tokens
                .map(|t| t.parse::<i32>().map_err(|_| err(format!("cell {t:?} is not an integer"))))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != alphabet.len() {
                return Err(err(format!("row has {} cells, header has {}", values.len(), alphabet.len())));
            }
            rows[ordinal] = Some(values);
        }
        let (header_line, alphabet) = header.ok_or(MatrixError::Parse { line: 0, message: "no header row".into() })?;
        if let Some(missing) = rows.iter().position(Option::is_none) {
            return Err(MatrixError::Parse {
                line: header_line,
                message: format!("no row for symbol {:?}", alphabet.symbol(missing) as char),
            });
        }
        let scores = rows.into_iter().flatten().flatten().collect();
        ScoringMatrix::new(alphabet, scores)
    }

    /// The full vendored BLOSUM62 matrix, including ambiguity codes.
    pub fn blosum62_full() -> Self {
        ScoringMatrix::parse(BLOSUM62_TEXT).expect("vendored BLOSUM62 parses")
    }

    /// BLOSUM62 restricted to the 20 standard amino acids.
    pub fn blosum62() -> Self {
        Self::blosum62_full()
            .restrict(&Alphabet::amino_acids())
            .expect("BLOSUM62 covers the standard amino acids")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Score by ordinals.
    pub fn score(&self, a: usize, b: usize) -> i32 {
        self.scores[a * self.alphabet.len() + b]
    }

    /// Score by symbols; `None` if either symbol is foreign.
    pub fn score_symbols(&self, a: u8, b: u8) -> Option<i32> {
        Some(self.score(self.alphabet.index_of(a)?, self.alphabet.index_of(b)?))
    }

    /// The submatrix over `alphabet`, reordered to its symbol order.
    pub fn restrict(&self, alphabet: &Alphabet) -> Result<ScoringMatrix, MatrixError> {
        let ords = alphabet
            .symbols()
            .iter()
            .enumerate()
            .map(|(position, &s)| {
                self.alphabet.index_of(s).ok_or(MatrixError::ForeignSymbol { symbol: s as char, position })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scores = ords.iter().flat_map(|&a| ords.iter().map(move |&b| (a, b))).map(|(a, b)| self.score(a, b)).collect();
        ScoringMatrix::new(alphabet.clone(), scores)
    }
}

fn single_symbol(tok: &str) -> Option<u8> {
    match tok.as_bytes() {
        [b] if b.is_ascii_graphic() => Some(*b),
        _ => None,
    }
}

/// A validated quasi-metric table over an alphabet, in score points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolQuasiMetric {
    alphabet: Alphabet,
    table: Vec<u32>,
}

impl SymbolQuasiMetric {
    /// Applies `d(a, b) = s(a, a) - s(a, b)` entrywise and checks every axiom
    /// over all ordered triples.
    pub fn from_scores(matrix: &ScoringMatrix) -> Result<Self, MatrixError> {
        let n = matrix.alphabet().len();
        let raw: Vec<i64> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| i64::from(matrix.score(a, a)) - i64::from(matrix.score(a, b)))
            .collect();
        Self::from_table(matrix.alphabet().clone(), &raw)
    }

    /// Validates an explicit row-major table `d[a][b]`.
    pub fn from_table(alphabet: Alphabet, raw: &[i64]) -> Result<Self, MatrixError> {
        let n = alphabet.len();
        if raw.len() != n * n {
            return Err(MatrixError::Alphabet(format!("expected {} entries, got {}", n * n, raw.len())));
        }
        let sym = |i: usize| alphabet.symbol(i) as char;
        for a in 0..n {
            for b in 0..n {
                let v = raw[a * n + b];
                if v < 0 {
                    return Err(MatrixError::Axiom(AxiomWitness::Negative { a: sym(a), b: sym(b), value: v }));
                }
                if a == b && v != 0 {
                    return Err(MatrixError::Axiom(AxiomWitness::NonZeroDiagonal { a: sym(a), value: v }));
                }
                if a != b && v == 0 {
                    return Err(MatrixError::Axiom(AxiomWitness::ZeroOffDiagonal { a: sym(a), b: sym(b) }));
                }
            }
        }
        if let Some((a, b, c)) = triangle_violation(n, |a, b| raw[a * n + b]) {
            return Err(MatrixError::Axiom(AxiomWitness::Triangle {
                a: sym(a),
                b: sym(b),
                c: sym(c),
                direct: raw[a * n + c],
                via: raw[a * n + b] + raw[b * n + c],
            }));
        }
        let table = raw.iter().map(|&v| u32::try_from(v).expect("checked non-negative")).collect();
        Ok(SymbolQuasiMetric { alphabet, table })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Distance by ordinals.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.table[a * self.alphabet.len() + b]
    }

    /// Distance by symbols; `None` if either symbol is foreign.
    pub fn get_symbols(&self, a: u8, b: u8) -> Option<u32> {
        Some(self.get(self.alphabet.index_of(a)?, self.alphabet.index_of(b)?))
    }

    /// Row-major table.
    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn max_entry(&self) -> u32 {
        self.table.iter().copied().max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.alphabet.len();
        (0..n).all(|a| (0..n).all(|b| self.get(a, b) == self.get(b, a)))
    }

    /// Summed per-position distance between two symbol strings.
    pub fn string_qdist(&self, x: &[u8], y: &[u8]) -> Result<u32, MatrixError> {
        if x.len() != y.len() {
            return Err(MatrixError::LengthMismatch { left: x.len(), right: y.len() });
        }
        let x = self.alphabet.encode(x)?;
        let y = self.alphabet.encode(y)?;
        Ok(self.encoded_distance(&x, &y))
    }

    /// Summed per-position distance between two ordinal strings of equal length.
    #[inline]
    pub fn encoded_distance(&self, x: &[u8], y: &[u8]) -> u32 {
        debug_assert_eq!(x.len(), y.len());
        let n = self.alphabet.len();
        x.iter().zip(y).map(|(&a, &b)| self.table[a as usize * n + b as usize]).sum()
    }

    /// Symmetrizes the table with `max` or `sum`, without rescaling.
    pub fn associated_metric(&self, mode: MetricMode) -> SymbolMetric {
        let n = self.alphabet.len();
        let table = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| mode.combine(self.get(a, b), self.get(b, a)))
            .collect();
        SymbolMetric { alphabet: self.alphabet.clone(), table, mode }
    }
}

/// How a quasi-metric is symmetrized into a majorizing metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricMode {
    Max,
    Sum,
}

impl MetricMode {
    #[inline]
    pub fn combine<T: Ord + std::ops::Add<Output = T>>(self, forward: T, backward: T) -> T {
        match self {
            MetricMode::Max => forward.max(backward),
            MetricMode::Sum => forward + backward,
        }
    }
}

impl std::str::FromStr for MetricMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(MetricMode::Max),
            "sum" => Ok(MetricMode::Sum),
            other => Err(format!("unknown metric mode {other:?} (expected max or sum)")),
        }
    }
}

/// A symmetric table majorizing a [`SymbolQuasiMetric`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolMetric {
    alphabet: Alphabet,
    table: Vec<u32>,
    mode: MetricMode,
}

impl SymbolMetric {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn mode(&self) -> MetricMode {
        self.mode
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.table[a * self.alphabet.len() + b]
    }

    pub fn get_symbols(&self, a: u8, b: u8) -> Option<u32> {
        Some(self.get(self.alphabet.index_of(a)?, self.alphabet.index_of(b)?))
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    #[inline]
    pub fn encoded_distance(&self, x: &[u8], y: &[u8]) -> u32 {
        let n = self.alphabet.len();
        x.iter().zip(y).map(|(&a, &b)| self.table[a as usize * n + b as usize]).sum()
    }

    /// Exhaustive check of symmetry and the triangle inequality.
    pub fn validate(&self) -> Result<(), MatrixError> {
        let n = self.alphabet.len();
        let sym = |i: usize| self.alphabet.symbol(i) as char;
        for a in 0..n {
            for b in 0..n {
                if self.get(a, b) != self.get(b, a) {
                    return Err(MatrixError::Axiom(AxiomWitness::Asymmetric { a: sym(a), b: sym(b) }));
                }
            }
        }
        if let Some((a, b, c)) = triangle_violation(n, |a, b| i64::from(self.get(a, b))) {
            return Err(MatrixError::Axiom(AxiomWitness::Triangle {
                a: sym(a),
                b: sym(b),
                c: sym(c),
                direct: i64::from(self.get(a, c)),
                via: i64::from(self.get(a, b)) + i64::from(self.get(b, c)),
            }));
        }
        Ok(())
    }
}

fn triangle_violation(n: usize, d: impl Fn(usize, usize) -> i64) -> Option<(usize, usize, usize)> {
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if d(a, c) > d(a, b) + d(b, c) {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}
