//! FASTA input, fragment extraction and index archives.
//!
//! Archive layout (all integers little-endian):
//!
//! ```text
//! "QMIX" | version u32 | m u32
//! alphabet   : u64 length | symbol bytes
//! partition  : u64 length | group ordinal per symbol
//! qm table   : u64 length | |alphabet|^2 u32 distances
//! fragments  : u64 length | sorted ordinal bytes
//! directory  : u64 length | (code u64, start u64, end u64) per bin
//! counts     : u64 length | u32 per fragment
//! checksum   : u64, the first 8 bytes of SHA-256 over everything before it
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fragment::{BinCode, BinEntry, FragmentError, FragmentIndex, Partition};
use crate::matrix::{Alphabet, MatrixError, SymbolQuasiMetric};

pub const MAGIC: &[u8; 4] = b"QMIX";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: sequence data before the first header")]
    OrphanSequence { line: usize },
    #[error("record {id:?} has no residues")]
    EmptyRecord { id: String },
    #[error("no FASTA records")]
    NoRecords,
    #[error("archive section {section}: {message}")]
    Archive { section: &'static str, message: String },
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    pub residues: Vec<u8>,
}

/// Reads FASTA records in file order. Sequence lines are concatenated with
/// whitespace removed; letter case is kept so lowercase masking survives.
pub fn parse_fasta<R: BufRead>(reader: R) -> Result<Vec<SequenceRecord>, IngestError> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            if let Some(last) = records.last() {
                if last.residues.is_empty() {
                    return Err(IngestError::EmptyRecord { id: last.id.clone() });
                }
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            records.push(SequenceRecord { id, residues: Vec::new() });
        } else if !line.trim().is_empty() {
            let record = records.last_mut().ok_or(IngestError::OrphanSequence { line: n + 1 })?;
            record.residues.extend(line.bytes().filter(|b| !b.is_ascii_whitespace()));
        }
    }
    match records.last() {
        None => Err(IngestError::NoRecords),
        Some(last) if last.residues.is_empty() => Err(IngestError::EmptyRecord { id: last.id.clone() }),
        Some(_) => Ok(records),
    }
}

pub fn read_fasta(path: impl AsRef<Path>) -> Result<Vec<SequenceRecord>, IngestError> {
    parse_fasta(io::BufReader::new(fs::File::open(path)?))
}

/// Unique length-`m` windows, encoded as ordinals, with occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FragmentCounts {
    pub m: usize,
    /// Sorted by ordinals.
    pub fragments: Vec<(Vec<u8>, u32)>,
    pub total: u64,
}

impl FragmentCounts {
    pub fn unique(&self) -> usize {
        self.fragments.len()
    }
}

/// Every window of `m` characters that all belong to `alphabet`. A window
/// touching any other byte (lowercase masking, `X`, `*`, ...) is skipped.
pub fn extract_fragments(records: &[SequenceRecord], m: usize, alphabet: &Alphabet) -> FragmentCounts {
    let mut counts: BTreeMap<Vec<u8>, u32> = BTreeMap::new();
    let mut total = 0u64;
    if m > 0 {
        for record in records {
            for run in record.residues.split(|&b| !alphabet.contains(b)) {
                for window in run.windows(m) {
                    let enc = alphabet.encode(window).expect("run is within the alphabet");
                    *counts.entry(enc).or_insert(0) += 1;
                    total += 1;
                }
            }
        }
    }
    FragmentCounts { m, fragments: counts.into_iter().collect(), total }
}

/// Serializes an index to the archive format.
pub fn encode_index(index: &FragmentIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(index.m() as u32).to_le_bytes());
    let section = |out: &mut Vec<u8>, body: Vec<u8>| {
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
    };
    section(&mut out, index.alphabet().symbols().to_vec());
    section(&mut out, index.partition().group_table().to_vec());
    section(&mut out, index.quasi_metric().table().iter().flat_map(|d| d.to_le_bytes()).collect());
    section(&mut out, index.fragment_data().to_vec());
    section(
        &mut out,
        index
            .directory()
            .iter()
            .flat_map(|b| [b.code.0, b.start as u64, b.end as u64])
            .flat_map(u64::to_le_bytes)
            .collect(),
    );
    section(&mut out, index.counts().iter().flat_map(|c| c.to_le_bytes()).collect());
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, section: &'static str) -> Result<&'a [u8], IngestError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(IngestError::Archive {
            section,
            message: "truncated".into(),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, section: &'static str) -> Result<u32, IngestError> {
        Ok(u32::from_le_bytes(self.take(4, section)?.try_into().expect("4 bytes")))
    }

    fn section(&mut self, section: &'static str) -> Result<&'a [u8], IngestError> {
        let len = u64::from_le_bytes(self.take(8, section)?.try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| IngestError::Archive { section, message: "length overflow".into() })?;
        self.take(len, section)
    }
}

fn archive_err(section: &'static str) -> impl Fn(FragmentError) -> IngestError {
    move |e| IngestError::Archive { section, message: e.to_string() }
}

/// Parses and validates an archive.
pub fn decode_index(bytes: &[u8]) -> Result<FragmentIndex, IngestError> {
    if bytes.len() < 8 {
        return Err(IngestError::Archive { section: "checksum", message: "truncated".into() });
    }
    let (payload, trailer) = bytes.split_at(bytes.len() - 8);
    let mut c = Cursor { bytes: payload, pos: 0 };
    if c.take(4, "header")? != MAGIC {
        return Err(IngestError::Archive { section: "header", message: "bad magic".into() });
    }
    let version = c.u32("header")?;
    if version != VERSION {
        return Err(IngestError::Archive { section: "header", message: format!("unsupported version {version}") });
    }
    let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
    if stored != checksum(payload) {
        return Err(IngestError::Archive { section: "checksum", message: "checksum mismatch".into() });
    }
    let m = c.u32("header")? as usize;

    let alphabet = Alphabet::new(c.section("alphabet")?)
        .map_err(|e| IngestError::Archive { section: "alphabet", message: e.to_string() })?;
    let partition =
        Partition::from_group_of(&alphabet, c.section("partition")?.to_vec()).map_err(archive_err("partition"))?;

    let raw = c.section("qm table")?;
    if raw.len() != 4 * alphabet.len() * alphabet.len() {
        return Err(IngestError::Archive { section: "qm table", message: "size does not match the alphabet".into() });
    }
    let table: Vec<i64> = raw.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().expect("4")) as i64).collect();
    let qm = SymbolQuasiMetric::from_table(alphabet, &table)
        .map_err(|e| IngestError::Archive { section: "qm table", message: e.to_string() })?;

    let fragments = c.section("fragments")?.to_vec();

    let raw = c.section("directory")?;
    if raw.len() % 24 != 0 {
        return Err(IngestError::Archive { section: "directory", message: "ragged entries".into() });
    }
    let directory = raw
        .chunks_exact(24)
        .map(|e| {
            let f = |i: usize| u64::from_le_bytes(e[i * 8..i * 8 + 8].try_into().expect("8"));
            BinEntry { code: BinCode(f(0)), start: f(1) as usize, end: f(2) as usize }
        })
        .collect();

    let raw = c.section("counts")?;
    if raw.len() % 4 != 0 {
        return Err(IngestError::Archive { section: "counts", message: "ragged entries".into() });
    }
    let counts = raw.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().expect("4"))).collect();
    if c.pos != payload.len() {
        return Err(IngestError::Archive { section: "counts", message: "trailing bytes".into() });
    }
    FragmentIndex::from_parts(qm, partition, m, fragments, directory, counts).map_err(archive_err("fragments"))
}

pub fn save_index(index: &FragmentIndex, path: impl AsRef<Path>) -> Result<(), IngestError> {
    fs::write(path, encode_index(index))?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<FragmentIndex, IngestError> {
    decode_index(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ScoringMatrix;

    fn records(text: &str) -> Result<Vec<SequenceRecord>, IngestError> {
        parse_fasta(text.as_bytes())
    }

    #[test]
    fn fasta_shapes() {
        let r = records(">a desc\nACD\nEF\n").unwrap();
        assert_eq!(r, vec![SequenceRecord { id: "a".into(), residues: b"ACDEF".to_vec() }]);
        assert_eq!(records(">a\nAC\n>b\nDE").unwrap().len(), 2);
        assert!(matches!(records(">a\n>b\nDE"), Err(IngestError::EmptyRecord { .. })));
        assert!(matches!(records(">a\nDE\n>b\n"), Err(IngestError::EmptyRecord { .. })));
        assert!(matches!(records("AC\n>a\nDE"), Err(IngestError::OrphanSequence { line: 1 })));
        assert!(matches!(records(""), Err(IngestError::NoRecords)));
        assert_eq!(records(">a\nacDE").unwrap()[0].residues, b"acDE");
    }

    #[test]
    fn window_filtering() {
        let a = Alphabet::amino_acids();
        let r = records(">a\nACDEFGHIKL\nMN\n").unwrap();
        let f = extract_fragments(&r, 10, &a);
        assert_eq!((f.unique(), f.total), (3, 3));

        let r = records(">a\nACDEFGHIKxLMNPQRSTVW\n").unwrap();
        let f = extract_fragments(&r, 10, &a);
        assert_eq!(f.unique(), 1);
        assert_eq!(a.decode(&f.fragments[0].0), "LMNPQRSTVW");

        let r = records(">a\nACDEFGHIKL\n>b\nACDEFGHIKL\n>c\nACDEFGHIK*\n>d\nXCDEFGHIKL").unwrap();
        let f = extract_fragments(&r, 10, &a);
        assert_eq!(f.fragments, vec![(a.encode(b"ACDEFGHIKL").unwrap(), 2)]);
    }

    fn toy_index() -> FragmentIndex {
        let qm = SymbolQuasiMetric::from_scores(&ScoringMatrix::blosum62()).unwrap();
        let p = Partition::amino_default(qm.alphabet()).unwrap();
        FragmentIndex::from_strings(qm, p, &["SEDRE", "KKLLM", "SEDRE", "WWWWW", "ACDEF"]).unwrap()
    }

    #[test]
    fn archive_round_trip() {
        let idx = toy_index();
        let bytes = encode_index(&idx);
        let back = decode_index(&bytes).unwrap();
        assert_eq!(encode_index(&back), bytes);
        assert_eq!(back.directory(), idx.directory());
        assert_eq!(back.counts(), idx.counts());
    }

    #[test]
    fn archive_corruption_names_section() {
        let bytes = encode_index(&toy_index());
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 1;
        assert!(matches!(decode_index(&bad), Err(IngestError::Archive { section: "checksum", .. })));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_index(&bad), Err(IngestError::Archive { section: "header", .. })));
        assert!(matches!(decode_index(&bytes[..bytes.len() - 20]), Err(IngestError::Archive { .. })));
        assert!(matches!(decode_index(b"QM"), Err(IngestError::Archive { .. })));
    }
}
