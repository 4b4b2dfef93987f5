//! Binary corpus of coupling matrices.
//!
//! A corpus is a plain concatenation of records. Each record is, all
//! little-endian:
//!
//! ```text
//! N: u32, k: u32, p: f64, seed: u64
//! N*k triples (a: u32, b: u32, r: f64), a < b, sorted
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{CouplingMatrix, Provenance};
use crate::error::{Error, Result};

const HEADER_BYTES: usize = 4 + 4 + 8 + 8;
const TRIPLE_BYTES: usize = 4 + 4 + 8;

pub fn write_record<W: Write>(out: &mut W, matrix: &CouplingMatrix) -> io::Result<()> {
    let prov = matrix.provenance();
    if matrix.couplings().len() != prov.n * prov.k {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!(
                "record needs N*k = {} couplings, matrix has {}",
                prov.n * prov.k,
                matrix.couplings().len()
            ),
        ));
    }
    let mut buf = Vec::with_capacity(HEADER_BYTES + TRIPLE_BYTES * matrix.couplings().len());
    buf.extend_from_slice(&(prov.n as u32).to_le_bytes());
    buf.extend_from_slice(&(prov.k as u32).to_le_bytes());
    buf.extend_from_slice(&prov.p.to_le_bytes());
    buf.extend_from_slice(&prov.seed.to_le_bytes());
    for &(a, b, r) in matrix.couplings() {
        buf.extend_from_slice(&a.to_le_bytes());
        buf.extend_from_slice(&b.to_le_bytes());
        buf.extend_from_slice(&r.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Reads one record, or `None` at a clean end of input.
pub fn read_record<R: Read>(input: &mut R) -> Result<Option<CouplingMatrix>> {
    let mut header = [0u8; HEADER_BYTES];
    let mut filled = 0;
    while filled < HEADER_BYTES {
        let got = input
            .read(&mut header[filled..])
            .map_err(|e| Error::InvalidInput(format!("corpus read: {e}")))?;
        if got == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::InvalidInput("corpus: truncated record header".into()));
        }
        filled += got;
    }
    let n = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let p = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let seed = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let count = n
        .checked_mul(k)
        .filter(|&c| c <= 1 << 28)
        .ok_or_else(|| Error::InvalidInput(format!("corpus: implausible record size N = {n}, k = {k}")))?;
    let mut body = vec![0u8; count * TRIPLE_BYTES];
    input
        .read_exact(&mut body)
        .map_err(|_| Error::InvalidInput("corpus: truncated record body".into()))?;
    let couplings = body
        .chunks_exact(TRIPLE_BYTES)
        .map(|c| {
            (
                u32::from_le_bytes(c[0..4].try_into().unwrap()),
                u32::from_le_bytes(c[4..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    CouplingMatrix::from_couplings(Provenance { n, k, p, seed }, couplings).map(Some)
}

/// Streaming reader over a corpus file.
pub struct CorpusReader {
    path: PathBuf,
    input: BufReader<File>,
}

impl CorpusReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            input: BufReader::new(file),
        })
    }
}

impl Iterator for CorpusReader {
    type Item = Result<CouplingMatrix>;

    fn next(&mut self) -> Option<Self::Item> {
        read_record(&mut self.input)
            .map_err(|e| e.context(self.path.display().to_string()))
            .transpose()
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<CouplingMatrix>> {
    CorpusReader::open(path)?.collect()
}

pub fn write_corpus<'a, I>(path: &Path, matrices: I) -> Result<()>
where
    I: IntoIterator<Item = &'a CouplingMatrix>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for m in matrices {
        write_record(&mut out, m).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::sample_hamiltonian;
    use proptest::prelude::*;

    #[test]
    fn record_layout() {
        let m = sample_hamiltonian(10, 2, 0.2, 3).unwrap();
        let mut buf = Vec::new();
        write_record(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), HEADER_BYTES + 20 * TRIPLE_BYTES);
        assert_eq!(&buf[0..4], &10u32.to_le_bytes());
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[16..24], &3u64.to_le_bytes());
    }

    #[test]
    fn truncated_input_is_an_error() {
        let m = sample_hamiltonian(10, 1, 0.5, 1).unwrap();
        let mut buf = Vec::new();
        write_record(&mut buf, &m).unwrap();
        buf.pop();
        assert!(read_record(&mut buf.as_slice()).is_err());
        assert!(read_record(&mut &buf[..5]).is_err());
        assert!(read_record(&mut &buf[..0]).unwrap().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn corpus_round_trip(seeds in proptest::collection::vec(any::<u64>(), 1..6), p in 0.0f64..=1.0) {
            let ms: Vec<_> = seeds.iter().map(|&s| sample_hamiltonian(12, 2, p, s).unwrap()).collect();
            let mut buf = Vec::new();
            for m in &ms {
                write_record(&mut buf, m).unwrap();
            }
            let mut cursor = buf.as_slice();
            let mut back = Vec::new();
            while let Some(m) = read_record(&mut cursor).unwrap() {
                back.push(m);
            }
            prop_assert_eq!(back, ms);
        }
    }
}
