//! Map files: optional `#` comment lines, a text line
//! `som <rows> <cols> <input_dim> <trained_iterations>`, then the weights as
//! little-endian `f64`, neuron by neuron.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{SomConfig, SomMap};
use crate::error::{Error, Result};

pub fn write_map(map: &SomMap, comments: &[String], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_map_to(map, comments, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_map_to<W: Write>(map: &SomMap, comments: &[String], out: &mut W) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(
        out,
        "som {} {} {} {}",
        map.config.rows,
        map.config.cols,
        map.config.input_dim,
        map.trained_iterations()
    )?;
    let mut buf = Vec::with_capacity(8 * map.weights().len());
    for w in map.weights() {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Reads a map file. The returned map carries default training settings;
/// only its shape, weights and iteration count come from the file.
pub fn read_map(path: &Path) -> Result<SomMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_map_from(&mut BufReader::new(file)).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::parse(path, msg),
        other => other,
    })
}

pub(crate) fn read_map_from<R: BufRead>(input: &mut R) -> Result<SomMap> {
    let bad = |m: &str| Error::InvalidInput(format!("map file: {m}"));
    let mut line = Vec::new();
    let header = loop {
        line.clear();
        let got = input
            .read_until(b'\n', &mut line)
            .map_err(|e| bad(&e.to_string()))?;
        if got == 0 {
            return Err(bad("missing `som` header"));
        }
        let text = std::str::from_utf8(&line).map_err(|_| bad("header is not UTF-8"))?;
        if !text.starts_with('#') {
            break text.trim_end().to_string();
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "som" {
        return Err(bad(&format!("bad header {header:?}")));
    }
    let nums: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse().map_err(|_| bad(&format!("bad number {f:?}"))))
        .collect::<Result<_>>()?;
    let (rows, cols, dim, trained) = (nums[0], nums[1], nums[2], nums[3]);
    let count = rows
        .checked_mul(cols)
        .and_then(|j| j.checked_mul(dim))
        .filter(|&c| c > 0 && c <= 1 << 31)
        .ok_or_else(|| bad("implausible dimensions"))?;
    let mut body = vec![0u8; count * 8];
    input
        .read_exact(&mut body)
        .map_err(|_| bad("truncated weights"))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(|e| bad(&e.to_string()))? != 0 {
        return Err(bad("trailing bytes after weights"));
    }
    let weights = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let config = SomConfig::new(rows, cols, dim, trained.max(1));
    SomMap::from_weights(config, weights, trained)
}
