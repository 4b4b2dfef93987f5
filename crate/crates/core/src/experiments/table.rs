//! CSV files with `#` header lines. Floats are written with 17 significant
//! digits so they read back exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::som::{HitProfile, SlopeSummary};
use crate::spectra::RScanResult;

pub const RSCAN_COLUMNS: [&str; 7] = ["p", "mean_r", "stderr_r", "N", "k", "realizations", "seed"];
pub const SLOPE_COLUMNS: [&str; 5] = ["N", "final_slope", "break_1", "break_2", "responsive"];
pub const RESPONSIVE_COLUMNS: [&str; 4] = ["N", "neuron", "bottom_rate", "top_rate"];

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn render(comments: &[String], columns: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    writeln!(out, "{}", columns.join(",")).unwrap();
    for row in rows {
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A parsed CSV file: `#` lines, column names and raw cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let comments = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .map(|l| l.trim().to_string())
            .collect();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let columns = reader
            .headers()
            .map_err(|e| Error::parse(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| {
                r.map(|rec| rec.iter().map(str::to_string).collect())
                    .map_err(|e| Error::parse(path, e.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            path: path.to_path_buf(),
            comments,
            columns,
            rows,
        })
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::parse(&self.path, format!("missing column `{name}`")))
    }

    pub fn column<T: std::str::FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let i = self.index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(line, row)| {
                row[i].parse().map_err(|_| {
                    Error::parse(&self.path, format!("row {}: bad value {:?} in column `{name}`", line + 1, row[i]))
                })
            })
            .collect()
    }

    /// Value of `key=value` in the `#` lines.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .flat_map(|c| c.split_whitespace())
            .find_map(|tok| tok.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
    }

    fn meta_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta(key)
            .ok_or_else(|| Error::parse(&self.path, format!("missing header field `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::parse(&self.path, format!("bad header field `{key}={raw}`")))
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Table::parse(path, &text)
}

pub(crate) fn render_rscan(results: &[RScanResult], provenance: &str) -> String {
    let mut comments = vec![provenance.to_string()];
    if let Some(first) = results.first() {
        comments.push(format!(
            "graph_resamples={} window={}",
            first.graph_resamples,
            format_float(first.window_fraction)
        ));
    }
    let rows: Vec<Vec<String>> = results
        .iter()
        .flat_map(|r| {
            (0..r.p_grid.len()).map(move |i| {
                vec![
                    format_float(r.p_grid[i]),
                    format_float(r.mean_r[i]),
                    format_float(r.stderr_r[i]),
                    r.n.to_string(),
                    r.k.to_string(),
                    r.realizations.to_string(),
                    r.master_seed.to_string(),
                ]
            })
        })
        .collect();
    let columns: Vec<String> = RSCAN_COLUMNS.iter().map(|c| c.to_string()).collect();
    render(&comments, &columns, &rows)
}

/// Writes one or more scans into a single CSV.
pub fn write_rscan_csv(path: &Path, results: &[RScanResult], provenance: &str) -> Result<()> {
    write_text(path, &render_rscan(results, provenance))
}

/// Reads a scan CSV back, one result per system size in order of first
/// appearance.
pub fn read_rscan_csv(path: &Path) -> Result<Vec<RScanResult>> {
    let table = read_table(path)?;
    let p: Vec<f64> = table.column("p")?;
    let mean: Vec<f64> = table.column("mean_r")?;
    let stderr: Vec<f64> = table.column("stderr_r")?;
    let n: Vec<usize> = table.column("N")?;
    let k: Vec<usize> = table.column("k")?;
    let reals: Vec<usize> = table.column("realizations")?;
    let seed: Vec<u64> = table.column("seed")?;
    let resamples = table.meta_parsed("graph_resamples").unwrap_or(1);
    let window = table.meta_parsed("window").unwrap_or(f64::NAN);
    let mut out: Vec<RScanResult> = Vec::new();
    for i in 0..p.len() {
        let pos = match out.iter().position(|r| r.n == n[i]) {
            Some(pos) => pos,
            None => {
                out.push(RScanResult {
                    p_grid: vec![],
                    mean_r: vec![],
                    stderr_r: vec![],
                    n: n[i],
                    k: k[i],
                    realizations: reals[i],
                    graph_resamples: resamples,
                    window_fraction: window,
                    master_seed: seed[i],
                });
                out.len() - 1
            }
        };
        let r = &mut out[pos];
        r.p_grid.push(p[i]);
        r.mean_r.push(mean[i]);
        r.stderr_r.push(stderr[i]);
    }
    Ok(out)
}

/// What a hit profile file records about its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMeta {
    pub n: usize,
    pub k: usize,
    pub count: usize,
}

pub(crate) fn render_profile(profile: &HitProfile, meta: &ProfileMeta, provenance: &str, extra: &[String]) -> String {
    let mut comments = vec![
        provenance.to_string(),
        format!("N={} k={} count={}", meta.n, meta.k, meta.count),
    ];
    comments.extend(extra.iter().cloned());
    let mut columns = vec!["p".to_string()];
    columns.extend((0..profile.neurons()).map(|m| format!("neuron_{m}")));
    let rows: Vec<Vec<String>> = profile
        .p_values
        .iter()
        .zip(&profile.hits)
        .map(|(&p, hits)| {
            std::iter::once(format_float(p))
                .chain(hits.iter().map(|&h| format_float(h)))
                .collect()
        })
        .collect();
    render(&comments, &columns, &rows)
}

pub fn write_profile_csv(
    path: &Path,
    profile: &HitProfile,
    meta: &ProfileMeta,
    provenance: &str,
    extra: &[String],
) -> Result<()> {
    write_text(path, &render_profile(profile, meta, provenance, extra))
}

pub fn read_profile_csv(path: &Path) -> Result<(ProfileMeta, HitProfile)> {
    let table = read_table(path)?;
    let meta = ProfileMeta {
        n: table.meta_parsed("N")?,
        k: table.meta_parsed("k")?,
        count: table.meta_parsed("count")?,
    };
    let p: Vec<f64> = table.column("p")?;
    let neurons = table.columns.iter().filter(|c| c.starts_with("neuron_")).count();
    if neurons == 0 {
        return Err(Error::parse(path, "missing column `neuron_0`"));
    }
    let mut columns = Vec::with_capacity(neurons);
    for m in 0..neurons {
        columns.push(table.column::<f64>(&format!("neuron_{m}"))?);
    }
    let hits = (0..p.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    Ok((
        meta.clone(),
        HitProfile {
            p_values: p,
            hits,
            samples_per_p: meta.count,
        },
    ))
}

/// One row of the final-slope table.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub n: usize,
    pub final_slope: f64,
    pub breakpoints: [f64; 2],
    pub responsive: usize,
}

pub(crate) fn render_slopes(summaries: &[SlopeSummary], provenance: &str, gain: f64) -> String {
    let comments = vec![
        provenance.to_string(),
        format!("segments=3 gain_threshold={} x=log10p breakpoints=p", format_float(gain)),
    ];
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            let b = s.breakpoints_p();
            vec![
                s.n.to_string(),
                format_float(s.final_slope()),
                format_float(b[0]),
                format_float(b[1]),
                s.responsive.len().to_string(),
            ]
        })
        .collect();
    let columns: Vec<String> = SLOPE_COLUMNS.iter().map(|c| c.to_string()).collect();
    render(&comments, &columns, &rows)
}

pub fn write_slopes_csv(path: &Path, summaries: &[SlopeSummary], provenance: &str, gain: f64) -> Result<()> {
    write_text(path, &render_slopes(summaries, provenance, gain))
}

pub fn read_slopes_csv(path: &Path) -> Result<Vec<SlopeRow>> {
    let table = read_table(path)?;
    let n: Vec<usize> = table.column("N")?;
    let slope: Vec<f64> = table.column("final_slope")?;
    let b1: Vec<f64> = table.column("break_1")?;
    let b2: Vec<f64> = table.column("break_2")?;
    let resp: Vec<usize> = table.column("responsive")?;
    Ok((0..n.len())
        .map(|i| SlopeRow {
            n: n[i],
            final_slope: slope[i],
            breakpoints: [b1[i], b2[i]],
            responsive: resp[i],
        })
        .collect())
}

/// Responsive neurons and their bottom- and top-decade hit rates.
pub fn write_responsive_csv(
    path: &Path,
    rows: &[(usize, usize, f64, f64)],
    provenance: &str,
    gain: f64,
) -> Result<()> {
    let comments = vec![provenance.to_string(), format!("gain_threshold={}", format_float(gain))];
    let columns: Vec<String> = RESPONSIVE_COLUMNS.iter().map(|c| c.to_string()).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|&(n, m, lo, hi)| vec![n.to_string(), m.to_string(), format_float(lo), format_float(hi)])
        .collect();
    write_text(path, &render(&comments, &columns, &body))
}

pub fn read_responsive_csv(path: &Path) -> Result<Vec<(usize, usize, f64, f64)>> {
    let table = read_table(path)?;
    let n: Vec<usize> = table.column("N")?;
    let m: Vec<usize> = table.column("neuron")?;
    let lo: Vec<f64> = table.column("bottom_rate")?;
    let hi: Vec<f64> = table.column("top_rate")?;
    Ok((0..n.len()).map(|i| (n[i], m[i], lo[i], hi[i])).collect())
}
