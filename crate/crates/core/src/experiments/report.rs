//! Static HTML report with inline SVG charts. Every number shown is
//! recomputed from the input CSVs, whose file names are listed next to it.
//! Directories are left out so the report does not depend on where the
//! inputs live.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::table::{read_profile_csv, read_rscan_csv, read_slopes_csv, write_text, SlopeRow};
use crate::error::Result;
use crate::som::{responsive_curve, responsive_neurons, rise_onset, summarize_profile, HitProfile};
use crate::spectra::crossover::{fit_logistic, interpolated_crossing};
use crate::spectra::{CROSSOVER_LEVEL, GUE_MEAN_R, POISSON_MEAN_R};

#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub rscan: Vec<PathBuf>,
    pub profiles: Vec<PathBuf>,
    pub slopes: Option<PathBuf>,
    /// Added to the i-th responsive-neuron curve as `i * offset`, to stack
    /// curves of different sizes.
    pub offset: f64,
    pub gain_threshold: f64,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4e}")
    } else {
        "n/a".into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn chart(title: &str, x_label: &str, y_label: &str, series: &[Series], guides: &[(f64, &str)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 360.0, 70.0, 20.0, 30.0, 50.0);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .chain(guides.iter().map(|g| g.0));
    let bounds = |it: &mut dyn Iterator<Item = f64>| {
        it.filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (mut x0, mut x1) = bounds(&mut xs.into_iter());
    let (mut y0, mut y1) = bounds(&mut ys.into_iter());
    if !(x0 < x1) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y0 < y1) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let sy = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    )
    .unwrap();
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#, sx(fx), h - bottom + 16.0, fx).unwrap();
        writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, left - 6.0, sy(fy) + 4.0, fy).unwrap();
    }
    writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (w + left) / 2.0, h - 10.0, escape(x_label)).unwrap();
    writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    )
    .unwrap();
    for &(g, label) in guides {
        writeln!(
            svg,
            r#"<line x1="{left}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="gray" stroke-dasharray="4 3"/><text x="{:.1}" y="{:.1}" fill="gray" text-anchor="end">{}</text>"#,
            w - right,
            w - right - 4.0,
            sy(g) - 4.0,
            escape(label),
            y = sy(g)
        )
        .unwrap();
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            left + 8.0,
            top + 16.0 + 14.0 * i as f64,
            escape(&s.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn table(head: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::from("<table>\n<tr>");
    for h in head {
        write!(out, "<th>{}</th>", escape(h)).unwrap();
    }
    out.push_str("</tr>\n");
    for row in rows {
        out.push_str("<tr>");
        for cell in row {
            write!(out, "<td>{}</td>", escape(cell)).unwrap();
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
    out
}

fn name(path: &Path) -> String {
    path.file_name().unwrap_or(path.as_os_str()).to_string_lossy().into_owned()
}

/// Builds the report. `provenance` becomes the leading comment.
pub fn emit_report(inputs: &ReportInputs, provenance: &str) -> Result<String> {
    let mut html = String::new();
    writeln!(html, "<!-- {provenance} -->").unwrap();
    html.push_str(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>chaos-probe report</title>\n\
         <style>body{font-family:sans-serif;max-width:960px;margin:auto}table{border-collapse:collapse}\
         td,th{border:1px solid #999;padding:2px 8px;text-align:right}</style></head><body>\n\
         <h1>chaos-probe report</h1>\n",
    );
    writeln!(html, "<p><code>{}</code></p>", escape(provenance)).unwrap();

    if !inputs.rscan.is_empty() {
        html.push_str("<h2>Mean spacing ratio</h2>\n");
        let mut series = Vec::new();
        let mut rows = Vec::new();
        for path in &inputs.rscan {
            for r in read_rscan_csv(path)? {
                let logp: Vec<(f64, f64)> = r.p_grid.iter().zip(&r.mean_r).map(|(p, m)| (p.log10(), *m)).collect();
                series.push(Series {
                    label: format!("N = {}", r.n),
                    points: logp,
                });
                let fit = fit_logistic(&r.p_grid, &r.mean_r).ok();
                let fitted = fit.and_then(|f| f.crossing(CROSSOVER_LEVEL)).unwrap_or(f64::NAN);
                let interp = interpolated_crossing(&r.p_grid, &r.mean_r, CROSSOVER_LEVEL).unwrap_or(f64::NAN);
                rows.push(vec![
                    r.n.to_string(),
                    r.realizations.to_string(),
                    fmt_num(r.mean_r[0]),
                    fmt_num(*r.mean_r.last().unwrap()),
                    fmt_num(fitted),
                    fmt_num(interp),
                    fit.map_or("n/a".into(), |f| fmt_num(f.width)),
                    name(path),
                ]);
            }
        }
        html.push_str(&chart(
            "mean r versus rewiring probability",
            "log10 p",
            "mean r",
            &series,
            &[(POISSON_MEAN_R, "Poisson"), (GUE_MEAN_R, "GUE"), (CROSSOVER_LEVEL, "midpoint")],
        ));
        html.push_str(&table(
            &["N", "realizations", "mean r at p min", "mean r at p max", "crossover p* (logistic)", "crossover p* (interpolated)", "width (decades)", "source"],
            &rows,
        ));
    }

    let mut profiles: BTreeMap<usize, (PathBuf, HitProfile)> = BTreeMap::new();
    for path in &inputs.profiles {
        let (meta, profile) = read_profile_csv(path)?;
        profiles.insert(meta.n, (path.clone(), profile));
    }
    if !profiles.is_empty() {
        html.push_str("<h2>Responsive neurons</h2>\n");
        let mut series = Vec::new();
        let mut rows = Vec::new();
        for (i, (&n, (path, profile))) in profiles.iter().enumerate() {
            let neurons = responsive_neurons(profile, inputs.gain_threshold)?;
            let curve = responsive_curve(profile, &neurons);
            let shift = i as f64 * inputs.offset;
            series.push(Series {
                label: format!("N = {n}"),
                points: profile.p_values.iter().zip(&curve).map(|(p, c)| (p.log10(), c + shift)).collect(),
            });
            let onset = rise_onset(&profile.p_values, &curve).ok();
            let summary = summarize_profile(n, profile, inputs.gain_threshold, 3).ok();
            let b = summary.as_ref().map(|s| s.breakpoints_p()).unwrap_or_default();
            rows.push(vec![
                n.to_string(),
                neurons.len().to_string(),
                onset.as_ref().map_or("n/a".into(), |o| fmt_num(o.onset_p)),
                onset.as_ref().map_or("n/a".into(), |o| o.is_flat_then_rising().to_string()),
                b.first().map_or("n/a".into(), |v| fmt_num(*v)),
                b.get(1).map_or("n/a".into(), |v| fmt_num(*v)),
                summary.as_ref().map_or("n/a".into(), |s| fmt_num(s.final_slope())),
                name(path),
            ]);
        }
        let y_label = if inputs.offset != 0.0 {
            format!("summed hit rate (+ i x {})", inputs.offset)
        } else {
            "summed hit rate".to_string()
        };
        html.push_str(&chart("responsive-neuron hits", "log10 p", &y_label, &series, &[]));
        html.push_str(&table(
            &["N", "responsive", "rise onset p", "flat then rising", "break 1 p", "break 2 p", "final slope", "source"],
            &rows,
        ));
    }

    let slope_rows: Option<(Vec<SlopeRow>, String)> = match &inputs.slopes {
        Some(path) => Some((read_slopes_csv(path)?, name(path))),
        None if profiles.len() > 1 => {
            let rows = profiles
                .iter()
                .filter_map(|(&n, (_, p))| summarize_profile(n, p, inputs.gain_threshold, 3).ok())
                .map(|s| SlopeRow {
                    n: s.n,
                    final_slope: s.final_slope(),
                    breakpoints: {
                        let b = s.breakpoints_p();
                        [b[0], b[1]]
                    },
                    responsive: s.responsive.len(),
                })
                .collect();
            Some((rows, "hit profiles".into()))
        }
        None => None,
    };
    if let Some((rows, source)) = slope_rows {
        html.push_str("<h2>Final slope versus system size</h2>\n");
        let series = [Series {
            label: "final slope".into(),
            points: rows.iter().map(|r| (r.n as f64, r.final_slope)).collect(),
        }];
        html.push_str(&chart("final-segment slope", "N", "slope per decade of p", &series, &[]));
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_num(r.final_slope),
                    fmt_num(r.breakpoints[0]),
                    fmt_num(r.breakpoints[1]),
                    r.responsive.to_string(),
                    source.clone(),
                ]
            })
            .collect();
        html.push_str(&table(&["N", "final slope", "break 1 p", "break 2 p", "responsive", "source"], &cells));
    }
    html.push_str("</body></html>\n");
    Ok(html)
}

pub fn write_report(path: &Path, inputs: &ReportInputs, provenance: &str) -> Result<()> {
    write_text(path, &emit_report(inputs, provenance)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::table::{write_profile_csv, write_rscan_csv, ProfileMeta};
    use crate::spectra::RScanResult;

    fn logistic_scan(n: usize) -> RScanResult {
        let p: Vec<f64> = (0..12).map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / 11.0)).collect();
        let mean: Vec<f64> = p
            .iter()
            .map(|v| 0.386 + 0.214 / (1.0 + (-(v.log10() + 1.7) / 0.3).exp()))
            .collect();
        RScanResult {
            stderr_r: vec![0.001; p.len()],
            p_grid: p,
            mean_r: mean,
            n,
            k: 2,
            realizations: 3,
            graph_resamples: 1,
            window_fraction: 0.25,
            master_seed: 0,
        }
    }

    fn rising_profile() -> HitProfile {
        let p: Vec<f64> = (0..15).map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / 14.0)).collect();
        let hits = p
            .iter()
            .map(|v| {
                let r = 0.05 + 0.3 * (v.log10() + 0.7).max(0.0);
                vec![1.0 - r, r]
            })
            .collect();
        HitProfile {
            p_values: p,
            hits,
            samples_per_p: 10,
        }
    }

    #[test]
    fn report_lists_crossover_and_breakpoints() {
        let dir = tempfile::tempdir().unwrap();
        let rscan = dir.path().join("r.csv");
        write_rscan_csv(&rscan, &[logistic_scan(1000)], "prov").unwrap();
        let prof = dir.path().join("h.csv");
        write_profile_csv(&prof, &rising_profile(), &ProfileMeta { n: 16, k: 2, count: 10 }, "prov", &[]).unwrap();
        let inputs = ReportInputs {
            rscan: vec![rscan],
            profiles: vec![prof],
            slopes: None,
            offset: 0.1,
            gain_threshold: 2.0,
        };
        let html = emit_report(&inputs, "chaos-probe x config=abc seed=1").unwrap();
        assert!(html.starts_with("<!-- chaos-probe x config=abc seed=1 -->"));
        assert!(html.contains("crossover p* (logistic)"));
        assert!(html.contains("<svg"));
        assert!(html.contains("break 1 p"));
        assert!(html.contains("+ i x 0.1"));
        // the midpoint of this synthetic scan sits at log10 p = -1.7
        let expected = fmt_num(10f64.powf(-1.7 + 0.3 * ((0.493 - 0.386) / (0.6 - 0.493f64)).ln()));
        assert!(html.contains(&expected), "{expected}");
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "# x\np,mean_r,stderr_r,N,k,seed\n0.1,0.4,0.0,10,2,0\n").unwrap();
        let inputs = ReportInputs {
            rscan: vec![bad],
            gain_threshold: 2.0,
            ..Default::default()
        };
        let err = emit_report(&inputs, "p").unwrap_err().to_string();
        assert!(err.contains("`realizations`"), "{err}");
    }
}
