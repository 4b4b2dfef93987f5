//! Turning neuron hit counts into a transition signal.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{histogram_from_winners, SomMap};
use crate::error::{Error, Result};

/// A neuron counts as responsive when its mean hit rate over the top decade
/// of `p` exceeds this multiple of its rate over the bottom decade.
pub const DEFAULT_GAIN_THRESHOLD: f64 = 2.0;

/// Normalized hit histograms, one row per rewiring probability.
#[derive(Debug, Clone, PartialEq)]
pub struct HitProfile {
    pub p_values: Vec<f64>,
    pub hits: Vec<Vec<f64>>,
    pub samples_per_p: usize,
}

impl HitProfile {
    pub fn neurons(&self) -> usize {
        self.hits.first().map_or(0, Vec::len)
    }

    /// Copy with a constant added to every entry. Only meant for plotting
    /// overlays; the result is no longer a set of probability vectors.
    pub fn offset(&self, shift: f64) -> HitProfile {
        HitProfile {
            p_values: self.p_values.clone(),
            hits: self
                .hits
                .iter()
                .map(|row| row.iter().map(|h| h + shift).collect())
                .collect(),
            samples_per_p: self.samples_per_p,
        }
    }
}

/// Classifies `count` fresh inputs per grid point. `generate(grid_index, p,
/// sample_index)` must be a pure function of its arguments so the profile
/// does not depend on the worker count.
pub fn scan_hits<G>(map: &SomMap, generate: G, p_grid: &[f64], count: usize) -> Result<HitProfile>
where
    G: Fn(usize, f64, usize) -> Result<Vec<f64>> + Sync,
{
    if p_grid.is_empty() || count == 0 {
        return Err(Error::InvalidInput("scan needs a non-empty grid and count > 0".into()));
    }
    let winners: Vec<usize> = (0..p_grid.len() * count)
        .into_par_iter()
        .map(|item| {
            let (gi, si) = (item / count, item % count);
            let x = generate(gi, p_grid[gi], si)?;
            map.classify(&x)
        })
        .collect::<Result<_>>()?;
    let hits = winners
        .chunks(count)
        .map(|w| histogram_from_winners(w, map.neurons()))
        .collect();
    Ok(HitProfile {
        p_values: p_grid.to_vec(),
        hits,
        samples_per_p: count,
    })
}

/// Mean hit rate of every neuron over the bottom decade of `p` (points
/// with `p <= 10 p_min`) and over the top decade (`p >= p_max / 10`).
pub fn decade_rates(profile: &HitProfile) -> Result<Vec<(f64, f64)>> {
    if profile.p_values.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            have: profile.p_values.len(),
        });
    }
    let (pmin, pmax) = profile
        .p_values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &p| (a.min(p), b.max(p)));
    let top: Vec<usize> = (0..profile.p_values.len())
        .filter(|&i| profile.p_values[i] >= pmax / 10.0)
        .collect();
    let bottom: Vec<usize> = (0..profile.p_values.len())
        .filter(|&i| profile.p_values[i] <= pmin * 10.0)
        .collect();
    let mean_over = |rows: &[usize], m: usize| {
        rows.iter().map(|&i| profile.hits[i][m]).sum::<f64>() / rows.len() as f64
    };
    Ok((0..profile.neurons())
        .map(|m| (mean_over(&bottom, m), mean_over(&top, m)))
        .collect())
}

/// Neurons whose mean hit rate over the top decade of `p` exceeds
/// `gain_threshold` times their rate over the bottom decade. Sorted.
pub fn responsive_neurons(profile: &HitProfile, gain_threshold: f64) -> Result<Vec<usize>> {
    Ok(decade_rates(profile)?
        .into_iter()
        .enumerate()
        .filter(|&(_, (lo, hi))| hi > 0.0 && hi > gain_threshold * lo)
        .map(|(m, _)| m)
        .collect())
}

/// Summed hit rate of `neurons` at each grid point.
pub fn responsive_curve(profile: &HitProfile, neurons: &[usize]) -> Vec<f64> {
    profile
        .hits
        .iter()
        .map(|row| neurons.iter().map(|&m| row[m]).sum())
        .collect()
}

/// Continuous piecewise-linear least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit {
    /// Interior breakpoints, in the units of `x`.
    pub breakpoints: Vec<f64>,
    /// Grid indices of the breakpoints.
    pub breakpoint_indices: Vec<usize>,
    pub slopes: Vec<f64>,
    /// Fitted value at `x = 0`, extrapolated along the first segment.
    pub intercept: f64,
    pub residual: f64,
}

impl SegmentFit {
    pub fn eval(&self, x: f64) -> f64 {
        let mut y = self.intercept + self.slopes[0] * x;
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if x > b {
                y += (self.slopes[i + 1] - self.slopes[i]) * (x - b);
            }
        }
        y
    }

    pub fn final_slope(&self) -> f64 {
        *self.slopes.last().unwrap()
    }
}

/// Fits `segments` linear pieces joined continuously at grid points,
/// searching every admissible breakpoint combination. Each piece spans at
/// least three grid points (breakpoints shared) when the grid allows it,
/// otherwise two.
pub fn segment_fit(x: &[f64], y: &[f64], segments: usize) -> Result<SegmentFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if segments == 0 {
        return Err(Error::InvalidParameter("segments must be at least 1".into()));
    }
    let n = x.len();
    if n < segments + 1 {
        return Err(Error::TooFewPoints {
            needed: segments + 1,
            have: n,
        });
    }
    if !x.windows(2).all(|w| w[0] < w[1]) || x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("segment fit needs finite, strictly increasing x".into()));
    }
    let min_points = if n > 2 * segments { 3 } else { 2 };
    let gap = min_points - 1;

    let mut best: Option<SegmentFit> = None;
    let mut indices = Vec::with_capacity(segments - 1);
    search(x, y, segments, gap, 0, &mut indices, &mut best);
    best.ok_or_else(|| Error::TooFewPoints {
        needed: segments + 1,
        have: n,
    })
}

fn search(
    x: &[f64],
    y: &[f64],
    segments: usize,
    gap: usize,
    last: usize,
    indices: &mut Vec<usize>,
    best: &mut Option<SegmentFit>,
) {
    let n = x.len();
    if indices.len() == segments - 1 {
        if n - 1 - last < gap {
            return;
        }
        let fit = fit_hinges(x, y, indices);
        if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
            *best = Some(fit);
        }
        return;
    }
    let remaining = segments - 1 - indices.len();
    // leave room for the remaining breakpoints and the last piece
    let max_index = (n - 1).saturating_sub(gap * remaining);
    for b in last + gap..=max_index {
        indices.push(b);
        search(x, y, segments, gap, b, indices, best);
        indices.pop();
    }
}

/// Least squares on the basis `1, x, (x - b_1)_+, ...`.
fn fit_hinges(x: &[f64], y: &[f64], indices: &[usize]) -> SegmentFit {
    let breaks: Vec<f64> = indices.iter().map(|&i| x[i]).collect();
    let mut columns = vec![vec![1.0; x.len()], x.to_vec()];
    for &b in &breaks {
        columns.push(x.iter().map(|&xi| (xi - b).max(0.0)).collect());
    }
    let (coef, residual) = least_squares(&columns, y);
    let mut slopes = vec![coef[1]];
    for c in &coef[2..] {
        let prev = *slopes.last().unwrap();
        slopes.push(prev + c);
    }
    SegmentFit {
        breakpoints: breaks,
        breakpoint_indices: indices.to_vec(),
        slopes,
        intercept: coef[0],
        residual,
    }
}

/// Householder QR least squares. `columns` are the design-matrix columns.
/// Returns the coefficients and the residual sum of squares.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let m = y.len();
    let k = columns.len();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut b = y.to_vec();
    let mut rank_ok = vec![true; k];
    for j in 0..k {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-14 * (1.0 + a[j].iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            rank_ok[j] = false;
            continue;
        }
        let alpha = -norm.copysign(a[j][j]);
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|t| t * t).sum();
        for col in a.iter_mut().skip(j) {
            let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm_sq;
            for (c, vi) in col[j..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm_sq;
        for (c, vi) in b[j..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }
    let mut coef = vec![0.0; k];
    for j in (0..k).rev() {
        if !rank_ok[j] {
            continue;
        }
        let mut s = b[j];
        for l in j + 1..k {
            s -= a[l][j] * coef[l];
        }
        coef[j] = s / a[j][j];
    }
    let residual = (0..m)
        .map(|i| {
            let fit: f64 = columns.iter().zip(&coef).map(|(c, w)| c[i] * w).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    (coef, residual)
}

/// Onset of the rise in a flat-then-rising curve, from a two-piece fit in
/// `log10 p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiseOnset {
    pub onset_p: f64,
    pub flat_slope: f64,
    pub rise_slope: f64,
    pub fit: SegmentFit,
}

impl RiseOnset {
    /// The first piece is nearly level (at most a quarter of the second
    /// piece's slope) and the second climbs.
    pub fn is_flat_then_rising(&self) -> bool {
        self.rise_slope > 0.0 && self.flat_slope.abs() <= 0.25 * self.rise_slope
    }
}

pub fn rise_onset(p: &[f64], curve: &[f64]) -> Result<RiseOnset> {
    let x: Vec<f64> = p.iter().map(|v| v.log10()).collect();
    let fit = segment_fit(&x, curve, 2)?;
    Ok(RiseOnset {
        onset_p: 10f64.powf(fit.breakpoints[0]),
        flat_slope: fit.slopes[0],
        rise_slope: fit.slopes[1],
        fit,
    })
}

/// Three-piece fit of one system size's responsive-neuron curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSummary {
    pub n: usize,
    pub responsive: Vec<usize>,
    pub curve: Vec<f64>,
    pub fit: SegmentFit,
}

impl SlopeSummary {
    pub fn final_slope(&self) -> f64 {
        self.fit.final_slope()
    }

    /// Interior breakpoints as rewiring probabilities.
    pub fn breakpoints_p(&self) -> Vec<f64> {
        self.fit.breakpoints.iter().map(|b| 10f64.powf(*b)).collect()
    }
}

pub fn summarize_profile(n: usize, profile: &HitProfile, gain_threshold: f64, segments: usize) -> Result<SlopeSummary> {
    let responsive = responsive_neurons(profile, gain_threshold)?;
    let curve = responsive_curve(profile, &responsive);
    let x: Vec<f64> = profile.p_values.iter().map(|v| v.log10()).collect();
    let fit = segment_fit(&x, &curve, segments).map_err(|e| e.context(format!("N = {n}")))?;
    Ok(SlopeSummary {
        n,
        responsive,
        curve,
        fit,
    })
}

/// Slope of the last of three pieces for every system size, sorted by `N`.
pub fn final_slope_vs_n(profiles: &BTreeMap<usize, HitProfile>, gain_threshold: f64) -> Result<Vec<SlopeSummary>> {
    profiles
        .iter()
        .map(|(&n, profile)| summarize_profile(n, profile, gain_threshold, 3))
        .collect()
}
