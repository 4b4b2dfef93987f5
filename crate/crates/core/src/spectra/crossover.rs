//! Locating the Poisson-to-GUE crossover in a scan of the mean ratio.

use crate::error::{Error, Result};

/// Logistic step in `x = log10 p`:
/// `lo + (hi - lo) / (1 + exp(-(x - center) / width))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub lo: f64,
    pub hi: f64,
    /// Midpoint in `log10 p`.
    pub center: f64,
    /// Width in decades of `p`.
    pub width: f64,
    pub residual: f64,
}

impl LogisticFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.lo + (self.hi - self.lo) * sigmoid((x - self.center) / self.width)
    }

    /// `p` at which the fitted curve equals `level`, if the level lies
    /// strictly between the plateaus.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let t = (level - self.lo) / (self.hi - self.lo);
        if !(t > 0.0 && t < 1.0) {
            return None;
        }
        let x = self.center + self.width * (t / (1.0 - t)).ln();
        Some(10f64.powf(x))
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Least-squares logistic fit of `values` against `log10(p)`.
///
/// For fixed `(center, width)` the plateaus enter linearly and are solved in
/// closed form; `(center, width)` are found by a grid search followed by a
/// shrinking pattern search.
pub fn fit_logistic(p: &[f64], values: &[f64]) -> Result<LogisticFit> {
    if p.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: values.len(),
        });
    }
    if p.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            have: p.len(),
        });
    }
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("logistic fit needs p > 0".into()));
    }
    let x: Vec<f64> = p.iter().map(|v| v.log10()).collect();
    let (xmin, xmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (xmax - xmin).max(1e-6);
    let (wmin, wmax) = (span * 1e-3, span * 2.0);

    let solve = |center: f64, width: f64| -> LogisticFit {
        // Basis (1 - s, s); normal equations for (lo, hi).
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(values) {
            let s = sigmoid((xi - center) / width);
            let u = 1.0 - s;
            a11 += u * u;
            a12 += u * s;
            a22 += s * s;
            b1 += u * yi;
            b2 += s * yi;
        }
        let det = a11 * a22 - a12 * a12;
        let (lo, hi) = if det.abs() > 1e-12 * (a11 * a22).max(1e-300) {
            ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
        } else {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            (mean, mean)
        };
        let mut fit = LogisticFit {
            lo,
            hi,
            center,
            width,
            residual: 0.0,
        };
        fit.residual = x
            .iter()
            .zip(values)
            .map(|(&xi, &yi)| (fit.eval(xi) - yi).powi(2))
            .sum();
        fit
    };

    let mut best = solve(0.5 * (xmin + xmax), span / 4.0);
    const CENTERS: usize = 120;
    const WIDTHS: usize = 48;
    for ci in 0..=CENTERS {
        let center = xmin + span * ci as f64 / CENTERS as f64;
        for wi in 0..=WIDTHS {
            let width = wmin * (wmax / wmin).powf(wi as f64 / WIDTHS as f64);
            let fit = solve(center, width);
            if fit.residual < best.residual {
                best = fit;
            }
        }
    }

    let mut dc = span / CENTERS as f64;
    let mut dlw = (wmax / wmin).ln() / WIDTHS as f64;
    while dc > 1e-10 * span {
        let mut improved = false;
        for (sc, sw) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let center = (best.center + sc * dc).clamp(xmin, xmax);
            let width = (best.width * (sw * dlw).exp()).clamp(wmin, wmax);
            let fit = solve(center, width);
            if fit.residual < best.residual {
                best = fit;
                improved = true;
            }
        }
        if !improved {
            dc *= 0.5;
            dlw *= 0.5;
        }
    }
    Ok(best)
}

/// First grid interval where `values` climbs through `level`, interpolated
/// linearly in `log10 p`.
pub fn interpolated_crossing(p: &[f64], values: &[f64], level: f64) -> Option<f64> {
    p.windows(2)
        .zip(values.windows(2))
        .find(|(_, v)| v[0] < level && v[1] >= level)
        .map(|(pw, v)| {
            let (x0, x1) = (pw[0].log10(), pw[1].log10());
            let t = (level - v[0]) / (v[1] - v[0]);
            10f64.powf(x0 + t * (x1 - x0))
        })
}
