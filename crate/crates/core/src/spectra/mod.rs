//! Level statistics of `H = iS`: spectra, spacing ratios and the scan of
//! the mean ratio over rewiring probability.

pub mod crossover;
pub mod eigen;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{sample_graph, sample_weights, CouplingMatrix};
use crate::rng::{mix_seed, tag};

/// Mean ratio for uncorrelated (Poisson) levels, `2 ln 2 - 1`.
pub const POISSON_MEAN_R: f64 = 0.386_294_361_119_890_6;

/// Mean ratio for the Gaussian unitary ensemble.
pub const GUE_MEAN_R: f64 = 0.5996;

/// Midpoint between the two reference values, used to locate crossovers.
pub const CROSSOVER_LEVEL: f64 = 0.493;

/// Sorted real eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    levels: Vec<f64>,
}

impl Spectrum {
    /// Sorts `levels` ascending. Non-finite levels are rejected.
    pub fn from_levels(mut levels: Vec<f64>) -> Result<Self> {
        if levels.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite level".into()));
        }
        levels.sort_by(f64::total_cmp);
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `max_i |E_i + E_{N+1-i}|`, zero for an exactly mirror-symmetric
    /// spectrum.
    pub fn mirror_residual(&self) -> f64 {
        let n = self.levels.len();
        (0..n)
            .map(|i| (self.levels[i] + self.levels[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.levels.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// All eigenvalues of `H = iS`, ascending.
pub fn eigenvalues(s: &CouplingMatrix) -> Result<Spectrum> {
    let levels = eigen::skew_hermitian_spectrum(&s.to_dense(), s.n())?;
    Ok(Spectrum { levels })
}

/// The `ceil(f N)` levels starting at index `floor(N (1 - f) / 2)`.
pub fn central_window(spec: &Spectrum, fraction: f64) -> Result<Spectrum> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window fraction {fraction} outside (0, 1]"
        )));
    }
    let n = spec.len();
    let nf = n as f64;
    // Guard against 0.25 * 1000 landing a hair above 250.
    let count = ((fraction * nf) - 1e-9).ceil().max(0.0) as usize;
    let start = ((nf * (1.0 - fraction) / 2.0) + 1e-9).floor() as usize;
    let count = count.min(n);
    let start = start.min(n - count);
    if count < 3 {
        return Err(Error::TooFewLevels {
            needed: 3,
            have: count,
        });
    }
    Ok(Spectrum {
        levels: spec.levels[start..start + count].to_vec(),
    })
}

/// Nearest-neighbour spacings `E_{i+1} - E_i`.
pub fn spacings(spec: &Spectrum) -> Result<Vec<f64>> {
    if spec.len() < 2 {
        return Err(Error::TooFewLevels {
            needed: 2,
            have: spec.len(),
        });
    }
    Ok(spec.levels.windows(2).map(|w| w[1] - w[0]).collect())
}

/// `min(R, 1/R)` for consecutive spacings `s`, `s_next`. Two zero spacings
/// give 1, a single zero spacing gives 0.
pub fn ratio(s: f64, s_next: f64) -> f64 {
    match (s == 0.0, s_next == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => s.min(s_next) / s.max(s_next),
    }
}

/// Mean spacing ratio over the whole spectrum.
pub fn r_statistics(spec: &Spectrum) -> Result<f64> {
    if spec.len() < 3 {
        return Err(Error::TooFewLevels {
            needed: 3,
            have: spec.len(),
        });
    }
    let s = spacings(spec)?;
    let sum: f64 = s.windows(2).map(|w| ratio(w[0], w[1])).sum();
    Ok(sum / (s.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RScanConfig {
    pub n: usize,
    pub k: usize,
    pub p_grid: Vec<f64>,
    /// Weight realizations per graph.
    pub realizations: usize,
    /// Independent graphs per grid point; each gets `realizations` weight sets.
    pub graph_resamples: usize,
    pub window_fraction: f64,
    pub master_seed: u64,
}

impl RScanConfig {
    pub fn validate(&self) -> Result<()> {
        crate::graph::RingLatticeSpec::new(self.n, self.k)?;
        if self.p_grid.is_empty() {
            return Err(Error::InvalidParameter("empty p grid".into()));
        }
        if self.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("p grid values must lie in [0, 1]".into()));
        }
        if !self.p_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("p grid must be strictly increasing".into()));
        }
        if self.realizations == 0 || self.graph_resamples == 0 {
            return Err(Error::InvalidParameter(
                "realizations and graph resamples must be positive".into(),
            ));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "window fraction {} outside (0, 1]",
                self.window_fraction
            )));
        }
        Ok(())
    }

    /// Seed of graph `resample` at grid point `index`.
    pub fn graph_seed(&self, index: usize, resample: usize) -> u64 {
        mix_seed(&[
            self.master_seed,
            tag::RSCAN_GRAPH,
            self.n as u64,
            self.k as u64,
            index as u64,
            resample as u64,
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RScanResult {
    pub p_grid: Vec<f64>,
    pub mean_r: Vec<f64>,
    /// Sample standard deviation over realizations divided by the square
    /// root of their count; zero when only one realization exists.
    pub stderr_r: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub realizations: usize,
    pub graph_resamples: usize,
    pub window_fraction: f64,
    pub master_seed: u64,
}

/// Mean ratio on the central window of one matrix.
pub fn windowed_mean_r(s: &CouplingMatrix, window_fraction: f64) -> Result<f64> {
    let spectrum = eigenvalues(s)?;
    r_statistics(&central_window(&spectrum, window_fraction)?)
}

/// Ensemble mean ratio for every grid point. For each `p`, `graph_resamples`
/// graphs are drawn and each carries `realizations` independent weight sets.
pub fn r_scan(config: &RScanConfig) -> Result<RScanResult> {
    config.validate()?;
    let per_point = config.graph_resamples * config.realizations;

    let graphs: Vec<_> = (0..config.p_grid.len() * config.graph_resamples)
        .into_par_iter()
        .map(|item| {
            let (gi, g) = (item / config.graph_resamples, item % config.graph_resamples);
            let p = config.p_grid[gi];
            let seed = config.graph_seed(gi, g);
            sample_graph(config.n, config.k, p, seed)
                .map(|graph| (graph, seed))
                .map_err(|e| e.context(format!("graph at p = {p}")))
        })
        .collect::<Result<_>>()?;

    let values: Vec<f64> = (0..config.p_grid.len() * per_point)
        .into_par_iter()
        .map(|item| {
            let gi = item / per_point;
            let within = item % per_point;
            let (g, r) = (within / config.realizations, within % config.realizations);
            let (graph, seed) = &graphs[gi * config.graph_resamples + g];
            let s = sample_weights(graph, *seed, r as u64);
            windowed_mean_r(&s, config.window_fraction)
                .map_err(|e| e.context(format!("realization {r} at p = {}", config.p_grid[gi])))
        })
        .collect::<Result<_>>()?;

    let mut mean_r = Vec::with_capacity(config.p_grid.len());
    let mut stderr_r = Vec::with_capacity(config.p_grid.len());
    for chunk in values.chunks(per_point) {
        let (mean, stderr) = mean_and_stderr(chunk);
        mean_r.push(mean);
        stderr_r.push(stderr);
    }
    Ok(RScanResult {
        p_grid: config.p_grid.clone(),
        mean_r,
        stderr_r,
        n: config.n,
        k: config.k,
        realizations: config.realizations,
        graph_resamples: config.graph_resamples,
        window_fraction: config.window_fraction,
        master_seed: config.master_seed,
    })
}

pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `count` points spaced evenly in `log10 p` over `[lo, hi]`, endpoints
/// included exactly.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "log grid needs 0 < lo < hi <= 1, got [{lo}, {hi}]"
        )));
    }
    if count < 2 {
        return Err(Error::InvalidParameter("log grid needs at least 2 points".into()));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut grid: Vec<f64> = (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    Ok(grid)
}
