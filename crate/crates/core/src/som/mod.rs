//! Self-organizing map over flattened Hamiltonian matrices.
//!
//! Inputs are scaled to unit Euclidean norm. Each training step picks the
//! neuron closest to the input, then pulls every neuron towards the input
//! with strength `alpha(t) * exp(-d^2 / (2 sigma(t)^2))` and renormalizes
//! all weight vectors. By default `d` is the weight-space distance between
//! the winner and the neuron being updated; the conventional lattice
//! distance is available through [`Metric::GridSpace`].

pub mod analysis;
mod persist;

pub use analysis::{
    decade_rates, final_slope_vs_n, responsive_curve, responsive_neurons, rise_onset, scan_hits, segment_fit,
    summarize_profile, HitProfile, RiseOnset, SegmentFit, SlopeSummary, DEFAULT_GAIN_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Metric {
    /// `||w_c - w_m||` between weight vectors.
    #[serde(rename = "weight")]
    WeightSpace,
    /// Euclidean distance between lattice positions of `c` and `m`.
    #[serde(rename = "grid")]
    GridSpace,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weight" | "weight-space" => Ok(Metric::WeightSpace),
            "grid" | "grid-space" => Ok(Metric::GridSpace),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::WeightSpace => "weight",
            Metric::GridSpace => "grid",
        })
    }
}

/// Decay law for the learning rate or the neighbourhood width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `x0 * exp(-t / tau)`.
    Exponential { tau: f64 },
    /// `x0` for every step. Not strictly decreasing, so rejected by
    /// [`SomConfig::validate`]; useful for fixed-point experiments.
    Constant,
}

impl Schedule {
    pub fn at(&self, initial: f64, iteration: usize) -> f64 {
        match *self {
            Schedule::Exponential { tau } => initial * (-(iteration as f64) / tau).exp(),
            Schedule::Constant => initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomConfig {
    pub rows: usize,
    pub cols: usize,
    pub input_dim: usize,
    pub alpha0: f64,
    pub sigma0: f64,
    pub total_iterations: usize,
    pub alpha_schedule: Schedule,
    pub sigma_schedule: Schedule,
    pub metric: Metric,
    pub init_seed: u64,
}

impl SomConfig {
    /// Defaults: `alpha0 = 0.5`, `sigma0 = 1`, both decaying exponentially
    /// with time constant `total_iterations / 4`, weight-space metric.
    pub fn new(rows: usize, cols: usize, input_dim: usize, total_iterations: usize) -> Self {
        let tau = (total_iterations as f64 / 4.0).max(f64::MIN_POSITIVE);
        Self {
            rows,
            cols,
            input_dim,
            alpha0: 0.5,
            sigma0: 1.0,
            total_iterations,
            alpha_schedule: Schedule::Exponential { tau },
            sigma_schedule: Schedule::Exponential { tau },
            metric: Metric::WeightSpace,
            init_seed: 0,
        }
    }

    pub fn neurons(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.input_dim == 0 {
            return Err(Error::InvalidParameter("SOM dimensions must be positive".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha0 = {} outside (0, 1]", self.alpha0)));
        }
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma0 = {} must be positive", self.sigma0)));
        }
        if self.total_iterations == 0 {
            return Err(Error::InvalidParameter("total_iterations must be at least 1".into()));
        }
        for (name, s) in [("alpha", self.alpha_schedule), ("sigma", self.sigma_schedule)] {
            match s {
                Schedule::Exponential { tau } if tau > 0.0 && tau.is_finite() => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "{name} schedule must decrease strictly (exponential with tau > 0)"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self, iteration: usize) -> f64 {
        self.alpha_schedule.at(self.alpha0, iteration)
    }

    pub fn sigma(&self, iteration: usize) -> f64 {
        self.sigma_schedule.at(self.sigma0, iteration)
    }
}

/// `x / ||x||`.
pub fn normalize_input(x: &[f64]) -> Result<Vec<f64>> {
    let norm = l2_norm(x);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateInput(format!("input norm {norm}")));
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A trained or freshly initialized map. `weights` holds the `rows * cols`
/// unit vectors back to back, neuron `m` at `m * input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMap {
    pub config: SomConfig,
    weights: Vec<f64>,
    trained_iterations: usize,
}

/// Random unit weight vectors with iid Gaussian components.
pub fn init_map(config: SomConfig, rng: &mut RngStream) -> Result<SomMap> {
    config.validate()?;
    let dim = config.input_dim;
    let mut weights = Vec::with_capacity(config.neurons() * dim);
    for _ in 0..config.neurons() {
        let start = weights.len();
        weights.extend((0..dim).map(|_| rng.standard_normal()));
        let norm = l2_norm(&weights[start..]);
        weights[start..].iter_mut().for_each(|w| *w /= norm);
    }
    Ok(SomMap {
        config,
        weights,
        trained_iterations: 0,
    })
}

impl SomMap {
    pub fn from_weights(config: SomConfig, weights: Vec<f64>, trained_iterations: usize) -> Result<Self> {
        let expected = config.neurons() * config.input_dim;
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: weights.len(),
            });
        }
        Ok(Self {
            config,
            weights,
            trained_iterations,
        })
    }

    pub fn neurons(&self) -> usize {
        self.config.neurons()
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn trained_iterations(&self) -> usize {
        self.trained_iterations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, m: usize) -> &[f64] {
        let d = self.config.input_dim;
        &self.weights[m * d..(m + 1) * d]
    }

    /// Largest deviation of any weight-vector norm from 1.
    pub fn max_norm_drift(&self) -> f64 {
        (0..self.neurons())
            .map(|m| (l2_norm(self.weight(m)) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Neuron with the smallest Euclidean distance to `x`; ties go to the
    /// lowest index.
    pub fn find_winner(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        let mut best = (0, f64::INFINITY);
        for m in 0..self.neurons() {
            let d = sq_distance(x, self.weight(m));
            if d < best.1 {
                best = (m, d);
            }
        }
        Ok(best.0)
    }

    /// One update with the unit input `x` at schedule position `iteration`.
    /// Returns the winner.
    pub fn train_step(&mut self, x: &[f64], iteration: usize) -> Result<usize> {
        let c = self.find_winner(x)?;
        let alpha = self.config.alpha(iteration);
        let sigma = self.config.sigma(iteration);
        let two_sigma_sq = 2.0 * sigma * sigma;
        let dim = self.config.input_dim;
        let cols = self.config.cols;

        let d2: Vec<f64> = match self.config.metric {
            Metric::WeightSpace => {
                let wc = self.weight(c);
                (0..self.neurons()).map(|m| sq_distance(wc, self.weight(m))).collect()
            }
            Metric::GridSpace => {
                let (rc, cc) = ((c / cols) as f64, (c % cols) as f64);
                (0..self.neurons())
                    .map(|m| {
                        let (rm, cm) = ((m / cols) as f64, (m % cols) as f64);
                        (rm - rc).powi(2) + (cm - cc).powi(2)
                    })
                    .collect()
            }
        };

        for (m, w) in self.weights.chunks_exact_mut(dim).enumerate() {
            let h = if d2[m] == 0.0 {
                alpha
            } else {
                alpha * (-d2[m] / two_sigma_sq).exp()
            };
            if h == 0.0 {
                continue;
            }
            for (wl, &xl) in w.iter_mut().zip(x) {
                *wl += h * (xl - *wl);
            }
            let norm = l2_norm(w);
            if !(norm > 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "weight vector {m} collapsed to zero at iteration {iteration}"
                )));
            }
            w.iter_mut().for_each(|v| *v /= norm);
        }
        self.trained_iterations += 1;
        Ok(c)
    }

    /// Normalizes and presents each corpus vector in order until the corpus
    /// ends or `total_iterations` steps have been taken in total. Returns
    /// the number of steps taken by this call.
    pub fn train<I, V>(&mut self, corpus: I) -> Result<usize>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[f64]>,
    {
        let mut steps = 0;
        let mut seen_any = false;
        for x in corpus {
            seen_any = true;
            if self.trained_iterations >= self.config.total_iterations {
                break;
            }
            let x = normalize_input(x.as_ref())?;
            self.train_step(&x, self.trained_iterations)?;
            steps += 1;
        }
        if !seen_any {
            return Err(Error::InvalidInput("empty training corpus".into()));
        }
        Ok(steps)
    }

    /// Like [`train`](Self::train), for fallible sources such as a corpus
    /// file or an on-the-fly generator.
    pub fn train_fallible<I, V>(&mut self, corpus: I) -> Result<usize>
    where
        I: IntoIterator<Item = Result<V>>,
        V: AsRef<[f64]>,
    {
        let mut first_error = None;
        let steps = self.train(corpus.into_iter().map_while(|item| match item {
            Ok(v) => Some(v),
            Err(e) => {
                first_error = Some(e);
                None
            }
        }));
        match first_error {
            Some(e) => Err(e),
            None => steps,
        }
    }

    /// Winner for `x` after scaling it to unit norm.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        self.find_winner(&normalize_input(x)?)
    }

    /// Fraction of `batch` won by each neuron.
    pub fn hit_histogram<V: AsRef<[f64]>>(&self, batch: &[V]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let winners = batch
            .iter()
            .map(|x| self.classify(x.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(histogram_from_winners(&winners, self.neurons()))
    }
}

pub(crate) fn histogram_from_winners(winners: &[usize], neurons: usize) -> Vec<f64> {
    let mut counts = vec![0u64; neurons];
    for &w in winners {
        counts[w] += 1;
    }
    let total = winners.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

pub use persist::{read_map, write_map};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn random_unit(rng: &mut RngStream, dim: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        normalize_input(&v).unwrap()
    }

    fn small_map(seed: u64) -> SomMap {
        let mut config = SomConfig::new(3, 4, 16, 500);
        config.init_seed = seed;
        init_map(config, &mut derive_stream(seed, 0)).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_input(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
        let u = normalize_input(&[0.6, 0.8]).unwrap();
        assert!((u[0] - 0.6).abs() <= f64::EPSILON && (u[1] - 0.8).abs() <= f64::EPSILON);
        assert!(matches!(normalize_input(&[0.0, 0.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn init_produces_unit_vectors() {
        let config = SomConfig::new(10, 10, 256, 10);
        let map = init_map(config.clone(), &mut derive_stream(1, 0)).unwrap();
        assert_eq!(map.neurons(), 100);
        assert!(map.max_norm_drift() <= 1e-12);
        let again = init_map(config, &mut derive_stream(1, 0)).unwrap();
        assert_eq!(map, again);
    }

    #[test]
    fn initial_weights_nearly_orthogonal() {
        let config = SomConfig::new(5, 4, 10_000, 10);
        let map = init_map(config, &mut derive_stream(2, 0)).unwrap();
        let mut dots = Vec::new();
        for a in 0..map.neurons() {
            for b in a + 1..map.neurons() {
                dots.push(map.weight(a).iter().zip(map.weight(b)).map(|(x, y)| x * y).sum::<f64>());
            }
        }
        let mean = dots.iter().sum::<f64>() / dots.len() as f64;
        assert!(mean.abs() < 0.05, "mean dot {mean}");
    }

    #[test]
    fn invalid_configs() {
        let mut c = SomConfig::new(2, 2, 4, 10);
        c.alpha0 = 0.0;
        assert!(c.validate().is_err());
        let mut c = SomConfig::new(2, 2, 4, 10);
        c.sigma0 = -1.0;
        assert!(c.validate().is_err());
        let c = SomConfig::new(2, 2, 4, 0);
        assert!(c.validate().is_err());
        let mut c = SomConfig::new(2, 2, 4, 10);
        c.alpha_schedule = Schedule::Constant;
        assert!(c.validate().is_err());
        assert!(SomConfig::new(0, 2, 4, 10).validate().is_err());
    }

    #[test]
    fn schedules_decrease() {
        let c = SomConfig::new(2, 2, 4, 100);
        for t in 0..200 {
            assert!(c.alpha(t + 1) < c.alpha(t));
            assert!(c.sigma(t + 1) < c.sigma(t));
        }
    }

    #[test]
    fn winner_of_stored_vector() {
        let mut map = small_map(3);
        let x = map.weight(7).to_vec();
        assert_eq!(map.find_winner(&x).unwrap(), 7);
        // duplicate neuron 7 into 2: tie goes to the lower index
        let dim = map.input_dim();
        map.weights.copy_within(7 * dim..8 * dim, 2 * dim);
        assert_eq!(map.find_winner(&x).unwrap(), 2);
        assert!(matches!(map.find_winner(&x[1..]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn distance_and_dot_selectors_agree() {
        let map = small_map(4);
        let mut rng = derive_stream(4, 1);
        for _ in 0..1000 {
            let x = random_unit(&mut rng, 16);
            let by_dot = (0..map.neurons())
                .map(|m| map.weight(m).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (m, d)| if d > best.1 { (m, d) } else { best })
                .0;
            assert_eq!(map.find_winner(&x).unwrap(), by_dot);
        }
    }

    #[test]
    fn winner_moves_toward_input() {
        let mut map = small_map(5);
        let mut rng = derive_stream(5, 1);
        let x = random_unit(&mut rng, 16);
        let c = map.find_winner(&x).unwrap();
        let before = map.weight(c).to_vec();
        let alpha = map.config.alpha(0);
        map.train_step(&x, 0).unwrap();
        let mut expected: Vec<f64> = before.iter().zip(&x).map(|(w, xi)| w + alpha * (xi - w)).collect();
        let norm = l2_norm(&expected);
        expected.iter_mut().for_each(|v| *v /= norm);
        for (a, b) in map.weight(c).iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(map.trained_iterations(), 1);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut map = small_map(6);
        map.config.alpha0 = 0.0;
        let before = map.clone();
        let mut rng = derive_stream(6, 1);
        let corpus: Vec<Vec<f64>> = (0..50).map(|_| random_unit(&mut rng, 16)).collect();
        map.train(&corpus).unwrap();
        assert_eq!(map.weights(), before.weights());
    }

    #[test]
    fn fixed_point_convergence() {
        let mut map = small_map(7);
        map.config.alpha0 = 0.5;
        map.config.alpha_schedule = Schedule::Constant;
        map.config.sigma_schedule = Schedule::Constant;
        map.config.total_iterations = 200;
        let x = random_unit(&mut derive_stream(7, 1), 16);
        for t in 0..200 {
            map.train_step(&x, t).unwrap();
            assert!(map.max_norm_drift() <= 1e-12);
        }
        let c = map.find_winner(&x).unwrap();
        let cos: f64 = map.weight(c).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!(cos >= 0.999, "cos {cos}");
    }

    #[test]
    fn classify_is_scale_invariant_and_pure() {
        let map = small_map(8);
        let mut rng = derive_stream(8, 1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..16).map(|_| rng.standard_normal()).collect();
            let x3: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
            let c = map.classify(&x).unwrap();
            assert_eq!(c, map.classify(&x3).unwrap());
            assert_eq!(c, map.classify(&x).unwrap());
        }
    }

    #[test]
    fn histograms() {
        let map = small_map(9);
        let x = map.weight(5).to_vec();
        let h = map.hit_histogram(&vec![x; 20]).unwrap();
        assert_eq!(h[5], 1.0);
        assert_eq!(h.iter().sum::<f64>(), 1.0);
        let mut rng = derive_stream(9, 1);
        let batch: Vec<Vec<f64>> = (0..500).map(|_| random_unit(&mut rng, 16)).collect();
        let h = map.hit_histogram(&batch).unwrap();
        assert!(h.iter().all(|&v| v >= 0.0));
        assert!((h.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(map.hit_histogram(&empty).is_err());
    }

    #[test]
    fn empty_corpus_rejected() {
        let mut map = small_map(10);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(matches!(map.train(&empty), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn training_stops_at_budget() {
        let mut map = small_map(11);
        map.config.total_iterations = 5;
        let mut rng = derive_stream(11, 1);
        let corpus: Vec<Vec<f64>> = (0..20).map(|_| random_unit(&mut rng, 16)).collect();
        assert_eq!(map.train(&corpus).unwrap(), 5);
        assert_eq!(map.trained_iterations(), 5);
    }

    #[test]
    fn permuted_corpus_keeps_invariants() {
        let mut rng = derive_stream(12, 1);
        let corpus: Vec<Vec<f64>> = (0..100).map(|_| random_unit(&mut rng, 16)).collect();
        let mut reversed = corpus.clone();
        reversed.reverse();
        let mut a = small_map(12);
        let mut b = small_map(12);
        a.train(&corpus).unwrap();
        b.train(&reversed).unwrap();
        assert!(a.max_norm_drift() <= 1e-12 && b.max_norm_drift() <= 1e-12);
    }

    #[test]
    fn grid_metric_kernel() {
        let mut config = SomConfig::new(3, 3, 8, 10);
        config.metric = Metric::GridSpace;
        config.sigma0 = 0.1;
        let mut map = init_map(config, &mut derive_stream(13, 0)).unwrap();
        let x = map.weight(4).to_vec();
        let before = map.clone();
        map.train_step(&x, 0).unwrap();
        // sigma = 0.1 on a unit lattice: neighbours move by exp(-50) * alpha
        for m in [0, 1, 2, 3, 5, 6, 7, 8] {
            let moved = sq_distance(map.weight(m), before.weight(m)).sqrt();
            assert!(moved < 1e-12, "neuron {m} moved {moved}");
        }
        assert!(map.max_norm_drift() <= 1e-12);
        assert_eq!("grid".parse::<Metric>().unwrap(), Metric::GridSpace);
        assert!("hex".parse::<Metric>().is_err());
    }
}
