//! Seedable random streams and the samplers used by the experiments.
//!
//! Every realization in an ensemble owns its own [`RngStream`], addressed by
//! a `(master_seed, stream_id)` pair. The generator is ChaCha8, whose 64-bit
//! stream selector gives independent keystreams for the same key, so the
//! sequence a realization sees does not depend on how work is scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A deterministic random stream for one realization.
///
/// Streams are `Send` but deliberately not `Clone`: two tasks drawing from
/// copies of one stream would silently share samples.
#[derive(Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer on `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Returns the stream for realization `stream_id` under `master_seed`.
pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    RngStream::new(master_seed, stream_id)
}

/// Draws from N(mean, variance).
///
/// The normal deviate comes from the ziggurat sampler in `rand_distr`, which
/// is exact (the tail is sampled, not truncated).
pub fn sample_gaussian(rng: &mut RngStream, mean: f64, variance: f64) -> Result<f64> {
    if !(variance >= 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian needs finite mean and variance >= 0, got mean {mean}, variance {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(mean);
    }
    Ok(mean + variance.sqrt() * rng.standard_normal())
}

/// Draws `x` in `[lo, hi]` with `ln x` uniform.
pub fn sample_log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0) || !(lo < hi) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "log-uniform needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let x = (a + rng.uniform() * (b - a)).exp();
    Ok(x.clamp(lo, hi))
}

/// Folds a list of words into one well-mixed 64-bit seed (SplitMix64
/// finalizer applied per word). Used to give each purpose (graph, weights,
/// corpus sample, classification batch) its own region of seed space.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &part in parts {
        h = splitmix(h ^ splitmix(part.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Domain tags passed to [`mix_seed`].
pub mod tag {
    pub const RSCAN_GRAPH: u64 = 0x7273_6361_6e00_0001;
    pub const CORPUS_SAMPLE: u64 = 0x636f_7270_7573_0002;
    pub const CLASSIFY_SAMPLE: u64 = 0x636c_6173_7300_0003;
    pub const CORPUS_ORDER: u64 = 0x6f72_6465_7200_0004;
    pub const SOM_INIT: u64 = 0x736f_6d69_6e00_0005;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rayon::prelude::*;

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn same_key_same_sequence() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        let xs: Vec<f64> = (0..10_000).map(|_| a.standard_normal()).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| b.standard_normal()).collect();
        let rho = correlation(&xs, &ys);
        assert!(rho.abs() < 0.05, "rho = {rho}");
    }

    #[test]
    fn stream_independent_of_worker_count() {
        let draw = || -> Vec<u64> {
            let mut s = derive_stream(42, 7);
            (0..64).map(|_| s.next_u64()).collect()
        };
        let reference = draw();
        for threads in [1, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let got: Vec<Vec<u64>> = pool.install(|| (0..8).into_par_iter().map(|_| draw()).collect());
            assert!(got.iter().all(|g| *g == reference));
        }
    }

    #[test]
    fn zero_variance_returns_mean() {
        let mut s = derive_stream(1, 1);
        assert_eq!(sample_gaussian(&mut s, 3.25, 0.0).unwrap(), 3.25);
    }

    #[test]
    fn negative_variance_rejected() {
        let mut s = derive_stream(1, 1);
        assert!(matches!(
            sample_gaussian(&mut s, 0.0, -1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn gaussian_moments() {
        let mut s = derive_stream(2024, 3);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_gaussian(&mut s, 0.0, 1.0).unwrap()).collect();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
        let skew = m3 / m2.powf(1.5);
        let kurt = m4 / (m2 * m2) - 3.0;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((m2 - 1.0).abs() < 0.01, "variance {m2}");
        // standard errors: skewness sqrt(6/n), excess kurtosis sqrt(24/n)
        assert!(skew.abs() < 5.0 * (6.0 / nf).sqrt(), "skew {skew}");
        assert!(kurt.abs() < 5.0 * (24.0 / nf).sqrt(), "kurtosis {kurt}");
    }

    #[test]
    fn coupling_variance_n1000_k2() {
        let var = 999.0 / 4000.0;
        let mut s = derive_stream(5, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_gaussian(&mut s, 0.0, var).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((v - 0.24975).abs() < 0.002, "variance {v}");
    }

    #[test]
    fn log_uniform_decades() {
        let mut s = derive_stream(11, 0);
        let mut counts = [0usize; 4];
        let mut draws = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let x = sample_log_uniform(&mut s, 1e-4, 1.0).unwrap();
            assert!((1e-4..=1.0).contains(&x));
            let decade = ((-x.log10()).floor() as usize).min(3);
            counts[3 - decade] += 1;
            draws.push(x);
        }
        for c in counts {
            assert!((24_500..=25_500).contains(&c), "decade count {c}");
        }
        draws.sort_by(f64::total_cmp);
        let median = draws[draws.len() / 2];
        assert!(median > 1e-2 / 1.1 && median < 1e-2 * 1.1, "median {median}");

        // Kolmogorov-Smirnov distance of log10(x) against U(-4, 0).
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = (x.log10() + 4.0) / 4.0;
                let lo = (cdf - i as f64 / n).abs();
                let hi = (cdf - (i + 1) as f64 / n).abs();
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn log_uniform_narrow_interval() {
        let mut s = derive_stream(11, 1);
        for _ in 0..1000 {
            let x = sample_log_uniform(&mut s, 0.5, 0.5000001).unwrap();
            assert!((0.5..=0.5000001).contains(&x));
        }
    }

    #[test]
    fn log_uniform_rejects_bad_bounds() {
        let mut s = derive_stream(11, 2);
        assert!(sample_log_uniform(&mut s, 0.0, 1.0).is_err());
        assert!(sample_log_uniform(&mut s, 1.0, 1.0).is_err());
        assert!(sample_log_uniform(&mut s, 2.0, 1.0).is_err());
    }

    #[test]
    fn mixed_seeds_differ() {
        assert_ne!(mix_seed(&[1, 2]), mix_seed(&[2, 1]));
        assert_ne!(mix_seed(&[0]), mix_seed(&[0, 0]));
        assert_eq!(mix_seed(&[7, 8, 9]), mix_seed(&[7, 8, 9]));
    }
}
