use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::table::{
    write_profile_csv, write_responsive_csv, write_rscan_csv, write_slopes_csv, ProfileMeta,
};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::{sample_hamiltonian, write_corpus, CouplingMatrix};
use crate::rng::{derive_stream, mix_seed, sample_log_uniform, tag};
use crate::som::{
    decade_rates, final_slope_vs_n, init_map, scan_hits, write_map, HitProfile, SlopeSummary, SomConfig,
    SomMap,
};
use crate::spectra::{r_scan, RScanConfig, RScanResult};

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

/// Runs the ratio scan for every configured size. Writes `out` with all
/// sizes and, next to it, one `<stem>_N<n>.csv` per size.
pub fn run_rscan(config: &ExperimentConfig, out: &Path) -> Result<Vec<RScanResult>> {
    config.validate()?;
    let grid = config.p_grid()?;
    let provenance = config.provenance_line();
    let mut results = Vec::with_capacity(config.rscan.sizes.len());
    for &n in &config.rscan.sizes {
        let scan = RScanConfig {
            n,
            k: config.k,
            p_grid: grid.clone(),
            realizations: config.rscan.realizations,
            graph_resamples: config.rscan.graph_resamples,
            window_fraction: config.rscan.window,
            master_seed: config.seed,
        };
        let result = r_scan(&scan).map_err(|e| e.context(format!("rscan N = {n}")))?;
        write_rscan_csv(&with_suffix(out, &format!("N{n}")), std::slice::from_ref(&result), &provenance)?;
        results.push(result);
    }
    write_rscan_csv(out, &results, &provenance)?;
    Ok(results)
}

/// One training sample: its rewiring probability and the seed that
/// reproduces its graph and couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusItem {
    pub p: f64,
    pub seed: u64,
}

/// Log-uniform `p` values with per-sample seeds, in presentation order
/// (generation order shuffled once).
pub fn corpus_plan(n: usize, k: usize, p_lo: f64, p_hi: f64, count: usize, seed: u64) -> Result<Vec<CorpusItem>> {
    if count == 0 {
        return Err(Error::InvalidParameter("corpus size must be positive".into()));
    }
    let mut p_rng = derive_stream(mix_seed(&[seed, tag::CORPUS_SAMPLE, n as u64, k as u64]), 0);
    let mut plan = (0..count)
        .map(|i| {
            Ok(CorpusItem {
                p: sample_log_uniform(&mut p_rng, p_lo, p_hi)?,
                seed: mix_seed(&[seed, tag::CORPUS_SAMPLE, n as u64, k as u64, i as u64]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    derive_stream(mix_seed(&[seed, tag::CORPUS_ORDER, n as u64, k as u64]), 0).shuffle(&mut plan);
    Ok(plan)
}

pub fn generate_corpus(n: usize, k: usize, plan: &[CorpusItem]) -> Result<Vec<CouplingMatrix>> {
    plan.par_iter()
        .map(|item| sample_hamiltonian(n, k, item.p, item.seed))
        .collect()
}

/// Map settings for system size `n`; the initial weights are seeded from
/// the master seed and `n`.
pub fn som_config_for(config: &ExperimentConfig, n: usize) -> SomConfig {
    let s = &config.som;
    let mut som = SomConfig::new(s.rows, s.cols, n * n, s.training_steps());
    som.alpha0 = s.alpha0;
    som.sigma0 = s.sigma0;
    som.metric = s.metric;
    som.init_seed = mix_seed(&[config.seed, tag::SOM_INIT, n as u64]);
    som
}

/// Initializes a map from `config.init_seed` and trains it on the
/// flattened corpus, cycling through it until the step budget is spent.
pub fn train_map(config: SomConfig, corpus: &[CouplingMatrix]) -> Result<SomMap> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty training corpus".into()));
    }
    if let Some(bad) = corpus.iter().find(|m| m.n() * m.n() != config.input_dim) {
        return Err(Error::DimensionMismatch {
            expected: config.input_dim,
            got: bad.n() * bad.n(),
        });
    }
    let steps = config.total_iterations;
    let mut map = init_map(config.clone(), &mut derive_stream(config.init_seed, 0))?;
    map.train(corpus.iter().cycle().take(steps).map(CouplingMatrix::flatten))?;
    Ok(map)
}

/// Seed of classification sample `sample` at grid point `grid_index`. Uses
/// its own domain tag, so classification never reuses training matrices.
pub fn classification_seed(master: u64, n: usize, k: usize, grid_index: usize, sample: usize) -> u64 {
    mix_seed(&[master, tag::CLASSIFY_SAMPLE, n as u64, k as u64, grid_index as u64, sample as u64])
}

/// Hit profile of `map` over fresh Hamiltonians at every grid point.
pub fn scan_map(map: &SomMap, n: usize, k: usize, p_grid: &[f64], count: usize, master: u64) -> Result<HitProfile> {
    if map.input_dim() != n * n {
        return Err(Error::DimensionMismatch {
            expected: map.input_dim(),
            got: n * n,
        });
    }
    scan_hits(
        map,
        |gi, p, si| Ok(sample_hamiltonian(n, k, p, classification_seed(master, n, k, gi, si))?.flatten()),
        p_grid,
        count,
    )
}

/// Everything the map pipeline produced for one system size.
#[derive(Debug, Clone)]
pub struct SomRun {
    pub n: usize,
    pub map: SomMap,
    pub profile: HitProfile,
    pub map_path: PathBuf,
    pub profile_path: PathBuf,
}

fn stage<T>(name: &str, n: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.context(format!("{name} (N = {n})")))
}

/// Corpus, training and scan for every configured size, written to
/// `out_dir`: `corpus_N<n>.bin`, `map_N<n>.som`, `profile_N<n>.csv`, plus
/// `responsive.csv` and `slopes.csv` across sizes.
pub fn run_som_pipeline(config: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<SomRun>, Vec<SlopeSummary>)> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let provenance = config.provenance_line();
    let grid = config.p_grid()?;
    let s = &config.som;
    let mut runs = Vec::new();
    for &n in &s.sizes {
        let corpus = stage("corpus", n, (|| {
            let plan = corpus_plan(n, config.k, config.p_lo, config.p_hi, s.corpus_size, config.seed)?;
            let corpus = generate_corpus(n, config.k, &plan)?;
            write_corpus(&out_dir.join(format!("corpus_N{n}.bin")), corpus.iter())?;
            Ok(corpus)
        })())?;

        let map_path = out_dir.join(format!("map_N{n}.som"));
        let map = stage("train", n, (|| {
            let map = train_map(som_config_for(config, n), &corpus)?;
            write_map(&map, &[provenance.clone(), format!("N={n} k={} metric={}", config.k, s.metric)], &map_path)?;
            Ok(map)
        })())?;
        drop(corpus);

        let profile_path = out_dir.join(format!("profile_N{n}.csv"));
        let profile = stage("scan", n, (|| {
            let profile = scan_map(&map, n, config.k, &grid, s.scan_count, config.seed)?;
            let meta = ProfileMeta {
                n,
                k: config.k,
                count: s.scan_count,
            };
            let extra = [format!("metric={} classification=fresh-seeds", s.metric)];
            write_profile_csv(&profile_path, &profile, &meta, &provenance, &extra)?;
            Ok(profile)
        })())?;
        runs.push(SomRun {
            n,
            map,
            profile,
            map_path,
            profile_path,
        });
    }

    let mut responsive = Vec::new();
    for run in &runs {
        for (m, (lo, hi)) in decade_rates(&run.profile)?.into_iter().enumerate() {
            if hi > 0.0 && hi > s.gain_threshold * lo {
                responsive.push((run.n, m, lo, hi));
            }
        }
    }
    write_responsive_csv(&out_dir.join("responsive.csv"), &responsive, &provenance, s.gain_threshold)?;

    let profiles: BTreeMap<usize, HitProfile> = runs.iter().map(|r| (r.n, r.profile.clone())).collect();
    let summaries = final_slope_vs_n(&profiles, s.gain_threshold)?;
    write_slopes_csv(&out_dir.join("slopes.csv"), &summaries, &provenance, s.gain_threshold)?;
    Ok((runs, summaries))
}
