use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chaos_probe::experiments::{
    corpus_plan, generate_corpus, read_profile_csv, run_rscan, run_som_pipeline, scan_map, som_config_for,
    train_map, write_profile_csv, write_report, write_slopes_csv, ExperimentConfig, Mode, ProfileMeta,
    ReportInputs,
};
use chaos_probe::hamiltonian::{read_corpus, sample_graph, write_corpus};
use chaos_probe::som::{final_slope_vs_n, read_map, write_map, Metric};
use chaos_probe::{Error, Result};

const THREADS_VAR: &str = "CHAOS_PROBE_THREADS";

#[derive(Parser)]
#[command(name = "chaos-probe", version, about = "Spectral and self-organizing-map probes of chaos on Watts-Strogatz Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one Watts-Strogatz graph and write it as text.
    Graph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a training corpus of coupling matrices with log-uniform p.
    Corpus {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1e-4)]
        p_lo: f64,
        #[arg(long, default_value_t = 1.0)]
        p_hi: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean spacing ratio over a log-spaced p grid.
    Rscan {
        #[command(flatten)]
        common: Common,
        /// System sizes; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        graph_resamples: Option<usize>,
        #[arg(long)]
        window: Option<f64>,
        /// Preset with N = 256.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a map on a corpus file.
    SomTrain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hit profile of a trained map over fresh Hamiltonians.
    SomScan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Three-segment fits of responsive-neuron curves across sizes.
    SomSlopes {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., required = true)]
        profiles: Vec<PathBuf>,
        #[arg(long)]
        gain: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corpus, training and scan for every size in one go.
    SomPipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        corpus_size: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// HTML report from scan, profile and slope CSVs.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1..)]
        rscan: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        profiles: Vec<PathBuf>,
        #[arg(long)]
        slopes: Option<PathBuf>,
        /// Vertical shift between successive responsive-neuron curves.
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long)]
        gain: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Options shared by the configurable commands. Flags override the file.
#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p_lo: Option<f64>,
    #[arg(long)]
    p_hi: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    metric: Option<Metric>,
}

impl Common {
    fn load(&self, mode: Mode, fast: bool) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if fast => ExperimentConfig::fast(),
            None => ExperimentConfig::default(),
        };
        if fast && self.config.is_some() {
            config.rscan.sizes = ExperimentConfig::fast().rscan.sizes;
        }
        config.mode = mode;
        set(&mut config.seed, self.seed);
        set(&mut config.k, self.k);
        set(&mut config.p_lo, self.p_lo);
        set(&mut config.p_hi, self.p_hi);
        set(&mut config.grid, self.grid);
        Ok(config)
    }
}

impl MapArgs {
    fn apply(&self, config: &mut ExperimentConfig) {
        let s = &mut config.som;
        set(&mut s.rows, self.rows);
        set(&mut s.cols, self.cols);
        set(&mut s.alpha0, self.alpha0);
        set(&mut s.sigma0, self.sigma0);
        set(&mut s.metric, self.metric);
        if self.iters.is_some() {
            s.iterations = self.iters;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Graph { n, k, p, seed, out } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
            }
            sample_graph(n, k, p, seed)?.write_text(seed, &out)
        }
        Command::Corpus {
            n,
            k,
            p_lo,
            p_hi,
            count,
            seed,
            out,
        } => {
            if !(p_lo > 0.0 && p_lo < p_hi && p_hi <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "p interval [{p_lo}, {p_hi}] must satisfy 0 < lo < hi <= 1"
                )));
            }
            chaos_probe::graph::RingLatticeSpec::new(n, k)?;
            let plan = corpus_plan(n, k, p_lo, p_hi, count, seed)?;
            write_corpus(&out, generate_corpus(n, k, &plan)?.iter())
        }
        Command::Rscan {
            common,
            n,
            realizations,
            graph_resamples,
            window,
            fast,
            out,
        } => {
            let mut config = common.load(Mode::Rscan, fast)?;
            if !n.is_empty() {
                config.rscan.sizes = n;
            }
            set(&mut config.rscan.realizations, realizations);
            set(&mut config.rscan.graph_resamples, graph_resamples);
            set(&mut config.rscan.window, window);
            run_rscan(&config, &out).map(|_| ())
        }
        Command::SomTrain {
            common,
            corpus,
            map,
            out,
        } => {
            let mut config = common.load(Mode::SomTrain, false)?;
            map.apply(&mut config);
            let matrices = read_corpus(&corpus)?;
            let first = matrices
                .first()
                .ok_or_else(|| Error::InvalidInput(format!("{}: empty corpus", corpus.display())))?;
            let n = first.n();
            config.som.sizes = vec![n];
            config.k = first.provenance().k;
            config.som.corpus_size = matrices.len();
            config.validate()?;
            let trained = train_map(som_config_for(&config, n), &matrices)?;
            let comments = [
                config.provenance_line(),
                format!("N={n} k={} metric={} corpus={}", config.k, config.som.metric, corpus.display()),
            ];
            write_map(&trained, &comments, &out)
        }
        Command::SomScan {
            common,
            map,
            n,
            count,
            out,
        } => {
            let mut config = common.load(Mode::SomScan, false)?;
            config.som.sizes = vec![n];
            set(&mut config.som.scan_count, count);
            config.validate()?;
            let trained = read_map(&map)?;
            let profile = scan_map(&trained, n, config.k, &config.p_grid()?, config.som.scan_count, config.seed)?;
            let meta = ProfileMeta {
                n,
                k: config.k,
                count: config.som.scan_count,
            };
            let extra = [format!("map={} classification=fresh-seeds", map.display())];
            write_profile_csv(&out, &profile, &meta, &config.provenance_line(), &extra)
        }
        Command::SomSlopes {
            common,
            profiles,
            gain,
            out,
        } => {
            let mut config = common.load(Mode::SomSlopes, false)?;
            set(&mut config.som.gain_threshold, gain);
            config.validate()?;
            let mut by_size = BTreeMap::new();
            for path in &profiles {
                let (meta, profile) = read_profile_csv(path)?;
                if by_size.insert(meta.n, profile).is_some() {
                    return Err(Error::InvalidParameter(format!("two profiles for N = {}", meta.n)));
                }
            }
            let summaries = final_slope_vs_n(&by_size, config.som.gain_threshold)?;
            write_slopes_csv(&out, &summaries, &config.provenance_line(), config.som.gain_threshold)
        }
        Command::SomPipeline {
            common,
            n,
            corpus_size,
            count,
            map,
            fast,
            out_dir,
        } => {
            let mut config = common.load(Mode::SomTrain, fast)?;
            if !n.is_empty() {
                config.som.sizes = n;
            }
            set(&mut config.som.corpus_size, corpus_size);
            set(&mut config.som.scan_count, count);
            map.apply(&mut config);
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            config.validate()?;
            write_config(&out_dir.join("config.toml"), &config)?;
            run_som_pipeline(&config, &out_dir).map(|_| ())
        }
        Command::Report {
            common,
            rscan,
            profiles,
            slopes,
            offset,
            gain,
            out,
        } => {
            let mut config = common.load(Mode::Report, false)?;
            set(&mut config.som.gain_threshold, gain);
            config.validate()?;
            if rscan.is_empty() && profiles.is_empty() && slopes.is_none() {
                return Err(Error::InvalidParameter("report needs at least one input CSV".into()));
            }
            if !offset.is_finite() {
                return Err(Error::InvalidParameter(format!("offset = {offset}")));
            }
            let inputs = ReportInputs {
                rscan,
                profiles,
                slopes,
                offset,
                gain_threshold: config.som.gain_threshold,
            };
            write_report(&out, &inputs, &config.provenance_line())
        }
    }
}

fn write_config(path: &Path, config: &ExperimentConfig) -> Result<()> {
    let text = format!("# {}\n{}", config.provenance_line(), config.to_toml());
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
