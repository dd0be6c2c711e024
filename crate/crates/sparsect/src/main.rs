use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparsect::config::{AlgorithmName, DerivativeName, FilterName, Method};
use sparsect::core::metrics::sinogram_residual;
use sparsect::core::randomized::{generate_pair_pool, generate_pair_pool_for_budget};
use sparsect::core::{RaySystem, Sinogram};
use sparsect::experiment::{self, Output};
use sparsect::formats::{read_image_ascii, read_pair_pool, read_sinogram_ascii_any_views, PoolFormat};
use sparsect::report::RunSummary;
use sparsect::{Error, RunConfig};

/// Sparse-view fan-beam CT: simulate, reconstruct, and correct analytic
/// reconstructions with randomized pairwise updates.
#[derive(Parser, Debug)]
#[command(name = "sparsect", version, about)]
struct Cli {
    /// Output directory
    #[arg(long, short, env = "SPARSECT_OUT", default_value = "sparsect-out", global = true)]
    out: PathBuf,

    /// `key = value` configuration file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Suppress progress lines on stderr
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Projection angles
    #[arg(long, global = true)]
    views: Option<usize>,
    #[arg(long, global = true)]
    detectors: Option<usize>,
    /// Image rows
    #[arg(long, global = true)]
    rows: Option<usize>,
    /// Image columns
    #[arg(long, global = true)]
    cols: Option<usize>,
    /// Phantom description file (one ellipse per line)
    #[arg(long, global = true)]
    phantom: Option<PathBuf>,
    /// Usable correction iterations
    #[arg(long, alias = "iterations", global = true)]
    iters: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    algorithm: Option<AlgorithmName>,
    #[arg(long, value_enum, global = true)]
    filter: Option<FilterName>,
    #[arg(long, value_enum, global = true)]
    derivative: Option<DerivativeName>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render the phantom and simulate its sinogram
    Simulate,
    /// Analytic reconstruction of a sinogram file
    Reconstruct {
        #[arg(value_enum)]
        method: Method,
        /// Sinogram file [default: <out>/sinogram.txt]
        #[arg(long)]
        sinogram: Option<PathBuf>,
    },
    /// Generate a pool of cell-disjoint ray pairs
    Pairs {
        /// Number of pairs
        #[arg(long, required_unless_present = "budget", conflicts_with = "budget")]
        count: Option<usize>,
        /// Keep drawing until this many pairs have both measurements positive
        #[arg(long)]
        budget: Option<usize>,
        /// Sinogram file, needed with --budget [default: <out>/sinogram.txt]
        #[arg(long)]
        sinogram: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: PoolFormat,
    },
    /// Correct an initial image against a sinogram
    Correct {
        /// Initial image [default: <out>/fbp.txt]
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Sinogram file [default: <out>/sinogram.txt]
        #[arg(long)]
        sinogram: Option<PathBuf>,
        /// Pair pool file; generated from the seed when absent
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Output image name
        #[arg(long, default_value = "corrected")]
        name: String,
    },
    /// Run a complete experiment
    Experiment {
        #[arg(value_enum)]
        preset: Preset,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Sparse scan, both analytic initials, their corrections and full-view
    /// references
    Paper270,
    /// Analytic baselines over several view counts, some corrected
    Sweep,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Run(e)
        }
    }
}

impl From<sparsect::core::Error> for Failure {
    fn from(e: sparsect::core::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.views {
        c.views = v;
    }
    if let Some(v) = o.detectors {
        c.detectors = v;
    }
    if let Some(v) = o.rows {
        c.rows = v;
    }
    if let Some(v) = o.cols {
        c.cols = v;
    }
    if let Some(v) = &o.phantom {
        c.phantom = Some(v.clone());
    }
    if let Some(v) = o.iters {
        c.iterations = v;
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.algorithm {
        c.algorithm = v;
    }
    if let Some(v) = o.filter {
        c.fbp_filter = v;
    }
    if let Some(v) = o.derivative {
        c.dint_derivative = v;
    }
    c.geometry(c.views).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(c)
}

fn require(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("input file {} not found", path.display())))
    }
}

/// Reads a sinogram and checks its view count against an explicit `--views`.
fn load_sinogram(path: &Path, config: &RunConfig, views: Option<usize>) -> Result<Sinogram, Failure> {
    let sinogram = read_sinogram_ascii_any_views(path, config.detectors)?;
    if let Some(v) = views {
        if v != sinogram.views() {
            return Err(Failure::Usage(format!(
                "{} holds {} views, --views says {v}",
                path.display(),
                sinogram.views()
            )));
        }
    }
    Ok(sinogram)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = resolve_config(&cli)?;
    let quiet = cli.quiet;
    let mut progress = |line: &str| {
        if !quiet {
            eprintln!("sparsect: {line}");
        }
    };
    let out = cli.out.as_path();
    let default_input = |name: &str| out.join(name);

    match &cli.command {
        Command::Simulate => {
            if let Some(p) = &config.phantom {
                require(p)?;
            }
            let mut output = Output::with_manifest(out, "simulate", &config, "manifest-simulate.json")?;
            let spec = experiment::phantom_spec(&config)?;
            let truth = spec.render(config.rows, config.cols);
            output.save_phantom(&spec, &truth)?;
            progress(&format!("tracing {} views", config.views));
            let start = Instant::now();
            let scan = experiment::simulate(&config, &truth, config.views)?;
            output.manifest.time("trace", start.elapsed());
            output.save_sinogram("sinogram", &scan.sinogram)?;
            output.finish()?;
        }
        Command::Reconstruct { method, sinogram } => {
            let path = sinogram.clone().unwrap_or_else(|| default_input("sinogram.txt"));
            require(&path)?;
            let sino = load_sinogram(&path, &config, cli.overrides.views)?;
            let geometry = config.geometry(sino.views())?;
            let mut output = Output::with_manifest(
                out,
                &format!("reconstruct {method}"),
                &config,
                &format!("manifest-{method}.json"),
            )?;
            progress(&format!("{method} reconstruction, {} views", sino.views()));
            let start = Instant::now();
            let image = experiment::reconstruct(*method, &sino, &geometry, &config)?;
            output.manifest.time(method.to_string(), start.elapsed());
            output.save_image(&method.to_string(), &image, Some(sino.views()))?;
            output.finish()?;
        }
        Command::Pairs {
            count,
            budget,
            sinogram,
            format,
        } => {
            let (system, sino) = match budget {
                Some(_) => {
                    let path = sinogram.clone().unwrap_or_else(|| default_input("sinogram.txt"));
                    require(&path)?;
                    let sino = load_sinogram(&path, &config, cli.overrides.views)?;
                    (RaySystem::trace(&config.geometry(sino.views())?)?, Some(sino))
                }
                None => (RaySystem::trace(&config.geometry(config.views)?)?, None),
            };
            let mut output = Output::with_manifest(out, "pairs", &config, "manifest-pairs.json")?;
            let start = Instant::now();
            let pool = match (count, budget, &sino) {
                (Some(n), _, _) => generate_pair_pool(&system, *n, config.seed, None)?,
                (None, Some(b), Some(s)) => {
                    generate_pair_pool_for_budget(&system, s, *b, config.seed, None)?
                }
                _ => unreachable!("clap requires --count or --budget"),
            };
            output.manifest.time("pairs", start.elapsed());
            progress(&format!("{} pairs", pool.len()));
            output.save_pool("pairs", &pool, *format)?;
            output.finish()?;
        }
        Command::Correct {
            initial,
            sinogram,
            pairs,
            name,
        } => {
            let initial_path = initial.clone().unwrap_or_else(|| default_input("fbp.txt"));
            let sino_path = sinogram.clone().unwrap_or_else(|| default_input("sinogram.txt"));
            require(&initial_path)?;
            require(&sino_path)?;
            if let Some(p) = pairs {
                require(p)?;
            }
            let sino = load_sinogram(&sino_path, &config, cli.overrides.views)?;
            let initial = read_image_ascii(&initial_path, config.rows, config.cols)?;
            let geometry = config.geometry(sino.views())?;
            let mut output = Output::with_manifest(out, "correct", &config, "manifest-correct.json")?;

            progress(&format!("tracing {} views", sino.views()));
            let start = Instant::now();
            let system = experiment::prepare(RaySystem::trace(&geometry)?, &sino, &config)?;
            let pool = match pairs {
                Some(p) => {
                    let pool = read_pair_pool(p)?;
                    pool.validate(&system).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                    pool
                }
                None => experiment::pair_pool(&system, &sino, &config)?,
            };
            output.manifest.time("setup", start.elapsed());

            progress(&format!("correcting, {} iterations", config.iterations));
            let (image, report) = experiment::correct(&initial, &sino, &system, &pool, &config)?;
            if let Some(elapsed) = report.elapsed {
                output.manifest.time("correct", elapsed);
            }
            output.manifest.runs.push(RunSummary::new(name, pool.len(), &report));
            output.save_image(name, &image, Some(sino.views()))?;
            output.finish()?;
            progress(&format!(
                "{} updates, {} consistent, {} case-B skipped, relative residual {:.6}",
                report.updated,
                report.consistent,
                report.rejected_case_b,
                sinogram_residual(&image, &sino, &system)?
            ));
        }
        Command::Experiment { preset } => {
            if let Some(p) = &config.phantom {
                require(p)?;
            }
            let result = match preset {
                Preset::Paper270 => experiment::paper270(&config, out, &mut progress)?,
                Preset::Sweep => experiment::sweep(&config, out, &mut progress)?,
            };
            if !quiet {
                print!("{}", sparsect::report::to_csv(&result.rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("sparsect: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("sparsect: {e}");
            ExitCode::from(1)
        }
    }
}
