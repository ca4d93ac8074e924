use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use assortmax::data::{write_results, write_results_to, CollectionSpec, GenSpec, OutputFormat, V0Mode};
use assortmax_cli::{
    bench, generate, load_problem, solve, solve_report, Algo, BenchConfig, LshOptions, SolveOptions, Source,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Revenue-optimal assortments under the multinomial logit model.
#[derive(Parser)]
#[command(name = "assortmax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the result as JSON.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo benchmark. Writes per-run rows and a `mean` row per
    /// algorithm with wall time, relative revenue error
    /// (f_opt - f_alg) / f_opt and overlap |A ∩ A*| / |A*| against the
    /// exhaustive (or brute-force capacitated) optimum.
    Bench {
        /// Algorithms to run; repeat or separate with commas.
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        algo: Vec<Algo>,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        /// Collection sizes to sweep for synthetic problems.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        /// Add embedding and index build time to the reported wall time.
        #[arg(long)]
        report_build_time: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write a synthetic instance (instance.json) and collection (sets.txt).
    Generate {
        #[arg(long)]
        n: usize,
        /// Number of random sets; omit for a capacity-only instance.
        #[arg(long = "num-sets")]
        num_sets: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        v0: f64,
        #[arg(long, default_value_t = 0.0)]
        price_lo: f64,
        #[arg(long, default_value_t = 1000.0)]
        price_hi: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Problem source: `--instance` (with optional `--sets`), `--itemsets`
/// (with optional `--prices`), or a synthetic `--n` (with optional
/// `--num-sets`).
#[derive(Args)]
struct SourceArgs {
    /// Instance JSON as written by `generate`.
    #[arg(long, conflicts_with_all = ["itemsets", "n"])]
    instance: Option<PathBuf>,
    /// Itemset file listing sets by external item id.
    #[arg(long, requires = "instance")]
    sets: Option<PathBuf>,
    /// Mined itemset file; prices come from --prices or are drawn.
    #[arg(long, conflicts_with = "n")]
    itemsets: Option<PathBuf>,
    /// CSV with columns id,price.
    #[arg(long, requires = "itemsets")]
    prices: Option<PathBuf>,
    /// Synthetic item count.
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic collection size.
    #[arg(long = "num-sets", requires = "n")]
    num_sets: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_card: usize,
    #[arg(long, default_value_t = usize::MAX)]
    max_card: usize,
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
    #[arg(long, default_value_t = 0.0)]
    price_lo: f64,
    #[arg(long, default_value_t = 1000.0)]
    price_hi: f64,
}

impl SourceArgs {
    fn source(&self) -> Result<Source> {
        if let Some(instance) = &self.instance {
            return Ok(Source::Files {
                instance: instance.clone(),
                sets: self.sets.clone(),
                min_card: self.min_card,
                max_card: self.max_card,
            });
        }
        if let Some(path) = &self.itemsets {
            return Ok(Source::Itemsets {
                path: path.clone(),
                prices: self.prices.clone(),
                min_card: self.min_card,
                max_card: self.max_card,
                v0: self.v0,
                price_lo: self.price_lo,
                price_hi: self.price_hi,
            });
        }
        let n = self.n.context("give one of --instance, --itemsets or --n")?;
        Ok(Source::Synthetic {
            n,
            num_sets: self.num_sets,
            v0: self.v0,
            price_lo: self.price_lo,
            price_hi: self.price_hi,
        })
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Maximum assortment size (capacitated and brute_cap only).
    #[arg(long)]
    capacity: Option<usize>,
    /// Minimum assortment size (capacitated and brute_cap only).
    #[arg(long)]
    min_size: Option<usize>,
    /// Oracle approximation factor assumed by `approx`.
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bits per LSH key; defaults to ⌈log2 N⌉.
    #[arg(long)]
    lsh_bits: Option<usize>,
    /// Number of LSH tables.
    #[arg(long, default_value_t = 20)]
    lsh_tables: usize,
    /// Maximum candidates rescored per query.
    #[arg(long, default_value_t = 80)]
    lsh_scan_cap: usize,
    /// Derive bits, tables and scan cap from N as ⌈log2 N⌉, ⌈N^rho⌉, 3⌈N^rho⌉.
    #[arg(long)]
    lsh_rho: Option<f64>,
    #[arg(long, default_value_t = 20)]
    bz_rounds: usize,
    #[arg(long, default_value_t = 0.2)]
    bz_alpha: f64,
    /// Independent LSH indexes cycled through by `bz`.
    #[arg(long, default_value_t = 1)]
    bz_indexes: usize,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            eps: self.eps,
            capacity: self.capacity,
            min_size: self.min_size,
            nu: self.nu,
            lsh: LshOptions {
                bits: self.lsh_bits,
                tables: self.lsh_tables,
                scan_cap: self.lsh_scan_cap,
                rho: self.lsh_rho,
            },
            bz_rounds: self.bz_rounds,
            bz_alpha: self.bz_alpha,
            bz_indexes: self.bz_indexes,
            seed: self.seed,
        }
    }
}

fn configure_threads() -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("ASSORTMAX_THREADS") {
        let threads: usize = v.parse().with_context(|| format!("ASSORTMAX_THREADS={v:?} is not a number"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Solve { algo, source, solver } => {
            let opts = solver.options();
            let problem = load_problem(&source.source()?, opts.seed)?;
            let solved = solve(&problem, algo, &opts)?;
            let report = solve_report(&problem, algo, &opts, &solved)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Bench { algo, runs, sweep, report_build_time, out, format, source, solver } => {
            let solve = solver.options();
            let cfg = BenchConfig {
                algos: algo,
                runs,
                source: source.source()?,
                sweep,
                seed: solve.seed,
                solve,
                report_build_time,
            };
            let rows = bench(&cfg)?;
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            match out {
                Some(path) => {
                    write_results(&rows, &path, format).with_context(|| format!("writing {}", path.display()))?
                }
                None => write_results_to(&rows, std::io::stdout().lock(), format)?,
            }
        }
        Command::Generate { n, num_sets, seed, v0, price_lo, price_hi, out } => {
            let spec = GenSpec {
                n,
                price_lo,
                price_hi,
                v0: V0Mode::Fixed(v0),
                collection: num_sets.map_or(CollectionSpec::Capacitated, |sets| CollectionSpec::General { sets }),
                seed,
            };
            for path in generate(&spec, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
