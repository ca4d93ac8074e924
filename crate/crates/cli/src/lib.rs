//! Solve, benchmark and generate commands behind the `assortmax` binary.

use std::collections::HashMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use assortmax::baselines::{brute_force_subsets, exhaustive_search, BRUTE_FORCE_LIMIT};
use assortmax::data::{
    assemble, filter_and_index, generate_instance, load_itemsets, load_prices, parse_itemsets, save_itemsets, Assembly,
    CollectionSpec, GenSpec, ResultRow, V0Mode,
};
use assortmax::mips::{build_lsh_index, embed_collection, ExactMips, LshIndex, LshMips, LshParams};
use assortmax::solvers::{
    assort_mnl, assort_mnl_approx, assort_mnl_approx_simple, assort_mnl_bz, assort_mnl_capacitated, CapacityConstraint,
};
use assortmax::{AssortmentCollection, Instance, SolverResult};
use clap::ValueEnum;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Algo {
    /// Bisection with a linear-scan MIPS oracle.
    #[value(name = "exact")]
    Exact,
    /// Bisection with an LSH oracle, single threshold.
    #[value(name = "approx_simple")]
    ApproxSimple,
    /// Bisection tolerant to a (1 + nu)-approximate LSH oracle.
    #[value(name = "approx")]
    Approx,
    /// Noisy bisection over a posterior on revenue bins.
    #[value(name = "bz")]
    Bz,
    /// Top-C bisection under a cardinality constraint.
    #[value(name = "capacitated")]
    Capacitated,
    /// Revenue of every set in the collection.
    #[value(name = "exhaustive")]
    Exhaustive,
    /// Enumeration of all subsets under a cardinality constraint.
    #[value(name = "brute_cap")]
    BruteCap,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::ApproxSimple => "approx_simple",
            Algo::Approx => "approx",
            Algo::Bz => "bz",
            Algo::Capacitated => "capacitated",
            Algo::Exhaustive => "exhaustive",
            Algo::BruteCap => "brute_cap",
        }
    }

    fn constrained(self) -> bool {
        matches!(self, Algo::Capacitated | Algo::BruteCap)
    }
}

/// LSH table shape. With `rho` set, bits, tables and scan cap follow
/// `⌈log2 N⌉, ⌈N^rho⌉, 3⌈N^rho⌉` and the explicit fields are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct LshOptions {
    pub bits: Option<usize>,
    pub tables: usize,
    pub scan_cap: usize,
    pub rho: Option<f64>,
}

impl Default for LshOptions {
    fn default() -> Self {
        LshOptions { bits: None, tables: 20, scan_cap: 80, rho: None }
    }
}

impl LshOptions {
    pub fn params(&self, num_points: usize) -> Result<LshParams> {
        if let Some(rho) = self.rho {
            return Ok(LshParams::for_size(num_points, rho)?);
        }
        let base = LshParams::for_size(num_points, 0.5)?;
        Ok(LshParams::new(self.bits.unwrap_or(base.bits), self.tables, self.scan_cap)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub eps: f64,
    pub capacity: Option<usize>,
    /// Lower cardinality bound for the capacitated family.
    pub min_size: Option<usize>,
    pub nu: f64,
    pub lsh: LshOptions,
    pub bz_rounds: usize,
    pub bz_alpha: f64,
    pub bz_indexes: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eps: 0.1,
            capacity: None,
            min_size: None,
            nu: 0.0,
            lsh: LshOptions::default(),
            bz_rounds: 20,
            bz_alpha: 0.2,
            bz_indexes: 1,
            seed: 0,
        }
    }
}

/// Where a problem comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Random prices, weights and (optionally) random sets.
    Synthetic { n: usize, num_sets: Option<usize>, v0: f64, price_lo: f64, price_hi: f64 },
    /// A saved instance and, optionally, sets listed by external item id.
    Files { instance: PathBuf, sets: Option<PathBuf>, min_card: usize, max_card: usize },
    /// Mined itemsets with known or drawn prices.
    Itemsets {
        path: PathBuf,
        prices: Option<PathBuf>,
        min_card: usize,
        max_card: usize,
        v0: f64,
        price_lo: f64,
        price_hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub instance: Instance,
    pub sets: Option<AssortmentCollection>,
}

pub fn load_problem(source: &Source, seed: u64) -> Result<Problem> {
    match source {
        Source::Synthetic { n, num_sets, v0, price_lo, price_hi } => {
            let spec = GenSpec {
                n: *n,
                price_lo: *price_lo,
                price_hi: *price_hi,
                v0: V0Mode::Fixed(*v0),
                collection: num_sets.map_or(CollectionSpec::Capacitated, |sets| CollectionSpec::General { sets }),
                seed,
            };
            let g = generate_instance(&spec)?;
            Ok(Problem { instance: g.instance, sets: g.collection })
        }
        Source::Files { instance, sets, min_card, max_card } => {
            let file = fs::File::open(instance).with_context(|| format!("opening {}", instance.display()))?;
            let inst: Instance = serde_json::from_reader(BufReader::new(file))
                .with_context(|| format!("reading instance {}", instance.display()))?;
            let sets = match sets {
                Some(path) => Some(sets_by_item_id(&inst, path, *min_card, *max_card)?),
                None => None,
            };
            Ok(Problem { instance: inst, sets })
        }
        Source::Itemsets { path, prices, min_card, max_card, v0, price_lo, price_hi } => {
            let (c, map) = load_itemsets(path, *min_card, *max_card)?;
            let known = match prices {
                Some(p) => load_prices(p)?,
                None => Vec::new(),
            };
            let opts = Assembly { price_lo: *price_lo, price_hi: *price_hi, v0: *v0, seed };
            let (instance, sets) = assemble(&c, &map, &known, &opts)?;
            Ok(Problem { instance, sets: Some(sets) })
        }
    }
}

/// Reads an itemset file whose ids are the instance's external item ids.
fn sets_by_item_id(inst: &Instance, path: &Path, min_card: usize, max_card: usize) -> Result<AssortmentCollection> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let lists = parse_itemsets(BufReader::new(file), &path.display().to_string())?;
    let (c, map) = filter_and_index(lists, min_card, max_card)?;
    let rank: HashMap<u64, u32> = inst.item_ids().iter().enumerate().map(|(r, &id)| (id, r as u32 + 1)).collect();
    let relabel = map
        .ids()
        .iter()
        .map(|id| {
            rank.get(id).copied().with_context(|| format!("item {id} in {} is not in the instance", path.display()))
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(c.relabel(inst.n(), &relabel)?)
}

/// A solve with its timing split into setup (embedding and index build) and
/// solver execution.
#[derive(Debug, Clone)]
pub struct Solved {
    pub result: SolverResult,
    pub build_time: Duration,
}

fn check_compat(algo: Algo, problem: &Problem, opts: &SolveOptions) -> Result<()> {
    ensure!(opts.eps > 0.0 && opts.eps.is_finite(), "--eps must be positive, got {}", opts.eps);
    if algo.constrained() {
        ensure!(opts.capacity.is_some(), "--algo {} requires --capacity", algo.name());
    } else {
        if opts.capacity.is_some() || opts.min_size.is_some() {
            bail!(
                "--capacity and --min-size apply only to capacitated and brute_cap, not --algo {} over general sets",
                algo.name()
            );
        }
        ensure!(problem.sets.is_some(), "--algo {} needs an assortment collection", algo.name());
    }
    Ok(())
}

fn constraint(opts: &SolveOptions) -> CapacityConstraint {
    let cap = opts.capacity.unwrap_or(0);
    match opts.min_size {
        Some(min) => CapacityConstraint::WithForcedTop { cap, min },
        None => CapacityConstraint::AtMost(cap),
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed()))
}

pub fn solve(problem: &Problem, algo: Algo, opts: &SolveOptions) -> Result<Solved> {
    check_compat(algo, problem, opts)?;
    let inst = &problem.instance;
    let setup = Instant::now();
    let (result, elapsed, build_time) = match algo {
        Algo::Capacitated => {
            let (r, t) = timed(|| Ok(assort_mnl_capacitated(inst, &constraint(opts), opts.eps)?))?;
            (r, t, Duration::ZERO)
        }
        Algo::BruteCap => {
            let cap = opts.capacity.unwrap_or(0);
            let min = opts.min_size.unwrap_or(0);
            let (r, t) = timed(|| Ok(brute_force_subsets(inst, |s| (min..=cap).contains(&s.len()))?))?;
            (r, t, Duration::ZERO)
        }
        Algo::Exhaustive => {
            let sets = problem.sets.as_ref().expect("checked");
            let (r, t) = timed(|| Ok(exhaustive_search(sets, inst)?))?;
            (r, t, Duration::ZERO)
        }
        Algo::Exact => {
            let sets = problem.sets.as_ref().expect("checked");
            let emb = embed_collection(sets, inst)?;
            let build = setup.elapsed();
            let (r, t) = timed(|| Ok(assort_mnl(&ExactMips::new(&emb), opts.eps)?))?;
            (r, t, build)
        }
        Algo::ApproxSimple => {
            let sets = problem.sets.as_ref().expect("checked");
            let emb = embed_collection(sets, inst)?;
            let index = build_lsh_index(&emb, opts.lsh.params(sets.len())?, opts.seed)?;
            let build = setup.elapsed();
            let (r, t) = timed(|| Ok(assort_mnl_approx_simple(&LshMips::new(&emb, &index)?, opts.eps)?))?;
            (r, t, build)
        }
        Algo::Approx => {
            let sets = problem.sets.as_ref().expect("checked");
            let p1 = inst.max_price();
            let norm = inst.normalize()?;
            let emb = embed_collection(sets, &norm)?;
            let index = build_lsh_index(&emb, opts.lsh.params(sets.len())?, opts.seed)?;
            let build = setup.elapsed();
            let (r, t) = timed(|| Ok(assort_mnl_approx(&LshMips::new(&emb, &index)?, opts.eps / p1, opts.nu)?))?;
            (r.rescaled(p1), t, build)
        }
        Algo::Bz => {
            let sets = problem.sets.as_ref().expect("checked");
            let p1 = inst.max_price();
            ensure!(p1 > 0.0, "bz needs a positive top price");
            ensure!(opts.bz_indexes >= 1, "--bz-indexes must be at least 1");
            let eps = p1 / (p1 / opts.eps).ceil();
            let emb = embed_collection(sets, inst)?;
            let params = opts.lsh.params(sets.len())?;
            let indexes = (0..opts.bz_indexes as u64)
                .map(|j| Ok(build_lsh_index(&emb, params, opts.seed.wrapping_add(j))?))
                .collect::<Result<Vec<LshIndex>>>()?;
            let build = setup.elapsed();
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let (r, t) = timed(|| {
                let oracles = indexes.iter().map(|idx| LshMips::new(&emb, idx)).collect::<Result<Vec<_>, _>>()?;
                Ok(assort_mnl_bz(&oracles, eps, opts.bz_rounds, opts.bz_alpha, &mut rng)?.result)
            })?;
            (r, t, build)
        }
    };
    Ok(Solved { result: SolverResult { wall_time: elapsed, ..result }, build_time })
}

/// JSON report for one solve: the result plus the instance's external ids
/// of the chosen items.
pub fn solve_report(problem: &Problem, algo: Algo, opts: &SolveOptions, solved: &Solved) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(&solved.result)?;
    let obj = v.as_object_mut().expect("result serializes to an object");
    let ids: Vec<u64> =
        solved.result.assortment.items().iter().map(|&i| problem.instance.item_ids()[i as usize - 1]).collect();
    obj.insert("algo".into(), algo.name().into());
    obj.insert("n".into(), problem.instance.n().into());
    obj.insert("N".into(), problem.sets.as_ref().map(|s| s.len()).into());
    obj.insert("eps".into(), opts.eps.into());
    obj.insert("item_ids".into(), ids.into());
    obj.insert("build_time_s".into(), solved.build_time.as_secs_f64().into());
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub algos: Vec<Algo>,
    pub runs: usize,
    pub source: Source,
    /// Collection sizes to sweep for synthetic sources; ignored otherwise.
    pub sweep: Vec<usize>,
    pub solve: SolveOptions,
    pub seed: u64,
    pub report_build_time: bool,
}

/// Seed of run `run`, independent of how many runs or workers there are.
pub fn run_seed(master: u64, run: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(run as u64);
    rng.next_u64()
}

/// Runs every algorithm on `runs` freshly drawn problems per sweep point and
/// returns per-run rows followed by one `mean` row per (N, algorithm).
pub fn bench(cfg: &BenchConfig) -> Result<Vec<ResultRow>> {
    ensure!(cfg.runs >= 1, "--runs must be at least 1");
    ensure!(!cfg.algos.is_empty(), "no algorithms selected");
    let points: Vec<Source> = match (&cfg.source, cfg.sweep.is_empty()) {
        (Source::Synthetic { n, v0, price_lo, price_hi, .. }, false) => cfg
            .sweep
            .iter()
            .map(|&sets| Source::Synthetic {
                n: *n,
                num_sets: Some(sets),
                v0: *v0,
                price_lo: *price_lo,
                price_hi: *price_hi,
            })
            .collect(),
        _ => vec![cfg.source.clone()],
    };
    let mut rows = Vec::new();
    for source in &points {
        let per_run = for_each_run(cfg.runs, |run| bench_run(cfg, source, run))?;
        let run_rows: Vec<ResultRow> = per_run.into_iter().flatten().collect();
        let means: Vec<ResultRow> = cfg.algos.iter().map(|a| mean_row(&run_rows, a.name())).collect();
        rows.extend(run_rows);
        rows.extend(means);
    }
    Ok(rows)
}

#[cfg(feature = "parallel")]
fn for_each_run<T: Send>(runs: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..runs).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn for_each_run<T>(runs: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..runs).map(f).collect()
}

fn bench_run(cfg: &BenchConfig, source: &Source, run: usize) -> Result<Vec<ResultRow>> {
    let seed = run_seed(cfg.seed, run);
    let problem = load_problem(source, seed)?;
    let opts = SolveOptions { seed, ..cfg.solve.clone() };
    let reference = reference_solution(&problem, &opts)?;
    let mut rows = Vec::with_capacity(cfg.algos.len());
    for &algo in &cfg.algos {
        let solved = solve(&problem, algo, &opts)?;
        let r = &solved.result;
        let mut wall = r.wall_time;
        if cfg.report_build_time {
            wall += solved.build_time;
        }
        let (rel_error, overlap) = match &reference {
            Some(best) => {
                let rel = if best.revenue > 0.0 { (best.revenue - r.revenue) / best.revenue } else { 0.0 };
                (Some(rel), Some(r.assortment.overlap(&best.assortment)))
            }
            None => (None, None),
        };
        rows.push(ResultRow {
            run_id: run.to_string(),
            algo: algo.name().into(),
            n: problem.instance.n(),
            num_sets: if algo.constrained() { None } else { problem.sets.as_ref().map(|s| s.len()) },
            eps: opts.eps,
            iterations: r.iterations as f64,
            wall_time_s: wall.as_secs_f64(),
            revenue: r.revenue,
            rel_error,
            overlap,
        });
    }
    Ok(rows)
}

/// Exhaustive optimum over the collection, or the subset optimum under the
/// capacity when no collection is given and n is small enough.
fn reference_solution(problem: &Problem, opts: &SolveOptions) -> Result<Option<SolverResult>> {
    if let Some(sets) = &problem.sets {
        if opts.capacity.is_none() {
            return Ok(Some(exhaustive_search(sets, &problem.instance)?));
        }
    }
    match opts.capacity {
        Some(cap) if problem.instance.n() <= BRUTE_FORCE_LIMIT => {
            let min = opts.min_size.unwrap_or(0);
            Ok(Some(brute_force_subsets(&problem.instance, |s| (min..=cap).contains(&s.len()))?))
        }
        _ => Ok(None),
    }
}

fn mean_row(rows: &[ResultRow], algo: &str) -> ResultRow {
    let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.algo == algo).collect();
    let k = mine.len() as f64;
    let mean = |f: &dyn Fn(&ResultRow) -> f64| mine.iter().map(|r| f(r)).sum::<f64>() / k;
    let mean_opt = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
        mine.iter().map(|r| f(r)).collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / k)
    };
    let first = mine[0];
    ResultRow {
        run_id: "mean".into(),
        algo: algo.into(),
        n: first.n,
        num_sets: first.num_sets,
        eps: first.eps,
        iterations: mean(&|r| r.iterations),
        wall_time_s: mean(&|r| r.wall_time_s),
        revenue: mean(&|r| r.revenue),
        rel_error: mean_opt(&|r| r.rel_error),
        overlap: mean_opt(&|r| r.overlap),
    }
}

/// Writes `instance.json` and, for general specs, `sets.txt` (external ids)
/// into `dir`. Returns the written paths.
pub fn generate(spec: &GenSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    let g = generate_instance(spec)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let inst_path = dir.join("instance.json");
    let text = serde_json::to_string_pretty(&g.instance)?;
    fs::write(&inst_path, text + "\n").with_context(|| format!("writing {}", inst_path.display()))?;
    let mut written = vec![inst_path];
    if let Some(c) = &g.collection {
        let ids = g.instance.item_ids();
        let sets_path = dir.join("sets.txt");
        save_itemsets(&sets_path, c.iter().map(|s| s.iter().map(|&i| ids[i as usize - 1]).collect()))?;
        written.push(sets_path);
    }
    Ok(written)
}
