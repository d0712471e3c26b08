//! Command-line harness for sliced kernel summation.
//!
//! Subcommands: `gen-dirs` (direction files), `gen-data` (synthetic
//! datasets), `sum` (one summation run), `bench` (error/time sweeps),
//! `variance-check` and `rate` (validation tables). All randomness is
//! seeded; the same configuration and seed reproduce every output byte
//! except wall-clock columns.
//!
//! Exit codes: 0 ok, 2 usage, 3 parse, 4 capability, 5 numerical.

use clap::{Args, Parser, Subcommand, ValueEnum};
use slicesum::analysis::{
    rff_error_experiment, slicing_error_experiment, variance_closed_form, variance_mc,
    VarianceKind,
};
use slicesum::directions::{
    distance_design, energy_sym, iid_uniform, load_directions, orthogonal, randomize,
    save_directions, sobol_sphere, DirectionSet, EnergyOptConfig, Generator,
};
use slicesum::fastsum::{
    build_fourier_plan, fourier_slice_sum_mt, naive_sum_mt, orf_sum, rff_k_slice_sum, rff_sum,
    sliced_direct_sum_mt, sorting_slice_sum_mt, SummationProblem,
};
use slicesum::kernels::{median_rule, KernelSpec, ScaleRule};
use slicesum::points::PointSet;
use slicesum::rng::derive_seed;
use slicesum::{data, Error};

use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "slicesum",
    about = "Fast radial-kernel summation by slicing: direction sets, summation backends, benchmarks"
)]
struct Cli {
    /// Worker threads for the summation backends (1 = bit-reproducible).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Offset added to every seed (also SLICESUM_SEED_OFFSET) to select a
    /// replication stream.
    #[arg(long, global = true)]
    seed_offset: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a direction set and write it as a text file.
    GenDirs(GenDirsArgs),
    /// Generate a synthetic dataset CSV.
    GenData(GenDataArgs),
    /// Compute kernel sums with a chosen backend.
    Sum(SumArgs),
    /// Sweep methods over P (or feature counts) and record error/time.
    Bench(BenchArgs),
    /// Compare the closed-form slicing variance against Monte Carlo.
    VarianceCheck(VarianceArgs),
    /// Fit slicing-error convergence rates per generator.
    Rate(RateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirMethod {
    Iid,
    Sobol,
    Orthogonal,
    Distance,
    File,
}

#[derive(Args)]
struct GenDirsArgs {
    #[arg(long, value_enum)]
    method: DirMethod,
    /// Number of directions.
    #[arg(long)]
    p: usize,
    /// Ambient dimension.
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optimizer step budget for --method distance (0 = auto).
    #[arg(long, default_value_t = 0)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    step_size: f64,
    /// Input file for --method file (re-normalized, re-saved).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataKind {
    Blobs,
    Cube,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    kind: DataKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    centers: usize,
    #[arg(long, default_value_t = 0.3)]
    blob_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelName {
    Gauss,
    Laplace,
    Matern,
    Riesz,
    Thinplate,
}

#[derive(Args, Clone)]
struct KernelArgs {
    #[arg(long, value_enum)]
    kernel: KernelName,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Riesz exponent.
    #[arg(long)]
    r: Option<f64>,
    /// Set the length scale by the median rule: sigma = beta = 1/alpha = gamma * median.
    #[arg(long)]
    median_gamma: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Naive,
    SliceDirect,
    FourierSlice,
    SortingSlice,
    Rff,
    Orf,
    RffK,
}

#[derive(Args)]
struct SumArgs {
    #[arg(long, value_enum)]
    backend: Backend,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    /// Weights file (one value per line); omitted = unit weights.
    #[arg(long)]
    w: Option<PathBuf>,
    /// Direction file for slicing backends.
    #[arg(long)]
    dirs: Option<PathBuf>,
    /// Generate directions instead of loading them.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum, default_value = "iid")]
    dir_method: DirMethod,
    #[arg(long, default_value_t = 0)]
    dir_seed: u64,
    /// Fourier mode count override.
    #[arg(long)]
    n_ft: Option<usize>,
    /// Allow the numerically periodized Fourier path for riesz/thin plate.
    #[arg(long, default_value_t = false)]
    periodization: bool,
    /// Feature count for rff/orf.
    #[arg(long)]
    features: Option<usize>,
    /// Features per slice for rff-k.
    #[arg(long, default_value_t = 10)]
    rff_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also compute the naive reference and print the relative L1 error.
    #[arg(long, default_value_t = false)]
    compare_naive: bool,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    w: Option<PathBuf>,
    /// Synthetic dataset instead of files.
    #[arg(long, value_enum)]
    synthetic: Option<DataKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Write the synthetic dataset to `<prefix>_x.csv` / `<prefix>_y.csv`.
    #[arg(long)]
    dump_data: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated methods: fourier, fourier-qmc, sorting, sorting-qmc,
    /// slice-direct, rff, orf, rff-k, rff-k-qmc.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Slice counts (feature counts are derived per method).
    #[arg(long, value_delimiter = ',')]
    p_list: Vec<usize>,
    /// Paper pairing: P slices for Fourier, D = 2P features for RFF/ORF,
    /// P/2 slices with k = 10 for RFF-k.
    #[arg(long, default_value_t = false)]
    paper_mode: bool,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long)]
    n_ft: Option<usize>,
    #[arg(long, default_value_t = false)]
    periodization: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VarianceArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    x_norm: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    d: usize,
    /// Comma-separated generators: iid, sobol, orthogonal, distance, rff.
    #[arg(long, value_delimiter = ',')]
    generators: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    p_list: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 200)]
    n_x: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let offset = cli
        .seed_offset
        .or_else(|| std::env::var("SLICESUM_SEED_OFFSET").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    let threads = cli.threads.max(1);
    let result = match cli.command {
        Command::GenDirs(args) => cmd_gen_dirs(args, offset),
        Command::GenData(args) => cmd_gen_data(args, offset),
        Command::Sum(args) => cmd_sum(args, offset, threads),
        Command::Bench(args) => cmd_bench(args, offset, threads),
        Command::VarianceCheck(args) => cmd_variance_check(args, offset),
        Command::Rate(args) => cmd_rate(args, offset),
    };
    if let Err(e) = result {
        let (class, code) = match &e {
            Error::InvalidParameter(_) | Error::Domain(_) => ("usage", 2),
            Error::Parse(_) | Error::Io(_) => ("parse", 3),
            Error::Unsupported(_) => ("capability", 4),
            Error::Evaluation { .. }
            | Error::DegenerateData(_)
            | Error::OptimizationDiverged { .. }
            | Error::PlanMismatch(_) => ("numerical", 5),
        };
        eprintln!("error[{class}]: {e}");
        std::process::exit(code);
    }
}

/// Resolve relative output paths against SLICESUM_OUT_DIR.
fn out_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var("SLICESUM_OUT_DIR") {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl KernelArgs {
    /// Build the kernel, applying the median rule when requested.
    fn build(&self, d: usize, median: Option<f64>) -> Result<KernelSpec, Error> {
        let scale = match (self.median_gamma, median) {
            (Some(_), Some(m)) => Some(m),
            (Some(_), None) => {
                return Err(usage("--median-gamma needs a dataset to take the median over"))
            }
            _ => None,
        };
        match self.kernel {
            KernelName::Gauss => {
                let sigma = scale
                    .or(self.sigma)
                    .ok_or_else(|| usage("gauss kernel needs --sigma or --median-gamma"))?;
                KernelSpec::gauss(sigma, d)
            }
            KernelName::Laplace => {
                let alpha = scale
                    .map(|m| 1.0 / m)
                    .or(self.alpha)
                    .ok_or_else(|| usage("laplace kernel needs --alpha or --median-gamma"))?;
                KernelSpec::laplace(alpha, d)
            }
            KernelName::Matern => {
                let beta = scale
                    .or(self.beta)
                    .ok_or_else(|| usage("matern kernel needs --beta or --median-gamma"))?;
                let nu = self.nu.ok_or_else(|| usage("matern kernel needs --nu"))?;
                KernelSpec::matern(beta, nu, d)
            }
            KernelName::Riesz => {
                if self.median_gamma.is_some() {
                    return Err(usage("riesz kernel has no length scale; drop --median-gamma"));
                }
                let r = self.r.ok_or_else(|| usage("riesz kernel needs --r"))?;
                KernelSpec::riesz(r, d)
            }
            KernelName::Thinplate => {
                if self.median_gamma.is_some() {
                    return Err(usage("thin plate kernel has no length scale; drop --median-gamma"));
                }
                KernelSpec::thin_plate(d)
            }
        }
    }

    fn median_of(&self, x: &PointSet, y: &PointSet, seed: u64) -> Result<Option<f64>, Error> {
        match self.median_gamma {
            Some(gamma) => {
                let rule = ScaleRule::new(gamma, 1000)?;
                Ok(Some(median_rule(x, y, &rule, derive_seed(seed, 0x3ed))?))
            }
            None => Ok(None),
        }
    }
}

fn make_dirs(
    method: DirMethod,
    p: usize,
    d: usize,
    seed: u64,
    steps: usize,
    step_size: f64,
    input: Option<&Path>,
) -> Result<DirectionSet, Error> {
    if p == 0 {
        return Err(usage("need at least one direction (--p >= 1)"));
    }
    match method {
        DirMethod::Iid => iid_uniform(p, d, seed),
        DirMethod::Sobol => sobol_sphere(p, d, Some(seed)),
        DirMethod::Orthogonal => orthogonal(p, d, seed),
        DirMethod::Distance => distance_design(
            p,
            d,
            &EnergyOptConfig { steps, step_size, seed, ..Default::default() },
        ),
        DirMethod::File => {
            let path = input.ok_or_else(|| usage("--method file needs --input"))?;
            let dirs = load_directions(path)?;
            if dirs.dim() != d {
                return Err(usage(format!(
                    "direction file has dimension {}, expected {d}",
                    dirs.dim()
                )));
            }
            Ok(dirs)
        }
    }
}

fn cmd_gen_dirs(args: GenDirsArgs, offset: u64) -> Result<(), Error> {
    let dirs = make_dirs(
        args.method,
        args.p,
        args.d,
        args.seed.wrapping_add(offset),
        args.steps,
        args.step_size,
        args.input.as_deref(),
    )?;
    let path = out_path(&args.out);
    save_directions(&dirs, &path)?;
    println!(
        "wrote {} directions (d = {}) to {} | E_sym = {:.6}",
        dirs.p(),
        dirs.dim(),
        path.display(),
        energy_sym(&dirs)
    );
    Ok(())
}

fn cmd_gen_data(args: GenDataArgs, offset: u64) -> Result<(), Error> {
    let seed = args.seed.wrapping_add(offset);
    let pts = match args.kind {
        DataKind::Blobs => data::gaussian_blobs(args.n, args.d, args.centers, args.blob_scale, seed)?,
        DataKind::Cube => data::uniform_cube(args.n, args.d, seed)?,
    };
    let path = out_path(&args.out);
    data::write_points_csv(&pts, &path)?;
    println!("wrote {} x {} points to {}", pts.n(), pts.dim(), path.display());
    Ok(())
}

fn load_problem(
    x: &Path,
    y: &Path,
    w: Option<&Path>,
) -> Result<SummationProblem, Error> {
    let xs = data::read_points_csv(x)?;
    let ys = data::read_points_csv(y)?;
    match w {
        Some(path) => {
            let weights = data::read_values(path)?;
            SummationProblem::new(xs, ys, weights)
        }
        // benchmark convention: unit weights
        None => SummationProblem::with_unit_weights(xs, ys),
    }
}

fn cmd_sum(args: SumArgs, offset: u64, threads: usize) -> Result<(), Error> {
    let problem = load_problem(&args.x, &args.y, args.w.as_deref())?;
    let d = problem.dim();
    let seed = args.seed.wrapping_add(offset);
    let median = args.kernel.median_of(problem.x(), problem.y(), seed)?;
    let kernel = args.kernel.build(d, median)?;

    let needs_dirs = matches!(
        args.backend,
        Backend::SliceDirect | Backend::FourierSlice | Backend::SortingSlice | Backend::RffK
    );
    let dirs = if needs_dirs {
        Some(match &args.dirs {
            Some(path) => {
                let loaded = load_directions(path)?;
                if loaded.dim() != d {
                    return Err(usage(format!(
                        "direction file has dimension {}, data has {d}",
                        loaded.dim()
                    )));
                }
                loaded
            }
            None => {
                let p = args.p.ok_or_else(|| usage("slicing backends need --dirs or --p"))?;
                make_dirs(args.dir_method, p, d, args.dir_seed.wrapping_add(offset), 0, 0.01, None)?
            }
        })
    } else {
        None
    };

    // validation rules that cut across flags
    if matches!(args.backend, Backend::FourierSlice)
        && !kernel.is_positive_definite()
        && !args.periodization
    {
        return Err(Error::Unsupported(
            "fourier-slice with riesz/thin plate requires --periodization".into(),
        ));
    }

    let start = Instant::now();
    let (values, detail) = match args.backend {
        Backend::Naive => (naive_sum_mt(&problem, &kernel, threads)?, String::new()),
        Backend::SliceDirect => {
            let dirs = dirs.as_ref().unwrap();
            (
                sliced_direct_sum_mt(&problem, &kernel, dirs, threads)?,
                format!(" P={}", dirs.p()),
            )
        }
        Backend::FourierSlice => {
            let dirs = dirs.as_ref().unwrap();
            let plan = build_fourier_plan(&problem, &kernel, args.n_ft)?;
            let detail = format!(" P={} tau={:.6e} n_ft={}", dirs.p(), plan.tau(), plan.n_ft());
            (fourier_slice_sum_mt(&problem, &kernel, dirs, &plan, threads)?, detail)
        }
        Backend::SortingSlice => {
            let dirs = dirs.as_ref().unwrap();
            (
                sorting_slice_sum_mt(&problem, &kernel, dirs, threads)?,
                format!(" P={}", dirs.p()),
            )
        }
        Backend::Rff => {
            let n_feat = args.features.ok_or_else(|| usage("rff needs --features"))?;
            (rff_sum(&problem, &kernel, n_feat, seed)?, format!(" D={n_feat}"))
        }
        Backend::Orf => {
            let n_feat = args.features.ok_or_else(|| usage("orf needs --features"))?;
            (orf_sum(&problem, &kernel, n_feat, seed)?, format!(" D={n_feat}"))
        }
        Backend::RffK => {
            let dirs = dirs.as_ref().unwrap();
            (
                rff_k_slice_sum(&problem, &kernel, dirs, args.rff_k, seed)?,
                format!(" P={} k={}", dirs.p(), args.rff_k),
            )
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let path = out_path(&args.out);
    data::write_values(&values, &path)?;
    println!(
        "backend={}{detail} kernel={} time_s={elapsed:.4} out={}",
        args.backend.to_possible_value().unwrap().get_name(),
        kernel.family().name(),
        path.display()
    );
    if args.compare_naive {
        let exact = naive_sum_mt(&problem, &kernel, threads)?;
        let num: f64 = values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum();
        let den: f64 = exact.iter().map(|v| v.abs()).sum();
        println!("rel_l1_vs_naive={:.6e}", num / den.max(1e-300));
    }
    Ok(())
}

fn load_bench_dataset(args: &DatasetArgs, offset: u64) -> Result<SummationProblem, Error> {
    match (&args.x, &args.y, args.synthetic) {
        (Some(x), Some(y), None) => load_problem(x, y, args.w.as_deref()),
        (None, None, Some(kind)) => {
            let n = args.n.ok_or_else(|| usage("--synthetic needs --n"))?;
            let m = args.m.unwrap_or(n);
            let d = args.d.ok_or_else(|| usage("--synthetic needs --d"))?;
            let seed = args.data_seed.wrapping_add(offset);
            let (x, y) = match kind {
                DataKind::Blobs => (
                    data::gaussian_blobs(n, d, 10, 0.3, derive_seed(seed, 1))?,
                    data::gaussian_blobs(m, d, 10, 0.3, derive_seed(seed, 2))?,
                ),
                DataKind::Cube => (
                    data::uniform_cube(n, d, derive_seed(seed, 1))?,
                    data::uniform_cube(m, d, derive_seed(seed, 2))?,
                ),
            };
            if let Some(prefix) = &args.dump_data {
                data::write_points_csv(&x, out_path(Path::new(&format!("{prefix}_x.csv"))))?;
                data::write_points_csv(&y, out_path(Path::new(&format!("{prefix}_y.csv"))))?;
            }
            SummationProblem::with_unit_weights(x, y)
        }
        _ => Err(usage("provide either --x/--y files or --synthetic with --n/--d")),
    }
}

fn cmd_bench(args: BenchArgs, offset: u64, threads: usize) -> Result<(), Error> {
    if args.methods.is_empty() || args.p_list.is_empty() {
        return Err(usage("bench needs --methods and --p-list"));
    }
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let seed = args.seed.wrapping_add(offset);
    let problem = load_bench_dataset(&args.dataset, offset)?;
    let d = problem.dim();
    let median = args.kernel.median_of(problem.x(), problem.y(), seed)?;
    let kernel = args.kernel.build(d, median)?;
    let exact = naive_sum_mt(&problem, &kernel, threads)?;
    let exact_l1: f64 = exact.iter().map(|v| v.abs()).sum();
    let plan = if args.methods.iter().any(|m| m.starts_with("fourier")) {
        if !kernel.is_positive_definite() && !args.periodization {
            return Err(Error::Unsupported(
                "fourier methods with riesz/thin plate require --periodization".into(),
            ));
        }
        Some(build_fourier_plan(&problem, &kernel, args.n_ft)?)
    } else {
        None
    };

    let mut csv = String::from("method,P_or_D,time_s,rel_l1_mean,rel_l1_std,seed\n");
    for method in &args.methods {
        for &p in &args.p_list {
            // paper-mode pairings keep computation times comparable
            let (slices, features) = match method.as_str() {
                "rff" | "orf" => (0, if args.paper_mode { 2 * p } else { p }),
                "rff-k" | "rff-k-qmc" => (if args.paper_mode { (p / 2).max(1) } else { p }, 10),
                _ => (p, 0),
            };
            // direction construction is excluded from the timed section
            let qmc_base = if method.ends_with("-qmc") {
                Some(distance_design(
                    slices,
                    d,
                    &EnergyOptConfig { seed: derive_seed(seed, p as u64), ..Default::default() },
                )?)
            } else {
                None
            };
            let mut errs = Vec::with_capacity(args.reps);
            let mut time_total = 0.0;
            for rep in 0..args.reps {
                let rep_seed = derive_seed(seed, (rep * 7919 + p) as u64);
                let dirs = match &qmc_base {
                    Some(base) => Some(randomize(base, rep_seed)),
                    None if slices > 0 => Some(iid_uniform(slices, d, rep_seed)?),
                    None => None,
                };
                let t0 = Instant::now();
                let values = match method.as_str() {
                    "fourier" | "fourier-qmc" => fourier_slice_sum_mt(
                        &problem,
                        &kernel,
                        dirs.as_ref().unwrap(),
                        plan.as_ref().unwrap(),
                        threads,
                    )?,
                    "sorting" | "sorting-qmc" => {
                        sorting_slice_sum_mt(&problem, &kernel, dirs.as_ref().unwrap(), threads)?
                    }
                    "slice-direct" => {
                        sliced_direct_sum_mt(&problem, &kernel, dirs.as_ref().unwrap(), threads)?
                    }
                    "rff" => rff_sum(&problem, &kernel, features, rep_seed)?,
                    "orf" => orf_sum(&problem, &kernel, features, rep_seed)?,
                    "rff-k" | "rff-k-qmc" => {
                        rff_k_slice_sum(&problem, &kernel, dirs.as_ref().unwrap(), 10, rep_seed)?
                    }
                    other => return Err(usage(format!("unknown bench method {other:?}"))),
                };
                time_total += t0.elapsed().as_secs_f64();
                let num: f64 = values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum();
                errs.push(num / exact_l1.max(1e-300));
            }
            let mean: f64 = errs.iter().sum::<f64>() / args.reps as f64;
            let std = if args.reps > 1 {
                (errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                    / (args.reps as f64 - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            let p_or_d = if slices > 0 { slices } else { features };
            csv.push_str(&format!(
                "{method},{p_or_d},{:.6e},{mean:.10e},{std:.10e},{seed}\n",
                time_total / args.reps as f64
            ));
        }
    }
    let path = out_path(&args.out);
    std::fs::write(&path, csv)?;
    println!("wrote benchmark table to {}", path.display());
    Ok(())
}

fn cmd_variance_check(args: VarianceArgs, offset: u64) -> Result<(), Error> {
    if args.n_samples < 2 {
        return Err(usage("--n-samples must be at least 2"));
    }
    let kernel = args.kernel.build(args.d, None)?;
    let seed = args.seed.wrapping_add(offset);
    let report = variance_mc(&kernel, args.x_norm, args.n_samples, seed)?;
    let closed = variance_closed_form(&kernel, args.x_norm)?;
    let kind = match closed.kind {
        VarianceKind::Exact => "exact",
        VarianceKind::UpperBound => "bound",
        VarianceKind::Asymptotic => "asymptotic",
    };
    let mut csv = String::from("kernel,d,x_norm,closed_form,kind,mc_estimate,mc_stderr,n_samples\n");
    csv.push_str(&format!(
        "{},{},{},{:.10e},{kind},{:.10e},{:.10e},{}\n",
        kernel.family().name(),
        args.d,
        args.x_norm,
        closed.value,
        report.mc_estimate,
        report.mc_stderr,
        args.n_samples
    ));
    match &args.out {
        Some(path) => {
            let path = out_path(path);
            std::fs::write(&path, csv)?;
            println!("wrote variance table to {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_rate(args: RateArgs, offset: u64) -> Result<(), Error> {
    if args.p_list.len() < 2 {
        return Err(usage("rate fitting needs at least two P values"));
    }
    if args.generators.is_empty() {
        return Err(usage("--generators must name at least one generator"));
    }
    let seed = args.seed.wrapping_add(offset);
    let scale = args
        .kernel
        .median_gamma
        .map(|g| slicesum::analysis::median_norm_scale(args.d, 1000, g, derive_seed(seed, 0x3ed)));
    let kernel = args.kernel.build(args.d, scale)?;
    let mut out = String::new();
    for (i, gen_name) in args.generators.iter().enumerate() {
        let report = match gen_name.as_str() {
            "iid" => slicing_error_experiment(
                &kernel,
                &args.p_list,
                Generator::Iid,
                args.reps,
                args.n_x,
                seed,
            )?,
            "sobol" => slicing_error_experiment(
                &kernel,
                &args.p_list,
                Generator::SobolSphere,
                args.reps,
                args.n_x,
                seed,
            )?,
            "orthogonal" => slicing_error_experiment(
                &kernel,
                &args.p_list,
                Generator::Orthogonal,
                args.reps,
                args.n_x,
                seed,
            )?,
            "distance" => slicing_error_experiment(
                &kernel,
                &args.p_list,
                Generator::Distance,
                args.reps,
                args.n_x,
                seed,
            )?,
            "rff" => rff_error_experiment(&kernel, &args.p_list, args.reps, args.n_x, seed)?,
            other => return Err(usage(format!("unknown generator {other:?}"))),
        };
        let csv = report.to_csv();
        if i == 0 {
            out.push_str(&csv);
        } else {
            // drop the repeated header
            out.push_str(csv.split_once('\n').map(|(_, rest)| rest).unwrap_or(""));
        }
    }
    match &args.out {
        Some(path) => {
            let path = out_path(path);
            std::fs::write(&path, out)?;
            println!("wrote rate table to {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}
