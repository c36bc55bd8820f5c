use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mad_core::exec::set_threads;
use mad_core::fd::{periodic_interp, solve_fd_with, FdProblem, KrylovMethod, DEFAULT_MAX_ITER, DEFAULT_TOL};
use mad_core::harness::{bench_generation, build_test_set_1, build_test_set_2, evaluate, OracleConfig};
use mad_core::neural::{load_model, save_model, train, Arch, ArchConfig, LossKind, TrainConfig, DEFAULT_LATENT};
use mad_core::sampling::{generate_for_role, GenOptions, GrfConfig, SmoothingConfig};
use mad_core::{
    load_dataset, save_dataset, Dataset, DatasetMeta, Domain, DomainKind, EquationSpec, Execution, FieldSample,
    Generator, GridSpec, Role, SourceMode,
};

#[derive(Parser)]
#[command(name = "mad", version, about = "Exact synthetic PDE data, small neural operators, FD oracle")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (dataset, model, or report depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset.
    Gen(GenArgs),
    /// Train an operator model on a dataset.
    Train(TrainArgs),
    /// Score a model on a test dataset.
    Eval(EvalArgs),
    /// Time MAD1 generation against FD solves of the same problems.
    Bench(BenchArgs),
    /// Solve one Dirichlet problem with the finite-difference oracle.
    SolveFd(SolveArgs),
    /// Print a dataset or model header.
    Inspect { path: PathBuf },
}

#[derive(Args, Clone)]
struct EqArgs {
    #[arg(long, default_value = "laplace")]
    equation: String,
    #[arg(long, default_value_t = 0.0)]
    k: f64,
    /// Override the source mode implied by the equation family.
    #[arg(long)]
    source: Option<String>,
}

impl EqArgs {
    fn spec(&self) -> Result<EquationSpec> {
        let mut eq = EquationSpec::from_family(&self.equation, self.k)?;
        if let Some(s) = &self.source {
            eq = eq.with_source(s.parse::<SourceMode>()?);
        }
        Ok(eq)
    }
}

#[derive(Args, Clone)]
struct DomainArgs {
    #[arg(long, default_value = "square")]
    domain: String,
    /// Lattice points per axis (default: 21, or 11 for the cube).
    #[arg(long)]
    grid: Option<usize>,
    /// Boundary samples `Mb` (2D only).
    #[arg(long)]
    boundary_points: Option<usize>,
}

impl DomainArgs {
    fn build(&self) -> Result<Domain> {
        let kind: DomainKind = self.domain.parse()?;
        let res = self.grid.unwrap_or(if kind.dim() == 3 { 11 } else { 21 });
        let mb = self.boundary_points.unwrap_or(match kind {
            DomainKind::UnitCube => 0,
            _ => 4 * (res - 1),
        });
        Ok(Domain::build(kind, GridSpec::new(res, mb))?)
    }
}

#[derive(Args)]
struct GenArgs {
    /// mad0 | mad1 | mad2 | pinn-grf | fd-oracle
    #[arg(long, default_value = "mad1")]
    method: String,
    #[command(flatten)]
    eq: EqArgs,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// train | test-1 (analytic test stream); fd-oracle always writes test-2.
    #[arg(long, default_value = "train")]
    role: String,
    #[arg(long, default_value_t = 0.1)]
    length_scale: f64,
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Exterior centers for MAD1.
    #[arg(long)]
    centers: Option<usize>,
    /// Oracle spacing for fd-oracle.
    #[arg(long, default_value_t = 0.005)]
    oracle_h: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "baseline")]
    arch: String,
    #[arg(long, default_value = "mad")]
    loss: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_LATENT)]
    latent: usize,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    eq: EqArgs,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0.005)]
    h: f64,
    #[arg(long, default_value = "minres")]
    solver: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    eq: EqArgs,
    #[arg(long, default_value = "square")]
    domain: String,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// JSON with `params` and `values` (boundary samples by arc length),
    /// optionally `source` on the full lattice. Without it the
    /// manufactured case u = cos(6x) sin(8y) is solved and scored.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "minres")]
    solver: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(serde::Deserialize)]
struct BoundaryInput {
    params: Vec<f64>,
    values: Vec<f64>,
    source: Option<Vec<f64>>,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let exec = match cli.threads {
        Some(0) => bail!("--threads must be >= 1"),
        Some(1) => Execution::Sequential,
        Some(n) => {
            set_threads(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let report = match &cli.cmd {
        Cmd::Gen(a) => gen(a, &cli, exec)?,
        Cmd::Train(a) => train_cmd(a, &cli)?,
        Cmd::Eval(a) => eval_cmd(a, exec)?,
        Cmd::Bench(a) => bench(a, &cli, exec)?,
        Cmd::SolveFd(a) => solve(a, &cli)?,
        Cmd::Inspect { path } => inspect(path)?,
    };
    let writes_artifact = matches!(cli.cmd, Cmd::Gen(_) | Cmd::Train(_) | Cmd::SolveFd(_));
    if let (Some(out), false) = (&cli.out, writes_artifact) {
        std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    match cli.format {
        Format::Json => emit(&serde_json::to_string_pretty(&report)?),
        Format::Table => print_table(&report),
    }
    Ok(())
}

/// Writes a line to stdout; a closed pipe ends the process quietly.
fn emit(line: &str) {
    use std::io::Write;
    if writeln!(std::io::stdout().lock(), "{line}").is_err() {
        std::process::exit(0);
    }
}

fn print_table(v: &Value) {
    let Value::Object(map) = v else {
        emit(&v.to_string());
        return;
    };
    let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
    for (k, v) in map {
        let shown = match v {
            Value::String(s) => s.clone(),
            Value::Array(a) if a.len() > 8 => format!("[{} values]", a.len()),
            other => other.to_string(),
        };
        emit(&format!("{k:width$}  {shown}"));
    }
}

fn out_path<'a>(cli: &'a Cli, what: &str) -> Result<&'a Path> {
    cli.out
        .as_deref()
        .with_context(|| format!("--out is required to write the {what}"))
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

fn dataset_summary(ds: &Dataset, path: Option<&Path>) -> Result<Value> {
    let mut v = to_value(&ds.meta)?;
    if let Value::Object(m) = &mut v {
        m.insert("samples".into(), json!(ds.len()));
        m.insert("bytes".into(), json!(ds.meta.file_len(ds.len())));
        if let Some(p) = path {
            m.insert("path".into(), json!(p.display().to_string()));
        }
    }
    Ok(v)
}

fn gen(a: &GenArgs, cli: &Cli, exec: Execution) -> Result<Value> {
    let out = out_path(cli, "dataset")?;
    let eq = a.eq.spec()?;
    let d = a.domain.build()?;
    let opts = GenOptions {
        n_centers: a.centers,
        grf: GrfConfig {
            length_scale: a.length_scale,
            ..GrfConfig::default()
        },
        smoothing: SmoothingConfig { sigma: a.sigma },
        ..GenOptions::default()
    };
    let generator: Generator = a.method.parse()?;
    let ds = match (generator, a.role.as_str()) {
        (Generator::FdOracle, _) => {
            let oracle = OracleConfig {
                h: a.oracle_h,
                ..OracleConfig::default()
            };
            build_test_set_2(&eq, &d, a.samples, cli.seed, &oracle, &opts, exec)?
        }
        (g, "train") => generate_for_role(g, Role::Train, &eq, &d, a.samples, cli.seed, &opts, exec)?,
        (g, "test-1") => build_test_set_1(g, &eq, &d, a.samples, cli.seed, &opts, exec)?,
        (_, r) => bail!("unknown role '{r}' (train|test-1)"),
    };
    save_dataset(&ds, out)?;
    dataset_summary(&ds, Some(out))
}

fn domain_of(meta: &DatasetMeta) -> Result<Domain> {
    Ok(Domain::build(meta.domain, meta.grid)?)
}

fn train_cmd(a: &TrainArgs, cli: &Cli) -> Result<Value> {
    let out = out_path(cli, "model")?;
    let ds = load_dataset(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let d = domain_of(&ds.meta)?;
    let arch: Arch = a.arch.parse()?;
    let loss: LossKind = a.loss.parse()?;
    let mut cfg = ArchConfig::new(arch, d.dim(), ds.meta.boundary_count(), ds.meta.source_len);
    cfg.latent = a.latent;
    let mut model = cfg.build(cli.seed)?;
    let tc = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        seed: cli.seed,
        batch_size: a.batch_size,
        ..TrainConfig::default()
    };
    let report = train(&mut model, &ds, &d, loss, &tc)?;
    save_model(&model, Some(arch), out)?;
    Ok(json!({
        "arch": arch.name(),
        "loss": loss.name(),
        "epochs": report.epochs,
        "final_loss": report.final_loss(),
        "parameters": model.param_count(),
        "train_time": report.wall_time,
        "path": out.display().to_string(),
    }))
}

fn eval_cmd(a: &EvalArgs, exec: Execution) -> Result<Value> {
    let (model, manifest) = load_model(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let ds = load_dataset(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let d = domain_of(&ds.meta)?;
    let r = evaluate(&model, &ds, &d, exec)?;
    let mut sorted = r.per_sample.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(json!({
        "arch": manifest.arch.map(|a| a.name()),
        "test_set": r.role.name(),
        "generator": r.generator.name(),
        "equation": r.equation.to_string(),
        "samples": sorted.len(),
        "mean_relative_l2": r.mean,
        "median_relative_l2": sorted[sorted.len() / 2],
        "max_relative_l2": sorted[sorted.len() - 1],
        "per_sample": r.per_sample,
    }))
}

fn bench(a: &BenchArgs, cli: &Cli, exec: Execution) -> Result<Value> {
    let eq = a.eq.spec()?;
    let d = a.domain.build()?;
    let oracle = OracleConfig {
        h: a.h,
        method: a.solver.parse::<KrylovMethod>()?,
        ..OracleConfig::default()
    };
    to_value(&bench_generation(&eq, &d, a.samples, cli.seed, &oracle, &GenOptions::default(), exec)?)
}

fn solve(a: &SolveArgs, cli: &Cli) -> Result<Value> {
    let eq = a.eq.spec()?;
    let kind: DomainKind = a.domain.parse()?;
    let (lo, hi) = kind.bounds();
    let res = ((hi - lo) / a.h).round() as usize + 1;
    if ((hi - lo) / (res - 1) as f64 - a.h).abs() > 1e-9 * a.h {
        bail!("--h {} does not divide the domain width {}", a.h, hi - lo);
    }
    let method: KrylovMethod = a.solver.parse()?;
    let reference = |x: f64, y: f64| (6.0 * x).cos() * (8.0 * y).sin();
    let input: Option<BoundaryInput> = match &a.input {
        Some(p) => Some(serde_json::from_str(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?),
        None => None,
    };
    let problem = match &input {
        Some(bc) => FdProblem::from_boundary_samples(kind, res, eq, &bc.params, &bc.values, bc.source.clone())?,
        None => {
            let k = eq.k;
            FdProblem::from_functions(
                kind,
                res,
                eq.with_source(SourceMode::General),
                |p| reference(p[0], p[1]),
                Some(move |p: [f64; 2]| (k - 100.0) * reference(p[0], p[1])),
            )?
        }
    };
    let start = std::time::Instant::now();
    let sol = solve_fd_with(&problem, method, a.tol, DEFAULT_MAX_ITER)?;
    let elapsed = start.elapsed().as_secs_f64();
    let d = problem.domain();
    let u = sol.sample_on(d)?;
    let mut report = json!({
        "domain": kind.name(),
        "resolution": res,
        "h": a.h,
        "solver": format!("{method:?}").to_lowercase(),
        "iterations": sol.iterations,
        "residual": sol.residual,
        "solve_time": elapsed,
    });
    if a.input.is_none() {
        let truth: Vec<f64> = d.nodes().iter().map(|p| reference(p[0], p[1])).collect();
        report["relative_l2"] = json!(mad_core::harness::relative_l2(&u, &truth)?);
    }
    if let Some(out) = &cli.out {
        let bd = Domain::build(kind, GridSpec::new(res, 4 * (res - 1)))?;
        let g: Vec<f64> = match &input {
            Some(bc) => bd
                .boundary_params()
                .iter()
                .map(|&t| periodic_interp(&bc.params, &bc.values, kind.boundary_measure(), t))
                .collect(),
            None => bd.boundary_points().iter().map(|p| reference(p[0], p[1])).collect(),
        };
        let ds = Dataset {
            meta: DatasetMeta {
                generator: Generator::FdOracle,
                role: Role::TestFd,
                equation: *problem.equation(),
                domain: kind,
                grid: bd.grid(),
                solution_len: bd.node_count(),
                source_len: bd.node_count(),
                has_f: false,
                has_u: true,
                master_seed: cli.seed,
                wall_time: elapsed,
            },
            samples: vec![FieldSample {
                g,
                f: None,
                u: Some(u),
                seed: mad_core::rng::derive_seed(cli.seed, Role::TestFd.stream(), 0),
            }],
        };
        save_dataset(&ds, out)?;
        report["path"] = json!(out.display().to_string());
    }
    Ok(report)
}

fn inspect(path: &Path) -> Result<Value> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    match bytes.get(..4) {
        Some(b"MADS") => dataset_summary(&Dataset::from_bytes(&bytes)?, Some(path)),
        Some(b"MADN") => {
            let (model, manifest) = mad_core::neural::model_from_bytes(&bytes)?;
            let mut v = to_value(&manifest)?;
            v["parameters"] = json!(model.param_count());
            Ok(v)
        }
        _ => bail!("{} is neither a dataset nor a model file", path.display()),
    }
}
