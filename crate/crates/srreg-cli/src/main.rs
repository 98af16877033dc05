//! Command-line front end: dataset generation, single solves, benchmark
//! grids with validation/CV tuning, and oracle-bound diagnostics.
//!
//! Exit codes: 0 success, 1 usage error, 2 solve failure, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use srreg::bench::{run_solver, BenchPlan, DatasetSpec, Report, ReportRow, SolverKind};
use srreg::data::{gen_synthetic, unit_norm_columns, ExampleId, ProblemData, SyntheticSpec};
use srreg::libsvm::{read_libsvm, write_libsvm};
use srreg::metrics::{lambda_from_c, test_error};
use srreg::oracle::{oracle_diagnostics, solve_gen_elastic_net, GroundTruth};
use srreg::regularizer::{PenaltyKind, RegularizerSpec};
use srreg::Error;

#[derive(Parser)]
#[command(
    name = "srreg",
    version,
    about = "Square-root-loss regression: PMM/SSN solver, ADMM baselines, benchmarks",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic benchmark datasets (LIBSVM files + ground truth)
    Gen(GenArgs),
    /// Solve one instance with one solver
    Solve(SolveArgs),
    /// Run a benchmark grid (solvers × lambda_c × seeds)
    Bench(BenchArgs),
    /// Oracle-bound diagnostics on a synthetic instance
    Diag(DiagArgs),
}

#[derive(Args)]
struct DataOpts {
    /// LIBSVM dataset path (mutually exclusive with --example)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic benchmark example (1-4)
    #[arg(long)]
    example: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Shorthand: training rows (validation/test default to a quarter each)
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m_train: Option<usize>,
    #[arg(long)]
    m_val: Option<usize>,
    #[arg(long)]
    m_test: Option<usize>,
    /// Override the example's predictor count
    #[arg(long)]
    n: Option<usize>,
    /// Rescale every column of X to unit Euclidean norm before solving
    #[arg(long, default_value_t = false)]
    standardize: bool,
}

impl DataOpts {
    fn synthetic_spec(&self) -> Result<SyntheticSpec, Error> {
        let example = ExampleId::from_index(self.example.ok_or_else(|| {
            Error::InvalidParam("either --data or --example is required".into())
        })?)?;
        let mut spec = SyntheticSpec::new(example, self.seed);
        if let Some(m) = self.m {
            spec.m_train = m;
            spec.m_val = (m / 4).max(1);
            spec.m_test = (m / 4).max(1);
        }
        if let Some(m) = self.m_train {
            spec.m_train = m;
        }
        if let Some(m) = self.m_val {
            spec.m_val = m;
        }
        if let Some(m) = self.m_test {
            spec.m_test = m;
        }
        spec.n_override = self.n;
        Ok(spec)
    }
}

#[derive(Args)]
struct RegOpts {
    /// Regularizer kind: l1, scad, or mcp
    #[arg(long, default_value = "l1")]
    reg: String,
    #[arg(long, default_value_t = 1.0)]
    lambda_c: f64,
    /// SCAD concavity parameter
    #[arg(long, default_value_t = 3.7)]
    a_s: f64,
    /// MCP concavity parameter
    #[arg(long, default_value_t = 3.7)]
    a_m: f64,
}

impl RegOpts {
    fn kind(&self) -> Result<PenaltyKind, Error> {
        self.reg.parse()
    }

    fn a(&self) -> Result<f64, Error> {
        Ok(match self.kind()? {
            PenaltyKind::Mcp => self.a_m,
            _ => self.a_s,
        })
    }

    fn spec(&self, lambda_c: f64, n: usize) -> Result<RegularizerSpec<f64>, Error> {
        let lambda = lambda_from_c(lambda_c, n);
        match self.kind()? {
            PenaltyKind::L1 => RegularizerSpec::l1(lambda),
            PenaltyKind::Scad => RegularizerSpec::scad(lambda, self.a_s),
            PenaltyKind::Mcp => RegularizerSpec::mcp(lambda, self.a_m),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataOpts,
    /// Output directory for the dataset files
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    reg: RegOpts,
    /// Solver: pmm, padmm, dadmm, or admm-nc
    #[arg(long, default_value = "pmm")]
    solver: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the result row to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    reg: RegOpts,
    /// Comma-separated solver list, e.g. pmm,padmm,dadmm
    #[arg(long, default_value = "pmm")]
    solvers: String,
    /// Comma-separated lambda_c grid, e.g. 0.1,0.5,1
    #[arg(long, default_value = "1")]
    lambda_cs: String,
    /// Comma-separated seed list
    #[arg(long, default_value = "1")]
    seeds: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Cross-validation folds for file datasets
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct DiagArgs {
    #[command(flatten)]
    data: DataOpts,
    #[command(flatten)]
    reg: RegOpts,
    /// Proximal parameter on ‖β‖²/2 in the elastic-net subproblem
    #[arg(long, default_value_t = 1e-3)]
    sigma: f64,
    /// Proximal parameter on ‖Xβ−b‖²/2
    #[arg(long, default_value_t = 1e-3)]
    tau: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let argv = match merge_config_args(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Diag(args) => cmd_diag(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParam(_) | Error::DimMismatch(_) => 1,
        Error::Io(_) | Error::Parse { .. } => 3,
        _ => 2,
    }
}

/// Splices `key = value` lines from a `--config FILE` into the argument
/// list right after the subcommand; flags given on the command line come
/// later and therefore override the file.
fn merge_config_args(raw: Vec<String>) -> Result<Vec<String>, Error> {
    if !raw.iter().any(|a| a == "--config") {
        return Ok(raw);
    }
    if raw.len() < 2 {
        return Err(Error::InvalidParam("--config must follow a subcommand".into()));
    }
    let mut merged: Vec<String> = raw[..2].to_vec();
    let mut rest: Vec<String> = Vec::new();
    let mut config_path: Option<String> = None;
    let mut it = raw[2..].iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Error::InvalidParam("--config needs a file path".into()))?;
            config_path = Some(path.clone());
        } else {
            rest.push(arg.clone());
        }
    }
    let path = config_path.expect("checked above");
    let text = std::fs::read_to_string(&path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("expected `key = value` in {path}"),
            })?;
        merged.push(format!("--{key}"));
        if !value.is_empty() {
            merged.push(value.to_string());
        }
    }
    merged.extend(rest);
    Ok(merged)
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<u8, Error> {
    let spec = args.data.synthetic_spec()?;
    let bundle = gen_synthetic::<f64>(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    let prefix = format!("exmp{}_seed{}", spec.example.index(), spec.seed);
    for (tag, data) in [
        ("train", &bundle.train),
        ("val", &bundle.val),
        ("test", &bundle.test),
    ] {
        let path = args.out.join(format!("{prefix}_{tag}.libsvm"));
        write_libsvm(&path, data)?;
        println!("wrote {} ({} x {})", path.display(), data.nrows(), data.ncols());
    }
    let truth_path = args.out.join(format!("{prefix}_truth.json"));
    let truth = serde_json::json!({
        "beta_star": bundle.truth.beta_star,
        "support": bundle.truth.support,
        "noise": bundle.truth.noise,
    });
    std::fs::write(&truth_path, serde_json::to_string(&truth).expect("truth serializes"))?;
    println!("wrote {}", truth_path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct LoadedData {
    train: ProblemData<f64>,
    test: Option<ProblemData<f64>>,
    probname: String,
}

fn load_data(opts: &DataOpts) -> Result<LoadedData, Error> {
    let mut loaded = if let Some(path) = &opts.data {
        LoadedData {
            train: read_libsvm(path)?,
            test: None,
            probname: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    } else {
        let spec = opts.synthetic_spec()?;
        let bundle = gen_synthetic::<f64>(&spec)?;
        LoadedData {
            train: bundle.train,
            test: Some(bundle.test),
            probname: format!("exmp{}", spec.example.index()),
        }
    };
    if opts.standardize {
        loaded.train = unit_norm_columns(&loaded.train).0;
        loaded.test = loaded.test.map(|t| unit_norm_columns(&t).0);
    }
    Ok(loaded)
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Error> {
    let solver: SolverKind = args.solver.parse()?;
    let kind = args.reg.kind()?;
    if !solver.supports(kind) {
        return Err(Error::InvalidParam(format!(
            "solver {} does not handle the {} regularizer",
            solver.as_str(),
            kind.as_str()
        )));
    }
    let loaded = load_data(&args.data)?;
    let spec = args.reg.spec(args.reg.lambda_c, loaded.train.ncols())?;
    let res = run_solver(&loaded.train, &spec, solver, args.tol)?;

    let eta = res
        .eta_kkt_nc
        .or(res.eta_kkt)
        .unwrap_or(f64::NAN);
    let test_err = loaded.test.as_ref().map(|t| test_error(t, &res.beta));
    println!("problem      {}", loaded.probname);
    println!("size         {} x {}", loaded.train.nrows(), loaded.train.ncols());
    println!("solver       {}", res.solver_tag);
    println!("regularizer  {} (lambda_c = {})", kind.as_str(), args.reg.lambda_c);
    println!("pobj         {:.9e}", res.pobj);
    if let Some(d) = res.dobj {
        println!("dobj         {:.9e}", d);
    }
    println!("eta          {:.3e}", eta);
    println!("nnz          {}", res.nnz);
    if let Some(te) = test_err {
        println!("test error   {:.6e}", te);
    }
    println!("iterations   {}", res.iters);
    println!("time (s)     {:.3}", res.wall_time);
    println!("converged    {}", res.converged);

    if let Some(out) = &args.out {
        let row = ReportRow {
            probname: loaded.probname.clone(),
            m: loaded.train.nrows(),
            n: loaded.train.ncols(),
            seed: args.data.seed,
            lambda_c: args.reg.lambda_c,
            solver: solver.as_str().into(),
            nnz: res.nnz,
            eta,
            pobj: res.pobj,
            val_error: None,
            test_error: test_err,
            iterations: res.iters,
            wall_time_s: res.wall_time,
            converged: res.converged,
            note: None,
        };
        let report = Report {
            schema: srreg::bench::REPORT_SCHEMA.into(),
            rows: vec![row],
            summaries: vec![],
        };
        write_report(&report, out, &args.format)?;
    }
    Ok(if res.converged { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::InvalidParam(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Error> {
    let solvers: Vec<SolverKind> = args
        .solvers
        .split(',')
        .map(|t| t.trim().parse::<SolverKind>())
        .collect::<Result<_, _>>()?;
    let lambda_cs: Vec<f64> = parse_list(&args.lambda_cs, "lambda_cs")?;
    let seeds: Vec<u64> = parse_list(&args.seeds, "seeds")?;

    let dataset = if let Some(path) = &args.data.data {
        DatasetSpec::File {
            path: path.clone(),
            cv_folds: args.cv_folds,
        }
    } else {
        let spec = args.data.synthetic_spec()?;
        DatasetSpec::Synthetic {
            example: spec.example,
            m_train: spec.m_train,
            m_val: spec.m_val,
            m_test: spec.m_test,
            n_override: spec.n_override,
        }
    };
    let plan = BenchPlan {
        dataset,
        solvers,
        lambda_cs,
        penalty: args.reg.kind()?,
        a: args.reg.a()?,
        tol: args.tol,
        seeds,
        threads: args.threads,
    };
    let report = srreg::bench::run_plan(&plan)?;
    match &args.out {
        Some(path) => write_report(&report, path, &args.format)?,
        None => print!("{}", render_report(&report, &args.format)?),
    }
    Ok(0)
}

fn render_report(report: &Report, format: &str) -> Result<String, Error> {
    match format {
        "csv" => Ok(report.to_csv()),
        "json" => Ok(report.to_json()),
        other => Err(Error::InvalidParam(format!(
            "unknown format `{other}` (expected csv or json)"
        ))),
    }
}

fn write_report(report: &Report, path: &PathBuf, format: &str) -> Result<(), Error> {
    let text = render_report(report, format)?;
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// diag
// ---------------------------------------------------------------------------

fn cmd_diag(args: DiagArgs) -> Result<u8, Error> {
    if args.reg.kind()? != PenaltyKind::L1 {
        return Err(Error::InvalidParam(
            "oracle diagnostics are defined for --reg l1".into(),
        ));
    }
    let mut spec = args.data.synthetic_spec()?;
    if args.data.m.is_none() && args.data.m_train.is_none() {
        spec.m_train = 200;
        spec.m_val = 1;
        spec.m_test = 1;
    }
    if args.data.n.is_none() {
        spec.n_override = Some(100.min(spec.example.default_n()));
    }
    let bundle = gen_synthetic::<f64>(&spec)?;
    let reg = args.reg.spec(args.reg.lambda_c, bundle.train.ncols())?;
    let (beta_hat, _) =
        solve_gen_elastic_net(&bundle.train, &reg, args.sigma, args.tau, args.tol)?;
    let truth = GroundTruth {
        beta_star: &bundle.truth.beta_star,
        noise: &bundle.truth.noise,
        support: &bundle.truth.support,
    };
    let d = oracle_diagnostics(&bundle.train, &reg, &beta_hat, truth, args.sigma, args.tau)?;
    let json = serde_json::json!({
        "probname": format!("exmp{}", spec.example.index()),
        "m": bundle.train.nrows(),
        "n": bundle.train.ncols(),
        "seed": spec.seed,
        "lambda_c": args.reg.lambda_c,
        "sigma": args.sigma,
        "tau": args.tau,
        "lambda0": d.lambda0,
        "lambda_m": d.lambda_m,
        "n_p": d.n_p,
        "t1": d.t1,
        "t2": d.t2,
        "a": d.a,
        "c_l": d.c_l,
        "c_u": d.c_u,
        "ratio": d.ratio,
        "assumption1_holds": d.assumption1_holds,
        "lemma33_lhs": d.lemma33_lhs,
        "lemma33_rhs": d.lemma33_rhs,
        "lemma33_ok": d.lemma33_ok,
        "lemma34_ok": d.lemma34_ok,
    });
    let text = serde_json::to_string_pretty(&json).expect("diag serializes");
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(0)
}
