//! Benchmark harness: plans (dataset × solver list × λ_c grid × seeds),
//! a deterministic parallel runner, and CSV/JSON report serialization.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::admm::{admm_nonconvex_solve, dadmm_solve, padmm_solve, AdmmConfig};
use crate::data::{gen_synthetic, kfold, ExampleId, ProblemData, SyntheticSpec};
use crate::error::{Error, Result};
use crate::libsvm::read_libsvm;
use crate::metrics::{lambda_from_c, test_error, SolveResult};
use crate::pmm::{solve_convex, solve_nonconvex, PmmConfig};
use crate::regularizer::{PenaltyKind, RegularizerSpec};
use crate::scalar::Scalar;

pub const REPORT_SCHEMA: &str = "srreg-report-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Pmm,
    Padmm,
    Dadmm,
    AdmmNc,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Pmm => "pmm",
            SolverKind::Padmm => "padmm",
            SolverKind::Dadmm => "dadmm",
            SolverKind::AdmmNc => "admm-nc",
        }
    }

    pub fn supports(self, kind: PenaltyKind) -> bool {
        match self {
            SolverKind::Pmm => true,
            SolverKind::Padmm | SolverKind::Dadmm => kind == PenaltyKind::L1,
            SolverKind::AdmmNc => kind != PenaltyKind::L1,
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pmm" => Ok(SolverKind::Pmm),
            "padmm" => Ok(SolverKind::Padmm),
            "dadmm" => Ok(SolverKind::Dadmm),
            "admm-nc" => Ok(SolverKind::AdmmNc),
            other => Err(Error::InvalidParam(format!(
                "unknown solver `{other}` (expected pmm, padmm, dadmm, or admm-nc)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum DatasetSpec {
    Synthetic {
        example: ExampleId,
        m_train: usize,
        m_val: usize,
        m_test: usize,
        n_override: Option<usize>,
    },
    File {
        path: PathBuf,
        cv_folds: usize,
    },
}

impl DatasetSpec {
    fn probname(&self) -> String {
        match self {
            DatasetSpec::Synthetic { example, .. } => format!("exmp{}", example.index()),
            DatasetSpec::File { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchPlan<T> {
    pub dataset: DatasetSpec,
    pub solvers: Vec<SolverKind>,
    pub lambda_cs: Vec<T>,
    pub penalty: PenaltyKind,
    /// SCAD/MCP concavity parameter (ignored for ℓ1).
    pub a: T,
    pub tol: T,
    pub seeds: Vec<u64>,
    pub threads: usize,
}

impl<T: Scalar> BenchPlan<T> {
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::InvalidParam("empty solver list".into()));
        }
        if self.lambda_cs.is_empty() {
            return Err(Error::InvalidParam("empty lambda_c grid".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParam("empty seed list".into()));
        }
        for &s in &self.solvers {
            if !s.supports(self.penalty) {
                return Err(Error::InvalidParam(format!(
                    "solver {} does not handle the {} regularizer",
                    s.as_str(),
                    self.penalty.as_str()
                )));
            }
        }
        for &lc in &self.lambda_cs {
            if !(lc > T::zero()) {
                return Err(Error::InvalidParam("lambda_c values must be positive".into()));
            }
        }
        if let DatasetSpec::File { path, cv_folds } = &self.dataset {
            if !path.exists() {
                return Err(Error::InvalidParam(format!(
                    "dataset file {} does not exist",
                    path.display()
                )));
            }
            if *cv_folds < 2 {
                return Err(Error::InvalidParam("cv_folds must be at least 2".into()));
            }
        }
        Ok(())
    }

    fn spec_for(&self, lambda: T) -> Result<RegularizerSpec<T>> {
        match self.penalty {
            PenaltyKind::L1 => RegularizerSpec::l1(lambda),
            PenaltyKind::Scad => RegularizerSpec::scad(lambda, self.a),
            PenaltyKind::Mcp => RegularizerSpec::mcp(lambda, self.a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub probname: String,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub lambda_c: f64,
    pub solver: String,
    pub nnz: usize,
    pub eta: f64,
    pub pobj: f64,
    pub val_error: Option<f64>,
    pub test_error: Option<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub converged: bool,
    pub note: Option<String>,
}

/// Best λ_c per solver (and per seed for synthetic data), selected by
/// validation MSE or by k-fold CV MSE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub probname: String,
    pub seed: u64,
    pub solver: String,
    pub criterion: String,
    pub best_lambda_c: f64,
    pub score: f64,
    pub test_error: Option<f64>,
    pub nnz: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<SummaryRow>,
}

/// Dispatches one solve; PMM routes on the penalty kind.
pub fn run_solver<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    solver: SolverKind,
    tol: T,
) -> Result<SolveResult<T>> {
    match solver {
        SolverKind::Pmm => {
            if spec.is_convex() {
                let cfg = PmmConfig {
                    stage1_tol: tol,
                    ..PmmConfig::convex()
                };
                solve_convex(data, spec, &cfg)
            } else {
                let cfg = PmmConfig {
                    stage2_tol: tol,
                    ..PmmConfig::default()
                };
                solve_nonconvex(data, spec, &cfg).map(|(r, _)| r)
            }
        }
        SolverKind::Padmm => padmm_solve(data, spec, &AdmmConfig { tol, ..AdmmConfig::default() }),
        SolverKind::Dadmm => dadmm_solve(data, spec, &AdmmConfig { tol, ..AdmmConfig::default() }),
        SolverKind::AdmmNc => {
            admm_nonconvex_solve(data, spec, &AdmmConfig { tol, ..AdmmConfig::default() })
                .map(|(r, _)| r)
        }
    }
}

fn result_eta<T: Scalar>(res: &SolveResult<T>) -> f64 {
    res.eta_kkt_nc
        .or(res.eta_kkt)
        .map(|e| e.to_f64_lossy())
        .unwrap_or(f64::NAN)
}

struct Task<T> {
    seed: u64,
    lambda_c: T,
    solver: SolverKind,
}

/// Runs the full plan. Tasks are scheduled over a worker pool of
/// `plan.threads` threads; the report is assembled in task order, so the
/// output is independent of scheduling.
pub fn run_plan<T: Scalar>(plan: &BenchPlan<T>) -> Result<Report> {
    plan.validate()?;
    let probname = plan.dataset.probname();

    match &plan.dataset {
        DatasetSpec::Synthetic {
            example,
            m_train,
            m_val,
            m_test,
            n_override,
        } => {
            // one bundle per seed, shared read-only across tasks
            let mut bundles = Vec::new();
            for &seed in &plan.seeds {
                let spec = SyntheticSpec {
                    example: *example,
                    m_train: *m_train,
                    m_val: *m_val,
                    m_test: *m_test,
                    n_override: *n_override,
                    seed,
                };
                bundles.push((seed, Arc::new(gen_synthetic::<T>(&spec)?)));
            }
            let mut tasks = Vec::new();
            for (seed, _) in &bundles {
                for &lambda_c in &plan.lambda_cs {
                    for &solver in &plan.solvers {
                        tasks.push(Task {
                            seed: *seed,
                            lambda_c,
                            solver,
                        });
                    }
                }
            }
            let rows = run_tasks(plan, &tasks, |task| {
                let bundle = &bundles
                    .iter()
                    .find(|(s, _)| *s == task.seed)
                    .expect("bundle exists")
                    .1;
                let n = bundle.train.ncols();
                let spec = plan.spec_for(lambda_from_c(task.lambda_c, n))?;
                let res = run_solver(&bundle.train, &spec, task.solver, plan.tol)?;
                let val = test_error(&bundle.val, &res.beta).to_f64_lossy();
                let test = test_error(&bundle.test, &res.beta).to_f64_lossy();
                Ok(ReportRow {
                    probname: probname.clone(),
                    m: bundle.train.nrows(),
                    n,
                    seed: task.seed,
                    lambda_c: task.lambda_c.to_f64_lossy(),
                    solver: task.solver.as_str().into(),
                    nnz: res.nnz,
                    eta: result_eta(&res),
                    pobj: res.pobj.to_f64_lossy(),
                    val_error: Some(val),
                    test_error: Some(test),
                    iterations: res.iters,
                    wall_time_s: round_ms(res.wall_time),
                    converged: res.converged,
                    note: None,
                })
            });

            // best λ_c by validation MSE, per (seed, solver)
            let mut summaries = Vec::new();
            for &seed in &plan.seeds {
                for &solver in &plan.solvers {
                    let best = rows
                        .iter()
                        .filter(|r| {
                            r.seed == seed && r.solver == solver.as_str() && r.note.is_none()
                        })
                        .min_by(|a, b| {
                            a.val_error
                                .unwrap_or(f64::INFINITY)
                                .partial_cmp(&b.val_error.unwrap_or(f64::INFINITY))
                                .unwrap()
                        });
                    if let Some(r) = best {
                        summaries.push(SummaryRow {
                            probname: probname.clone(),
                            seed,
                            solver: solver.as_str().into(),
                            criterion: "validation-mse".into(),
                            best_lambda_c: r.lambda_c,
                            score: r.val_error.unwrap_or(f64::NAN),
                            test_error: r.test_error,
                            nnz: r.nnz,
                        });
                    }
                }
            }
            Ok(Report {
                schema: REPORT_SCHEMA.into(),
                rows,
                summaries,
            })
        }
        DatasetSpec::File { path, cv_folds } => {
            let data = Arc::new(read_libsvm::<T, _>(path)?);
            let seed = plan.seeds[0];
            let folds = kfold(data.nrows(), (*cv_folds).min(data.nrows()), seed)?;
            let mut tasks = Vec::new();
            for &lambda_c in &plan.lambda_cs {
                for &solver in &plan.solvers {
                    tasks.push(Task {
                        seed,
                        lambda_c,
                        solver,
                    });
                }
            }
            // full-data rows
            let rows = run_tasks(plan, &tasks, |task| {
                let n = data.ncols();
                let spec = plan.spec_for(lambda_from_c(task.lambda_c, n))?;
                let res = run_solver(&data, &spec, task.solver, plan.tol)?;
                Ok(ReportRow {
                    probname: probname.clone(),
                    m: data.nrows(),
                    n,
                    seed,
                    lambda_c: task.lambda_c.to_f64_lossy(),
                    solver: task.solver.as_str().into(),
                    nnz: res.nnz,
                    eta: result_eta(&res),
                    pobj: res.pobj.to_f64_lossy(),
                    val_error: None,
                    test_error: None,
                    iterations: res.iters,
                    wall_time_s: round_ms(res.wall_time),
                    converged: res.converged,
                    note: None,
                })
            });

            // Tenfold CV per (solver, λ_c): fit on the complement of each
            // fold, score on the fold, select the best mean MSE.
            let mut summaries = Vec::new();
            for &solver in &plan.solvers {
                let mut best: Option<(f64, f64)> = None; // (score, lambda_c)
                for &lambda_c in &plan.lambda_cs {
                    let mut total = 0.0;
                    let mut count = 0usize;
                    for fold in &folds {
                        let mut train_idx: Vec<usize> =
                            (0..data.nrows()).filter(|i| !fold.contains(i)).collect();
                        train_idx.sort_unstable();
                        let train = data.select_rows(&train_idx);
                        let hold = data.select_rows(fold);
                        let spec = plan.spec_for(lambda_from_c(lambda_c, train.ncols()))?;
                        if let Ok(res) = run_solver(&train, &spec, solver, plan.tol) {
                            total += test_error(&hold, &res.beta).to_f64_lossy();
                            count += 1;
                        }
                    }
                    if count > 0 {
                        let score = total / count as f64;
                        if best.map_or(true, |(s, _)| score < s) {
                            best = Some((score, lambda_c.to_f64_lossy()));
                        }
                    }
                }
                if let Some((score, lc)) = best {
                    let nnz = rows
                        .iter()
                        .find(|r| r.solver == solver.as_str() && r.lambda_c == lc)
                        .map(|r| r.nnz)
                        .unwrap_or(0);
                    summaries.push(SummaryRow {
                        probname: probname.clone(),
                        seed,
                        solver: solver.as_str().into(),
                        criterion: "cv-mse".into(),
                        best_lambda_c: lc,
                        score,
                        test_error: None,
                        nnz,
                    });
                }
            }
            Ok(Report {
                schema: REPORT_SCHEMA.into(),
                rows,
                summaries,
            })
        }
    }
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Executes tasks over a worker pool; failures become rows with a note.
fn run_tasks<T, F>(plan: &BenchPlan<T>, tasks: &[Task<T>], job: F) -> Vec<ReportRow>
where
    T: Scalar,
    F: Fn(&Task<T>) -> Result<ReportRow> + Sync,
{
    let slots: Vec<Mutex<Option<ReportRow>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = plan.threads.max(1).min(tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let task = &tasks[i];
                let row = job(task).unwrap_or_else(|err| ReportRow {
                    probname: plan.dataset.probname(),
                    m: 0,
                    n: 0,
                    seed: task.seed,
                    lambda_c: task.lambda_c.to_f64_lossy(),
                    solver: task.solver.as_str().into(),
                    nnz: 0,
                    eta: f64::NAN,
                    pobj: f64::NAN,
                    val_error: None,
                    test_error: None,
                    iterations: 0,
                    wall_time_s: 0.0,
                    converged: false,
                    note: Some(err.to_string()),
                });
                *slots[i].lock().unwrap() = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("all tasks ran"))
        .collect()
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

const CSV_HEADER: &str = "kind,probname,m,n,seed,lambda_c,solver,nnz,eta,pobj,val_error,test_error,iterations,wall_time_s,converged,note";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl Report {
    /// Fixed, versioned CSV layout: a schema comment, one header, data rows
    /// (`kind=row`) and summary rows (`kind=summary`, with the summary score
    /// in `val_error` and the selection criterion in `note`).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {REPORT_SCHEMA}\n"));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "row,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.probname,
                r.m,
                r.n,
                r.seed,
                r.lambda_c,
                r.solver,
                r.nnz,
                r.eta,
                r.pobj,
                fmt_opt(r.val_error),
                fmt_opt(r.test_error),
                r.iterations,
                r.wall_time_s,
                r.converged,
                // commas would break the fixed-width row
                r.note.as_deref().unwrap_or("").replace(',', ";"),
            ));
        }
        for s in &self.summaries {
            out.push_str(&format!(
                "summary,{},,,{},{},{},{},,,{},{},,,,{}\n",
                s.probname,
                s.seed,
                s.best_lambda_c,
                s.solver,
                s.nnz,
                fmt_opt(Some(s.score)),
                fmt_opt(s.test_error),
                s.criterion,
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Report> {
        serde_json::from_str(s)
            .map_err(|e| Error::Parse { line: 0, msg: format!("bad report json: {e}") })
    }

    /// Parses the CSV form back (used by the round-trip checks).
    pub fn from_csv(s: &str) -> Result<Report> {
        let mut rows = Vec::new();
        let mut summaries = Vec::new();
        let mut schema = String::new();
        for (lineno, line) in s.lines().enumerate() {
            let lineno = lineno + 1;
            if let Some(rest) = line.strip_prefix("# ") {
                schema = rest.to_string();
                continue;
            }
            if line.is_empty() || line.starts_with("kind,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 16 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 16 fields, got {}", f.len()),
                });
            }
            let err = |msg: &str| Error::Parse { line: lineno, msg: msg.into() };
            match f[0] {
                "row" => rows.push(ReportRow {
                    probname: f[1].into(),
                    m: f[2].parse().map_err(|_| err("bad m"))?,
                    n: f[3].parse().map_err(|_| err("bad n"))?,
                    seed: f[4].parse().map_err(|_| err("bad seed"))?,
                    lambda_c: f[5].parse().map_err(|_| err("bad lambda_c"))?,
                    solver: f[6].into(),
                    nnz: f[7].parse().map_err(|_| err("bad nnz"))?,
                    eta: f[8].parse().map_err(|_| err("bad eta"))?,
                    pobj: f[9].parse().map_err(|_| err("bad pobj"))?,
                    val_error: parse_opt(f[10]).map_err(|_| err("bad val_error"))?,
                    test_error: parse_opt(f[11]).map_err(|_| err("bad test_error"))?,
                    iterations: f[12].parse().map_err(|_| err("bad iterations"))?,
                    wall_time_s: f[13].parse().map_err(|_| err("bad wall_time"))?,
                    converged: f[14].parse().map_err(|_| err("bad converged"))?,
                    note: (!f[15].is_empty()).then(|| f[15].into()),
                }),
                "summary" => summaries.push(SummaryRow {
                    probname: f[1].into(),
                    seed: f[4].parse().map_err(|_| err("bad seed"))?,
                    best_lambda_c: f[5].parse().map_err(|_| err("bad lambda_c"))?,
                    solver: f[6].into(),
                    nnz: f[7].parse().map_err(|_| err("bad nnz"))?,
                    score: f[10].parse().map_err(|_| err("bad score"))?,
                    test_error: parse_opt(f[11]).map_err(|_| err("bad test_error"))?,
                    criterion: f[15].into(),
                }),
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown row kind `{other}`"),
                    })
                }
            }
        }
        Ok(Report {
            schema,
            rows,
            summaries,
        })
    }
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}
