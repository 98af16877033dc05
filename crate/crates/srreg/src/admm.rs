//! ADMM baselines: primal and dual ADMM for the convex problem, and the
//! nonconvex ADMM whose z-update is the exact separable prox of λp₁ − q.
//!
//! The linear systems `(I_n + XᵀX)x = r` / `(I_m + XXᵀ)x = r` are solved
//! from one cached Cholesky factorization of the smaller Gram matrix; the
//! other side goes through the Sherman-Morrison-Woodbury identities
//!
//! ```text
//! (I_n + XᵀX)⁻¹ = I_n − Xᵀ(I_m + XXᵀ)⁻¹X,
//! (I_m + XXᵀ)⁻¹ = I_m − X(I_n + XᵀX)⁻¹Xᵀ.
//! ```

use std::time::Instant;

use crate::data::ProblemData;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_inf, nrm2, sub, Cholesky, DenseVec};
use crate::metrics::{self, SolveResult};
use crate::prox::{project_ball, project_linf, prox_euclidean_norm, prox_l1};
use crate::regularizer::{full_objective, RegularizerSpec};
use crate::scalar::Scalar;

const GOLDEN_CAP: f64 = 1.618033988749895; // (1+√5)/2

// Adaptive-ζ guards: adjust at this period, never beyond this iteration
// (the tail must run at fixed ζ for the convergence theory to apply), and
// keep ζ within this factor of its starting value.
const ZETA_ADAPT_PERIOD: usize = 5;
const ZETA_ADAPT_HORIZON: usize = 2000;
const ZETA_RANGE: f64 = 1e4;

fn adapt_zeta<T: Scalar>(zeta: T, zeta0: T, k: usize, primal: T, dual: T) -> T {
    if k % ZETA_ADAPT_PERIOD != 0 || k > ZETA_ADAPT_HORIZON {
        return zeta;
    }
    let ten = T::real(10.0);
    let lo = zeta0 / T::real(ZETA_RANGE);
    let hi = zeta0 * T::real(ZETA_RANGE);
    if primal > ten * dual {
        (zeta * T::real(2.0)).min(hi)
    } else if dual > ten * primal {
        (zeta / T::real(2.0)).max(lo)
    } else {
        zeta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearMode {
    /// Factorize `I_n + XᵀX`.
    CholN,
    /// Factorize `I_m + XXᵀ`.
    CholM,
    /// Matrix-free preconditioned CG with the inexactness schedule
    /// `ε_k = min(1e-2, 1/k²)`.
    Pcg,
}

#[derive(Clone, Copy, Debug)]
pub struct AdmmConfig<T> {
    /// Penalty-parameter multiplier. The convex solvers start from a
    /// norm-scaled value (`ζ/√(1+‖b‖)` for the primal splitting,
    /// `ζ·√(1+‖b‖)/2` for the dual one, where the well-tuned region was
    /// found to live across problem sizes); the nonconvex variant uses ζ
    /// as given.
    pub zeta: T,
    /// Relaxation ρ ∈ (0, (1+√5)/2); the nonconvex variant always runs at 1.
    pub step_rho: T,
    pub maxit: usize,
    pub tol: T,
    /// `None` factorizes the smaller Gram matrix.
    pub linear_mode: Option<LinearMode>,
    /// Doubles/halves ζ when one feasibility residual dominates the other
    /// by 10×. On by default: the fixed-ζ iteration is an order of
    /// magnitude slower on badly scaled instances and can miss the
    /// tolerance within the iteration budget. Ignored by the nonconvex
    /// variant.
    pub adaptive_zeta: bool,
}

impl<T: Scalar> Default for AdmmConfig<T> {
    fn default() -> Self {
        Self {
            zeta: T::one(),
            step_rho: T::real(1.618),
            maxit: 10_000,
            tol: T::real(1e-6),
            linear_mode: None,
            adaptive_zeta: true,
        }
    }
}

impl<T: Scalar> AdmmConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.zeta > T::zero()) {
            return Err(Error::InvalidParam("zeta must be positive".into()));
        }
        if !(self.step_rho > T::zero()) || self.step_rho.to_f64_lossy() >= GOLDEN_CAP {
            return Err(Error::InvalidParam(format!(
                "step_rho must lie in (0, (1+sqrt 5)/2), got {}",
                self.step_rho
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Cached normal-equation solves
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    N,
    M,
}

/// One Cholesky factor of `I + XᵀX` or `I + XXᵀ` (or none in PCG mode),
/// reused for every iteration of a solve.
pub struct CachedFactorization<T> {
    side: Side,
    chol: Option<Cholesky<T>>,
    col_sq: Vec<T>,
    row_sq: Vec<T>,
    pcg_iters: std::cell::Cell<usize>,
}

impl<T: Scalar> CachedFactorization<T> {
    pub fn new(x: &DesignMatrix<T>, mode: Option<LinearMode>) -> Result<Self> {
        let (m, n) = (x.nrows(), x.ncols());
        let mode = mode.unwrap_or(if n <= m { LinearMode::CholN } else { LinearMode::CholM });
        let (side, chol) = match mode {
            LinearMode::CholN => (Side::N, Some(Cholesky::factor(&x.gram_n())?)),
            LinearMode::CholM => (Side::M, Some(Cholesky::factor(&x.gram_m())?)),
            LinearMode::Pcg => (Side::N, None),
        };
        let col_sq = x.col_sq_norms();
        let mut row_sq = vec![T::zero(); m];
        match x {
            DesignMatrix::Dense(a) => {
                for i in 0..m {
                    row_sq[i] = dot(a.row(i), a.row(i));
                }
            }
            DesignMatrix::Sparse(sp) => {
                for i in 0..m {
                    row_sq[i] = sp.row_entries(i).map(|(_, v)| v * v).sum();
                }
            }
        }
        Ok(Self {
            side,
            chol,
            col_sq,
            row_sq,
            pcg_iters: std::cell::Cell::new(0),
        })
    }

    /// True when the given system is answered through the SMW identity
    /// rather than its own factor.
    pub fn uses_smw_for_n(&self) -> bool {
        self.side == Side::M
    }

    /// `(I_n + XᵀX)⁻¹ rhs`; `rel_tol` only affects PCG mode.
    pub fn solve_n(&self, x: &DesignMatrix<T>, rhs: &[T], rel_tol: T) -> Vec<T> {
        match (&self.chol, self.side) {
            (Some(c), Side::N) => c.solve(rhs),
            (Some(c), Side::M) => {
                // I − Xᵀ(I+XXᵀ)⁻¹X applied to rhs
                let inner = c.solve(&x.matvec(rhs));
                let mut out = rhs.to_vec();
                axpy(-T::one(), &x.tr_matvec(&inner), &mut out);
                out
            }
            (None, _) => self.pcg(rhs, rel_tol, |v| {
                let mut out = v.to_vec();
                axpy(T::one(), &x.tr_matvec(&x.matvec(v)), &mut out);
                out
            }, &self.col_sq),
        }
    }

    /// `(I_m + XXᵀ)⁻¹ rhs`.
    pub fn solve_m(&self, x: &DesignMatrix<T>, rhs: &[T], rel_tol: T) -> Vec<T> {
        match (&self.chol, self.side) {
            (Some(c), Side::M) => c.solve(rhs),
            (Some(c), Side::N) => {
                let inner = c.solve(&x.tr_matvec(rhs));
                let mut out = rhs.to_vec();
                axpy(-T::one(), &x.matvec(&inner), &mut out);
                out
            }
            (None, _) => self.pcg(rhs, rel_tol, |v| {
                let mut out = v.to_vec();
                axpy(T::one(), &x.matvec(&x.tr_matvec(v)), &mut out);
                out
            }, &self.row_sq),
        }
    }

    pub fn pcg_iters_total(&self) -> usize {
        self.pcg_iters.get()
    }

    fn pcg<F: Fn(&[T]) -> Vec<T>>(&self, rhs: &[T], rel_tol: T, op: F, diag_sq: &[T]) -> Vec<T> {
        let tol = rel_tol * nrm2(rhs).max(T::real(1e-30));
        let diag: Vec<T> = diag_sq.iter().map(|&d| d + T::one()).collect();
        let mut xv = vec![T::zero(); rhs.len()];
        let mut r = rhs.to_vec();
        if nrm2(&r) <= tol {
            return xv;
        }
        let mut z: Vec<T> = r.iter().zip(&diag).map(|(&ri, &di)| ri / di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..10 * rhs.len() {
            let ap = op(&p);
            let alpha = rz / dot(&p, &ap);
            axpy(alpha, &p, &mut xv);
            axpy(-alpha, &ap, &mut r);
            self.pcg_iters.set(self.pcg_iters.get() + 1);
            if nrm2(&r) <= tol {
                break;
            }
            z = r.iter().zip(&diag).map(|(&ri, &di)| ri / di).collect();
            let rz_new = dot(&r, &z);
            let b = rz_new / rz;
            rz = rz_new;
            for (pi, &zi) in p.iter_mut().zip(&z) {
                *pi = zi + b * *pi;
            }
        }
        xv
    }
}

fn pcg_rel_tol<T: Scalar>(k: usize) -> T {
    T::real((1e-2f64).min(1.0 / ((k * k) as f64)))
}

// ---------------------------------------------------------------------------
// Primal ADMM
// ---------------------------------------------------------------------------

/// Full ADMM state (exposed so solves can start from a given point).
#[derive(Clone, Debug)]
pub struct PrimalState<T> {
    pub beta: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> PrimalState<T> {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            beta: vec![T::zero(); n],
            y: vec![T::zero(); m],
            z: vec![T::zero(); n],
            u: vec![T::zero(); m],
            v: vec![T::zero(); n],
        }
    }
}

fn eta_kkt_from_parts<T: Scalar>(
    data: &ProblemData<T>,
    l1s: T,
    beta: &[T],
    xb: &[T],
) -> Option<T> {
    let r = sub(xb, &data.b);
    let nr = nrm2(&r);
    if nr == T::zero() {
        return None;
    }
    let mut grad = data.x.tr_matvec(&r);
    for g in grad.iter_mut() {
        *g /= nr;
    }
    let inner = sub(beta, &grad);
    let prox = prox_l1(&inner, l1s);
    let num = nrm2(&sub(beta, &prox));
    Some(num / (T::one() + nrm2(beta) + nrm2(&grad)))
}

/// ADMM on the primal splitting `min ‖y‖ + λp₁(z)` s.t. `Xβ − y = b`,
/// `β − z = 0` (ℓ1 only).
pub fn padmm_solve<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &AdmmConfig<T>,
) -> Result<SolveResult<T>> {
    padmm_solve_from(data, spec, cfg, None)
}

pub fn padmm_solve_from<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &AdmmConfig<T>,
    init: Option<PrimalState<T>>,
) -> Result<SolveResult<T>> {
    if !spec.is_convex() {
        return Err(Error::InvalidParam("padmm handles the l1 regularizer only".into()));
    }
    cfg.validate()?;
    let start = Instant::now();
    let (m, n) = (data.nrows(), data.ncols());
    let fact = CachedFactorization::new(&data.x, cfg.linear_mode)?;
    let l1s = spec.l1_scale();
    let rho = cfg.step_rho;
    let zeta0 = cfg.zeta / (T::one() + nrm2(data.b.as_slice())).sqrt();
    let mut zeta = zeta0;

    let mut s = init.unwrap_or_else(|| PrimalState::zeros(m, n));
    let mut xb = data.x.matvec(&s.beta);
    let mut eta = T::infinity();
    let mut iters = 0usize;
    let mut converged = false;

    for k in 1..=cfg.maxit {
        iters = k;
        // β-update: (I + XᵀX)⁻¹ (z − v/ζ + Xᵀ(y + b − u/ζ))
        let mut t = vec![T::zero(); m];
        for i in 0..m {
            t[i] = s.y[i] + data.b[i] - s.u[i] / zeta;
        }
        let mut rhs = data.x.tr_matvec(&t);
        for j in 0..n {
            rhs[j] += s.z[j] - s.v[j] / zeta;
        }
        s.beta = fact.solve_n(&data.x, &rhs, pcg_rel_tol(k));
        xb = data.x.matvec(&s.beta);

        // (y, z)-update
        let y_arg: Vec<T> = (0..m).map(|i| xb[i] - data.b[i] + s.u[i] / zeta).collect();
        let y_prev = std::mem::replace(&mut s.y, prox_euclidean_norm(&y_arg, zeta.recip()));
        let z_arg: Vec<T> = (0..n).map(|j| s.beta[j] + s.v[j] / zeta).collect();
        let z_prev = std::mem::replace(&mut s.z, prox_l1(&z_arg, l1s / zeta));

        // multiplier steps with ρζ
        let mut pr_res = T::zero();
        for i in 0..m {
            let r = xb[i] - s.y[i] - data.b[i];
            s.u[i] += rho * zeta * r;
            pr_res += r * r;
        }
        for j in 0..n {
            let r = s.beta[j] - s.z[j];
            s.v[j] += rho * zeta * r;
            pr_res += r * r;
        }

        // convergence is measured at the prox iterate z, which carries the
        // exact sparsity pattern and the better objective of the pair
        let xz = data.x.matvec(&s.z);
        if let Some(e) = eta_kkt_from_parts(data, l1s, &s.z, &xz) {
            eta = e;
            if e < cfg.tol {
                converged = true;
                s.beta = s.z.clone();
                xb = xz;
                break;
            }
        }

        if cfg.adaptive_zeta {
            let du_res = zeta * (dist2(&s.y, &y_prev) + dist2(&s.z, &z_prev)).sqrt();
            zeta = adapt_zeta(zeta, zeta0, k, pr_res.sqrt(), du_res);
        }
    }
    if !converged {
        // report the prox iterate in the capped case as well
        s.beta = s.z.clone();
        xb = data.x.matvec(&s.beta);
    }

    assemble_convex(data, spec, s.beta, s.u, eta, iters, converged, "padmm", start, xb)
}

fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

#[allow(clippy::too_many_arguments)]
fn assemble_convex<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta: Vec<T>,
    u: Vec<T>,
    eta: T,
    iters: usize,
    converged: bool,
    tag: &'static str,
    start: Instant,
    xb: Vec<T>,
) -> Result<SolveResult<T>> {
    let resid = sub(&xb, &data.b);
    let pobj = nrm2(&resid) + spec.l1_scale() * crate::linalg::norm1(&beta);
    let dobj = -dot(&u, data.b.as_slice());
    let dual_feasible = norm_inf(&data.x.tr_matvec(&u))
        <= spec.l1_scale() * (T::one() + T::real(1e-6))
        && nrm2(&u) <= T::one() + T::real(1e-6);
    Ok(SolveResult {
        nnz: metrics::nnz(&beta),
        pobj,
        dobj: Some(dobj),
        eta_g: dual_feasible.then(|| metrics::eta_g(pobj, dobj)),
        eta_kkt: eta.is_finite().then_some(eta),
        eta_kkt_nc: eta.is_finite().then_some(eta),
        iters,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        solver_tag: tag,
        beta: DenseVec::from_solver(beta, "admm beta")?,
        u: DenseVec::from_solver(u, "admm multiplier")?,
        y: DenseVec::from_solver(resid, "admm residual")?,
    })
}

// ---------------------------------------------------------------------------
// Dual ADMM
// ---------------------------------------------------------------------------

/// ADMM on the dual splitting `min δ_B(w) + (λp₁)*(v) + ⟨u, b⟩` s.t.
/// `Xᵀu + v = 0`, `−u + w = 0`; the multipliers are the primal pair (β, y).
pub fn dadmm_solve<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &AdmmConfig<T>,
) -> Result<SolveResult<T>> {
    if !spec.is_convex() {
        return Err(Error::InvalidParam("dadmm handles the l1 regularizer only".into()));
    }
    cfg.validate()?;
    let start = Instant::now();
    let (m, n) = (data.nrows(), data.ncols());
    let mode = cfg.linear_mode;
    let fact = CachedFactorization::new(&data.x, mode)?;
    let l1s = spec.l1_scale();
    let rho = cfg.step_rho;
    let zeta0 = cfg.zeta * (T::one() + nrm2(data.b.as_slice())).sqrt() / T::real(2.0);
    let mut zeta = zeta0;

    let mut u = vec![T::zero(); m];
    let mut w = vec![T::zero(); m];
    let mut v = vec![T::zero(); n];
    let mut beta = vec![T::zero(); n];
    let mut y = vec![T::zero(); m];
    let mut eta = T::infinity();
    let mut iters = 0usize;
    let mut converged = false;
    let mut xb = data.x.matvec(&beta);

    for k in 1..=cfg.maxit {
        iters = k;
        // u-update: (I + XXᵀ)⁻¹ (w − y/ζ + X(β/ζ − v) − b/ζ); the b term
        // carries the 1/ζ from the ⟨u, b⟩ objective after dividing the
        // stationarity equation by ζ
        let t: Vec<T> = (0..n).map(|j| beta[j] / zeta - v[j]).collect();
        let xt = data.x.matvec(&t);
        let rhs: Vec<T> = (0..m)
            .map(|i| w[i] - y[i] / zeta + xt[i] - data.b[i] / zeta)
            .collect();
        u = fact.solve_m(&data.x, &rhs, pcg_rel_tol(k));

        // (v, w)-update
        let xtu = data.x.tr_matvec(&u);
        let v_arg: Vec<T> = (0..n).map(|j| beta[j] / zeta - xtu[j]).collect();
        let v_prev = std::mem::replace(&mut v, project_linf(&v_arg, l1s));
        let w_arg: Vec<T> = (0..m).map(|i| y[i] / zeta + u[i]).collect();
        let w_prev = std::mem::replace(&mut w, project_ball(&w_arg, T::one()));

        // multiplier steps
        let mut pr_res = T::zero();
        for j in 0..n {
            let r = xtu[j] + v[j];
            beta[j] -= rho * zeta * r;
            pr_res += r * r;
        }
        for i in 0..m {
            let r = w[i] - u[i];
            y[i] -= rho * zeta * r;
            pr_res += r * r;
        }

        xb = data.x.matvec(&beta);
        if let Some(e) = eta_kkt_from_parts(data, l1s, &beta, &xb) {
            eta = e;
            if e < cfg.tol {
                converged = true;
                break;
            }
        }

        if cfg.adaptive_zeta {
            let du_res = zeta * (dist2(&v, &v_prev) + dist2(&w, &w_prev)).sqrt();
            zeta = adapt_zeta(zeta, zeta0, k, pr_res.sqrt(), du_res);
        }
    }

    assemble_convex(data, spec, beta, u, eta, iters, converged, "dadmm", start, xb)
}

// ---------------------------------------------------------------------------
// Nonconvex ADMM
// ---------------------------------------------------------------------------

/// Per-iteration feasibility residuals `(‖Xβ−y−b‖, ‖β−z‖)` and the
/// stationarity residual.
#[derive(Clone, Debug)]
pub struct AdmmTrace<T> {
    pub eq_residuals: Vec<(T, T)>,
    pub eta: Vec<T>,
}

impl<T> Default for AdmmTrace<T> {
    fn default() -> Self {
        Self { eq_residuals: Vec::new(), eta: Vec::new() }
    }
}

/// Heuristic ADMM for the nonconvex problem (unit multiplier step, prox of
/// `λp₁ − q` computed exactly). Not guaranteed to converge; the best-η̃
/// iterate is returned when the iteration cap is reached.
pub fn admm_nonconvex_solve<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &AdmmConfig<T>,
) -> Result<(SolveResult<T>, AdmmTrace<T>)> {
    if spec.is_convex() {
        return Err(Error::InvalidParam(
            "nonconvex admm needs scad or mcp; use padmm for l1".into(),
        ));
    }
    cfg.validate()?;
    let start = Instant::now();
    let (m, n) = (data.nrows(), data.ncols());
    let fact = CachedFactorization::new(&data.x, cfg.linear_mode)?;
    let zeta = cfg.zeta;

    let mut s = PrimalState::<T>::zeros(m, n);
    let mut xb = data.x.matvec(&s.beta);
    let mut trace = AdmmTrace::default();
    let mut best: Option<(T, Vec<T>, Vec<T>, Vec<T>)> = None; // (eta, beta, u, xb)
    let mut iters = 0usize;
    let mut converged = false;
    let mut eta = T::infinity();

    for k in 1..=cfg.maxit {
        iters = k;
        let mut t = vec![T::zero(); m];
        for i in 0..m {
            t[i] = s.y[i] + data.b[i] - s.u[i] / zeta;
        }
        let mut rhs = data.x.tr_matvec(&t);
        for j in 0..n {
            rhs[j] += s.z[j] - s.v[j] / zeta;
        }
        s.beta = fact.solve_n(&data.x, &rhs, pcg_rel_tol(k));
        xb = data.x.matvec(&s.beta);

        let y_arg: Vec<T> = (0..m).map(|i| xb[i] - data.b[i] + s.u[i] / zeta).collect();
        s.y = prox_euclidean_norm(&y_arg, zeta.recip());
        let z_arg: Vec<T> = (0..n).map(|j| s.beta[j] + s.v[j] / zeta).collect();
        s.z = spec.nonconvex_prox(&z_arg, zeta);

        // unit-step multiplier updates
        let mut res_eq = T::zero();
        for i in 0..m {
            let r = xb[i] - s.y[i] - data.b[i];
            s.u[i] += zeta * r;
            res_eq += r * r;
        }
        let mut res_split = T::zero();
        for j in 0..n {
            let r = s.beta[j] - s.z[j];
            s.v[j] += zeta * r;
            res_split += r * r;
        }
        trace
            .eq_residuals
            .push((res_eq.sqrt(), res_split.sqrt()));

        match metrics::eta_kkt_nonconvex(data, spec, &s.beta) {
            Ok(e) => {
                eta = e;
                trace.eta.push(e);
                if best.as_ref().map_or(true, |(be, _, _, _)| e < *be) {
                    best = Some((e, s.beta.clone(), s.u.clone(), xb.clone()));
                }
                if e < cfg.tol {
                    converged = true;
                    break;
                }
            }
            Err(Error::Overfit) => trace.eta.push(T::infinity()),
            Err(other) => return Err(other),
        }
    }

    // non-monotone method: fall back to the best iterate seen
    let (eta, beta, u, xb) = if converged {
        (eta, s.beta, s.u, xb)
    } else {
        best.ok_or_else(|| Error::Solver("nonconvex admm never produced a valid iterate".into()))?
    };

    let resid = sub(&xb, &data.b);
    let pobj = full_objective(data, spec, &beta);
    let result = SolveResult {
        nnz: metrics::nnz(&beta),
        pobj,
        dobj: None,
        eta_g: None,
        eta_kkt: None,
        eta_kkt_nc: Some(eta),
        iters,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        solver_tag: "admm-nc",
        beta: DenseVec::from_solver(beta, "admm-nc beta")?,
        u: DenseVec::from_solver(u, "admm-nc multiplier")?,
        y: DenseVec::from_solver(resid, "admm-nc residual")?,
    };
    Ok((result, trace))
}
