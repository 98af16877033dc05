//! Two-stage proximal majorization-minimization driver.
//!
//! Stage I solves the convex problem `min ‖Xβ−b‖ + λp₁(β)` by continuation
//! on the proximal parameters (each subproblem solved in the dual by
//! [`crate::subproblem::ssn_solve`]), producing a warm start. Stage II
//! linearizes the concave part −q at the current iterate and solves the
//! majorized subproblem at `(σ_k, τ_k, β^k, ∇q(β^k), Xβ^k)` until the
//! nonconvex stationarity residual meets the tolerance, tightening the inner
//! solver until the error vector `δ^k` satisfies the accuracy condition
//!
//! ```text
//! ‖δ^k‖ ≤ (σ_k/4)‖β^{k+1}−β^k‖ + τ_k‖X(β^{k+1}−β^k)‖² / (2‖β^{k+1}−β^k‖).
//! ```

use std::time::Instant;

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, nrm2, sub, DenseVec};
use crate::metrics::{self, SolveResult};
use crate::prox::project_ball;
use crate::regularizer::{full_objective, RegularizerSpec};
use crate::scalar::Scalar;
use crate::subproblem::{scaled_tol, ssn_solve, SsnConfig, SubproblemParams};

#[derive(Clone, Copy, Debug)]
pub struct PmmConfig<T> {
    /// σ^{2,0}; `None` applies `1/(1 + spectral bound of X)`.
    pub sigma0: Option<T>,
    /// τ^{2,0}; `None` applies the same rule.
    pub tau0: Option<T>,
    /// Stage-II shrink factor ρ ∈ (0,1) for both proximal parameters.
    pub rho: T,
    pub stage1_tol: T,
    pub stage2_tol: T,
    /// Cap on stage-I continuation steps.
    pub stage1_maxit: usize,
    pub stage2_maxit: usize,
    /// Stage-I continuation shrink per step.
    pub continuation_shrink: T,
    pub sigma_floor: T,
    pub tau_floor: T,
    pub ssn: SsnConfig<T>,
}

impl<T: Scalar> Default for PmmConfig<T> {
    fn default() -> Self {
        Self {
            sigma0: None,
            tau0: None,
            rho: T::real(0.7),
            stage1_tol: T::real(1e-4),
            stage2_tol: T::real(1e-6),
            stage1_maxit: 20,
            stage2_maxit: 200,
            continuation_shrink: T::real(0.1),
            sigma_floor: T::real(1e-8),
            tau_floor: T::real(1e-8),
            ssn: SsnConfig::default(),
        }
    }
}

impl<T: Scalar> PmmConfig<T> {
    /// Configuration for a standalone convex solve (tight stage-I target).
    pub fn convex() -> Self {
        Self {
            stage1_tol: T::real(1e-6),
            ..Self::default()
        }
    }

    pub fn with_tols(mut self, stage1: T, stage2: T) -> Self {
        self.stage1_tol = stage1;
        self.stage2_tol = stage2;
        self
    }
}

#[derive(Clone, Debug)]
pub struct StageOneResult<T> {
    pub beta: DenseVec<T>,
    /// Dual certificate of the original convex problem,
    /// `ū − τ(ȳ + b − b̃)`, which lies in the unit ball exactly.
    pub u: DenseVec<T>,
    pub eta_kkt: T,
    pub converged: bool,
    pub ssn_iters: usize,
    pub continuation_steps: usize,
}

/// Maps the subproblem dual to a dual point of the original problem: the
/// subgradient of the Euclidean norm at the recovered residual, clipped to
/// the unit ball against roundoff.
fn dual_certificate<T: Scalar>(u: &[T], y: &[T], tau: T, b: &[T], b_tilde: &[T]) -> Vec<T> {
    let w: Vec<T> = (0..u.len())
        .map(|i| u[i] - tau * (y[i] + b[i] - b_tilde[i]))
        .collect();
    project_ball(&w, T::one())
}

/// Stage I: continuation over `σ¹ = τ¹ ∈ {1, s, s², …}` down to the floor,
/// until the KKT residual of the original convex problem meets
/// `stage1_tol`. The first subproblem is `h(·; σ¹, τ¹, 0, 0, b)`; between
/// steps the proximal anchors move to the current iterate
/// (`β̃ ← β̂, b̃ ← Xβ̂`), i.e. the continuation doubles as a proximal-point
/// iteration. Keeping the anchors at zero instead would force the residual
/// through an `ε/σ` rounding floor in the recovery
/// `β = Prox(β̃ + (ṽ − Xᵀu)/σ)`, which stalls above 1e-6 on
/// thousand-sample instances. The dual iterate is warm-started throughout.
pub fn stage_one<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &PmmConfig<T>,
) -> Result<StageOneResult<T>> {
    if nrm2(data.b.as_slice()) == T::zero() {
        return Err(Error::InvalidParam(
            "zero response vector: the KKT residual is undefined at Xβ = b".into(),
        ));
    }
    let n = data.ncols();
    let m = data.nrows();
    let zeros_n = vec![T::zero(); n];
    let inner_tol = scaled_tol(T::real(0.1) * cfg.stage1_tol, &data.b);
    let ssn_cfg = cfg.ssn.with_tol(inner_tol);

    let mut beta_anchor = vec![T::zero(); n];
    let mut b_anchor = data.b.as_slice().to_vec();
    let mut sigma = T::one();
    let mut u = vec![T::zero(); m];
    let mut ssn_iters = 0usize;
    let mut best: Option<StageOneResult<T>> = None;

    for step in 0..cfg.stage1_maxit {
        let params =
            SubproblemParams::new(data, spec, sigma, sigma, &beta_anchor, &zeros_n, &b_anchor)?;
        let res = ssn_solve(&params, &u, &ssn_cfg)?;
        ssn_iters += res.newton_iters;
        u = res.u.as_slice().to_vec();
        let eta = metrics::eta_kkt(data, spec, &res.beta)?;
        let cert = dual_certificate(&u, &res.y, sigma, data.b.as_slice(), &b_anchor);
        let candidate = StageOneResult {
            beta: res.beta,
            u: DenseVec::from_solver(cert, "stage-one dual certificate")?,
            eta_kkt: eta,
            converged: eta < cfg.stage1_tol,
            ssn_iters,
            continuation_steps: step + 1,
        };
        if candidate.converged {
            return Ok(candidate);
        }
        beta_anchor = candidate.beta.as_slice().to_vec();
        b_anchor = data.x.matvec(&beta_anchor);
        if best.as_ref().map_or(true, |b| eta < b.eta_kkt) {
            best = Some(candidate);
        }
        if sigma <= cfg.sigma_floor {
            break;
        }
        sigma = (sigma * cfg.continuation_shrink).max(cfg.sigma_floor);
    }
    let mut out = best.expect("at least one continuation step ran");
    out.ssn_iters = ssn_iters;
    Ok(out)
}

/// The error vector `δ^k` that makes `β_next` the exact minimizer of
/// `h + ⟨δ, ·⟩`: with `r = ∇φ(u)`, `w ∈ ∂‖·‖(y(u))`, and
/// `v = (Xβ_next − b)/‖Xβ_next − b‖`,
///
/// ```text
/// δ = Xᵀ(w − v) + τ Xᵀ r  =  Xᵀ(w − v) − τ Xᵀ (Xβ_next − y − b).
/// ```
///
/// When `y = 0` the subgradient `w` is the ball element
/// `u − τ(y + b − b̃)`, clipped to the unit ball against roundoff.
pub fn compute_delta_k<T: Scalar>(
    params: &SubproblemParams<T>,
    u_next: &[T],
    beta_next: &[T],
) -> Result<Vec<T>> {
    let tau = params.tau;
    let data = params.data;
    let xb = data.x.matvec(beta_next);

    // y(u) via the prox of the norm at d = u/τ + b̃ − b
    let d: Vec<T> = u_next
        .iter()
        .zip(params.b_tilde)
        .zip(data.b.as_slice())
        .map(|((&ui, &bt), &bi)| ui / tau + bt - bi)
        .collect();
    let y = crate::prox::prox_euclidean_norm(&d, tau.recip());

    let resid: Vec<T> = xb
        .iter()
        .zip(data.b.as_slice())
        .map(|(&a, &b)| a - b)
        .collect();
    let nres = nrm2(&resid);
    if nres == T::zero() {
        return Err(Error::Overfit);
    }
    let ny = nrm2(&y);
    let w: Vec<T> = if ny > T::zero() {
        y.iter().map(|&v| v / ny).collect()
    } else {
        let td: Vec<T> = d.iter().map(|&v| tau * v).collect();
        project_ball(&td, T::one())
    };
    // r = ∇φ(u) = y − Xβ + b = y − resid
    // combined weight: w − v + τ r
    let combined: Vec<T> = (0..y.len())
        .map(|i| w[i] - resid[i] / nres + tau * (y[i] - resid[i]))
        .collect();
    Ok(data.x.tr_matvec(&combined))
}

/// Right-hand side of the accuracy condition at step `k`.
pub fn accuracy_rhs<T: Scalar>(
    sigma: T,
    tau: T,
    data: &ProblemData<T>,
    beta_prev: &[T],
    beta_next: &[T],
) -> T {
    let step = sub(beta_next, beta_prev);
    let ns = nrm2(&step);
    if ns == T::zero() {
        return T::zero();
    }
    let xs = data.x.matvec(&step);
    sigma / T::real(4.0) * ns + tau * dot(&xs, &xs) / (T::real(2.0) * ns)
}

/// One stage-II iteration record; both sides of the accuracy condition and
/// of the descent inequality are logged.
#[derive(Clone, Debug)]
pub struct PmmIter<T> {
    pub g: T,
    pub beta_norm: T,
    pub step_norm: T,
    pub delta_norm: T,
    pub accuracy_rhs: T,
    pub eta_nc: T,
    pub ssn_iters: usize,
    pub sigma: T,
    pub tau: T,
    pub descent_lhs: T,
    pub descent_rhs: T,
}

#[derive(Clone, Debug)]
pub struct PmmTrace<T> {
    pub iters: Vec<PmmIter<T>>,
}

impl<T> Default for PmmTrace<T> {
    fn default() -> Self {
        Self { iters: Vec::new() }
    }
}

impl<T: Scalar> PmmTrace<T> {
    /// Every iteration satisfies
    /// `g(β^k) − g(β^{k+1}) ≥ (σ_k/4)‖β^{k+1}−β^k‖² − 1e-10(1+|g(β^k)|)`.
    pub fn descent_holds(&self) -> bool {
        self.iters.iter().all(|it| {
            it.descent_lhs >= it.descent_rhs - T::real(1e-10) * (T::one() + it.g.abs())
        })
    }

    /// Every accepted iteration satisfied the accuracy condition as stated.
    pub fn accuracy_holds(&self) -> bool {
        self.iters.iter().all(|it| it.delta_norm <= it.accuracy_rhs)
    }

    /// The g sequence is non-increasing.
    pub fn g_nonincreasing(&self) -> bool {
        self.iters.windows(2).all(|w| w[1].g <= w[0].g + T::real(1e-12))
    }
}

fn default_prox_scale<T: Scalar>(data: &ProblemData<T>) -> T {
    (T::one() + data.x.spectral_bound()).recip()
}

/// Stage II: majorized subproblems with geometric parameter decay, inner
/// tolerance tightened until the accuracy condition holds.
pub fn stage_two<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta0: &[T],
    u0: &[T],
    cfg: &PmmConfig<T>,
) -> Result<(SolveResult<T>, PmmTrace<T>)> {
    let start = Instant::now();
    let mut trace = PmmTrace::default();

    if spec.is_convex() {
        // q ≡ 0: stage I already solved the problem
        let result = assemble_convex(data, spec, beta0, u0, true, 0, start)?;
        return Ok((result, trace));
    }

    let scale = default_prox_scale(data);
    let mut sigma = cfg.sigma0.unwrap_or(scale);
    let mut tau = cfg.tau0.unwrap_or(scale);
    let mut beta = beta0.to_vec();
    let mut u = u0.to_vec();
    let mut g_curr = full_objective(data, spec, &beta);
    let tol_floor = scaled_tol(T::real(1e-14), &data.b);
    let mut converged = false;
    let mut eta = metrics::eta_kkt_nonconvex(data, spec, &beta)?;

    for _ in 0..cfg.stage2_maxit {
        if eta < cfg.stage2_tol {
            converged = true;
            break;
        }
        let v_tilde = spec.q_grad(&beta);
        let b_tilde = data.x.matvec(&beta);
        let mut inner_tol = scaled_tol(T::real(1e-6).max(T::real(0.1) * eta), &data.b);
        let mut u_start = u.clone();
        let mut ssn_iters = 0usize;

        let (next_beta, next_u, delta_norm, cond_rhs) = loop {
            let params =
                SubproblemParams::new(data, spec, sigma, tau, &beta, &v_tilde, &b_tilde)?;
            let res = ssn_solve(&params, &u_start, &cfg.ssn.with_tol(inner_tol))?;
            ssn_iters += res.newton_iters;
            let delta = compute_delta_k(&params, &res.u, &res.beta)?;
            let lhs = nrm2(&delta);
            let rhs = accuracy_rhs(sigma, tau, data, &beta, &res.beta);
            if lhs <= rhs {
                break (res.beta, res.u, lhs, rhs);
            }
            // machine-precision fixed point: the step is too small for the
            // condition to be representable; accept instead of tightening
            if dist(&res.beta, &beta) <= T::real(100.0) * T::epsilon() * (T::one() + nrm2(&beta)) {
                break (res.beta, res.u, lhs, rhs.max(lhs));
            }
            inner_tol = inner_tol / T::real(10.0);
            if inner_tol < tol_floor {
                return Err(Error::Solver(
                    "inner tolerance underflow without satisfying the accuracy condition".into(),
                ));
            }
            u_start = res.u.as_slice().to_vec();
        };

        let g_next = full_objective(data, spec, &next_beta);
        let step_norm = dist(&next_beta, &beta);
        let descent_lhs = g_curr - g_next;
        let descent_rhs = sigma / T::real(4.0) * step_norm * step_norm;
        trace.iters.push(PmmIter {
            g: g_curr,
            beta_norm: nrm2(&beta),
            step_norm,
            delta_norm,
            accuracy_rhs: cond_rhs,
            eta_nc: eta,
            ssn_iters,
            sigma,
            tau,
            descent_lhs,
            descent_rhs,
        });
        debug_assert!(
            descent_lhs >= descent_rhs - T::real(1e-10) * (T::one() + g_curr.abs()),
            "descent inequality violated: {descent_lhs} < {descent_rhs}"
        );

        beta = next_beta.into_vec();
        u = next_u.into_vec();
        g_curr = g_next;
        sigma = (cfg.rho * sigma).max(cfg.sigma_floor);
        tau = (cfg.rho * tau).max(cfg.tau_floor);
        eta = metrics::eta_kkt_nonconvex(data, spec, &beta)?;
    }
    if !converged && eta < cfg.stage2_tol {
        converged = true;
    }

    let resid = sub(&data.x.matvec(&beta), &data.b);
    let result = SolveResult {
        nnz: metrics::nnz(&beta),
        pobj: g_curr,
        dobj: None,
        eta_g: None,
        eta_kkt: None,
        eta_kkt_nc: Some(eta),
        iters: trace.iters.len(),
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        solver_tag: "pmm",
        beta: DenseVec::from_solver(beta, "pmm beta")?,
        u: DenseVec::from_solver(u, "pmm dual")?,
        y: DenseVec::from_solver(resid, "pmm residual")?,
    };
    Ok((result, trace))
}

fn assemble_convex<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta: &[T],
    u: &[T],
    converged: bool,
    iters: usize,
    start: Instant,
) -> Result<SolveResult<T>> {
    let pobj = full_objective(data, spec, beta);
    let dobj = -dot(u, data.b.as_slice());
    let eta = metrics::eta_kkt(data, spec, beta)?;
    // report the duality gap only when u is near dual-feasible
    let dual_feasible = crate::linalg::norm_inf(&data.x.tr_matvec(u))
        <= spec.l1_scale() * (T::one() + T::real(1e-6))
        && nrm2(u) <= T::one() + T::real(1e-6);
    let resid = sub(&data.x.matvec(beta), &data.b);
    Ok(SolveResult {
        nnz: metrics::nnz(beta),
        pobj,
        dobj: Some(dobj),
        eta_g: dual_feasible.then(|| metrics::eta_g(pobj, dobj)),
        eta_kkt: Some(eta),
        eta_kkt_nc: Some(eta),
        iters,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        solver_tag: "pmm",
        beta: DenseVec::from_solver(beta.to_vec(), "pmm beta")?,
        u: DenseVec::from_solver(u.to_vec(), "pmm dual")?,
        y: DenseVec::from_solver(resid, "pmm residual")?,
    })
}

/// Convex solve (ℓ1): stage I alone, reported as a full [`SolveResult`].
pub fn solve_convex<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &PmmConfig<T>,
) -> Result<SolveResult<T>> {
    if !spec.is_convex() {
        return Err(Error::InvalidParam(
            "solve_convex requires the l1 regularizer".into(),
        ));
    }
    let start = Instant::now();
    let s1 = stage_one(data, spec, cfg)?;
    assemble_convex(
        data,
        spec,
        &s1.beta,
        &s1.u,
        s1.converged,
        s1.ssn_iters,
        start,
    )
}

/// Full two-stage solve for SCAD/MCP (stage I warm start at `stage1_tol`,
/// then stage II to `stage2_tol`).
pub fn solve_nonconvex<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    cfg: &PmmConfig<T>,
) -> Result<(SolveResult<T>, PmmTrace<T>)> {
    if spec.is_convex() {
        return Err(Error::InvalidParam(
            "solve_nonconvex requires scad or mcp; use solve_convex for l1".into(),
        ));
    }
    let start = Instant::now();
    let s1 = stage_one(data, spec, cfg)?;
    let (mut result, trace) = stage_two(data, spec, &s1.beta, &s1.u, cfg)?;
    result.wall_time = start.elapsed().as_secs_f64();
    Ok((result, trace))
}
