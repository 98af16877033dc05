//! Numerical verification of the finite-sample bounds for the generalized
//! elastic-net estimator `argmin ‖Xβ−b‖ + λ‖β‖₁ + (σ/2)‖β‖² + (τ/2)‖Xβ−b‖²`
//! on synthetic data where the ground truth is available.
//!
//! For p = ℓ1 the dual norm is ℓ∞ and the restricted norms are the plain
//! ℓ1/ℓ∞ norms on the complement of the support.

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm_inf, nrm2, sub, DenseVec};
use crate::regularizer::RegularizerSpec;
use crate::scalar::Scalar;
use crate::subproblem::{scaled_tol, ssn_solve, SsnConfig, SubproblemParams};

/// Ground truth of a synthetic draw, borrowed from the generator.
#[derive(Clone, Copy, Debug)]
pub struct GroundTruth<'a, T> {
    pub beta_star: &'a [T],
    /// Realized noise `b − Xβ*`.
    pub noise: &'a [T],
    /// Support of `β*` (the allowed set `S`).
    pub support: &'a [usize],
}

#[derive(Clone, Debug)]
pub struct OracleDiagnostics<T> {
    pub lambda0: T,
    pub lambda_m: T,
    pub n_p: T,
    pub t1: T,
    pub t2: T,
    pub a: T,
    pub c_l: T,
    pub c_u: T,
    /// `‖ε̂‖ / ‖ε‖`.
    pub ratio: T,
    pub assumption1_holds: bool,
    pub lemma33_lhs: T,
    pub lemma33_rhs: T,
    pub lemma33_ok: bool,
    /// `c_l ≤ ratio ≤ c_u` with slack (vacuously true when the assumption
    /// fails, since the lower bound is only asserted under it).
    pub lemma34_ok: bool,
}

/// Solves the generalized elastic-net problem at fixed `(σ, τ)` tightly,
/// returning the estimator and its dual.
pub fn solve_gen_elastic_net<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    sigma: T,
    tau: T,
    tol: T,
) -> Result<(DenseVec<T>, DenseVec<T>)> {
    let zeros = vec![T::zero(); data.ncols()];
    let b_anchor = data.b.as_slice().to_vec();
    let params = SubproblemParams::new(data, spec, sigma, tau, &zeros, &zeros, &b_anchor)?;
    let cfg = SsnConfig::default().with_tol(scaled_tol(tol, &data.b));
    let res = ssn_solve(&params, &vec![T::zero(); data.nrows()], &cfg)?;
    if !res.converged {
        return Err(Error::Solver(format!(
            "elastic-net subproblem did not reach tolerance (grad norm {})",
            res.grad_norm
        )));
    }
    Ok((res.beta, res.u))
}

/// Evaluates the notation constants and both bound verdicts at an estimator
/// `β̂` of the generalized elastic-net problem with parameters
/// `(sigma1, tau1)` (either may be zero to probe the plain problem).
pub fn oracle_diagnostics<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta_hat: &[T],
    truth: GroundTruth<'_, T>,
    sigma1: T,
    tau1: T,
) -> Result<OracleDiagnostics<T>> {
    if !spec.is_convex() {
        return Err(Error::InvalidParam(
            "oracle diagnostics are defined for the l1 norm".into(),
        ));
    }
    if sigma1 < T::zero() || tau1 < T::zero() {
        return Err(Error::InvalidParam("sigma and tau must be nonnegative".into()));
    }
    let lam = spec.lambda();
    let eps = truth.noise;
    let n_eps = nrm2(eps);
    if n_eps == T::zero() {
        return Err(Error::InvalidParam("the realized noise is zero".into()));
    }
    let eps_hat = sub(data.b.as_slice(), &data.x.matvec(beta_hat));
    let n_eps_hat = nrm2(&eps_hat);
    if n_eps_hat == T::zero() {
        return Err(Error::Overfit);
    }

    let in_support = {
        let mut mask = vec![false; data.ncols()];
        for &j in truth.support {
            mask[j] = true;
        }
        mask
    };
    let xte = data.x.tr_matvec(eps);
    let max_on = |on: bool, v: &[T]| -> T {
        v.iter()
            .zip(&in_support)
            .filter(|(_, &s)| s == on)
            .fold(T::zero(), |acc, (x, _)| acc.max(x.abs()))
    };

    let p_star_beta = norm_inf(truth.beta_star);
    let p_beta = norm1(truth.beta_star);
    let n_p = lam * p_beta / n_eps;
    let lambda0 = norm_inf(&xte) / n_eps;
    let lambda_m = (max_on(false, &xte) / n_eps)
        .max(max_on(true, &xte) / n_eps)
        .max(max_on(false, truth.beta_star))
        .max(max_on(true, truth.beta_star));

    let half = T::real(0.5);
    let two = T::real(2.0);
    let t1 = T::one() + half * tau1 * n_eps + sigma1 * p_star_beta * p_beta / (two * n_eps);
    let t2 = two + tau1 + sigma1 * p_star_beta * p_beta / n_eps;
    let c_u = t1 + n_p;
    let a = (lambda0 + sigma1 * p_star_beta * c_u) * t1 / lam;
    let assumption1_holds = a + two * lambda0 * n_p / lam < T::one();
    let c_l = (T::one() - a - two * lambda0 * n_p / lam)
        / (two + (T::one() + sigma1 * p_star_beta / lam) * n_p);
    let ratio = n_eps_hat / n_eps;

    // ε̂ᵀX(β* − β̂) ≤ (τ + 1/‖ε̂‖)⁻¹ (λ‖β*‖₁ + σ‖β*‖∞‖β̂‖₁)
    let diff = sub(truth.beta_star, beta_hat);
    let lemma33_lhs = dot(&data.x.tr_matvec(&eps_hat), &diff);
    let lemma33_rhs = (tau1 + n_eps_hat.recip()).recip()
        * (lam * p_beta + sigma1 * p_star_beta * norm1(beta_hat));
    let slack33 = T::real(1e-10) * (T::one() + lemma33_rhs.abs());
    let lemma33_ok = lemma33_lhs <= lemma33_rhs + slack33;

    let slack34 = T::real(1e-10) * (T::one() + c_u.abs());
    let lemma34_ok = !assumption1_holds
        || (ratio >= c_l - slack34 && ratio <= c_u + slack34);

    Ok(OracleDiagnostics {
        lambda0,
        lambda_m,
        n_p,
        t1,
        t2,
        a,
        c_l,
        c_u,
        ratio,
        assumption1_holds,
        lemma33_lhs,
        lemma33_rhs,
        lemma33_ok,
        lemma34_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ar1_design, respond};
    use crate::design::DesignMatrix;
    use crate::rng::SplitMix64;

    /// Instance in the high-noise regime where Assumption 3.1 can hold:
    /// small coefficients, unit noise, λ above the empirical λ₀.
    fn assumption_friendly(seed: u64) -> (ProblemData<f64>, Vec<f64>, Vec<f64>, Vec<usize>) {
        let mut rng = SplitMix64::new(seed);
        let (m, n) = (60, 20);
        let x = ar1_design::<f64>(&mut rng, m, n, 0.5);
        let mut beta_star = vec![0.0; n];
        beta_star[0] = 0.05;
        beta_star[3] = -0.04;
        beta_star[7] = 0.05;
        let (b, noise) = respond(&mut rng, &x, &beta_star, 1.0);
        let data = ProblemData::new(DesignMatrix::Dense(x), b).unwrap();
        let support = vec![0, 3, 7];
        (data, beta_star, noise, support)
    }

    #[test]
    fn truth_estimator_has_unit_ratio_inside_bounds() {
        let (data, beta_star, noise, support) = assumption_friendly(1);
        let spec = RegularizerSpec::l1(4.0).unwrap();
        let truth = GroundTruth {
            beta_star: &beta_star,
            noise: &noise,
            support: &support,
        };
        let d = oracle_diagnostics(&data, &spec, &beta_star, truth, 1e-3, 1e-3).unwrap();
        assert!((d.ratio - 1.0).abs() < 1e-14);
        assert!(d.assumption1_holds, "a = {}, stat = {}", d.a, d.a + 2.0 * d.lambda0 * d.n_p / 4.0);
        assert!(d.c_l <= d.c_u);
        assert!(d.lemma34_ok);
        // correlation bound at β̂ = β*: lhs = ε̂ᵀX·0 = 0 ≤ rhs
        assert_eq!(d.lemma33_lhs, 0.0);
        assert!(d.lemma33_ok);
    }

    #[test]
    fn zero_prox_parameters_collapse_the_constants() {
        let (data, beta_star, noise, support) = assumption_friendly(2);
        let spec = RegularizerSpec::l1(4.0).unwrap();
        let truth = GroundTruth {
            beta_star: &beta_star,
            noise: &noise,
            support: &support,
        };
        let d = oracle_diagnostics(&data, &spec, &beta_star, truth, 0.0, 0.0).unwrap();
        assert_eq!(d.t1, 1.0);
        assert_eq!(d.t2, 2.0);
        assert!((d.c_u - (1.0 + d.n_p)).abs() < 1e-15);
        assert!((d.a - d.lambda0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn lemma_bounds_hold_for_the_solved_estimator() {
        for seed in 0..5 {
            let (data, beta_star, noise, support) = assumption_friendly(100 + seed);
            let spec = RegularizerSpec::l1(4.0).unwrap();
            let (sigma, tau) = (1e-3, 1e-3);
            let (beta_hat, _) = solve_gen_elastic_net(&data, &spec, sigma, tau, 1e-10).unwrap();
            let truth = GroundTruth {
                beta_star: &beta_star,
                noise: &noise,
                support: &support,
            };
            let d = oracle_diagnostics(&data, &spec, &beta_hat, truth, sigma, tau).unwrap();
            assert!(d.lemma33_ok, "seed {seed}: {} > {}", d.lemma33_lhs, d.lemma33_rhs);
            assert!(d.lemma34_ok, "seed {seed}: ratio {} not in [{}, {}]", d.ratio, d.c_l, d.c_u);
            // dual-norm ordering relations
            assert!(d.lambda0 <= d.lambda_m + 1e-15);
            assert!(norm_inf(&beta_star) <= d.lambda_m + 1e-15);
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let (data, beta_star, _, support) = assumption_friendly(7);
        let spec = RegularizerSpec::l1(4.0).unwrap();
        let zero_noise = vec![0.0; data.nrows()];
        let truth = GroundTruth {
            beta_star: &beta_star,
            noise: &zero_noise,
            support: &support,
        };
        assert!(oracle_diagnostics(&data, &spec, &beta_star, truth, 0.0, 0.0).is_err());
    }
}
