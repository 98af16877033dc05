//! Accuracy metrics and stopping quantities: relative duality gap, relative
//! KKT residuals (convex and nonconvex), the sorted-magnitude nnz rule, the
//! theoretical λ scaling, and test error.

use crate::data::ProblemData;
use crate::error::{Error, Result};
use crate::linalg::{norm1, nrm2, sub, DenseVec};
use crate::normal::norm_inv_cdf;
use crate::prox::prox_l1;
use crate::regularizer::RegularizerSpec;
use crate::scalar::Scalar;

/// Output of one solver run.
#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub beta: DenseVec<T>,
    /// Dual variable / multiplier estimate.
    pub u: DenseVec<T>,
    /// Residual-side primal variable (`Xβ − b` at the solution).
    pub y: DenseVec<T>,
    pub pobj: T,
    pub dobj: Option<T>,
    pub eta_g: Option<T>,
    pub eta_kkt: Option<T>,
    pub eta_kkt_nc: Option<T>,
    pub nnz: usize,
    pub iters: usize,
    pub wall_time: f64,
    pub converged: bool,
    pub solver_tag: &'static str,
}

/// Relative duality gap `|pobj − dobj| / (1 + |pobj| + |dobj|)`.
pub fn eta_g<T: Scalar>(pobj: T, dobj: T) -> T {
    (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs())
}

fn kkt_parts<T: Scalar>(data: &ProblemData<T>, beta: &[T]) -> Result<(Vec<T>, T, T)> {
    let r = sub(&data.x.matvec(beta), &data.b);
    let nr = nrm2(&r);
    if nr == T::zero() {
        return Err(Error::Overfit);
    }
    let mut grad = data.x.tr_matvec(&r);
    for g in grad.iter_mut() {
        *g /= nr;
    }
    let gn = nrm2(&grad);
    let den = T::one() + nrm2(beta) + gn;
    Ok((grad, den, nr))
}

/// Relative KKT residual of the convex problem:
/// `‖β − Prox_{λp₁}(β − Xᵀ(Xβ−b)/‖Xβ−b‖)‖ / (1 + ‖β‖ + ‖Xᵀ(Xβ−b)‖/‖Xβ−b‖)`.
pub fn eta_kkt<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta: &[T],
) -> Result<T> {
    let (grad, den, _) = kkt_parts(data, beta)?;
    let inner = sub(beta, &grad);
    let prox = prox_l1(&inner, spec.l1_scale());
    Ok(nrm2(&sub(beta, &prox)) / den)
}

/// Nonconvex stationarity residual: same ratio with `Prox_{λp₁ − q}`
/// (computed exactly by the branch-enumeration prox, ζ = 1).
pub fn eta_kkt_nonconvex<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta: &[T],
) -> Result<T> {
    let (grad, den, _) = kkt_parts(data, beta)?;
    let inner = sub(beta, &grad);
    let prox = spec.nonconvex_prox(&inner, T::one());
    Ok(nrm2(&sub(beta, &prox)) / den)
}

/// Exact subdifferential membership `0 ∈ ∂(‖X·−b‖ + λp₁)(β)` up to `tol`,
/// used as an independent certificate for the KKT residual.
pub fn l1_kkt_membership<T: Scalar>(
    data: &ProblemData<T>,
    spec: &RegularizerSpec<T>,
    beta: &[T],
    tol: T,
) -> Result<bool> {
    let (grad, _, _) = kkt_parts(data, beta)?;
    let lam = spec.l1_scale();
    for (&bi, &gi) in beta.iter().zip(&grad) {
        let ok = if bi.abs() > tol {
            // -g_i must equal λ sign(β_i)
            (gi + lam * bi.signum()).abs() <= tol * (T::one() + lam)
        } else {
            gi.abs() <= lam + tol * (T::one() + lam)
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of nonzeros: the minimal `k` such that the `k` largest magnitudes
/// account for `0.9999` of `‖β‖₁`.
pub fn nnz<T: Scalar>(beta: &[T]) -> usize {
    let total = norm1(beta);
    if total == T::zero() {
        return 0;
    }
    let mut mags: Vec<T> = beta.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let target = T::real(0.9999) * total;
    let mut acc = T::zero();
    for (k, &v) in mags.iter().enumerate() {
        acc += v;
        if acc >= target {
            return k + 1;
        }
    }
    mags.len()
}

/// Λ(n) = 1.1 Φ⁻¹(1 − 0.05/(2n)), the theoretical λ scaling.
pub fn lambda_scale(n: usize) -> f64 {
    assert!(n >= 1);
    1.1 * norm_inv_cdf(1.0 - 0.05 / (2.0 * n as f64))
}

/// λ = λ_c · Λ(n).
pub fn lambda_from_c<T: Scalar>(lambda_c: T, n: usize) -> T {
    lambda_c * T::real(lambda_scale(n))
}

/// Mean-squared prediction error `‖X_test β − b_test‖² / m_test`.
pub fn test_error<T: Scalar>(test: &ProblemData<T>, beta: &[T]) -> T {
    assert_eq!(beta.len(), test.ncols(), "beta length mismatch on test data");
    let r = sub(&test.x.matvec(beta), &test.b);
    crate::linalg::dot(&r, &r) / T::real(test.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignMatrix;
    use crate::linalg::{norm_inf, Mat};
    use crate::rng::SplitMix64;

    fn small_problem(seed: u64, m: usize, n: usize) -> ProblemData<f64> {
        let mut rng = SplitMix64::new(seed);
        let x = Mat::from_vec_unchecked(m, n, (0..m * n).map(|_| rng.next_gaussian()).collect());
        let b = (0..m).map(|_| rng.next_gaussian()).collect();
        ProblemData::new(DesignMatrix::Dense(x), b).unwrap()
    }

    #[test]
    fn eta_g_values() {
        assert_eq!(eta_g(5.0, 5.0), 0.0);
        assert_eq!(eta_g(1.0, 0.0), 0.5);
    }

    #[test]
    fn eta_kkt_zero_for_zero_solution_under_large_lambda() {
        let data = small_problem(3, 12, 6);
        let lam_max = norm_inf(&data.x.tr_matvec(&data.b)) / nrm2(&data.b);
        let spec = RegularizerSpec::l1(1.01 * lam_max).unwrap();
        let beta = vec![0.0; 6];
        assert!(eta_kkt(&data, &spec, &beta).unwrap() <= 1e-14);
        assert!(l1_kkt_membership(&data, &spec, &beta, 1e-10).unwrap());
        // and strictly positive below λ_max
        let spec2 = RegularizerSpec::l1(0.5 * lam_max).unwrap();
        assert!(eta_kkt(&data, &spec2, &beta).unwrap() > 1e-8);
        assert!(!l1_kkt_membership(&data, &spec2, &beta, 1e-10).unwrap());
    }

    #[test]
    fn eta_kkt_rejects_overfit() {
        // b = Xβ₀ makes the residual vanish exactly at β₀
        let x = small_problem(4, 5, 5).x.to_dense();
        let beta0 = vec![1.0, -1.0, 0.5, 0.0, 2.0];
        let b = x.matvec(&beta0);
        let data = ProblemData::new(DesignMatrix::Dense(x), b).unwrap();
        let spec = RegularizerSpec::l1(0.3).unwrap();
        assert!(matches!(eta_kkt(&data, &spec, &beta0), Err(Error::Overfit)));
        assert!(matches!(
            eta_kkt_nonconvex(&data, &RegularizerSpec::scad(0.3, 3.7).unwrap(), &beta0),
            Err(Error::Overfit)
        ));
    }

    /// Independent recomputation of the displayed η_kkt formula.
    #[test]
    fn eta_kkt_matches_literal_formula() {
        let mut rng = SplitMix64::new(6);
        let data = small_problem(7, 10, 4);
        let spec = RegularizerSpec::l1(0.8).unwrap();
        for _ in 0..50 {
            let beta: Vec<f64> = (0..4).map(|_| rng.next_uniform(-2.0, 2.0)).collect();
            let got = eta_kkt(&data, &spec, &beta).unwrap();
            // literal recomputation
            let xb = data.x.matvec(&beta);
            let r: Vec<f64> = xb.iter().zip(data.b.iter()).map(|(a, b)| a - b).collect();
            let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xtr = data.x.tr_matvec(&r);
            let arg: Vec<f64> = beta
                .iter()
                .zip(&xtr)
                .map(|(&bi, &gi)| bi - gi / nr)
                .collect();
            let prox: Vec<f64> = arg
                .iter()
                .map(|&v| v.signum() * (v.abs() - 0.8f64).max(0.0))
                .collect();
            let num = beta
                .iter()
                .zip(&prox)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den = 1.0
                + beta.iter().map(|v| v * v).sum::<f64>().sqrt()
                + xtr.iter().map(|v| v * v).sum::<f64>().sqrt() / nr;
            assert!((got - num / den).abs() < 1e-14);
        }
    }

    #[test]
    fn nonconvex_eta_equals_convex_for_l1() {
        let mut rng = SplitMix64::new(9);
        let data = small_problem(11, 9, 5);
        let spec = RegularizerSpec::l1(0.6).unwrap();
        for _ in 0..20 {
            let beta: Vec<f64> = (0..5).map(|_| rng.next_uniform(-2.0, 2.0)).collect();
            let a = eta_kkt(&data, &spec, &beta).unwrap();
            let b = eta_kkt_nonconvex(&data, &spec, &beta).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nnz_counts_dominant_magnitudes() {
        assert_eq!(nnz(&[1.0, 1.0, 1e-6]), 2);
        assert_eq!(nnz::<f64>(&[0.0, 0.0]), 0);
        assert_eq!(nnz(&[5.0]), 1);
    }

    /// Brute-force scan of the defining rule on random sparse vectors.
    #[test]
    fn nnz_matches_definition_scan() {
        let mut rng = SplitMix64::new(12);
        for _ in 0..100 {
            let n = 2 + rng.next_below(40);
            let beta: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.next_open01() < 0.6 {
                        0.0
                    } else {
                        rng.next_gaussian()
                    }
                })
                .collect();
            let mut sorted: Vec<f64> = beta.iter().map(|v| v.abs()).collect();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let total: f64 = sorted.iter().sum();
            let expected = if total == 0.0 {
                0
            } else {
                let mut acc = 0.0;
                let mut k = sorted.len();
                for (i, v) in sorted.iter().enumerate() {
                    acc += v;
                    if acc >= 0.9999 * total {
                        k = i + 1;
                        break;
                    }
                }
                k
            };
            assert_eq!(nnz(&beta), expected);
        }
    }

    #[test]
    fn nnz_invariant_under_permutation_and_sign() {
        let mut rng = SplitMix64::new(14);
        let beta: Vec<f64> = (0..20).map(|_| rng.next_gaussian()).collect();
        let base = nnz(&beta);
        let mut permuted = beta.clone();
        rng.shuffle(&mut permuted);
        assert_eq!(nnz(&permuted), base);
        let flipped: Vec<f64> = beta.iter().map(|v| -v).collect();
        assert_eq!(nnz(&flipped), base);
    }

    #[test]
    fn lambda_scale_against_bisection_oracle() {
        // bisection on ½ erfc(−z/√2) = 1 − 0.05/1600
        let p = 1.0 - 0.05 / 1600.0;
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if crate::normal::norm_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = 0.5 * (lo + hi);
        assert!((lambda_scale(800) - 1.1 * z).abs() < 1e-10);
        assert!((lambda_from_c(1.0, 800) - lambda_scale(800)).abs() < 1e-15);
        // monotone in n, linear in λ_c
        assert!(lambda_scale(8000) > lambda_scale(800));
        assert!((lambda_from_c(2.0, 800) - 2.0 * lambda_scale(800)).abs() < 1e-12);
    }

    #[test]
    fn test_error_basics() {
        let data = small_problem(20, 8, 3);
        let beta = vec![0.0; 3];
        let expected = crate::linalg::dot(&data.b, &data.b) / 8.0;
        assert!((test_error(&data, &beta) - expected).abs() < 1e-14);
        // exact coefficients on noiseless data give zero error
        let x = data.x.to_dense();
        let beta0 = vec![1.0, 2.0, -0.5];
        let noiseless = ProblemData::new(DesignMatrix::Dense(x.clone()), x.matvec(&beta0)).unwrap();
        assert!(test_error(&noiseless, &beta0) < 1e-25);
    }
}
