//! Standard normal CDF and its inverse.
//!
//! `norm_inv_cdf` is the single Φ⁻¹ routine in the crate: the λ scaling rule
//! and the Gaussian sampler both call it, so synthetic data and the
//! regularization grid share one code path.

use std::f64::consts::PI;

/// Φ(x) = P(Z ≤ x) for Z ~ N(0,1), computed through the complementary
/// error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

// Coefficients of Acklam's rational approximation to Φ⁻¹ (relative error
// below 1.15e-9 over (0,1); the Halley correction below pushes it to
// machine precision).
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

const P_LOW: f64 = 0.02425;

/// Φ⁻¹(p): rational initial guess plus one Halley correction step evaluated
/// against the complementary error function.
///
/// Panics if `p` is outside the open interval (0, 1).
pub fn norm_inv_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "norm_inv_cdf needs p in (0,1), got {p}");

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley correction on Φ(x) − p = 0, evaluated through whichever tail
    // avoids cancellation (1 − p is exact in IEEE for p ≥ ½).
    let e = if p < 0.5 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: bisection on ½ erfc(-z/√2) = p, run on the
    /// complementary tail for p ≥ ½ to stay well conditioned.
    fn inv_cdf_bisect(p: f64) -> f64 {
        if p >= 0.5 {
            let q = 1.0 - p;
            let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if 0.5 * libm::erfc(mid / std::f64::consts::SQRT_2) > q {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        let (mut lo, mut hi) = (-10.0_f64, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn half_maps_to_zero() {
        assert!(norm_inv_cdf(0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_bisection_oracle() {
        for &p in &[
            1e-6, 0.001, 0.01, 0.05, 0.2, 0.5, 0.8, 0.95, 0.99, 0.999975, 0.9999999,
        ] {
            let z = norm_inv_cdf(p);
            let z_ref = inv_cdf_bisect(p);
            assert!(
                (z - z_ref).abs() <= 1e-12 * (1.0 + z_ref.abs()),
                "p={p}: {z} vs {z_ref}"
            );
        }
    }

    #[test]
    fn round_trips_through_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let z = norm_inv_cdf(p);
            assert!((norm_cdf(z) - p).abs() < 1e-14);
        }
    }
}
