//! Proximal operators, projections, and their generalized Jacobians for the
//! Euclidean norm and the ℓ1 norm.
//!
//! These are the building blocks of every solver in the crate. All functions
//! are total over finite inputs and pure; the Moreau identity
//! `Prox_{tf}(x) + t Prox_{f*/t}(x/t) = x` ties each prox to the projection
//! realizing its conjugate.

use crate::linalg::{dot, nrm2};
use crate::scalar::Scalar;

/// `Prox_{t‖·‖}(x) = (1 − t/‖x‖)₊ x`, the proximal map of the Euclidean norm.
pub fn prox_euclidean_norm<T: Scalar>(x: &[T], t: T) -> Vec<T> {
    debug_assert!(t > T::zero());
    let nx = nrm2(x);
    if nx <= t {
        return vec![T::zero(); x.len()];
    }
    let f = T::one() - t / nx;
    x.iter().map(|&v| f * v).collect()
}

/// Projection onto the Euclidean ball of radius `r`.
pub fn project_ball<T: Scalar>(x: &[T], r: T) -> Vec<T> {
    debug_assert!(r > T::zero());
    let nx = nrm2(x);
    if nx <= r {
        return x.to_vec();
    }
    let f = r / nx;
    x.iter().map(|&v| f * v).collect()
}

/// Componentwise soft threshold `sign(x_i) max(|x_i| − t, 0)`.
pub fn prox_l1<T: Scalar>(x: &[T], t: T) -> Vec<T> {
    debug_assert!(t > T::zero());
    x.iter().map(|&v| soft_threshold(v, t)).collect()
}

pub fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}

/// Componentwise clamp to `[−r, r]`, the projection onto the ℓ∞ ball; this
/// realizes `Prox_{(t‖·‖₁)*}` with `r = t`.
pub fn project_linf<T: Scalar>(x: &[T], r: T) -> Vec<T> {
    debug_assert!(r > T::zero());
    x.iter().map(|&v| v.min(r).max(-r)).collect()
}

/// A Clarke-subdifferential element of `Prox_{t‖·‖₁}`: a 0/1 diagonal given
/// by the active mask `|z_i| > t`. Ties `|z_i| = t` take the 0 element,
/// which keeps the Newton system as sparse as possible.
#[derive(Clone, Debug)]
pub struct ProxJacobianL1 {
    active: Vec<bool>,
}

impl ProxJacobianL1 {
    pub fn mask(&self) -> &[bool] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&b| b).count()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// `U v` for the diagonal element.
    pub fn apply<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.active.len());
        v.iter()
            .zip(&self.active)
            .map(|(&x, &a)| if a { x } else { T::zero() })
            .collect()
    }
}

pub fn jacobian_prox_l1<T: Scalar>(z: &[T], t: T) -> ProxJacobianL1 {
    debug_assert!(t > T::zero());
    ProxJacobianL1 {
        active: z.iter().map(|&v| v.abs() > t).collect(),
    }
}

/// A B-subdifferential element of `Prox_{τ⁻¹‖·‖}` at `ũ`:
/// `scale·I + rank1_coeff·(dir dirᵀ)` with all eigenvalues in `[0, 1]`.
///
/// On and inside the ball `‖ũ‖ ≤ 1/τ` this is the zero element (the limit
/// from inside), which is admissible and keeps the Hessian assembly cheap.
#[derive(Clone, Debug)]
pub struct ProxJacobianNorm<T> {
    pub scale: T,
    pub direction: Option<Vec<T>>,
    pub rank1_coeff: T,
}

impl<T: Scalar> ProxJacobianNorm<T> {
    pub fn zero() -> Self {
        Self {
            scale: T::zero(),
            direction: None,
            rank1_coeff: T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.direction.is_none()
    }

    /// `V v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        match &self.direction {
            None => vec![T::zero(); v.len()],
            Some(d) => {
                let c = self.rank1_coeff * dot(d, v);
                d.iter()
                    .zip(v)
                    .map(|(&di, &vi)| self.scale * vi + c * di)
                    .collect()
            }
        }
    }
}

/// Jacobian element of `Prox_{τ⁻¹‖·‖}` at `ũ`: for `‖ũ‖ > 1/τ`,
/// `(1 − 1/(τ‖ũ‖)) I + ũũᵀ/(τ‖ũ‖³)`; otherwise the zero element.
pub fn jacobian_prox_norm<T: Scalar>(u_tilde: &[T], tau: T) -> ProxJacobianNorm<T> {
    debug_assert!(tau > T::zero());
    let nu = nrm2(u_tilde);
    if nu * tau <= T::one() {
        return ProxJacobianNorm::zero();
    }
    let inv = (tau * nu).recip();
    ProxJacobianNorm {
        scale: T::one() - inv,
        direction: Some(u_tilde.iter().map(|&v| v / nu).collect()),
        rank1_coeff: inv,
    }
}
