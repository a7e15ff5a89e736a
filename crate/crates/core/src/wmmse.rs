//! Closed-form and convex block updates of the WMMSE reformulation:
//! combiners `U_k`, weights `Z_k` and the power-constrained precoders `W_k`.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, hermitian_part, hpd_inverse, hpd_solve, re_trace_product, HermitianEigen};
use crate::scalar::{cr, CMat, Real};
use crate::system::{interference_covariance, mse_matrix_effective, PriorityWeights};

/// `U_k = (J_k + H̄_k W_k W_k^H H̄_k^H)^{-1} H̄_k W_k`.
pub fn update_combiners<T: Real>(hbar: &[CMat<T>], w: &[CMat<T>], sigma2: T) -> Result<Vec<CMat<T>>> {
    if !(sigma2 > T::zero()) {
        return Err(Error::invalid("noise_power", "must be positive"));
    }
    (0..hbar.len())
        .map(|k| {
            let s = &hbar[k] * &w[k];
            let cov = interference_covariance(k, hbar, w, sigma2) + &s * s.adjoint();
            hpd_solve(&cov, &s, "received covariance")
        })
        .collect()
}

/// `Z_k = E_k^{-1}` evaluated at the given combiners.
pub fn update_weights<T: Real>(hbar: &[CMat<T>], w: &[CMat<T>], u: &[CMat<T>], sigma2: T) -> Result<Vec<CMat<T>>> {
    (0..hbar.len())
        .map(|k| {
            let e = mse_matrix_effective(k, &u[k], hbar, w, sigma2);
            hpd_inverse(&e.0, "MSE matrix").map(|z| hermitian_part(&z))
        })
        .collect()
}

/// Quadratic program in the precoders:
/// minimize `Σ_k tr(W_k^H A W_k) − 2 Re tr(B_k W_k)` s.t. `Σ_k ‖W_k‖_F² ≤ P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveBeamformingProblem<T: Real> {
    /// `A = Σ_l η_l H̄_l^H U_l Z_l U_l^H H̄_l`, `M_b × M_b`.
    pub a: CMat<T>,
    /// `B_k = η_k Z_k U_k^H H̄_k`, `M × M_b`.
    pub b: Vec<CMat<T>>,
    pub power_budget: T,
}

pub fn build_quadratic_forms<T: Real>(
    hbar: &[CMat<T>],
    u: &[CMat<T>],
    z: &[CMat<T>],
    eta: &PriorityWeights<T>,
    power_budget: T,
) -> ActiveBeamformingProblem<T> {
    let mb = hbar[0].ncols();
    let mut a = CMat::zeros(mb, mb);
    let mut b = Vec::with_capacity(hbar.len());
    for k in 0..hbar.len() {
        let eta_k = cr(eta.as_slice()[k]);
        let uh_h = u[k].adjoint() * &hbar[k];
        a += uh_h.adjoint() * &z[k] * &uh_h * eta_k;
        b.push(&z[k] * uh_h * eta_k);
    }
    ActiveBeamformingProblem {
        a: hermitian_part(&a),
        b,
        power_budget,
    }
}

impl<T: Real> ActiveBeamformingProblem<T> {
    /// `Σ_k tr(W_k^H A W_k) − 2 Re tr(B_k W_k)`.
    pub fn objective(&self, w: &[CMat<T>]) -> T {
        w.iter().zip(&self.b).fold(T::zero(), |acc, (wk, bk)| {
            acc + re_trace_product(&wk.adjoint(), &(&self.a * wk)) - T::lit(2.0) * re_trace_product(bk, wk)
        })
    }
}

/// Solution of [`ActiveBeamformingProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSolution<T: Real> {
    pub w: Vec<CMat<T>>,
    /// Optimal multiplier of the power constraint (0 when inactive).
    pub lambda: T,
}

/// Solves the precoder QCQP through its Lagrangian dual:
/// `W_k(λ) = (A + λI)^{-1} B_k^H` with `λ = 0` when that meets the budget and
/// otherwise the root of `Σ_k ‖W_k(λ)‖_F² = P`, found by bisection to relative
/// power tolerance `tol`. When the budget binds, the result is rescaled onto
/// the sphere `Σ‖W_k‖² = P`.
pub fn active_beamforming<T: Real>(problem: &ActiveBeamformingProblem<T>, tol: T) -> Result<ActiveSolution<T>> {
    let p = problem.power_budget;
    if p < T::zero() {
        return Err(Error::invalid("power_budget", "must be non-negative"));
    }
    let mb = problem.a.nrows();
    let zeros = || problem.b.iter().map(|b| CMat::zeros(mb, b.nrows())).collect::<Vec<_>>();
    let total_b: T = problem.b.iter().fold(T::zero(), |acc, b| acc + frobenius_sq(b));
    if p == T::zero() || total_b == T::zero() {
        return Ok(ActiveSolution {
            w: zeros(),
            lambda: T::zero(),
        });
    }

    // In the eigenbasis A = Q Λ Q^H the power is Σ_i c_i / (λ_i + λ)² with
    // c_i the squared norm of row i of Q^H [B_1^H … B_K^H].
    let eig = HermitianEigen::new(&problem.a);
    let lam: Vec<T> = eig.values.iter().map(|x| x.max(T::zero())).collect();
    let qh = eig.vectors.adjoint();
    let proj: Vec<CMat<T>> = problem.b.iter().map(|b| &qh * b.adjoint()).collect();
    let c: Vec<T> = (0..mb)
        .map(|i| {
            proj.iter()
                .fold(T::zero(), |acc, x| acc + x.row(i).iter().fold(T::zero(), |s, z| s + z.modulus_squared()))
        })
        .collect();
    let power = |mu: T| {
        lam.iter()
            .zip(&c)
            .fold(T::zero(), |acc, (l, ci)| acc + *ci / ((*l + mu) * (*l + mu)))
    };
    let build = |mu: T| -> Vec<CMat<T>> {
        proj.iter()
            .map(|x| {
                let mut y = x.clone();
                for (i, mut row) in y.row_iter_mut().enumerate() {
                    row /= cr(lam[i] + mu);
                }
                &eig.vectors * y
            })
            .collect()
    };

    let trace_a = lam.iter().fold(T::zero(), |acc, x| acc + *x);
    let ridge = T::lit(1e-12) * trace_a / T::lit(mb as f64) + T::lit(1e-18);
    if power(ridge) <= p {
        return Ok(ActiveSolution {
            w: build(ridge),
            lambda: T::zero(),
        });
    }

    let mut hi = T::one();
    let mut grow = 0;
    while power(hi) > p {
        hi *= T::lit(2.0);
        grow += 1;
        if grow > 2000 {
            return Err(Error::invalid("power_budget", "could not bracket the dual multiplier"));
        }
    }
    let mut lo = T::zero();
    for _ in 0..400 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let pm = power(mid);
        if pm > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if (p - power(hi)).abs() <= tol * p {
            break;
        }
    }
    let mut w = build(hi);
    let got = w.iter().fold(T::zero(), |acc, x| acc + frobenius_sq(x));
    if got > T::zero() {
        let s = cr((p / got).sqrt());
        for x in w.iter_mut() {
            *x *= s;
        }
    }
    Ok(ActiveSolution { w, lambda: hi })
}

/// Matched-filter precoders `W_k ∝ H̄_k^H` scaled to total power `P`.
pub fn matched_filter<T: Real>(hbar: &[CMat<T>], power_budget: T) -> Vec<CMat<T>> {
    let mut w: Vec<CMat<T>> = hbar.iter().map(|h| h.adjoint()).collect();
    let total = w.iter().fold(T::zero(), |acc, x| acc + frobenius_sq(x));
    let s = if total > T::zero() {
        (power_budget / total).sqrt()
    } else {
        T::zero()
    };
    for x in w.iter_mut() {
        *x *= cr(s);
    }
    w
}

/// Total power `Σ_k ‖W_k(μ)‖_F²` along the dual path; exposed for diagnostics.
pub fn dual_power_curve<T: Real>(problem: &ActiveBeamformingProblem<T>, mus: &[T]) -> Vec<T> {
    let mb = problem.a.nrows();
    mus.iter()
        .map(|&mu| {
            let m = &problem.a + CMat::identity(mb, mb) * cr(mu);
            problem
                .b
                .iter()
                .map(|b| {
                    hpd_solve(&m, &b.adjoint(), "dual path")
                        .map(|x| frobenius_sq(&x))
                        .unwrap_or_else(|_| T::max_value().unwrap())
                })
                .fold(T::zero(), |acc, x| acc + x)
        })
        .collect()
}
