//! Element-wise coefficient optimizer.
//!
//! With all other elements fixed, the cost of element `n` on side `i` is
//! `ρ A + 2 √ρ Re(B e^{jθ}) + C`. The optimal phase makes the linear term
//! `−√ρ |B|`; the amplitude split then solves a one-dimensional convex
//! problem (energy splitting) or a two-candidate comparison (mode switching).

use nalgebra::{Complex, ComplexField};

use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::quadratic::TrcQuadratic;
use crate::scalar::{cis, cr, CVec, Cplx, Real};
use crate::system::{AmplitudeMask, Protocol, TrcState};

/// Per-side expansion coefficients of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementCoefficients<T: Real> {
    /// `A_n^i = f_{n,n}^i`.
    pub a: [T; 2],
    /// `B_n^i = Σ_{q≠n} (v_q^i)* f_{q,n}^i − e_n^i`.
    pub b: [Cplx<T>; 2],
    /// Remaining constant so that `|v_n|² A + 2 Re(B v_n) + C` is the side
    /// objective.
    pub c: [T; 2],
}

pub fn element_coefficients<T: Real>(n: usize, q: &TrcQuadratic<T>, trc: &TrcState<T>) -> Result<ElementCoefficients<T>> {
    if n >= trc.len() || n >= q.elements() {
        return Err(Error::IndexOutOfRange {
            what: "surface element",
            index: n,
            limit: trc.len().min(q.elements()),
        });
    }
    let mut out = ElementCoefficients {
        a: [T::zero(); 2],
        b: [Complex::new(T::zero(), T::zero()); 2],
        c: [T::zero(); 2],
    };
    for side in Side::BOTH {
        let i = side.index();
        let v = trc.side(side);
        let f = q.f(side);
        let x = (0..v.len())
            .filter(|&j| j != n)
            .fold(cr(T::zero()), |acc, j| acc + f[(n, j)] * v[j]);
        let (a, b) = (f[(n, n)].re, x.conj() - q.e(side)[n]);
        out.a[i] = a;
        out.b[i] = b;
        out.c[i] = q.side_objective(side, v) - element_cost(a, b, v[n]);
    }
    Ok(out)
}

/// `|v|² A + 2 Re(B v)`.
#[inline]
pub fn element_cost<T: Real>(a: T, b: Cplx<T>, v: Cplx<T>) -> T {
    v.modulus_squared() * a + T::lit(2.0) * (b * v).re
}

/// `θ = (π − ∠B) mod 2π`, minimizing `Re(B e^{jθ})`; zero for `B = 0`.
pub fn optimal_phase<T: Real>(b: Cplx<T>) -> T {
    if b.re == T::zero() && b.im == T::zero() {
        return T::zero();
    }
    let two_pi = T::two_pi();
    let mut t = (T::pi() - b.argument()) % two_pi;
    if t < T::zero() {
        t += two_pi;
    }
    if t >= two_pi {
        t -= two_pi;
    }
    t
}

/// Energy-splitting amplitude: minimizes
/// `h(ρ) = ρ A_t − 2√ρ |B_t| + (1 − ρ) A_r − 2√(1 − ρ) |B_r|` over `[0, 1]`.
pub fn es_amplitude<T: Real>(a_t: T, a_r: T, abs_b_t: T, abs_b_r: T, tol: T) -> T {
    let da = a_t - a_r;
    let zero = T::zero();
    match (abs_b_t > zero, abs_b_r > zero) {
        (true, true) => {
            let deriv = |rho: T| da - abs_b_t / rho.sqrt() + abs_b_r / (T::one() - rho).sqrt();
            let (mut lo, mut hi) = (zero, T::one());
            while hi - lo > tol {
                let mid = (lo + hi) * T::lit(0.5);
                if mid <= lo || mid >= hi {
                    break;
                }
                if deriv(mid) < zero {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo + hi) * T::lit(0.5)
        }
        (false, true) => {
            // h' = Δa + |B_r|/√(1−ρ) increases from Δa + |B_r|.
            if da + abs_b_r >= zero {
                zero
            } else {
                let s = abs_b_r / (-da);
                T::one() - s * s
            }
        }
        (true, false) => {
            // h' = Δa − |B_t|/√ρ increases up to Δa − |B_t| at ρ = 1.
            if da - abs_b_t <= zero {
                T::one()
            } else {
                let s = abs_b_t / da;
                s * s
            }
        }
        (false, false) => {
            if da < zero {
                T::one()
            } else if da > zero {
                zero
            } else {
                T::lit(0.5)
            }
        }
    }
}

/// Mode-switching amplitudes `(ρ_t, ρ_r)`: transmission iff
/// `A_t − 2|B_t| ≤ A_r − 2|B_r|`.
pub fn ms_amplitude<T: Real>(a_t: T, a_r: T, abs_b_t: T, abs_b_r: T) -> (T, T) {
    let two = T::lit(2.0);
    if a_t - two * abs_b_t <= a_r - two * abs_b_r {
        (T::one(), T::zero())
    } else {
        (T::zero(), T::one())
    }
}

/// Minimum over phases of the two-sided element cost for a given `ρ_t`.
fn split_cost<T: Real>(rho_t: T, a: [T; 2], abs_b: [T; 2]) -> T {
    let two = T::lit(2.0);
    let rho_r = T::one() - rho_t;
    rho_t * a[0] - two * rho_t.sqrt() * abs_b[0] + rho_r * a[1] - two * rho_r.sqrt() * abs_b[1]
}

/// One ascending pass over all elements. Every element update is the global
/// optimum of its own subproblem, so the objective never increases.
pub fn ele_sweep<T: Real>(q: &TrcQuadratic<T>, trc: &TrcState<T>, mask: &AmplitudeMask<T>, tol: T) -> Result<TrcState<T>> {
    let n_el = trc.len();
    if q.elements() != n_el {
        return Err(Error::DimensionMismatch {
            context: "element sweep",
            expected: format!("{n_el} elements"),
            got: format!("{}", q.elements()),
        });
    }
    if let Some(fixed) = mask.fixed() {
        if fixed.len() != n_el {
            return Err(Error::DimensionMismatch {
                context: "amplitude mask",
                expected: format!("{n_el}"),
                got: format!("{}", fixed.len()),
            });
        }
    }
    let mut out = trc.clone();
    let mut y: [CVec<T>; 2] = [q.f(Side::Transmit) * &out.v_t, q.f(Side::Reflect) * &out.v_r];
    for n in 0..n_el {
        let mut a = [T::zero(); 2];
        let mut b = [cr(T::zero()); 2];
        for side in Side::BOTH {
            let i = side.index();
            let f = q.f(side);
            let v = out.side(side)[n];
            a[i] = f[(n, n)].re;
            let x = y[i][n] - f[(n, n)] * v;
            b[i] = x.conj() - q.e(side)[n];
        }
        let abs_b = [b[0].modulus(), b[1].modulus()];
        let theta = [optimal_phase(b[0]), optimal_phase(b[1])];
        let rho_t = match mask.fixed() {
            Some(fixed) => fixed[n],
            None => match trc.protocol {
                Protocol::Es => es_amplitude(a[0], a[1], abs_b[0], abs_b[1], tol),
                Protocol::Ms => ms_amplitude(a[0], a[1], abs_b[0], abs_b[1]).0,
            },
        };
        let old = [out.v_t[n], out.v_r[n]];
        let new = [
            cis(theta[0]) * cr(rho_t.sqrt()),
            cis(theta[1]) * cr((T::one() - rho_t).max(T::zero()).sqrt()),
        ];
        let before = element_cost(a[0], b[0], old[0]) + element_cost(a[1], b[1], old[1]);
        let after = split_cost(rho_t, a, abs_b);
        if after > before {
            continue;
        }
        for side in Side::BOTH {
            let i = side.index();
            let delta = new[i] - old[i];
            if delta.re != T::zero() || delta.im != T::zero() {
                let col = q.f(side).column(n);
                y[i].axpy(delta, &col, cr(T::one()));
            }
            out.side_mut(side)[n] = new[i];
        }
    }
    Ok(out)
}
