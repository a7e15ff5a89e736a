//! Quadratic form of the WMMSE objective in the surface coefficients.
//!
//! With `U`, `Z`, `W` fixed, the coefficient-dependent part of
//! `Σ_k η_k tr(Z_k E_k)` equals `Σ_i v_i^H F_i v_i − 2 Re(e_i^T v_i)`, where
//! `i` ranges over the transmission and reflection sides.

use nalgebra::DVector;

use crate::channel::ChannelSet;
use crate::geometry::Side;
use crate::linalg::{hermitian_defect, hermitian_part};
use crate::scalar::{cr, CMat, CVec, Real};
use crate::system::{PriorityWeights, TrcState};

/// Linear-term matrix `η_k G W_k Z_k U_k^H H_k` of one user (`N × N`); only
/// its diagonal enters the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TrcLinearTerm<T: Real>(pub CMat<T>);

/// Per-side `F_i` (Hermitian PSD, `N × N`) and `e_i` (`N`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrcQuadratic<T: Real> {
    pub f: [CMat<T>; 2],
    pub e: [CVec<T>; 2],
}

impl<T: Real> TrcQuadratic<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            f: [CMat::zeros(n, n), CMat::zeros(n, n)],
            e: [CVec::zeros(n), CVec::zeros(n)],
        }
    }

    pub fn elements(&self) -> usize {
        self.e[0].len()
    }

    pub fn f(&self, side: Side) -> &CMat<T> {
        &self.f[side.index()]
    }

    pub fn e(&self, side: Side) -> &CVec<T> {
        &self.e[side.index()]
    }

    /// `v^H F_i v − 2 Re(e_i^T v)` for one side.
    pub fn side_objective(&self, side: Side, v: &CVec<T>) -> T {
        let f = self.f(side);
        let quad = v.dotc(&(f * v)).re;
        let lin = self.e(side).dot(v).re;
        quad - T::lit(2.0) * lin
    }

    /// Sum of both sides' objectives.
    pub fn objective(&self, trc: &TrcState<T>) -> T {
        Side::BOTH
            .iter()
            .fold(T::zero(), |acc, s| acc + self.side_objective(*s, trc.side(*s)))
    }

    /// Largest deviation of any `F_i` from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        hermitian_defect(&self.f[0]).max(hermitian_defect(&self.f[1]))
    }

    /// Frobenius scale of the data, used for relative tolerances.
    pub fn scale(&self) -> T {
        let mut s = T::zero();
        for i in 0..2 {
            s += self.f[i].norm_squared() + self.e[i].norm_squared();
        }
        s.sqrt()
    }
}

/// Builds `F_i = Σ_{k∈K_i} C_k ⊙ D^T` and `e_i = Σ_{k∈K_i} diag(E_k)` with
/// `C_k = η_k H_k^H U_k Z_k U_k^H H_k`, `D = G (Σ_l W_l W_l^H) G^H`.
pub fn build_trc_quadratic<T: Real>(
    ch: &ChannelSet<T>,
    u: &[CMat<T>],
    z: &[CMat<T>],
    w: &[CMat<T>],
    eta: &PriorityWeights<T>,
) -> TrcQuadratic<T> {
    let n = ch.elements();
    let mb = ch.bs_antennas();
    let mut s = CMat::zeros(mb, mb);
    for wl in w {
        s += wl * wl.adjoint();
    }
    let d = &ch.g * s * ch.g.adjoint();
    let mut q = TrcQuadratic::zeros(n);
    for k in 0..ch.num_users() {
        let side = ch.sides[k].index();
        let eta_k = cr(eta.as_slice()[k]);
        let uh_h = u[k].adjoint() * &ch.h[k];
        let c = uh_h.adjoint() * &z[k] * &uh_h * eta_k;
        q.f[side] += c.component_mul(&d.transpose());
        let lin = linear_term(ch, k, u, z, w, eta);
        q.e[side] += lin.0.diagonal();
    }
    for f in q.f.iter_mut() {
        *f = hermitian_part(f);
    }
    q
}

/// `E_k = η_k G W_k Z_k U_k^H H_k`.
pub fn linear_term<T: Real>(
    ch: &ChannelSet<T>,
    k: usize,
    u: &[CMat<T>],
    z: &[CMat<T>],
    w: &[CMat<T>],
    eta: &PriorityWeights<T>,
) -> TrcLinearTerm<T> {
    let eta_k = cr(eta.as_slice()[k]);
    TrcLinearTerm(&ch.g * &w[k] * &z[k] * u[k].adjoint() * &ch.h[k] * eta_k)
}

/// Coefficient-dependent WMMSE cost evaluated through matrix traces:
/// `Σ_k η_k [tr(Z_k U_k^H H̄_k S H̄_k^H U_k) − 2 Re tr(Z_k U_k^H H̄_k W_k)]`,
/// `S = Σ_l W_l W_l^H`. Equals [`TrcQuadratic::objective`].
pub fn trace_form_objective<T: Real>(
    ch: &ChannelSet<T>,
    trc: &TrcState<T>,
    u: &[CMat<T>],
    z: &[CMat<T>],
    w: &[CMat<T>],
    eta: &PriorityWeights<T>,
) -> T {
    let mb = ch.bs_antennas();
    let mut s = CMat::zeros(mb, mb);
    for wl in w {
        s += wl * wl.adjoint();
    }
    let mut acc = T::zero();
    for k in 0..ch.num_users() {
        let v = trc.side(ch.sides[k]);
        let phi = CMat::from_diagonal(&DVector::from_iterator(v.len(), v.iter().copied()));
        let hbar = &ch.h[k] * phi * &ch.g;
        let uh = u[k].adjoint();
        let quad = (&z[k] * &uh * &hbar * &s * hbar.adjoint() * &u[k]).trace().re;
        let lin = (&z[k] * &uh * &hbar * &w[k]).trace().re;
        acc += eta.as_slice()[k] * (quad - T::lit(2.0) * lin);
    }
    acc
}
