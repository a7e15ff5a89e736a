//! Coefficient states, beamformers and the rate/MSE evaluations built on
//! them.
//!
//! Rates are in bit/s/Hz. The WMMSE objective uses the same base-2
//! convention, so that plugging the optimal combiners and weights into it
//! reproduces the rate exactly.

use std::f64::consts::LN_2;

use nalgebra::{ComplexField, DVector};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::linalg::{frobenius_sq, hermitian_part, hpd_ln_det, re_trace_product};
use crate::scalar::{cis, cr, CMat, CVec, Real};

/// Operating protocol of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Energy splitting: every element both transmits and reflects.
    Es,
    /// Mode switching: every element either fully transmits or fully reflects.
    Ms,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Es => "ES",
            Protocol::Ms => "MS",
        }
    }
}

/// Transmission/reflection coefficient vectors `v_t`, `v_r` with
/// `v_n^i = sqrt(ρ_n^i) exp(j θ_n^i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrcState<T: Real> {
    pub v_t: CVec<T>,
    pub v_r: CVec<T>,
    pub protocol: Protocol,
}

impl<T: Real> TrcState<T> {
    pub fn new(v_t: CVec<T>, v_r: CVec<T>, protocol: Protocol) -> Result<Self> {
        if v_t.len() != v_r.len() {
            return Err(Error::DimensionMismatch {
                context: "coefficient vectors",
                expected: format!("{}", v_t.len()),
                got: format!("{}", v_r.len()),
            });
        }
        Ok(Self { v_t, v_r, protocol })
    }

    /// Builds the state from transmit amplitudes `ρ^t` (reflection gets
    /// `1 − ρ^t`) and per-side phases.
    pub fn from_polar(rho_t: &[T], theta_t: &[T], theta_r: &[T], protocol: Protocol) -> Result<Self> {
        let n = rho_t.len();
        if theta_t.len() != n || theta_r.len() != n {
            return Err(Error::DimensionMismatch {
                context: "polar coefficients",
                expected: format!("{n}"),
                got: format!("{}/{}", theta_t.len(), theta_r.len()),
            });
        }
        let v_t = DVector::from_fn(n, |i, _| cis(theta_t[i]) * cr(rho_t[i].sqrt()));
        let v_r = DVector::from_fn(n, |i, _| cis(theta_r[i]) * cr((T::one() - rho_t[i]).max(T::zero()).sqrt()));
        Ok(Self { v_t, v_r, protocol })
    }

    /// All elements at `ρ = 1/2` with zero phase.
    pub fn uniform(n: usize, protocol: Protocol) -> Self {
        let half = cr(T::lit(0.5).sqrt());
        Self {
            v_t: DVector::from_element(n, half),
            v_r: DVector::from_element(n, half),
            protocol,
        }
    }

    pub fn len(&self) -> usize {
        self.v_t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_t.is_empty()
    }

    pub fn side(&self, side: Side) -> &CVec<T> {
        match side {
            Side::Transmit => &self.v_t,
            Side::Reflect => &self.v_r,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut CVec<T> {
        match side {
            Side::Transmit => &mut self.v_t,
            Side::Reflect => &mut self.v_r,
        }
    }

    /// Amplitudes `ρ_n^i = |v_n^i|²`.
    pub fn amplitudes(&self, side: Side) -> Vec<T> {
        self.side(side).iter().map(|z| z.modulus_squared()).collect()
    }

    /// Phases canonicalized to `[0, 2π)`.
    pub fn phases(&self, side: Side) -> Vec<T> {
        self.side(side).iter().map(|z| canonical_phase(z.argument())).collect()
    }
}

/// Which amplitudes an optimizer may change.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeMask<T: Real> {
    /// Amplitudes follow the protocol.
    Free,
    /// Transmission amplitudes frozen at the given `ρ^t` (reflection gets
    /// `1 − ρ^t`); only phases move.
    Fixed(Vec<T>),
}

impl<T: Real> AmplitudeMask<T> {
    /// `[1…1, 0…0]`: the first `⌈N/2⌉` elements only transmit, the rest only
    /// reflect.
    pub fn split_halves(n: usize) -> Self {
        let t = n.div_ceil(2);
        AmplitudeMask::Fixed((0..n).map(|i| if i < t { T::one() } else { T::zero() }).collect())
    }

    pub fn uniform(n: usize) -> Self {
        AmplitudeMask::Fixed(vec![T::lit(0.5); n])
    }

    pub fn fixed(&self) -> Option<&[T]> {
        match self {
            AmplitudeMask::Free => None,
            AmplitudeMask::Fixed(r) => Some(r),
        }
    }
}

/// Maps a phase into `[0, 2π)`.
pub fn canonical_phase<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut t = theta % two_pi;
    if t < T::zero() {
        t += two_pi;
    }
    if t >= two_pi {
        t -= two_pi;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `ρ^t + ρ^r ≠ 1`.
    EnergySplit,
    /// An amplitude outside `[0, 1]`.
    AmplitudeRange,
    /// A mode-switching element that is neither fully on nor fully off.
    NotBinary,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrcViolation {
    pub element: usize,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

/// Checks a coefficient state against its protocol; an empty report means the
/// state is feasible within `1e-9`.
pub fn validate_trc<T: Real>(trc: &TrcState<T>) -> Vec<TrcViolation> {
    let tol = 1e-9;
    let mut out = Vec::new();
    for n in 0..trc.len() {
        let (a, b) = (trc.v_t[n], trc.v_r[n]);
        let (rt, rr) = (a.modulus_squared().to_f64_lossy(), b.modulus_squared().to_f64_lossy());
        if !(rt.is_finite() && rr.is_finite() && a.argument().is_finite() && b.argument().is_finite()) {
            out.push(TrcViolation {
                element: n,
                kind: ViolationKind::NonFinite,
                magnitude: f64::INFINITY,
            });
            continue;
        }
        let split = (rt + rr - 1.0).abs();
        if split > tol {
            out.push(TrcViolation {
                element: n,
                kind: ViolationKind::EnergySplit,
                magnitude: split,
            });
        }
        let range = (-rt).max(rt - 1.0).max(-rr).max(rr - 1.0);
        if range > tol {
            out.push(TrcViolation {
                element: n,
                kind: ViolationKind::AmplitudeRange,
                magnitude: range,
            });
        }
        if trc.protocol == Protocol::Ms {
            let dist = rt.min((1.0 - rt).abs());
            if dist > tol {
                out.push(TrcViolation {
                    element: n,
                    kind: ViolationKind::NotBinary,
                    magnitude: dist,
                });
            }
        }
    }
    out
}

/// Per-user precoders `W_k` (`M_b × M`) under a sum-power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet<T: Real> {
    pub w: Vec<CMat<T>>,
    pub power_budget: T,
}

impl<T: Real> BeamformerSet<T> {
    pub fn zeros(users: usize, bs_antennas: usize, user_antennas: usize, power_budget: T) -> Self {
        Self {
            w: vec![CMat::zeros(bs_antennas, user_antennas); users],
            power_budget,
        }
    }

    /// `Σ_k ‖W_k‖_F²`.
    pub fn total_power(&self) -> T {
        self.w.iter().fold(T::zero(), |acc, w| acc + frobenius_sq(w))
    }

    pub fn is_feasible(&self) -> bool {
        self.total_power() <= self.power_budget * (T::one() + T::lit(1e-9))
    }
}

/// Combiners `U_k` and weights `Z_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState<T: Real> {
    pub u: Vec<CMat<T>>,
    pub z: Vec<CMat<T>>,
}

/// User priority weights `η_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityWeights<T: Real>(Vec<T>);

impl<T: Real> PriorityWeights<T> {
    pub fn new(eta: Vec<T>) -> Result<Self> {
        if let Some(bad) = eta.iter().find(|x| !(**x > T::zero()) || !x.is_finite()) {
            return Err(Error::invalid("eta", format!("weights must be positive, got {bad}")));
        }
        Ok(Self(eta))
    }

    pub fn ones(k: usize) -> Self {
        Self(vec![T::one(); k])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// MSE matrix of one user, `M × M` Hermitian PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct MseMatrix<T: Real>(pub CMat<T>);

/// `H̄_k = H_k diag(v) G`.
pub fn aggregate_channel<T: Real>(h_k: &CMat<T>, v: &CVec<T>, g: &CMat<T>) -> Result<CMat<T>> {
    if h_k.ncols() != v.len() || g.nrows() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "aggregate channel",
            expected: format!("{} elements", v.len()),
            got: format!("H has {} columns, G has {} rows", h_k.ncols(), g.nrows()),
        });
    }
    let mut hv = h_k.clone();
    for (n, mut col) in hv.column_iter_mut().enumerate() {
        col *= v[n];
    }
    Ok(hv * g)
}

/// Effective channels of all users under `trc`.
pub fn effective_channels<T: Real>(ch: &ChannelSet<T>, trc: &TrcState<T>) -> Result<Vec<CMat<T>>> {
    ch.h.iter()
        .zip(&ch.sides)
        .map(|(h, side)| aggregate_channel(h, trc.side(*side), &ch.g))
        .collect()
}

fn check_users<T: Real>(hbar: &[CMat<T>], w: &[CMat<T>]) -> Result<()> {
    if hbar.len() != w.len() {
        return Err(Error::DimensionMismatch {
            context: "users",
            expected: format!("{}", hbar.len()),
            got: format!("{} beamformers", w.len()),
        });
    }
    Ok(())
}

fn check_noise<T: Real>(sigma2: T) -> Result<()> {
    if !(sigma2 > T::zero()) {
        return Err(Error::invalid("noise_power", "must be positive"));
    }
    Ok(())
}

/// `J_k = Σ_{l≠k} H̄_k W_l W_l^H H̄_k^H + σ² I` from precomputed effective
/// channels.
pub fn interference_covariance<T: Real>(k: usize, hbar: &[CMat<T>], w: &[CMat<T>], sigma2: T) -> CMat<T> {
    let m = hbar[k].nrows();
    let mut j = CMat::identity(m, m) * cr(sigma2);
    for (l, wl) in w.iter().enumerate() {
        if l != k {
            let x = &hbar[k] * wl;
            j += &x * x.adjoint();
        }
    }
    hermitian_part(&j)
}

/// Rate of user `k` in bit/s/Hz from effective channels.
pub fn user_rate_effective<T: Real>(k: usize, hbar: &[CMat<T>], w: &[CMat<T>], sigma2: T) -> Result<T> {
    check_noise(sigma2)?;
    check_users(hbar, w)?;
    let j = interference_covariance(k, hbar, w, sigma2);
    let s = &hbar[k] * &w[k];
    let total = &j + &s * s.adjoint();
    let nats = hpd_ln_det(&total, "signal-plus-interference covariance")? - hpd_ln_det(&j, "interference covariance")?;
    Ok((nats / T::lit(LN_2)).max(T::zero()))
}

/// Rate of every user in bit/s/Hz.
pub fn user_rates<T: Real>(ch: &ChannelSet<T>, trc: &TrcState<T>, bf: &BeamformerSet<T>) -> Result<Vec<T>> {
    let hbar = effective_channels(ch, trc)?;
    (0..hbar.len())
        .map(|k| user_rate_effective(k, &hbar, &bf.w, ch.noise_power))
        .collect()
}

pub fn user_rate<T: Real>(k: usize, ch: &ChannelSet<T>, trc: &TrcState<T>, bf: &BeamformerSet<T>) -> Result<T> {
    if k >= ch.num_users() {
        return Err(Error::IndexOutOfRange {
            what: "user",
            index: k,
            limit: ch.num_users(),
        });
    }
    let hbar = effective_channels(ch, trc)?;
    user_rate_effective(k, &hbar, &bf.w, ch.noise_power)
}

/// `Σ_k η_k R_k`.
pub fn weighted_sum_rate<T: Real>(
    ch: &ChannelSet<T>,
    trc: &TrcState<T>,
    bf: &BeamformerSet<T>,
    eta: &PriorityWeights<T>,
) -> Result<T> {
    let rates = user_rates(ch, trc, bf)?;
    Ok(weighted_sum(&rates, eta))
}

pub(crate) fn weighted_sum<T: Real>(rates: &[T], eta: &PriorityWeights<T>) -> T {
    rates
        .iter()
        .zip(eta.as_slice())
        .fold(T::zero(), |acc, (r, e)| acc + *r * *e)
}

/// MSE matrix of user `k` for combiner `u_k`:
/// `(I − U^H H̄_k W_k)(I − U^H H̄_k W_k)^H + Σ_{l≠k} U^H H̄_k W_l W_l^H H̄_k^H U + σ² U^H U`.
pub fn mse_matrix_effective<T: Real>(k: usize, u_k: &CMat<T>, hbar: &[CMat<T>], w: &[CMat<T>], sigma2: T) -> MseMatrix<T> {
    let m = u_k.ncols();
    let uh = u_k.adjoint();
    let d = CMat::identity(m, m) - &uh * &hbar[k] * &w[k];
    let mut e = &d * d.adjoint();
    for (l, wl) in w.iter().enumerate() {
        if l != k {
            let x = &uh * &hbar[k] * wl;
            e += &x * x.adjoint();
        }
    }
    e += &uh * u_k * cr(sigma2);
    MseMatrix(hermitian_part(&e))
}

pub fn mse_matrix<T: Real>(
    k: usize,
    u_k: &CMat<T>,
    ch: &ChannelSet<T>,
    trc: &TrcState<T>,
    bf: &BeamformerSet<T>,
) -> Result<MseMatrix<T>> {
    let hbar = effective_channels(ch, trc)?;
    check_users(&hbar, &bf.w)?;
    Ok(mse_matrix_effective(k, u_k, &hbar, &bf.w, ch.noise_power))
}

/// Per-user WMMSE terms `f_k = (ln|Z_k| − tr(Z_k E_k) + M) / ln 2`, unweighted.
pub fn wmmse_terms_effective<T: Real>(
    state: &WmmseState<T>,
    hbar: &[CMat<T>],
    w: &[CMat<T>],
    sigma2: T,
) -> Result<Vec<T>> {
    check_users(hbar, w)?;
    (0..hbar.len())
        .map(|k| {
            let e = mse_matrix_effective(k, &state.u[k], hbar, w, sigma2);
            let z = &state.z[k];
            let m = T::lit(z.nrows() as f64);
            let ld = hpd_ln_det(z, "WMMSE weight")?;
            Ok((ld - re_trace_product(z, &e.0) + m) / T::lit(LN_2))
        })
        .collect()
}

/// `Σ_k η_k f_k`.
pub fn wmmse_objective<T: Real>(
    state: &WmmseState<T>,
    ch: &ChannelSet<T>,
    trc: &TrcState<T>,
    bf: &BeamformerSet<T>,
    eta: &PriorityWeights<T>,
) -> Result<T> {
    let hbar = effective_channels(ch, trc)?;
    let terms = wmmse_terms_effective(state, &hbar, &bf.w, ch.noise_power)?;
    Ok(weighted_sum(&terms, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn validate_reports() {
        assert!(validate_trc(&TrcState::<f64>::uniform(4, Protocol::Es)).is_empty());
        let ms = TrcState::<f64>::uniform(3, Protocol::Ms);
        let rep = validate_trc(&ms);
        assert_eq!(rep.len(), 3);
        assert!(rep.iter().all(|v| v.kind == ViolationKind::NotBinary));
        let mut bad = TrcState::<f64>::uniform(3, Protocol::Es);
        bad.v_t[1] = c(0.6f64.sqrt(), 0.0);
        let rep = validate_trc(&bad);
        assert_eq!(rep.len(), 1);
        assert_eq!(rep[0].element, 1);
        assert_eq!(rep[0].kind, ViolationKind::EnergySplit);
        assert!((rep[0].magnitude - 0.1).abs() < 1e-12);
    }

    #[test]
    fn phases_are_canonical() {
        let trc = TrcState::<f64>::from_polar(&[1.0, 0.5], &[-0.5, 7.0], &[0.0, 3.0], Protocol::Es).unwrap();
        for p in trc.phases(Side::Transmit) {
            assert!((0.0..std::f64::consts::TAU).contains(&p));
        }
        assert!((trc.phases(Side::Transmit)[0] - (std::f64::consts::TAU - 0.5)).abs() < 1e-12);
        assert_eq!(canonical_phase(std::f64::consts::TAU), 0.0);
    }

    #[test]
    fn scalar_rate_closed_form() {
        let h = CMat::from_element(1, 1, c(0.3, -0.4));
        let g = CMat::from_element(1, 1, c(1.5, 0.2));
        let v = CVec::from_element(1, c(0.0, 1.0));
        let w = CMat::from_element(1, 1, c(0.7, 0.1));
        let hbar = vec![aggregate_channel(&h, &v, &g).unwrap()];
        let sigma2 = 0.05;
        let r = user_rate_effective(0, &hbar, &[w.clone()], sigma2).unwrap();
        let gain = (c(0.3, -0.4) * c(0.0, 1.0) * c(1.5, 0.2) * c(0.7, 0.1)).norm_sqr();
        assert!((r - (1.0 + gain / sigma2).log2()).abs() < 1e-12);
        let r2 = user_rate_effective(0, &hbar, &[w.clone()], 2.0 * sigma2).unwrap();
        assert!(r2 < r);
        let zero = user_rate_effective(0, &hbar, &[CMat::zeros(1, 1)], sigma2).unwrap();
        assert_eq!(zero, 0.0);
        assert!(user_rate_effective(0, &hbar, &[w], 0.0).is_err());
    }

    #[test]
    fn aggregate_identity_and_zero() {
        let h = CMat::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let g = CMat::from_fn(3, 2, |i, j| c(j as f64, i as f64 * 0.3));
        let ones = CVec::from_element(3, c(1.0, 0.0));
        assert!((aggregate_channel(&h, &ones, &g).unwrap() - &h * &g).norm() < 1e-12);
        let zeros = CVec::zeros(3);
        assert_eq!(aggregate_channel(&h, &zeros, &g).unwrap().norm(), 0.0);
        assert!(aggregate_channel(&h, &CVec::zeros(2), &g).is_err());
    }

    #[test]
    fn mse_collapses_to_identity() {
        let hbar = vec![CMat::from_element(2, 3, c(0.1, 0.2))];
        let w = vec![CMat::zeros(3, 2)];
        let e = mse_matrix_effective(0, &CMat::zeros(2, 2), &hbar, &w, 1.0);
        assert!((e.0 - CMat::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn wmmse_identity_state_is_zero() {
        let hbar = vec![CMat::from_element(2, 3, c(0.1, 0.2))];
        let w = vec![CMat::zeros(3, 2)];
        let st = WmmseState {
            u: vec![CMat::zeros(2, 2)],
            z: vec![CMat::identity(2, 2)],
        };
        let f = wmmse_terms_effective(&st, &hbar, &w, 1.0).unwrap();
        assert!(f[0].abs() < 1e-15);
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(PriorityWeights::new(vec![1.0, 0.0]).is_err());
        assert!(PriorityWeights::new(vec![1.0, 2.0]).is_ok());
    }
}
