#![allow(dead_code)]

pub mod oracle;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starbeam::{Channels, ChannelVariant, Protocol, Side, Trc};

pub type C = Complex<f64>;
pub type M = DMatrix<C>;
pub type V = DVector<C>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C {
    Complex::new(re, im)
}

/// Standard complex normal via Box-Muller.
pub fn cnormal<R: Rng>(r: &mut R) -> C {
    let u1: f64 = r.random_range(1e-12..1.0);
    let u2: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let rad = (-u1.ln()).sqrt();
    c(rad * u2.cos(), rad * u2.sin())
}

pub fn cmat<R: Rng>(r: &mut R, rows: usize, cols: usize) -> M {
    DMatrix::from_fn(rows, cols, |_, _| cnormal(r))
}

pub fn cvec<R: Rng>(r: &mut R, n: usize) -> V {
    DVector::from_fn(n, |_, _| cnormal(r))
}

/// Random Hermitian PSD matrix `A^H A`.
pub fn psd<R: Rng>(r: &mut R, n: usize, rank: usize) -> M {
    let a = cmat(r, rank, n);
    let m = a.adjoint() * a;
    (&m + m.adjoint()) * c(0.5, 0.0)
}

pub fn hermitian<R: Rng>(r: &mut R, n: usize) -> M {
    let a = cmat(r, n, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Unstructured channel set: `G` is `n × mb`, every `H_k` is `m × n`; the
/// first `ceil(k/2)` users sit on the transmission side.
pub fn random_channels<R: Rng>(r: &mut R, n: usize, mb: usize, m: usize, k: usize) -> Channels {
    let t = k.div_ceil(2);
    Channels {
        g: cmat(r, n, mb),
        h: (0..k).map(|_| cmat(r, m, n)).collect(),
        variants: vec![ChannelVariant::Near; k],
        sides: (0..k).map(|i| if i < t { Side::Transmit } else { Side::Reflect }).collect(),
        noise_power: r.random_range(0.2..2.0),
        pathloss: 1.0,
    }
}

pub fn random_trc<R: Rng>(r: &mut R, n: usize, protocol: Protocol) -> Trc {
    let rho: Vec<f64> = (0..n)
        .map(|_| match protocol {
            Protocol::Es => r.random_range(0.0..1.0),
            Protocol::Ms => {
                if r.random_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            }
        })
        .collect();
    let th_t: Vec<f64> = (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
    let th_r: Vec<f64> = (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
    Trc::from_polar(&rho, &th_t, &th_r, protocol).unwrap()
}

pub fn random_precoders<R: Rng>(r: &mut R, k: usize, mb: usize, m: usize, power: f64) -> Vec<M> {
    let w: Vec<M> = (0..k).map(|_| cmat(r, mb, m)).collect();
    let total: f64 = w.iter().map(|x| x.norm_squared()).sum();
    let s = (power / total).sqrt();
    w.into_iter().map(|x| x * c(s, 0.0)).collect()
}

/// `H_k diag(v) G` by explicit triple loop.
pub fn aggregate_loop(h: &M, v: &V, g: &M) -> M {
    let (m, n, mb) = (h.nrows(), h.ncols(), g.ncols());
    let mut out = DMatrix::zeros(m, mb);
    for i in 0..m {
        for j in 0..mb {
            let mut s = c(0.0, 0.0);
            for q in 0..n {
                s += h[(i, q)] * v[q] * g[(q, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

pub fn hbar_loop(ch: &Channels, trc: &Trc) -> Vec<M> {
    (0..ch.h.len())
        .map(|k| aggregate_loop(&ch.h[k], trc.side(ch.sides[k]), &ch.g))
        .collect()
}

/// `log2 det(I + H W W^H H^H J^{-1})` through eigenvalues of the
/// whitened signal covariance.
pub fn rate_oracle(hbar: &[M], w: &[M], sigma2: f64, k: usize) -> f64 {
    let m = hbar[k].nrows();
    let mut j = DMatrix::<C>::identity(m, m) * c(sigma2, 0.0);
    for (l, wl) in w.iter().enumerate() {
        if l != k {
            let x = &hbar[k] * wl;
            j += &x * x.adjoint();
        }
    }
    let s = &hbar[k] * &w[k];
    let total = &j + &s * s.adjoint();
    let ld = |a: &M| -> f64 {
        let h = (a + a.adjoint()) * c(0.5, 0.0);
        h.symmetric_eigenvalues().iter().map(|x| x.ln()).sum()
    };
    (ld(&total) - ld(&j)) / std::f64::consts::LN_2
}

pub fn desk_params(n_y: usize, n_z: usize) -> starbeam::ScenarioParams<f64> {
    starbeam::ScenarioParams {
        n_y,
        n_z,
        ..Default::default()
    }
}

/// Scenario and channels drawn from one seed at −110 dBm noise and 16 paths.
pub fn desk_scenario(n_y: usize, n_z: usize, setup: starbeam::UserSetup, seed: u64) -> (starbeam::Geometry, Channels) {
    let geo = starbeam::sample_scenario(&desk_params(n_y, n_z), setup, seed).unwrap();
    let ch = starbeam::synthesize_channels(&geo, 16, starbeam::dbm_to_watts(-110.0), seed).unwrap();
    (geo, ch)
}
