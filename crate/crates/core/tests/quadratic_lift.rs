mod common;

use proptest::prelude::*;
use rand::Rng;
use starbeam::linalg::rank_one_violation;
use starbeam::pen::{lift_augmented, sca_binary_surrogate, sca_rank_surrogate};
use starbeam::quadratic::{build_trc_quadratic, trace_form_objective};
use starbeam::system::{effective_channels, mse_matrix_effective};
use starbeam::wmmse::{update_combiners, update_weights};
use starbeam::*;

use common::*;

struct Point {
    ch: Channels,
    trc: Trc,
    w: Vec<M>,
    u: Vec<M>,
    z: Vec<M>,
    eta: PriorityWeights<f64>,
}

fn point<R: Rng>(r: &mut R, n: usize, k: usize) -> Point {
    let ch = random_channels(r, n, 3, 2, k);
    let trc = random_trc(r, n, Protocol::Es);
    let w = random_precoders(r, k, 3, 2, 1.5);
    let hbar = effective_channels(&ch, &trc).unwrap();
    let u = update_combiners(&hbar, &w, ch.noise_power).unwrap();
    let z = update_weights(&hbar, &w, &u, ch.noise_power).unwrap();
    let eta = PriorityWeights::new((0..k).map(|_| r.random_range(0.5..2.0)).collect()).unwrap();
    Point { ch, trc, w, u, z, eta }
}

/// `Σ_k η_k tr(Z_k E_k)` from loop-built effective channels.
fn weighted_mse(p: &Point, trc: &Trc) -> f64 {
    let hbar = hbar_loop(&p.ch, trc);
    (0..hbar.len())
        .map(|k| {
            let e = mse_matrix_effective(k, &p.u[k], &hbar, &p.w, p.ch.noise_power).0;
            p.eta.as_slice()[k] * (&p.z[k] * e).trace().re
        })
        .sum()
}

#[test]
fn quadratic_matches_trace_form() {
    let mut r = rng(1);
    for _ in 0..20 {
        let p = point(&mut r, 6, 3);
        let q = build_trc_quadratic(&p.ch, &p.u, &p.z, &p.w, &p.eta);
        for _ in 0..5 {
            let trc = random_trc(&mut r, 6, Protocol::Es);
            let a = q.objective(&trc);
            let b = trace_form_objective(&p.ch, &trc, &p.u, &p.z, &p.w, &p.eta);
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn quadratic_differs_from_weighted_mse_by_a_constant() {
    let mut r = rng(2);
    for _ in 0..20 {
        let p = point(&mut r, 5, 2);
        let q = build_trc_quadratic(&p.ch, &p.u, &p.z, &p.w, &p.eta);
        let offset = weighted_mse(&p, &p.trc) - q.objective(&p.trc);
        for _ in 0..5 {
            let trc = random_trc(&mut r, 5, Protocol::Es);
            let got = weighted_mse(&p, &trc) - q.objective(&trc);
            assert!((got - offset).abs() < 1e-9 * (1.0 + offset.abs()));
        }
    }
}

#[test]
fn quadratic_blocks_are_hermitian_psd() {
    let mut r = rng(3);
    let p = point(&mut r, 7, 4);
    let q = build_trc_quadratic(&p.ch, &p.u, &p.z, &p.w, &p.eta);
    assert!(q.hermitian_defect() < 1e-12 * q.scale());
    for f in &q.f {
        assert!(f.symmetric_eigenvalues().min() > -1e-10 * q.scale());
    }
}

#[test]
fn lift_reproduces_the_quadratic_on_rank_one_points() {
    let mut r = rng(4);
    for _ in 0..20 {
        let p = point(&mut r, 5, 2);
        let q = build_trc_quadratic(&p.ch, &p.u, &p.z, &p.w, &p.eta);
        let all: Vec<usize> = (0..5).collect();
        let lift = lift_augmented(&q, [all.clone(), all]);
        let trc = random_trc(&mut r, 5, Protocol::Es);
        let v = Side::BOTH.map(|s| {
            let x = lift.augment(s, trc.side(s));
            &x * x.adjoint()
        });
        assert!((lift.objective(&v) - q.objective(&trc)).abs() < 1e-10 * (1.0 + q.scale()));
    }
}

#[test]
fn lift_restricted_to_active_elements_ignores_the_rest() {
    let mut r = rng(5);
    let p = point(&mut r, 6, 2);
    let q = build_trc_quadratic(&p.ch, &p.u, &p.z, &p.w, &p.eta);
    let lift = lift_augmented(&q, [vec![0, 1, 2], vec![3, 4, 5]]);
    let th: Vec<f64> = (0..6).map(|_| r.random_range(0.0..6.0)).collect();
    let trc = Trc::from_polar(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], &th, &th, Protocol::Ms).unwrap();
    let v = Side::BOTH.map(|s| {
        let x = lift.augment(s, trc.side(s));
        &x * x.adjoint()
    });
    assert_eq!(v[0].nrows(), 4);
    assert!((lift.objective(&v) - q.objective(&trc)).abs() < 1e-10 * (1.0 + q.scale()));
}

#[test]
fn rank_surrogate_upper_bounds_violation() {
    let mut r = rng(6);
    for _ in 0..100 {
        let n = r.random_range(2..6);
        let rank = r.random_range(1..=n);
        let v = psd(&mut r, n, rank);
        let rank = r.random_range(1..=n);
        let v_ref = psd(&mut r, n, rank);
        let s = sca_rank_surrogate(&v, &v_ref);
        assert!(s >= rank_one_violation(&v) - 1e-10 * (1.0 + v.norm()));
        let tight = sca_rank_surrogate(&v_ref, &v_ref);
        assert!((tight - rank_one_violation(&v_ref)).abs() < 1e-10 * (1.0 + v_ref.norm()));
    }
}

#[test]
fn rank_violation_vanishes_on_rank_one() {
    let mut r = rng(7);
    let x = cvec(&mut r, 5);
    assert!(rank_one_violation(&(&x * x.adjoint())) < 1e-12 * x.norm_squared());
}

#[test]
fn binary_surrogate_dominates_on_a_grid() {
    for i in 0..=100 {
        let rho = i as f64 / 100.0;
        for j in 0..=100 {
            let rho_ref = j as f64 / 100.0;
            let s = sca_binary_surrogate(rho, rho_ref);
            assert!(s >= rho - rho * rho - 1e-15);
            if i == j {
                assert!((s - (rho - rho * rho)).abs() < 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn side_objective_matches_explicit_sum(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let p = point(&mut r, n, 2);
        let q = build_trc_quadratic(&p.ch, &p.u, &p.z, &p.w, &p.eta);
        for side in Side::BOTH {
            let v = p.trc.side(side);
            let (f, e) = (q.f(side), q.e(side));
            let mut want = 0.0;
            for a in 0..n {
                for b in 0..n {
                    want += (v[a].conj() * f[(a, b)] * v[b]).re;
                }
                want -= 2.0 * (e[a] * v[a]).re;
            }
            prop_assert!((q.side_objective(side, v) - want).abs() < 1e-10 * (1.0 + want.abs()));
        }
    }
}
