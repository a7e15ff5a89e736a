mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;
use starbeam::channel::{far_field_bs_ris_channel, far_field_user_channel, near_field_los_channel, user_angles};
use starbeam::geometry::{path_loss_coefficient, rayleigh_distance, sample_clusters};
use starbeam::linalg::singular_values;
use starbeam::*;

use common::*;

fn params(radii: Vec<f64>) -> ScenarioParams<f64> {
    ScenarioParams {
        radii,
        ..Default::default()
    }
}

fn ula(len: usize, kd: f64, gamma: f64) -> DVector<C> {
    DVector::from_fn(len, |m, _| {
        let ph = kd * m as f64 * gamma.cos();
        c(ph.cos(), ph.sin())
    })
}

#[test]
fn element_grid_is_row_major_from_the_reference_element() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Random, 0).unwrap();
    for n in 0..geo.elements() {
        let p = geo.element_position(n).unwrap();
        let expect = Vector3::new(0.0, 50.0 + 0.03 * (n % 5) as f64, 0.03 * (n / 5) as f64);
        assert!((p - expect).norm() < 1e-12, "element {n}");
    }
    assert!(geo.element_position(40).is_err());
}

#[test]
fn user_antennas_extend_along_y() {
    let geo = sample_scenario(&params(vec![3.0]), UserSetup::Random, 5).unwrap();
    for k in 0..geo.num_users() {
        let p0 = geo.user_antenna_position(k, 0).unwrap();
        assert!((p0 - geo.users[k].position).norm() < 1e-12);
        let p3 = geo.user_antenna_position(k, 3).unwrap();
        assert!((p3 - p0 - Vector3::new(0.0, 0.045, 0.0)).norm() < 1e-12);
    }
    assert!(geo.user_antenna_position(0, 4).is_err());
    assert!(geo.user_antenna_position(9, 0).is_err());
}

#[test]
fn surface_response_is_kronecker_of_two_ramps() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Random, 0).unwrap();
    let kd = 2.0 * PI;
    for (az, el) in [(0.3, 1.1), (2.0, 0.4), (PI / 2.0, PI / 2.0)] {
        let e = geo.star_array_response(az, el);
        let ry = ula(5, kd, el);
        let rz = DVector::from_fn(8, |i, _| {
            let ph = kd * i as f64 * az.sin() * el.sin();
            c(ph.cos(), ph.sin())
        });
        let kron = DVector::from_fn(40, |n, _| rz[n / 5] * ry[n % 5]);
        assert!((e - kron).norm() < 1e-12);
    }
}

#[test]
fn half_wavelength_ulas() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Random, 0).unwrap();
    let g = 0.7;
    assert!((geo.bs_array_response(g) - ula(16, PI, g)).norm() < 1e-12);
    assert!((geo.user_array_response(g) - ula(4, PI, g)).norm() < 1e-12);
}

#[test]
fn near_field_entries_match_free_space_formula() {
    let geo = sample_scenario(&params(vec![2.0, 4.0]), UserSetup::Random, 9).unwrap();
    for k in 0..geo.num_users() {
        let h = near_field_los_channel(&geo, k).unwrap();
        for (m, n) in [(0, 0), (3, 39), (2, 17)] {
            let r = (geo.user_antenna_position(k, m).unwrap() - geo.element_position(n).unwrap()).norm();
            let ph = -2.0 * PI * r / 0.03;
            let want = c(ph.cos(), ph.sin()) * (0.03 / (4.0 * PI * r));
            assert!((h[(m, n)] - want).norm() < 1e-12 * want.norm());
        }
    }
}

#[test]
fn far_field_channel_energy_and_rank() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Random, 4).unwrap();
    for k in 0..geo.num_users() {
        let h = far_field_user_channel(&geo, k, 0.25).unwrap();
        assert!((h.norm_squared() - 0.25 * 160.0 * 160.0).abs() < 1e-8);
        let sv = singular_values(&h);
        assert!(sv[1] < 1e-10 * sv[0]);
    }
}

fn correlation(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    let inner: C = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    inner.norm() / (a.norm() * b.norm())
}

#[test]
fn far_field_approximates_near_field_beyond_rayleigh_distance() {
    let mut last = 0.0;
    for r in [4.0, 20.0, 200.0] {
        let geo = sample_scenario(&params(vec![r]), UserSetup::Random, 21).unwrap();
        let mut worst = 1.0f64;
        for k in 0..geo.num_users() {
            let near = near_field_los_channel(&geo, k).unwrap();
            let far = far_field_user_channel(&geo, k, near[(0, 0)].norm_sqr()).unwrap();
            worst = worst.min(correlation(&near, &far));
        }
        assert!(worst > last - 1e-3, "correlation should grow with distance");
        last = worst;
    }
    assert!(last > 0.99);
}

#[test]
fn user_angles_point_from_surface_to_user() {
    let geo = sample_scenario(&params(vec![3.0]), UserSetup::Random, 2).unwrap();
    for k in 0..geo.num_users() {
        let (gamma, az, el) = user_angles(&geo, k).unwrap();
        let u = (geo.users[k].position - geo.star_position).normalize();
        assert!((gamma - el).abs() < 1e-15);
        assert!((el.cos() + u.y).abs() < 1e-12);
        assert!((az.sin() * el.sin() + u.z).abs() < 1e-12);
    }
}

#[test]
fn near_field_is_rank_sufficient_close_in() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Inline, 3).unwrap();
    for k in 0..geo.num_users() {
        let sv = singular_values(&near_field_los_channel(&geo, k).unwrap());
        assert!(sv[1] > 1e-3 * sv[0]);
    }
}

#[test]
fn bs_surface_rank_bounded_by_cluster_count() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Random, 0).unwrap();
    let mut r = rng(17);
    for count in [1usize, 3, 6] {
        let clusters = sample_clusters::<f64, _>(&mut r, count);
        let g = far_field_bs_ris_channel(&geo, &clusters, 1e-6).unwrap();
        let sv = singular_values(&g);
        assert!(sv[count - 1] > 1e-8 * sv[0]);
        assert!(sv[count] < 1e-10 * sv[0]);
    }
    assert!(far_field_bs_ris_channel(&geo, &[], 1.0).is_err());
}

#[test]
fn path_loss_power_law() {
    assert!((path_loss_coefficient(1.0f64).unwrap() - 1e-3).abs() < 1e-18);
    let ratio = path_loss_coefficient(10.0).unwrap() / path_loss_coefficient(5.0).unwrap();
    assert!((ratio - 2f64.powf(-2.2)).abs() < 1e-12);
    assert!(path_loss_coefficient(0.0).is_err());
}

#[test]
fn power_conversion() {
    assert!((dbm_to_watts(30.0f64) - 1.0).abs() < 1e-15);
    assert!((dbm_to_watts(-110.0f64) / 1e-14 - 1.0).abs() < 1e-12);
}

#[test]
fn rayleigh_distance_of_the_default_surface() {
    let geo = sample_scenario(&params(vec![2.0]), UserSetup::Random, 0).unwrap();
    let d = (0.15f64 * 0.15 + 0.24 * 0.24).sqrt();
    assert!((geo.aperture() - d).abs() < 1e-12);
    assert!((geo.rayleigh_distance() - rayleigh_distance(d, 0.03)).abs() < 1e-12);
}

#[test]
fn synthesized_channels_have_documented_shapes() {
    let (geo, ch) = desk_scenario(5, 8, UserSetup::Random, 31);
    ch.validate().unwrap();
    assert_eq!(ch.g.shape(), (40, 16));
    assert_eq!(ch.h.len(), 4);
    assert!(ch.h.iter().all(|h| h.shape() == (4, 40)));
    assert_eq!(ch.sides, geo.user_sides());
    let far = ch.to_far_field(&geo).unwrap();
    assert_eq!(far.g, ch.g);
    assert!(far.variants.iter().all(|v| *v == ChannelVariant::Far));
}

#[test]
fn inline_users_share_their_region_angle() {
    let geo = sample_scenario(&params(vec![2.0, 4.0]), UserSetup::Inline, 8).unwrap();
    for side in Side::BOTH {
        let members: Vec<_> = geo.users.iter().filter(|u| u.side == side).collect();
        assert_eq!(members.len(), 2);
        assert!((members[0].angle - members[1].angle).abs() < 1e-15);
        assert!((members[0].radius - members[1].radius).abs() > 1.0);
    }
}

proptest! {
    #[test]
    fn users_land_in_their_region(seed in any::<u64>(), inline in any::<bool>()) {
        let setup = if inline { UserSetup::Inline } else { UserSetup::Random };
        let geo = sample_scenario(&params(vec![2.0, 4.0]), setup, seed).unwrap();
        for u in &geo.users {
            let x = u.position.x - geo.star_position.x;
            match u.side {
                Side::Reflect => prop_assert!(x > 0.0),
                Side::Transmit => prop_assert!(x < 0.0),
            }
            prop_assert!((u.position - geo.star_position).norm() - u.radius < 1e-9);
            prop_assert!((u.position.z - geo.star_position.z).abs() < 1e-12);
        }
        if !inline {
            for a in &geo.users {
                for b in &geo.users {
                    if a.index < b.index && a.side == b.side {
                        prop_assert!((a.angle - b.angle).abs() >= 10f64.to_radians() - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn scenario_sampling_is_a_pure_function_of_the_seed(seed in any::<u64>()) {
        let a = sample_scenario(&params(vec![2.0, 4.0]), UserSetup::Random, seed).unwrap();
        let b = sample_scenario(&params(vec![2.0, 4.0]), UserSetup::Random, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
