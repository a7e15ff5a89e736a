//! Scenario geometry: element/antenna coordinates, array responses, path loss
//! and user placement.
//!
//! Coordinate conventions: the surface lies in the YZ-plane with its reference
//! element at `star_position`; elements are numbered row by row from the
//! bottom, so element `n` (0-based) sits at
//! `star_position + (0, (n mod N_y)·d_R, ⌊n / N_y⌋·d_R)`. Users live in the
//! XY-plane at the height of the reference element; the reflection region is
//! `x > 0` and the transmission region `x < 0`. User ULAs are parallel to the
//! y-axis.
//!
//! The element spacing defaults to a full wavelength (`d_R = λ_c`), which is
//! larger than the usual half-wavelength choice but is what the reference
//! system uses.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, STREAM_PLACEMENT};
use crate::scalar::{cis, CVec, Real};

/// Which half-space of the surface a user occupies (and therefore which
/// coefficient vector serves it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Transmission region (`x < 0`).
    Transmit,
    /// Reflection region (`x > 0`).
    Reflect,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Transmit, Side::Reflect];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Side::Transmit => 0,
            Side::Reflect => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Transmit => "T",
            Side::Reflect => "R",
        }
    }

    /// Range of the polar angle (from the +x axis) used when sampling users.
    fn angle_window(self) -> (f64, f64) {
        let margin = 15f64.to_radians();
        match self {
            Side::Reflect => (-PI / 2.0 + margin, PI / 2.0 - margin),
            Side::Transmit => (PI / 2.0 + margin, 3.0 * PI / 2.0 - margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPlacement<T: Real> {
    pub index: usize,
    pub side: Side,
    /// Polar angle of the reference antenna around the surface reference
    /// element, measured from the +x axis in the XY-plane (radians).
    pub angle: T,
    /// Distance from the surface reference element to the reference antenna.
    pub radius: T,
    /// Reference-antenna coordinates.
    pub position: Vector3<T>,
}

/// Physical layout of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry<T: Real> {
    pub bs_position: Vector3<T>,
    pub star_position: Vector3<T>,
    pub n_y: usize,
    pub n_z: usize,
    /// Surface element spacing `d_R`.
    pub star_spacing: T,
    /// BS antenna spacing `d_B`.
    pub bs_spacing: T,
    /// User antenna spacing `d_U`.
    pub user_spacing: T,
    pub wavelength: T,
    pub bs_antennas: usize,
    pub user_antennas: usize,
    pub users: Vec<UserPlacement<T>>,
}

/// Scatterer of the BS→surface channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCluster<T: Real> {
    /// Azimuth angle of arrival at the surface.
    pub azimuth: T,
    /// Elevation angle of arrival at the surface.
    pub elevation: T,
    /// Angle of departure at the BS.
    pub departure: T,
}

impl<T: Real> ScenarioGeometry<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_y == 0 || self.n_z == 0 {
            return Err(Error::invalid("n_y/n_z", "element grid must be at least 1x1"));
        }
        if self.bs_antennas == 0 || self.user_antennas == 0 {
            return Err(Error::invalid("antennas", "antenna counts must be positive"));
        }
        for (name, v) in [
            ("star_spacing", self.star_spacing),
            ("bs_spacing", self.bs_spacing),
            ("user_spacing", self.user_spacing),
            ("wavelength", self.wavelength),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        for u in &self.users {
            if !(u.radius > T::zero()) {
                return Err(Error::invalid("radius", format!("user {} has radius {}", u.index, u.radius)));
            }
        }
        Ok(())
    }

    /// Number of surface elements `N = N_y · N_z`.
    pub fn elements(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn wavenumber(&self) -> T {
        T::two_pi() / self.wavelength
    }

    pub fn user_sides(&self) -> Vec<Side> {
        self.users.iter().map(|u| u.side).collect()
    }

    /// Coordinates of element `n` (0-based).
    pub fn element_position(&self, n: usize) -> Result<Vector3<T>> {
        let total = self.elements();
        if n >= total {
            return Err(Error::IndexOutOfRange {
                what: "surface element",
                index: n,
                limit: total,
            });
        }
        let (iy, iz) = (n % self.n_y, n / self.n_y);
        Ok(self.star_position
            + Vector3::new(
                T::zero(),
                T::lit(iy as f64) * self.star_spacing,
                T::lit(iz as f64) * self.star_spacing,
            ))
    }

    /// Coordinates of antenna `m` (0-based) of user `k`.
    pub fn user_antenna_position(&self, k: usize, m: usize) -> Result<Vector3<T>> {
        let user = self.users.get(k).ok_or(Error::IndexOutOfRange {
            what: "user",
            index: k,
            limit: self.users.len(),
        })?;
        if m >= self.user_antennas {
            return Err(Error::IndexOutOfRange {
                what: "user antenna",
                index: m,
                limit: self.user_antennas,
            });
        }
        Ok(user.position + Vector3::new(T::zero(), T::lit(m as f64) * self.user_spacing, T::zero()))
    }

    /// UPA response: `[z-ramp(sinφ sinϑ)] ⊗ [y-ramp(cosϑ)]`, matching the
    /// row-by-row element numbering.
    pub fn star_array_response(&self, azimuth: T, elevation: T) -> CVec<T> {
        let k = self.wavenumber();
        let step_y = k * self.star_spacing * elevation.cos();
        let step_z = k * self.star_spacing * azimuth.sin() * elevation.sin();
        DVector::from_fn(self.elements(), |n, _| {
            let (iy, iz) = (n % self.n_y, n / self.n_y);
            cis(T::lit(iz as f64) * step_z + T::lit(iy as f64) * step_y)
        })
    }

    /// BS ULA response for departure angle `gamma`.
    pub fn bs_array_response(&self, gamma: T) -> CVec<T> {
        ula_response(self.bs_antennas, self.wavenumber() * self.bs_spacing, gamma)
    }

    /// User ULA response for arrival angle `gamma`.
    pub fn user_array_response(&self, gamma: T) -> CVec<T> {
        ula_response(self.user_antennas, self.wavenumber() * self.user_spacing, gamma)
    }

    /// Aperture diagonal `sqrt((N_y d_R)^2 + (N_z d_R)^2)`.
    pub fn aperture(&self) -> T {
        let wy = T::lit(self.n_y as f64) * self.star_spacing;
        let wz = T::lit(self.n_z as f64) * self.star_spacing;
        (wy * wy + wz * wz).sqrt()
    }

    pub fn rayleigh_distance(&self) -> T {
        rayleigh_distance(self.aperture(), self.wavelength)
    }

    /// BS→surface distance.
    pub fn bs_star_distance(&self) -> T {
        (self.star_position - self.bs_position).norm()
    }
}

fn ula_response<T: Real>(len: usize, kd: T, gamma: T) -> CVec<T> {
    let step = kd * gamma.cos();
    DVector::from_fn(len, |m, _| cis(T::lit(m as f64) * step))
}

/// Large-scale path loss `C_0 (d / D_0)^(-α)` with `C_0 = −30 dB`, `D_0 = 1 m`,
/// `α = 2.2`.
pub fn path_loss_coefficient<T: Real>(distance: T) -> Result<T> {
    if !(distance > T::zero()) {
        return Err(Error::invalid("distance", format!("must be positive, got {distance}")));
    }
    Ok(T::lit(1e-3) * distance.powf(T::lit(-2.2)))
}

/// Rayleigh distance `2 D^2 / λ`.
pub fn rayleigh_distance<T: Real>(aperture: T, wavelength: T) -> T {
    T::lit(2.0) * aperture * aperture / wavelength
}

/// User layout family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserSetup {
    /// Users of one region sit at different angles.
    Random,
    /// Users of one region share a single angle and differ in distance.
    Inline,
}

impl UserSetup {
    pub fn label(self) -> &'static str {
        match self {
            UserSetup::Random => "random",
            UserSetup::Inline => "inline",
        }
    }
}

/// Knobs for [`sample_scenario`]. Defaults describe the 10 GHz desk-scale
/// system: 16-antenna BS at the origin, a 5×8 surface at (0, 50, 0), four
/// 4-antenna users split two per region.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams<T: Real> {
    pub wavelength: T,
    pub n_y: usize,
    pub n_z: usize,
    /// Element spacing in wavelengths.
    pub star_spacing_wavelengths: T,
    pub bs_antennas: usize,
    pub user_antennas: usize,
    pub users: usize,
    pub bs_position: Vector3<T>,
    pub star_position: Vector3<T>,
    /// Candidate user radii in meters.
    pub radii: Vec<T>,
}

impl<T: Real> Default for ScenarioParams<T> {
    fn default() -> Self {
        Self {
            wavelength: T::lit(0.03),
            n_y: 5,
            n_z: 8,
            star_spacing_wavelengths: T::one(),
            bs_antennas: 16,
            user_antennas: 4,
            users: 4,
            bs_position: Vector3::zeros(),
            star_position: Vector3::new(T::zero(), T::lit(50.0), T::zero()),
            radii: vec![T::lit(2.0), T::lit(4.0)],
        }
    }
}

impl<T: Real> ScenarioParams<T> {
    /// Users `0..ceil(K/2)` are transmission-side, the rest reflection-side.
    pub fn user_side(&self, k: usize) -> Side {
        if k < self.users.div_ceil(2) {
            Side::Transmit
        } else {
            Side::Reflect
        }
    }
}

/// Minimum angular separation between same-region users in the random setup.
const MIN_SEPARATION_DEG: f64 = 10.0;

/// Draws a user layout. Pure function of `(params, setup, seed)`.
pub fn sample_scenario<T: Real>(
    params: &ScenarioParams<T>,
    setup: UserSetup,
    seed: u64,
) -> Result<ScenarioGeometry<T>> {
    if params.users == 0 {
        return Err(Error::invalid("users", "at least one user is required"));
    }
    if params.radii.is_empty() {
        return Err(Error::invalid("radii", "no candidate radii"));
    }
    let mut rng = substream(seed, STREAM_PLACEMENT);
    let mut users = Vec::with_capacity(params.users);
    for side in Side::BOTH {
        let members: Vec<usize> = (0..params.users).filter(|&k| params.user_side(k) == side).collect();
        let (lo, hi) = side.angle_window();
        let shared = rng.random_range(lo..hi);
        let mut taken: Vec<f64> = Vec::new();
        for (j, &k) in members.iter().enumerate() {
            let (angle, radius) = match setup {
                UserSetup::Inline => {
                    // Distinct radii along the shared ray: r_0, r_1, ... and
                    // beyond the candidate list keep stepping by the last gap.
                    let radius = if j < params.radii.len() {
                        params.radii[j].to_f64_lossy()
                    } else {
                        let last = params.radii[params.radii.len() - 1].to_f64_lossy();
                        last + 2.0 * (j + 1 - params.radii.len()) as f64
                    };
                    (shared, radius)
                }
                UserSetup::Random => {
                    let angle = draw_separated(&mut rng, lo, hi, &taken);
                    taken.push(angle);
                    let idx = rng.random_range(0..params.radii.len());
                    (angle, params.radii[idx].to_f64_lossy())
                }
            };
            let (angle, radius) = (T::lit(angle), T::lit(radius));
            let position = params.star_position
                + Vector3::new(radius * angle.cos(), radius * angle.sin(), T::zero());
            users.push(UserPlacement {
                index: k,
                side,
                angle,
                radius,
                position,
            });
        }
    }
    users.sort_by_key(|u| u.index);

    let spacing = params.wavelength * params.star_spacing_wavelengths;
    let geo = ScenarioGeometry {
        bs_position: params.bs_position,
        star_position: params.star_position,
        n_y: params.n_y,
        n_z: params.n_z,
        star_spacing: spacing,
        bs_spacing: params.wavelength * T::lit(0.5),
        user_spacing: params.wavelength * T::lit(0.5),
        wavelength: params.wavelength,
        bs_antennas: params.bs_antennas,
        user_antennas: params.user_antennas,
        users,
    };
    geo.validate()?;
    Ok(geo)
}

fn draw_separated<R: Rng>(rng: &mut R, lo: f64, hi: f64, taken: &[f64]) -> f64 {
    let sep = MIN_SEPARATION_DEG.to_radians();
    // Rejection sampling; the window is 150° wide so this terminates quickly
    // for any realistic number of users per region.
    for _ in 0..10_000 {
        let a = rng.random_range(lo..hi);
        if taken.iter().all(|t| (a - t).abs() >= sep) {
            return a;
        }
    }
    rng.random_range(lo..hi)
}

/// Draws `count` scatterers with all three angles uniform on `(0, π)`.
pub fn sample_clusters<T: Real, R: Rng>(rng: &mut R, count: usize) -> Vec<PathCluster<T>> {
    (0..count)
        .map(|_| PathCluster {
            azimuth: T::lit(rng.random_range(0.0..PI)),
            elevation: T::lit(rng.random_range(0.0..PI)),
            departure: T::lit(rng.random_range(0.0..PI)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    fn geo() -> ScenarioGeometry<f64> {
        sample_scenario(&ScenarioParams::default(), UserSetup::Random, 3).unwrap()
    }

    #[test]
    fn element_positions_follow_row_major_numbering() {
        let g = geo();
        assert_eq!(g.element_position(0).unwrap(), Vector3::new(0.0, 50.0, 0.0));
        let p = g.element_position(1).unwrap();
        assert!((p - Vector3::new(0.0, 50.03, 0.0)).norm() < 1e-12);
        let p = g.element_position(5).unwrap();
        assert!((p - Vector3::new(0.0, 50.0, 0.03)).norm() < 1e-12);
        assert!(matches!(g.element_position(40), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn user_antennas_step_along_y() {
        let g = geo();
        let base = g.users[1].position;
        assert_eq!(g.user_antenna_position(1, 0).unwrap(), base);
        assert!((g.user_antenna_position(1, 1).unwrap() - base - Vector3::new(0.0, 0.015, 0.0)).norm() < 1e-12);
        assert!((g.user_antenna_position(1, 3).unwrap() - base - Vector3::new(0.0, 0.045, 0.0)).norm() < 1e-12);
        assert!(g.user_antenna_position(1, 4).is_err());
        assert!(g.user_antenna_position(9, 0).is_err());
    }

    #[test]
    fn array_response_special_cases() {
        let mut g = geo();
        // sinφ sinϑ = 0 and cosϑ = 0: flat response.
        let flat = g.star_array_response(0.0, std::f64::consts::FRAC_PI_2);
        assert!(flat.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-12));
        g.n_y = 2;
        g.n_z = 1;
        // k d_R cosϑ = π with d_R = λ → cosϑ = 1/2.
        let half = g.star_array_response(0.0, (0.5f64).acos());
        assert!((half[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!((half[1] - Complex::new(-1.0, 0.0)).norm() < 1e-12);

        let g = geo();
        assert!(g.bs_array_response(std::f64::consts::FRAC_PI_2).iter().all(|z| (z.re - 1.0).abs() < 1e-12));
        let mut g2 = g.clone();
        g2.bs_antennas = 2;
        // k d_B cosγ = π/2 with d_B = λ/2 → cosγ = 1/2.
        let r = g2.bs_array_response((0.5f64).acos());
        assert!((r[1] - Complex::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn path_loss_values() {
        assert!((path_loss_coefficient(1.0f64).unwrap() - 1e-3).abs() < 1e-18);
        let b50 = path_loss_coefficient(50.0f64).unwrap();
        assert!((b50 - 1e-3 * 50f64.powf(-2.2)).abs() < 1e-20);
        let ratio = path_loss_coefficient(100.0f64).unwrap() / b50;
        assert!((ratio - 2f64.powf(-2.2)).abs() < 1e-12);
        assert!(path_loss_coefficient(0.0f64).is_err());
        assert!(path_loss_coefficient(-1.0f64).is_err());
    }

    #[test]
    fn rayleigh_distance_values() {
        let lambda = 299_792_458.0 / 28e9;
        assert!((rayleigh_distance(0.5f64, lambda) - 46.7).abs() < 0.5);
        assert!((geo().rayleigh_distance() - 5.34).abs() < 0.01);
        assert_eq!(rayleigh_distance(0.0f64, 0.03), 0.0);
    }

    #[test]
    fn inline_users_share_angle_per_region() {
        for seed in 0..10 {
            let g = sample_scenario(&ScenarioParams::<f64>::default(), UserSetup::Inline, seed).unwrap();
            assert_eq!(g.users[0].angle, g.users[1].angle);
            assert_eq!(g.users[2].angle, g.users[3].angle);
            assert_ne!(g.users[0].radius, g.users[1].radius);
            assert_eq!(g.users[0].side, Side::Transmit);
            assert_eq!(g.users[3].side, Side::Reflect);
            assert!(g.users[0].position.x < 0.0 && g.users[3].position.x > 0.0);
        }
    }

    #[test]
    fn random_users_are_separated_and_in_near_field() {
        for seed in 0..20 {
            let g = sample_scenario(&ScenarioParams::<f64>::default(), UserSetup::Random, seed).unwrap();
            assert!((g.users[0].angle - g.users[1].angle).abs() >= 10f64.to_radians());
            assert!((g.users[2].angle - g.users[3].angle).abs() >= 10f64.to_radians());
            for u in &g.users {
                assert!(u.radius <= 4.0 && u.radius < g.rayleigh_distance());
                let (lo, hi) = u.side.angle_window();
                assert!(u.angle > lo && u.angle < hi);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = ScenarioParams::<f64>::default();
        assert_eq!(
            sample_scenario(&p, UserSetup::Random, 11).unwrap(),
            sample_scenario(&p, UserSetup::Random, 11).unwrap()
        );
        assert_ne!(
            sample_scenario(&p, UserSetup::Random, 11).unwrap(),
            sample_scenario(&p, UserSetup::Random, 12).unwrap()
        );
    }
}
