//! Channel synthesis: geometric BS→surface channel, spherical-wave LoS
//! surface→user channels and their planar-wave (far-field) counterparts.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::geometry::{path_loss_coefficient, sample_clusters, PathCluster, ScenarioGeometry, Side};
use crate::rng::{substream, STREAM_CLUSTERS};
use crate::scalar::{cis, cr, CMat, Real};

/// Which propagation model produced a surface→user matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelVariant {
    Near,
    Far,
}

/// All channel matrices of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T: Real> {
    /// BS→surface, `N × M_b`.
    pub g: CMat<T>,
    /// Surface→user `k`, `M × N`.
    pub h: Vec<CMat<T>>,
    pub variants: Vec<ChannelVariant>,
    /// Region of each user; selects the coefficient vector that serves it.
    pub sides: Vec<Side>,
    /// Noise power `σ²` in watts.
    pub noise_power: T,
    /// Path loss of the BS→surface link.
    pub pathloss: T,
}

impl<T: Real> ChannelSet<T> {
    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn elements(&self) -> usize {
        self.g.nrows()
    }

    pub fn bs_antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn user_antennas(&self) -> usize {
        self.h.first().map_or(0, |h| h.nrows())
    }

    pub fn validate(&self) -> Result<()> {
        let (n, mb) = self.g.shape();
        if self.h.len() != self.sides.len() || self.h.len() != self.variants.len() {
            return Err(Error::DimensionMismatch {
                context: "channel set",
                expected: format!("{} users", self.h.len()),
                got: format!("{} sides, {} variants", self.sides.len(), self.variants.len()),
            });
        }
        let m = self.user_antennas();
        for h in &self.h {
            if h.shape() != (m, n) {
                return Err(Error::DimensionMismatch {
                    context: "surface-user channel",
                    expected: format!("{m}x{n}"),
                    got: format!("{}x{}", h.nrows(), h.ncols()),
                });
            }
        }
        if mb == 0 || n == 0 {
            return Err(Error::invalid("g", "empty BS-surface channel"));
        }
        if !(self.noise_power > T::zero()) {
            return Err(Error::invalid("noise_power", "must be positive"));
        }
        Ok(())
    }

    /// Copy with the surface→user matrices replaced by their far-field
    /// counterparts.
    pub fn to_far_field(&self, geo: &ScenarioGeometry<T>) -> Result<Self> {
        let h = (0..geo.num_users())
            .map(|k| {
                let near = near_field_los_channel(geo, k)?;
                far_field_user_channel(geo, k, near[(0, 0)].modulus_squared())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            variants: vec![ChannelVariant::Far; h.len()],
            h,
            ..self.clone()
        })
    }
}

/// `sqrt(β M_b N / L) Σ_l e_STAR(φ_l, ϑ_l) e_BS(γ_l)^H`.
pub fn far_field_bs_ris_channel<T: Real>(
    geo: &ScenarioGeometry<T>,
    clusters: &[PathCluster<T>],
    beta: T,
) -> Result<CMat<T>> {
    if clusters.is_empty() {
        return Err(Error::invalid("clusters", "at least one scatterer is required"));
    }
    if beta < T::zero() {
        return Err(Error::invalid("beta", "must be non-negative"));
    }
    let (n, mb) = (geo.elements(), geo.bs_antennas);
    let scale = (beta * T::lit((mb * n) as f64) / T::lit(clusters.len() as f64)).sqrt();
    let mut g = CMat::zeros(n, mb);
    for c in clusters {
        let a = geo.star_array_response(c.azimuth, c.elevation);
        let b = geo.bs_array_response(c.departure);
        g += a * b.adjoint();
    }
    Ok(g * cr(scale))
}

/// Spherical-wave LoS channel of user `k`:
/// `[H]_{m,n} = λ/(4π r_mn) · exp(−j 2π r_mn / λ)`.
pub fn near_field_los_channel<T: Real>(geo: &ScenarioGeometry<T>, k: usize) -> Result<CMat<T>> {
    let (m_count, n_count) = (geo.user_antennas, geo.elements());
    let elements = (0..n_count)
        .map(|n| geo.element_position(n))
        .collect::<Result<Vec<_>>>()?;
    let mut h = CMat::zeros(m_count, n_count);
    let four_pi = T::lit(4.0) * T::pi();
    let k_c = geo.wavenumber();
    for m in 0..m_count {
        let u = geo.user_antenna_position(k, m)?;
        for (n, p) in elements.iter().enumerate() {
            let r = (u - p).norm();
            if !(r > T::zero()) {
                return Err(Error::SingularGeometry {
                    user: k,
                    antenna: m,
                    element: n,
                });
            }
            h[(m, n)] = cis(-k_c * r) * cr(geo.wavelength / (four_pi * r));
        }
    }
    Ok(h)
}

/// Angles under which user `k`'s reference antenna sees the surface, in the
/// conventions of the array-response functions: `(γ_k, φ_k, ϑ_k)`.
///
/// They are chosen so that the far-field matrix is the first-order expansion
/// of the spherical wavefront around the reference pair (antenna 1,
/// element 1): with `û` the unit vector from the reference element towards
/// the reference antenna, `cos γ = cos ϑ = −û_y` and `sin φ sin ϑ = −û_z`.
pub fn user_angles<T: Real>(geo: &ScenarioGeometry<T>, k: usize) -> Result<(T, T, T)> {
    let user = geo.user_antenna_position(k, 0)?;
    let diff = user - geo.star_position;
    let r = diff.norm();
    if !(r > T::zero()) {
        return Err(Error::SingularGeometry {
            user: k,
            antenna: 0,
            element: 0,
        });
    }
    let u = diff / r;
    let cos_t = clamp_unit(-u.y);
    let elevation = cos_t.acos();
    let sin_t = elevation.sin();
    let azimuth = if sin_t > T::lit(1e-12) {
        clamp_unit(-u.z / sin_t).asin()
    } else {
        T::zero()
    };
    Ok((elevation, azimuth, elevation))
}

fn clamp_unit<T: Real>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

/// Planar-wave LoS channel `sqrt(β_k M N) e_user(γ_k) e_STAR(φ_k, ϑ_k)^H`.
pub fn far_field_user_channel<T: Real>(geo: &ScenarioGeometry<T>, k: usize, beta_k: T) -> Result<CMat<T>> {
    let (gamma, azimuth, elevation) = user_angles(geo, k)?;
    let scale = (beta_k * T::lit((geo.user_antennas * geo.elements()) as f64)).sqrt();
    let a = geo.user_array_response(gamma);
    let b = geo.star_array_response(azimuth, elevation);
    Ok(a * b.adjoint() * cr(scale))
}

/// Synthesizes `G` (with `clusters` random scatterers drawn from `seed`) and
/// the near-field `H_k` of every user.
pub fn synthesize_channels<T: Real>(
    geo: &ScenarioGeometry<T>,
    clusters: usize,
    noise_power: T,
    seed: u64,
) -> Result<ChannelSet<T>> {
    geo.validate()?;
    if !(noise_power > T::zero()) {
        return Err(Error::invalid("noise_power", "must be positive"));
    }
    let mut rng = substream(seed, STREAM_CLUSTERS);
    let paths = sample_clusters::<T, _>(&mut rng, clusters);
    let beta = path_loss_coefficient(geo.bs_star_distance())?;
    let g = far_field_bs_ris_channel(geo, &paths, beta)?;
    let h = (0..geo.num_users())
        .map(|k| near_field_los_channel(geo, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSet {
        g,
        variants: vec![ChannelVariant::Near; h.len()],
        h,
        sides: geo.user_sides(),
        noise_power,
        pathloss: beta,
    })
}

/// `10^((dBm − 30) / 10)` watts.
pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    T::lit(10.0).powf((dbm - T::lit(30.0)) / T::lit(10.0))
}
