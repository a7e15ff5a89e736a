//! Joint BS precoding and STAR-RIS coefficient design for near-field
//! multi-user MIMO downlinks.
//!
//! The pipeline: [`geometry`] places the BS, the surface and the users;
//! [`channel`] synthesizes the BS→surface and surface→user matrices;
//! [`system`] evaluates rates; [`wmmse`] holds the combiner/weight/precoder
//! updates; [`ele`] and [`pen`] (with its solver [`sdp`]) optimize the
//! surface; [`bcd`] alternates between all of them.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`.

pub mod bcd;
pub mod channel;
pub mod ele;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod pen;
pub mod quadratic;
pub mod rng;
pub mod scalar;
pub mod sdp;
pub mod system;
pub mod wmmse;

pub use bcd::{
    evaluate_solution, run_bcd, Algorithm, Baseline, BcdConfig, BcdOutcome, ConvergenceTrace, Evaluation, ReportChannel,
    Termination,
};
pub use channel::{dbm_to_watts, synthesize_channels, ChannelSet, ChannelVariant};
pub use error::{Error, Result};
pub use geometry::{sample_scenario, ScenarioGeometry, ScenarioParams, Side, UserSetup};
pub use scalar::{CMat, CVec, Cplx, Real};
pub use system::{AmplitudeMask, BeamformerSet, PriorityWeights, Protocol, TrcState};

/// `f64` complex scalar.
pub type Complex64 = Cplx<f64>;
/// `f64` complex matrix.
pub type CMatrix = CMat<f64>;
/// `f64` complex vector.
pub type CVector = CVec<f64>;
pub type Geometry = ScenarioGeometry<f64>;
pub type Channels = ChannelSet<f64>;
pub type Trc = TrcState<f64>;
pub type Beamformers = BeamformerSet<f64>;
pub type Config = BcdConfig<f64>;
pub type Outcome = BcdOutcome<f64>;
