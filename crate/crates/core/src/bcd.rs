//! Block coordinate descent over combiners, weights, precoders and surface
//! coefficients, plus the baseline constraint regimes.

use std::time::Instant;

use rand::Rng;

use crate::channel::ChannelSet;
use crate::ele::ele_sweep;
use crate::error::{Error, Result};
use crate::pen::{pen_optimize, PenConfig, PenReport};
use crate::quadratic::build_trc_quadratic;
use crate::rng::{substream, STREAM_INIT};
use crate::scalar::{CMat, Real};
use crate::system::{
    effective_channels, user_rate_effective, weighted_sum, AmplitudeMask, BeamformerSet, PriorityWeights, Protocol,
    TrcState,
};
use crate::wmmse::{active_beamforming, build_quadratic_forms, matched_filter, update_combiners, update_weights};

/// Coefficient optimizer used in the surface block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Penalty-based SDP route.
    Pen,
    /// Element-wise closed-form route.
    Ele,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Pen => "PEN",
            Algorithm::Ele => "ELE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Baseline {
    /// Full joint design.
    StarRis,
    /// Half the elements only transmit, the other half only reflect.
    ConventionalRis,
    /// Every element splits energy equally.
    UniformEs,
    /// Design on planar-wave user channels.
    FarFieldDesign,
}

impl Baseline {
    pub fn label(self) -> &'static str {
        match self {
            Baseline::StarRis => "star_ris",
            Baseline::ConventionalRis => "conventional_ris",
            Baseline::UniformEs => "uniform_es",
            Baseline::FarFieldDesign => "far_field_design",
        }
    }

    pub fn amplitude_mask<T: Real>(self, n: usize) -> AmplitudeMask<T> {
        match self {
            Baseline::ConventionalRis => AmplitudeMask::split_halves(n),
            Baseline::UniformEs => AmplitudeMask::uniform(n),
            Baseline::StarRis | Baseline::FarFieldDesign => AmplitudeMask::Free,
        }
    }
}

/// Channel model on which the far-field design's final rates are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportChannel {
    /// The spherical-wave channels the users actually experience.
    Near,
    /// The planar-wave channels the design was computed on.
    Design,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdConfig<T: Real> {
    pub algorithm: Algorithm,
    pub protocol: Protocol,
    pub baseline: Baseline,
    pub power_budget: T,
    pub weights: Option<PriorityWeights<T>>,
    /// Stop when the fractional weighted-sum-rate increase drops below this.
    pub eps_bcd: T,
    pub max_iterations: usize,
    pub pen: PenConfig<T>,
    /// Bisection width for energy-splitting amplitudes.
    pub ele_tol: T,
    /// Relative power tolerance of the precoder dual search.
    pub power_tol: T,
    pub report: ReportChannel,
    /// Seed of the random initial phases.
    pub seed: u64,
}

impl<T: Real> BcdConfig<T> {
    pub fn new(algorithm: Algorithm, protocol: Protocol, power_budget: T, seed: u64) -> Self {
        Self {
            algorithm,
            protocol,
            baseline: Baseline::StarRis,
            power_budget,
            weights: None,
            eps_bcd: T::lit(1e-3),
            max_iterations: 200,
            pen: PenConfig::default(),
            ele_tol: T::lit(1e-9),
            power_tol: T::lit(1e-10),
            report: ReportChannel::Near,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
}

/// Condensed diagnostics of one penalty-optimizer call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenCallSummary<T: Real> {
    pub rank_violation: T,
    pub binary_violation: T,
    /// Largest increase between consecutive inner objectives, relative to
    /// `1 + |previous|`; non-positive when the inner loops are monotone.
    pub max_inner_increase: T,
    pub sdp_solves: usize,
    pub sdp_failures: usize,
    pub max_kkt: T,
    pub cap_hit: bool,
    pub kept_warm_start: bool,
}

impl<T: Real> PenCallSummary<T> {
    fn from_report(r: &PenReport<T>) -> Self {
        let mut inc = T::lit(-1.0);
        for seq in &r.inner_objectives {
            for w in seq.windows(2) {
                inc = inc.max((w[1] - w[0]) / (T::one() + w[0].abs()));
            }
        }
        Self {
            rank_violation: r.rank_violation,
            binary_violation: r.binary_violation,
            max_inner_increase: inc,
            sdp_solves: r.sdp_solves,
            sdp_failures: r.sdp_failures,
            max_kkt: r.max_kkt,
            cap_hit: r.cap_hit,
            kept_warm_start: r.kept_warm_start,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace<T: Real> {
    /// Weighted sum rate on the design channels; entry 0 is the initial point,
    /// entry `i` the value after iteration `i`.
    pub wsr: Vec<T>,
    /// Rank-one violation left by the penalty optimizer per iteration (zero
    /// for the element-wise route).
    pub rank_violation: Vec<T>,
    /// Wall time of each iteration in milliseconds.
    pub ms_per_iter: Vec<f64>,
    pub termination: Termination,
    pub pen_calls: Vec<PenCallSummary<T>>,
}

impl<T: Real> ConvergenceTrace<T> {
    pub fn iterations(&self) -> usize {
        self.ms_per_iter.len()
    }

    pub fn mean_ms_per_iter(&self) -> f64 {
        if self.ms_per_iter.is_empty() {
            0.0
        } else {
            self.ms_per_iter.iter().sum::<f64>() / self.ms_per_iter.len() as f64
        }
    }

    /// Largest drop between consecutive entries (non-positive when monotone).
    pub fn max_decrease(&self) -> T {
        self.wsr
            .windows(2)
            .fold(T::lit(-1.0) * T::max_value().unwrap(), |acc, w| acc.max(w[0] - w[1]))
    }
}

/// Per-user rates and their weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T: Real> {
    pub rates: Vec<T>,
    pub wsr: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdOutcome<T: Real> {
    pub beamformers: BeamformerSet<T>,
    pub trc: TrcState<T>,
    pub trace: ConvergenceTrace<T>,
    /// Final rates on the reporting channels.
    pub evaluation: Evaluation<T>,
}

pub fn evaluate_solution<T: Real>(
    ch: &ChannelSet<T>,
    trc: &TrcState<T>,
    bf: &BeamformerSet<T>,
    eta: &PriorityWeights<T>,
) -> Result<Evaluation<T>> {
    let hbar = effective_channels(ch, trc)?;
    let rates = (0..hbar.len())
        .map(|k| user_rate_effective(k, &hbar, &bf.w, ch.noise_power))
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        wsr: weighted_sum(&rates, eta),
        rates,
    })
}

/// Random phases, protocol-dependent amplitudes (`1/2` for energy
/// splitting, alternating transmit/reflect for mode switching) or the
/// baseline's frozen amplitudes.
pub fn initial_trc<T: Real>(n: usize, protocol: Protocol, mask: &AmplitudeMask<T>, seed: u64) -> Result<TrcState<T>> {
    let mut rng = substream(seed, STREAM_INIT);
    let two_pi = std::f64::consts::TAU;
    let th_t: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(0.0..two_pi))).collect();
    let th_r: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(0.0..two_pi))).collect();
    let rho_t: Vec<T> = match mask.fixed() {
        Some(r) => r.to_vec(),
        None => match protocol {
            Protocol::Es => vec![T::lit(0.5); n],
            Protocol::Ms => (0..n).map(|k| if k % 2 == 0 { T::one() } else { T::zero() }).collect(),
        },
    };
    TrcState::from_polar(&rho_t, &th_t, &th_r, protocol)
}

fn wsr_of<T: Real>(hbar: &[CMat<T>], w: &[CMat<T>], sigma2: T, eta: &PriorityWeights<T>) -> Result<T> {
    let rates = (0..hbar.len())
        .map(|k| user_rate_effective(k, hbar, w, sigma2))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_sum(&rates, eta))
}

/// Runs the alternating optimization. `far` must hold the planar-wave
/// channels when the baseline is [`Baseline::FarFieldDesign`].
pub fn run_bcd<T: Real>(near: &ChannelSet<T>, far: Option<&ChannelSet<T>>, cfg: &BcdConfig<T>) -> Result<BcdOutcome<T>> {
    near.validate()?;
    let design = match cfg.baseline {
        Baseline::FarFieldDesign => far.ok_or(Error::invalid("far", "far-field channels are required for this baseline"))?,
        _ => near,
    };
    design.validate()?;
    if cfg.baseline == Baseline::UniformEs && cfg.protocol != Protocol::Es {
        return Err(Error::invalid("baseline", "uniform energy splitting requires the ES protocol"));
    }
    if !(cfg.eps_bcd > T::zero()) || cfg.max_iterations == 0 {
        return Err(Error::invalid("eps_bcd/max_iterations", "tolerance must be positive and the cap at least 1"));
    }
    let k = design.num_users();
    let eta = match &cfg.weights {
        Some(w) if w.len() == k => w.clone(),
        Some(w) => {
            return Err(Error::DimensionMismatch {
                context: "priority weights",
                expected: format!("{k}"),
                got: format!("{}", w.len()),
            })
        }
        None => PriorityWeights::ones(k),
    };
    let n = design.elements();
    let sigma2 = design.noise_power;
    let mask = cfg.baseline.amplitude_mask::<T>(n);
    let mut trc = initial_trc(n, cfg.protocol, &mask, cfg.seed)?;
    let mut hbar = effective_channels(design, &trc)?;
    let mut w = matched_filter(&hbar, cfg.power_budget);

    let mut trace = ConvergenceTrace {
        wsr: vec![wsr_of(&hbar, &w, sigma2, &eta)?],
        rank_violation: Vec::new(),
        ms_per_iter: Vec::new(),
        termination: Termination::IterationCap,
        pen_calls: Vec::new(),
    };

    for it in 1..=cfg.max_iterations {
        let wrap = |e: Error| Error::Bcd {
            iteration: it,
            source: Box::new(e),
        };
        let start = Instant::now();
        let u = update_combiners(&hbar, &w, sigma2).map_err(wrap)?;
        let z = update_weights(&hbar, &w, &u, sigma2).map_err(wrap)?;
        let prob = build_quadratic_forms(&hbar, &u, &z, &eta, cfg.power_budget);
        w = active_beamforming(&prob, cfg.power_tol).map_err(wrap)?.w;
        let q = build_trc_quadratic(design, &u, &z, &w, &eta);
        let viol = match cfg.algorithm {
            Algorithm::Ele => {
                trc = ele_sweep(&q, &trc, &mask, cfg.ele_tol).map_err(wrap)?;
                T::zero()
            }
            Algorithm::Pen => {
                let rep = pen_optimize(&q, &trc, &mask, &cfg.pen).map_err(wrap)?;
                trace.pen_calls.push(PenCallSummary::from_report(&rep));
                trc = rep.trc;
                rep.rank_violation
            }
        };
        hbar = effective_channels(design, &trc).map_err(wrap)?;
        let wsr = wsr_of(&hbar, &w, sigma2, &eta).map_err(wrap)?;
        trace.ms_per_iter.push(start.elapsed().as_secs_f64() * 1e3);
        trace.rank_violation.push(viol);
        let prev = *trace.wsr.last().unwrap();
        trace.wsr.push(wsr);
        if wsr - prev <= cfg.eps_bcd * prev.abs() {
            trace.termination = Termination::Converged;
            break;
        }
    }

    let beamformers = BeamformerSet {
        w,
        power_budget: cfg.power_budget,
    };
    let report = match cfg.report {
        ReportChannel::Near => near,
        ReportChannel::Design => design,
    };
    let evaluation = evaluate_solution(report, &trc, &beamformers, &eta)?;
    Ok(BcdOutcome {
        beamformers,
        trc,
        trace,
        evaluation,
    })
}
