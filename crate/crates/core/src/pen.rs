//! Penalty-based coefficient optimizer over a semidefinite lift.
//!
//! Each side's coefficient vector is augmented with a unit trailing entry,
//! `v̄_i = [v_i; 1]`, and lifted to `V_i = v̄_i v̄_i^H`. The rank-one
//! requirement becomes the penalty `μ(‖V_i‖_* − ‖V_i‖_2)`, which successive
//! convex approximation linearizes around the previous iterate; under mode
//! switching the binary requirement `ρ − ρ² = 0` is handled the same way with
//! weight `χ`. The inner loop repeats linear SDP solves until the objective
//! stalls, the outer loop grows the penalties until the lift is rank-one.

use nalgebra::{ComplexField, DVector};

use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::linalg::{rank_one_violation, HermitianEigen};
use crate::quadratic::TrcQuadratic;
use crate::scalar::{cis, cr, CMat, CVec, Real};
use crate::sdp::{solve_linear_sdp, DiagConstraint, DiagTerm, LinearSdpProblem, SdpOptions, SdpStatus};
use crate::system::{AmplitudeMask, Protocol, TrcState};

#[derive(Debug, Clone, PartialEq)]
pub struct PenConfig<T: Real> {
    /// Initial rank penalty `μ`.
    pub mu0: T,
    /// Initial binary penalty `χ` (mode switching only).
    pub chi0: T,
    /// Growth factor of `μ` per outer step.
    pub omega: T,
    /// Growth factor of `χ` per outer step.
    pub varpi: T,
    /// Inner-loop stop on fractional objective decrease.
    pub eps_sca: T,
    /// Rank-one (and binary) tolerance of the outer loop.
    pub eps_p: T,
    pub n_in: usize,
    pub n_out: usize,
    /// Distance to `{0, 1}` below which mode-switching amplitudes are snapped.
    pub round_threshold: T,
    pub sdp: SdpOptions<T>,
}

impl<T: Real> Default for PenConfig<T> {
    fn default() -> Self {
        Self {
            mu0: T::lit(1e-4),
            chi0: T::lit(1e-4),
            omega: T::lit(10.0),
            varpi: T::lit(10.0),
            eps_sca: T::lit(1e-2),
            eps_p: T::lit(1e-5),
            n_in: 30,
            n_out: 30,
            round_threshold: T::lit(1e-3),
            sdp: SdpOptions::default(),
        }
    }
}

/// Lifted cost matrices `F̄_i = [[F_i, −e_i*], [−e_i^T, 0]]` restricted to the
/// elements that can be active on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLift<T: Real> {
    pub f_bar: [CMat<T>; 2],
    /// Element indices present in each side's block (the trailing slot is
    /// implicit).
    pub active: [Vec<usize>; 2],
}

/// Lifts `q` onto the elements in `active`.
pub fn lift_augmented<T: Real>(q: &TrcQuadratic<T>, active: [Vec<usize>; 2]) -> AugmentedLift<T> {
    let f_bar = [0, 1].map(|i| {
        let idx = &active[i];
        let d = idx.len();
        let mut m = CMat::zeros(d + 1, d + 1);
        for (a, &na) in idx.iter().enumerate() {
            for (b, &nb) in idx.iter().enumerate() {
                m[(a, b)] = q.f[i][(na, nb)];
            }
            m[(a, d)] = -q.e[i][na].conj();
            m[(d, a)] = -q.e[i][na];
        }
        m
    });
    AugmentedLift { f_bar, active }
}

impl<T: Real> AugmentedLift<T> {
    /// `v̄_i = [v_i restricted to active; 1]`.
    pub fn augment(&self, side: Side, v: &CVec<T>) -> CVec<T> {
        let idx = &self.active[side.index()];
        let mut out = CVec::zeros(idx.len() + 1);
        for (a, &n) in idx.iter().enumerate() {
            out[a] = v[n];
        }
        out[idx.len()] = cr(T::one());
        out
    }

    /// `Σ_i Re tr(F̄_i V_i)`.
    pub fn objective(&self, v: &[CMat<T>; 2]) -> T {
        (0..2).fold(T::zero(), |acc, i| acc + crate::linalg::re_trace_product(&self.f_bar[i], &v[i]))
    }
}

/// `f_SCA(V; V_ref) = ‖V‖_* − ‖V_ref‖_2 − d^H (V − V_ref) d` with `d` the top
/// eigenvector of `V_ref`. An upper bound on `‖V‖_* − ‖V‖_2` for PSD `V`,
/// tight at `V = V_ref`.
pub fn sca_rank_surrogate<T: Real>(v: &CMat<T>, v_ref: &CMat<T>) -> T {
    let eig = HermitianEigen::new(v_ref);
    let d = eig.top_vector();
    let nuclear = crate::linalg::hermitian_part(v)
        .symmetric_eigenvalues()
        .iter()
        .fold(T::zero(), |acc, x| acc + x.abs());
    let diff = v - v_ref;
    nuclear - eig.max() - d.dotc(&(diff * &d)).re
}

/// `g_SCA(ρ; ρ_ref) = (1 − 2ρ_ref) ρ + ρ_ref²`, an upper bound on `ρ − ρ²`
/// tight at `ρ = ρ_ref`.
pub fn sca_binary_surrogate<T: Real>(rho: T, rho_ref: T) -> T {
    (T::one() - T::lit(2.0) * rho_ref) * rho + rho_ref * rho_ref
}

/// Outcome of one optimizer call.
#[derive(Debug, Clone, PartialEq)]
pub struct PenReport<T: Real> {
    pub trc: TrcState<T>,
    /// `max_i (‖V_i‖_* − ‖V_i‖_2)` of the final lift.
    pub rank_violation: T,
    /// `max_n ρ_n(1 − ρ_n)` of the final lift (zero when amplitudes are not
    /// optimized as binary).
    pub binary_violation: T,
    /// Penalized objective sequence of every inner loop (first entry: value
    /// at the loop's reference point).
    pub inner_objectives: Vec<Vec<T>>,
    /// Rank violation after each outer step.
    pub outer_violations: Vec<T>,
    pub sdp_solves: usize,
    /// SDP solves that did not reach `Optimal`.
    pub sdp_failures: usize,
    /// Largest KKT residual over all SDP solves.
    pub max_kkt: T,
    /// The outer loop ran out of iterations before reaching tolerance.
    pub cap_hit: bool,
    /// The extracted point was worse than the warm start and was discarded.
    pub kept_warm_start: bool,
}

fn active_sets<T: Real>(n: usize, mask: &AmplitudeMask<T>) -> [Vec<usize>; 2] {
    match mask.fixed() {
        None => [(0..n).collect(), (0..n).collect()],
        Some(rho) => [
            (0..n).filter(|&k| rho[k] > T::zero()).collect(),
            (0..n).filter(|&k| T::one() - rho[k] > T::zero()).collect(),
        ],
    }
}

fn sdp_shell<T: Real>(lift: &AugmentedLift<T>, n: usize, mask: &AmplitudeMask<T>) -> LinearSdpProblem<T> {
    let dims = [lift.active[0].len(), lift.active[1].len()];
    let mut constraints = Vec::new();
    let mut start = [DVector::zeros(dims[0] + 1), DVector::zeros(dims[1] + 1)];
    match mask.fixed() {
        None => {
            for k in 0..n {
                constraints.push(DiagConstraint {
                    terms: vec![DiagTerm { block: 0, index: k }, DiagTerm { block: 1, index: k }],
                    rhs: T::one(),
                });
                start[0][k] = T::lit(0.5);
                start[1][k] = T::lit(0.5);
            }
        }
        Some(rho) => {
            for i in 0..2 {
                for (a, &k) in lift.active[i].iter().enumerate() {
                    let val = if i == 0 { rho[k] } else { T::one() - rho[k] };
                    constraints.push(DiagConstraint {
                        terms: vec![DiagTerm { block: i, index: a }],
                        rhs: val,
                    });
                    start[i][a] = val;
                }
            }
        }
    }
    for i in 0..2 {
        constraints.push(DiagConstraint {
            terms: vec![DiagTerm {
                block: i,
                index: dims[i],
            }],
            rhs: T::one(),
        });
        start[i][dims[i]] = T::one();
    }
    LinearSdpProblem {
        costs: vec![CMat::zeros(dims[0] + 1, dims[0] + 1), CMat::zeros(dims[1] + 1, dims[1] + 1)],
        constraints,
        start: start.to_vec(),
    }
}

fn element_diag<T: Real>(v: &CMat<T>) -> Vec<T> {
    (0..v.nrows() - 1).map(|a| v[(a, a)].re).collect()
}

/// Penalized objective `Σ tr(F̄V) + μ Σ (‖V‖_* − ‖V‖_2) + χ Σ (ρ − ρ²)`.
fn penalized<T: Real>(lift: &AugmentedLift<T>, v: &[CMat<T>; 2], mu: T, chi: Option<T>) -> T {
    let mut val = lift.objective(v);
    for vi in v {
        val += mu * rank_one_violation(vi);
        if let Some(chi) = chi {
            for r in element_diag(vi) {
                val += chi * (r - r * r);
            }
        }
    }
    val
}

/// Runs the double loop from the warm start `trc`.
pub fn pen_optimize<T: Real>(q: &TrcQuadratic<T>, trc: &TrcState<T>, mask: &AmplitudeMask<T>, cfg: &PenConfig<T>) -> Result<PenReport<T>> {
    let n = trc.len();
    if q.elements() != n {
        return Err(Error::DimensionMismatch {
            context: "penalty optimizer",
            expected: format!("{n} elements"),
            got: format!("{}", q.elements()),
        });
    }
    let lift = lift_augmented(q, active_sets(n, mask));
    let binary = trc.protocol == Protocol::Ms && mask.fixed().is_none();
    let mut shell = sdp_shell(&lift, n, mask);

    let mut v_ref: [CMat<T>; 2] = [Side::Transmit, Side::Reflect].map(|s| {
        let vb = lift.augment(s, trc.side(s));
        &vb * vb.adjoint()
    });
    let mut mu = cfg.mu0;
    let mut chi = cfg.chi0;
    let mut inner_objectives = Vec::new();
    let mut outer_violations = Vec::new();
    let (mut solves, mut failures) = (0usize, 0usize);
    let mut max_kkt = T::zero();
    let mut converged = false;

    for _ in 0..cfg.n_out {
        let chi_opt = binary.then_some(chi);
        let mut seq = vec![penalized(&lift, &v_ref, mu, chi_opt)];
        for _ in 0..cfg.n_in {
            let mut constant = T::zero();
            for i in 0..2 {
                let d = HermitianEigen::new(&v_ref[i]).top_vector();
                let dim = v_ref[i].nrows();
                let mut c = &lift.f_bar[i] + (CMat::identity(dim, dim) - &d * d.adjoint()) * cr(mu);
                if let Some(chi) = chi_opt {
                    for (a, r) in element_diag(&v_ref[i]).into_iter().enumerate() {
                        c[(a, a)] += cr(chi * (T::one() - T::lit(2.0) * r));
                        constant += chi * r * r;
                    }
                }
                shell.costs[i] = c;
            }
            let sol = solve_linear_sdp(&shell, &cfg.sdp)?;
            solves += 1;
            if sol.status != SdpStatus::Optimal {
                failures += 1;
                log::warn!("SDP subproblem ended with {:?}: {:?}", sol.status, sol.kkt);
            }
            max_kkt = max_kkt.max(sol.kkt.max_residual());
            if sol.status == SdpStatus::Infeasible {
                break;
            }
            let obj = sol.objective + constant;
            let prev = *seq.last().unwrap();
            seq.push(obj);
            v_ref = [sol.blocks[0].clone(), sol.blocks[1].clone()];
            let denom = prev.abs().max(T::lit(1e-30));
            if (prev - obj) / denom < cfg.eps_sca {
                break;
            }
        }
        inner_objectives.push(seq);
        let viol = rank_one_violation(&v_ref[0]).max(rank_one_violation(&v_ref[1]));
        outer_violations.push(viol);
        let bin = if binary { binary_violation(&v_ref) } else { T::zero() };
        if viol < cfg.eps_p && bin < cfg.eps_p {
            converged = true;
            break;
        }
        mu *= cfg.omega;
        chi *= cfg.varpi;
    }
    if !converged {
        log::warn!("penalty loop hit its iteration cap");
    }

    let rank_violation = rank_one_violation(&v_ref[0]).max(rank_one_violation(&v_ref[1]));
    let bin = if binary { binary_violation(&v_ref) } else { T::zero() };
    let extracted = extract_trc_from_lift(&lift, &v_ref, n, mask, trc.protocol, cfg.round_threshold, None)?;
    let kept = q.objective(&extracted) > q.objective(trc);
    Ok(PenReport {
        trc: if kept { trc.clone() } else { extracted },
        rank_violation,
        binary_violation: bin,
        inner_objectives,
        outer_violations,
        sdp_solves: solves,
        sdp_failures: failures,
        max_kkt,
        cap_hit: !converged,
        kept_warm_start: kept,
    })
}

fn binary_violation<T: Real>(v: &[CMat<T>; 2]) -> T {
    let mut m = T::zero();
    for vi in v {
        for r in element_diag(vi) {
            m = m.max(r * (T::one() - r));
        }
    }
    m
}

/// Energy-splitting entry point.
pub fn pen_es<T: Real>(q: &TrcQuadratic<T>, trc: &TrcState<T>, cfg: &PenConfig<T>) -> Result<PenReport<T>> {
    let mut start = trc.clone();
    start.protocol = Protocol::Es;
    pen_optimize(q, &start, &AmplitudeMask::Free, cfg)
}

/// Mode-switching entry point.
pub fn pen_ms<T: Real>(q: &TrcQuadratic<T>, trc: &TrcState<T>, cfg: &PenConfig<T>) -> Result<PenReport<T>> {
    let mut start = trc.clone();
    start.protocol = Protocol::Ms;
    pen_optimize(q, &start, &AmplitudeMask::Free, cfg)
}

/// Recovers coefficient vectors from (near) rank-one lifts. `gate`, when
/// given, rejects lifts whose rank-one violation exceeds it.
pub fn extract_trc_from_lift<T: Real>(
    lift: &AugmentedLift<T>,
    v: &[CMat<T>; 2],
    n: usize,
    mask: &AmplitudeMask<T>,
    protocol: Protocol,
    round_threshold: T,
    gate: Option<T>,
) -> Result<TrcState<T>> {
    let mut raw = [CVec::<T>::zeros(n), CVec::<T>::zeros(n)];
    for i in 0..2 {
        if let Some(g) = gate {
            let viol = rank_one_violation(&v[i]);
            if viol > g {
                return Err(Error::Extraction(format!("rank-one violation {viol} exceeds {g}")));
            }
        }
        let eig = HermitianEigen::new(&v[i]);
        let q1 = eig.top_vector();
        let last = q1[q1.len() - 1];
        let lam = eig.max().max(T::zero());
        let tail = lam.sqrt() * last.modulus();
        if !(tail >= T::lit(1e-6)) {
            return Err(Error::Extraction(format!("trailing entry magnitude {tail} below 1e-6")));
        }
        let rot = cis(-last.argument()) * cr(lam.sqrt());
        for (a, &k) in lift.active[i].iter().enumerate() {
            raw[i][k] = q1[a] * rot;
        }
    }

    let mut rho_t = vec![T::zero(); n];
    match mask.fixed() {
        Some(fixed) => rho_t.copy_from_slice(fixed),
        None => {
            for k in 0..n {
                let a = raw[0][k].modulus_squared().min(T::one());
                let b = raw[1][k].modulus_squared().min(T::one());
                let s = a + b;
                rho_t[k] = if s > T::zero() { a / s } else { T::lit(0.5) };
                if protocol == Protocol::Ms {
                    let r = rho_t[k];
                    rho_t[k] = if r >= T::one() - round_threshold {
                        T::one()
                    } else if r <= round_threshold {
                        T::zero()
                    } else {
                        log::debug!("element {k}: amplitude {r} rounded beyond threshold");
                        if r >= T::lit(0.5) {
                            T::one()
                        } else {
                            T::zero()
                        }
                    };
                }
            }
        }
    }
    let phase = |z: nalgebra::Complex<T>| {
        if z.re == T::zero() && z.im == T::zero() {
            T::zero()
        } else {
            z.argument()
        }
    };
    let th_t: Vec<T> = raw[0].iter().map(|z| phase(*z)).collect();
    let th_r: Vec<T> = raw[1].iter().map(|z| phase(*z)).collect();
    TrcState::from_polar(&rho_t, &th_t, &th_r, protocol)
}
