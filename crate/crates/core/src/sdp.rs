//! Dense primal-dual interior-point method for linear SDPs whose only
//! equality constraints are sums of diagonal entries:
//!
//! ```text
//! minimize   Σ_b Re tr(C_b X_b)
//! subject to Σ_{(b,a) ∈ S_j} X_b[a,a] = r_j   for every constraint j
//!            X_b ⪰ 0
//! ```
//!
//! Blocks are complex Hermitian. Iterates follow the central path with the
//! HKM search direction and a Mehrotra predictor-corrector; the Newton system
//! reduces to an `m × m` Schur complement with entries
//! `Σ Re(X_b[a, c] Z_b^{-1}[c, a])` over pairs of constraint terms.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_part, hpd_cholesky, min_eigenvalue, re_trace_product};
use crate::scalar::{cr, CMat, Real};

/// One `X_b[a, a]` entry inside a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagTerm {
    pub block: usize,
    pub index: usize,
}

/// `Σ_{terms} X_b[a, a] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagConstraint<T: Real> {
    pub terms: Vec<DiagTerm>,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSdpProblem<T: Real> {
    /// Hermitian cost per block. Linear costs on diagonal entries are folded
    /// into the block diagonals.
    pub costs: Vec<CMat<T>>,
    pub constraints: Vec<DiagConstraint<T>>,
    /// Strictly positive diagonal starting point satisfying the constraints.
    pub start: Vec<DVector<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions<T: Real> {
    /// Bound on every KKT residual at exit.
    pub tol: T,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: T,
}

impl<T: Real> Default for SdpOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-7),
            max_iterations: 100,
            step_fraction: T::lit(0.95),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Optimality residuals, measured on the cost normalized to unit Frobenius
/// norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T: Real> {
    /// `‖A(X) − r‖_∞`.
    pub primal: T,
    /// `max(0, −λ_min(Z))` of the dual slack `Z = C − A^T(y)`.
    pub dual: T,
    /// `⟨X, Z⟩ / (1 + |objective|)`.
    pub complementarity: T,
    /// Smallest eigenvalue over the primal blocks.
    pub min_eigenvalue: T,
    /// Largest excursion of a diagonal entry outside `[0, 1]`.
    pub box_violation: T,
}

impl<T: Real> KktResiduals<T> {
    pub fn max_residual(&self) -> T {
        self.primal.max(self.dual).max(self.complementarity).max(self.box_violation)
    }
}

/// Per-iteration record, original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpLogEntry<T: Real> {
    /// `⟨X, Z⟩ / n` before the step.
    pub mu: T,
    /// `⟨C, X⟩` before the step.
    pub objective: T,
    /// `r^T y` before the step.
    pub dual_objective: T,
    pub primal_step: T,
    pub dual_step: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T: Real> {
    pub blocks: Vec<CMat<T>>,
    pub objective: T,
    /// Dual multipliers of the equality constraints, original units.
    pub dual_y: Vec<T>,
    /// Dual slack blocks `C_b − A^T(y)_b`, original units.
    pub dual_z: Vec<CMat<T>>,
    pub kkt: KktResiduals<T>,
    pub iterations: usize,
    pub status: SdpStatus,
    pub log: Vec<SdpLogEntry<T>>,
}

impl<T: Real> SdpSolution<T> {
    /// Writes the iteration log as whitespace-separated text.
    pub fn dump<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# status {:?} iterations {} objective {:e}", self.status, self.iterations, self.objective.to_f64_lossy())?;
        writeln!(
            out,
            "# kkt primal {:e} dual {:e} compl {:e} min_eig {:e} box {:e}",
            self.kkt.primal.to_f64_lossy(),
            self.kkt.dual.to_f64_lossy(),
            self.kkt.complementarity.to_f64_lossy(),
            self.kkt.min_eigenvalue.to_f64_lossy(),
            self.kkt.box_violation.to_f64_lossy()
        )?;
        writeln!(out, "iter mu objective dual_objective primal_step dual_step")?;
        for (i, e) in self.log.iter().enumerate() {
            writeln!(
                out,
                "{i} {:e} {:e} {:e} {:e} {:e}",
                e.mu.to_f64_lossy(),
                e.objective.to_f64_lossy(),
                e.dual_objective.to_f64_lossy(),
                e.primal_step.to_f64_lossy(),
                e.dual_step.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

impl<T: Real> LinearSdpProblem<T> {
    pub fn dims(&self) -> Vec<usize> {
        self.costs.iter().map(|c| c.nrows()).collect()
    }

    /// `A(X)`.
    pub fn apply(&self, blocks: &[CMat<T>]) -> Vec<T> {
        self.constraints
            .iter()
            .map(|c| {
                c.terms
                    .iter()
                    .fold(T::zero(), |acc, t| acc + blocks[t.block][(t.index, t.index)].re)
            })
            .collect()
    }

    /// `⟨C, X⟩`.
    pub fn objective(&self, blocks: &[CMat<T>]) -> T {
        self.costs
            .iter()
            .zip(blocks)
            .fold(T::zero(), |acc, (c, x)| acc + re_trace_product(c, x))
    }

    /// `C − A^T(y)` per block.
    pub fn dual_slack(&self, y: &[T]) -> Vec<CMat<T>> {
        let mut z = self.costs.clone();
        for (c, yj) in self.constraints.iter().zip(y) {
            for t in &c.terms {
                z[t.block][(t.index, t.index)] -= cr(*yj);
            }
        }
        z
    }

    fn validate(&self) -> Result<()> {
        if self.costs.len() != self.start.len() {
            return Err(Error::DimensionMismatch {
                context: "SDP start",
                expected: format!("{} blocks", self.costs.len()),
                got: format!("{}", self.start.len()),
            });
        }
        for (b, (c, s)) in self.costs.iter().zip(&self.start).enumerate() {
            if !c.is_square() || c.nrows() != s.len() {
                return Err(Error::DimensionMismatch {
                    context: "SDP block",
                    expected: format!("{0}x{0}", s.len()),
                    got: format!("{}x{} (block {b})", c.nrows(), c.ncols()),
                });
            }
            let scale = T::one() + c.norm();
            if hermitian_defect(c) > T::lit(1e-9) * scale {
                return Err(Error::invalid("costs", format!("block {b} is not Hermitian")));
            }
        }
        for c in &self.constraints {
            for t in &c.terms {
                if t.block >= self.costs.len() || t.index >= self.costs[t.block].nrows() {
                    return Err(Error::IndexOutOfRange {
                        what: "SDP constraint term",
                        index: t.index,
                        limit: self.costs.get(t.block).map_or(0, |m| m.nrows()),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Evaluates the residuals of an arbitrary candidate with dual multipliers
/// `y` (original units).
pub fn kkt_residuals<T: Real>(problem: &LinearSdpProblem<T>, blocks: &[CMat<T>], y: &[T]) -> KktResiduals<T> {
    let scale = cost_scale(problem);
    let ax = problem.apply(blocks);
    let primal = ax
        .iter()
        .zip(&problem.constraints)
        .fold(T::zero(), |acc, (a, c)| acc.max((*a - c.rhs).abs()));
    let z = problem.dual_slack(y);
    let mut dual = T::zero();
    let mut compl = T::zero();
    let mut min_eig = T::max_value().unwrap();
    let mut box_v = T::zero();
    for (zb, xb) in z.iter().zip(blocks) {
        if zb.nrows() == 0 {
            continue;
        }
        dual = dual.max(-min_eigenvalue(zb) / scale);
        compl += re_trace_product(zb, xb) / scale;
        min_eig = min_eig.min(min_eigenvalue(xb));
        for a in 0..xb.nrows() {
            let d = xb[(a, a)].re;
            box_v = box_v.max(-d).max(d - T::one());
        }
    }
    let obj = problem.objective(blocks) / scale;
    KktResiduals {
        primal,
        dual: dual.max(T::zero()),
        complementarity: compl.abs() / (T::one() + obj.abs()),
        min_eigenvalue: min_eig,
        box_violation: box_v.max(T::zero()),
    }
}

fn cost_scale<T: Real>(problem: &LinearSdpProblem<T>) -> T {
    let s = problem
        .costs
        .iter()
        .fold(T::zero(), |acc, c| acc + c.norm_squared())
        .sqrt();
    if s > T::zero() {
        s
    } else {
        T::one()
    }
}

pub fn solve_linear_sdp<T: Real>(problem: &LinearSdpProblem<T>, opts: &SdpOptions<T>) -> Result<SdpSolution<T>> {
    problem.validate()?;
    let scale = cost_scale(problem);
    let costs: Vec<CMat<T>> = problem.costs.iter().map(|c| hermitian_part(c) / cr(scale)).collect();
    let mut x: Vec<CMat<T>> = problem
        .start
        .iter()
        .map(|s| CMat::from_diagonal(&s.map(cr)))
        .collect();
    let m = problem.constraints.len();

    let finish = |x: Vec<CMat<T>>, y: Vec<T>, iterations, status, log| {
        let kkt = kkt_residuals(problem, &x, &y);
        SdpSolution {
            objective: problem.objective(&x),
            dual_z: problem.dual_slack(&y),
            dual_y: y,
            blocks: x,
            kkt,
            iterations,
            status,
            log,
        }
    };
    if problem.start.iter().any(|s| s.iter().any(|v| !(*v > T::zero()))) {
        return Ok(finish(x, vec![T::zero(); m], 0, SdpStatus::Infeasible, Vec::new()));
    }
    let start_res = residual(problem, &x).amax();
    if start_res > T::lit(1e-9) {
        return Ok(finish(x, vec![T::zero(); m], 0, SdpStatus::Infeasible, Vec::new()));
    }

    let n_total = T::lit(problem.dims().iter().sum::<usize>() as f64);
    let mut y = DVector::<T>::zeros(m);
    let mut z: Vec<CMat<T>> = costs
        .iter()
        .map(|c| {
            let d = c.nrows();
            CMat::identity(d, d) * cr(T::one() + c.norm())
        })
        .collect();
    let rhs_dot = |y: &DVector<T>| {
        problem
            .constraints
            .iter()
            .zip(y.iter())
            .fold(T::zero(), |acc, (c, yj)| acc + c.rhs * *yj)
    };
    let y_orig = |y: &DVector<T>| y.iter().map(|v| *v * scale).collect::<Vec<T>>();
    let mut log = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let kkt = kkt_residuals(problem, &x, &y_orig(&y));
        if kkt.max_residual() <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        let Some(dir) = Directions::new(problem, &costs, &x, &y, &z) else {
            log::debug!("SDP iterate left the cone interior");
            break;
        };
        let mu = dir.mu(&x, &z, n_total);

        let neg_x: Vec<CMat<T>> = x.iter().map(|xb| -xb).collect();
        let (dx_a, _, dz_a) = dir.solve(problem, &x, &neg_x);
        let ap = max_step(&x, &dx_a).min(T::one());
        let ad = max_step(&z, &dz_a).min(T::one());
        let trial = |a: &[CMat<T>], da: &[CMat<T>], s: T| -> Vec<CMat<T>> { a.iter().zip(da).map(|(u, d)| u + d * cr(s)).collect() };
        let mu_aff = complementarity(&trial(&x, &dx_a, ap), &trial(&z, &dz_a, ad)) / n_total;
        let sigma = (mu_aff / mu).max(T::zero()).min(T::one()).powi(3);

        let target: Vec<CMat<T>> = (0..x.len())
            .map(|b| &dir.zi[b] * cr(sigma * mu) - &x[b] - &dx_a[b] * &dz_a[b] * &dir.zi[b])
            .collect();
        let (dx, dy, dz) = dir.solve(problem, &x, &target);
        let ap = (opts.step_fraction * max_step(&x, &dx)).min(T::one());
        let ad = (opts.step_fraction * max_step(&z, &dz)).min(T::one());
        log.push(SdpLogEntry {
            mu: mu * scale,
            objective: problem.objective(&x),
            dual_objective: rhs_dot(&y) * scale,
            primal_step: ap,
            dual_step: ad,
        });
        x = trial(&x, &dx, ap).iter().map(hermitian_part).collect();
        z = trial(&z, &dz, ad).iter().map(hermitian_part).collect();
        y += dy * ad;
        iterations += 1;
    }
    if status == SdpStatus::MaxIter && iterations >= opts.max_iterations {
        let kkt = kkt_residuals(problem, &x, &y_orig(&y));
        if kkt.max_residual() <= opts.tol {
            status = SdpStatus::Optimal;
        }
    }
    Ok(finish(x, y_orig(&y), iterations, status, log))
}

/// `r − A(X)`.
fn residual<T: Real>(problem: &LinearSdpProblem<T>, x: &[CMat<T>]) -> DVector<T> {
    let ax = problem.apply(x);
    DVector::from_iterator(ax.len(), ax.iter().zip(&problem.constraints).map(|(a, c)| c.rhs - *a))
}

fn complementarity<T: Real>(x: &[CMat<T>], z: &[CMat<T>]) -> T {
    x.iter().zip(z).fold(T::zero(), |acc, (a, b)| acc + re_trace_product(a, b))
}

/// Largest `α` with `A + α D ⪰ 0`, infinite when `D ⪰ 0`.
fn max_step<T: Real>(a: &[CMat<T>], d: &[CMat<T>]) -> T {
    let mut best = T::max_value().unwrap();
    for (ab, db) in a.iter().zip(d) {
        if ab.nrows() == 0 {
            continue;
        }
        let Some(chol) = hpd_cholesky(ab) else {
            return T::zero();
        };
        let l = chol.l();
        let Some(li_d) = l.solve_lower_triangular(db) else {
            return T::zero();
        };
        let Some(s) = l.solve_lower_triangular(&li_d.adjoint()) else {
            return T::zero();
        };
        let lo = min_eigenvalue(&s);
        if lo < T::zero() {
            best = best.min(-T::one() / lo);
        }
    }
    best
}

/// Factorized Newton system at one iterate.
struct Directions<T: Real> {
    zi: Vec<CMat<T>>,
    rp: DVector<T>,
    rd: Vec<CMat<T>>,
    schur: nalgebra::Cholesky<T, nalgebra::Dyn>,
}

impl<T: Real> Directions<T> {
    fn new(problem: &LinearSdpProblem<T>, costs: &[CMat<T>], x: &[CMat<T>], y: &DVector<T>, z: &[CMat<T>]) -> Option<Self> {
        let zi = z
            .iter()
            .map(|zb| {
                if zb.nrows() == 0 {
                    Some(zb.clone())
                } else {
                    hpd_cholesky(zb).map(|c| hermitian_part(&c.inverse()))
                }
            })
            .collect::<Option<Vec<_>>>()?;
        let rp = residual(problem, x);
        let y_slice: Vec<T> = y.iter().copied().collect();
        let rd: Vec<CMat<T>> = adjoint_apply(problem, costs, &y_slice)
            .into_iter()
            .zip(z)
            .map(|(s, zb)| s - zb)
            .collect();

        let m = problem.constraints.len();
        let mut schur = DMatrix::<T>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut s = T::zero();
                for a in &problem.constraints[i].terms {
                    for c in &problem.constraints[j].terms {
                        if a.block == c.block {
                            s += (x[a.block][(a.index, c.index)] * zi[a.block][(c.index, a.index)]).re;
                        }
                    }
                }
                schur[(i, j)] = s;
                schur[(j, i)] = s;
            }
        }
        let schur = match schur.clone().cholesky() {
            Some(c) => c,
            None => {
                let reg = T::lit(1e-14) * (T::one() + schur.diagonal().amax());
                let mut s2 = schur;
                for i in 0..m {
                    s2[(i, i)] += reg;
                }
                s2.cholesky()?
            }
        };
        Some(Self { zi, rp, rd, schur })
    }

    fn mu(&self, x: &[CMat<T>], z: &[CMat<T>], n: T) -> T {
        complementarity(x, z) / n
    }

    /// Direction with `ΔX = K − X ΔZ Z^{-1}` (symmetrized), `ΔZ = R_d − A^T(Δy)`
    /// and `A(ΔX) = r_p`.
    fn solve(&self, problem: &LinearSdpProblem<T>, x: &[CMat<T>], k: &[CMat<T>]) -> (Vec<CMat<T>>, DVector<T>, Vec<CMat<T>>) {
        let g: Vec<CMat<T>> = (0..x.len()).map(|b| &k[b] - &x[b] * &self.rd[b] * &self.zi[b]).collect();
        let ag = problem.apply(&g);
        let rhs = DVector::from_iterator(ag.len(), self.rp.iter().zip(&ag).map(|(r, a)| *r - *a));
        let dy = self.schur.solve(&rhs);
        let dy_slice: Vec<T> = dy.iter().copied().collect();
        let mut dz = self.rd.clone();
        for (c, v) in problem.constraints.iter().zip(&dy_slice) {
            for t in &c.terms {
                dz[t.block][(t.index, t.index)] -= cr(*v);
            }
        }
        let dx = (0..x.len())
            .map(|b| hermitian_part(&(&k[b] - &x[b] * &dz[b] * &self.zi[b])))
            .collect();
        (dx, dy, dz)
    }
}

/// `C − A^T(y)` for already normalized costs.
fn adjoint_apply<T: Real>(problem: &LinearSdpProblem<T>, costs: &[CMat<T>], y: &[T]) -> Vec<CMat<T>> {
    let mut z = costs.to_vec();
    for (c, yj) in problem.constraints.iter().zip(y) {
        for t in &c.terms {
            z[t.block][(t.index, t.index)] -= cr(*yj);
        }
    }
    z
}
