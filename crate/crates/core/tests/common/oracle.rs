//! Brute-force references for the two-block diagonal-constrained SDP that
//! the penalty optimizer solves: block `b` is `(n+1) × (n+1)` with diagonal
//! `(d_b, 1)`, `d_t + d_r = 1` elementwise.

use nalgebra::DVector;

use super::{c, C, M};

/// `min Re tr(C X)` over PSD `X` with fixed diagonal `d`, by the mixing
/// method on full-rank factors `X = V^H V`.
pub fn fixed_diag_min(cost: &M, d: &[f64]) -> f64 {
    let n = d.len();
    let h = (cost + cost.adjoint()) * c(0.5, 0.0);
    let mut v: Vec<DVector<C>> = (0..n)
        .map(|i| {
            let mut x = DVector::from_element(n, c(0.0, 0.0));
            x[i] = c(1.0, 0.0);
            // Deterministic spread so no pair starts orthogonal.
            for j in 0..n {
                x[j] += c(0.3 / (1.0 + (i + j) as f64), 0.1 * j as f64);
            }
            let s = d[i].sqrt() / x.norm();
            x * c(s, 0.0)
        })
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            if d[i] <= 0.0 {
                continue;
            }
            let mut g = DVector::from_element(n, c(0.0, 0.0));
            for j in 0..n {
                if j != i {
                    g += &v[j] * h[(j, i)];
                }
            }
            let gn = g.norm();
            if gn == 0.0 {
                continue;
            }
            let new = g * c(-d[i].sqrt() / gn, 0.0);
            moved = moved.max((&new - &v[i]).norm());
            v[i] = new;
        }
        if moved < 1e-13 {
            break;
        }
    }
    let mut val = 0.0;
    for i in 0..n {
        for j in 0..n {
            val += (h[(i, j)] * v[j].dotc(&v[i])).re;
        }
    }
    val
}

/// Value of the lifted problem at a fixed transmission split `rho`.
pub fn split_value(costs: &[M; 2], rho: &[f64]) -> f64 {
    let mut dt: Vec<f64> = rho.to_vec();
    let mut dr: Vec<f64> = rho.iter().map(|r| 1.0 - r).collect();
    dt.push(1.0);
    dr.push(1.0);
    fixed_diag_min(&costs[0], &dt) + fixed_diag_min(&costs[1], &dr)
}

/// Global optimum over the split: the value function is convex in `rho`, so
/// a grid seed followed by a shrinking pattern search converges to it.
pub fn lifted_optimum(costs: &[M; 2], n: usize, grid: usize) -> f64 {
    let mut best = vec![0.5; n];
    let mut best_val = f64::INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let rho: Vec<f64> = idx.iter().map(|&i| i as f64 / (grid - 1) as f64).collect();
        let val = split_value(costs, &rho);
        if val < best_val {
            best_val = val;
            best = rho;
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    let mut step = 1.0 / (grid - 1) as f64;
    while step > 1e-7 {
        let mut improved = false;
        for k in 0..n {
            for dir in [-1.0, 1.0] {
                let mut cand = best.clone();
                cand[k] = (cand[k] + dir * step).clamp(0.0, 1.0);
                let val = split_value(costs, &cand);
                if val < best_val - 1e-14 {
                    best_val = val;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}

/// Closed form of the 2×2 fixed-diagonal minimum, used to cross-check the
/// mixing method.
pub fn two_by_two_min(cost: &M, d: [f64; 2]) -> f64 {
    cost[(0, 0)].re * d[0] + cost[(1, 1)].re * d[1] - 2.0 * cost[(0, 1)].norm() * (d[0] * d[1]).sqrt()
}
