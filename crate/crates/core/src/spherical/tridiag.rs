//! Symmetric tridiagonal eigenpairs by Sturm bisection and inverse iteration.

use crate::{Error, Result};

const BISECTION_STEPS: usize = 200;
const INVERSE_STEPS: usize = 8;

/// Number of eigenvalues of `T(d, e)` strictly below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut pivot = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        pivot = d[i] - x - if i == 0 { 0.0 } else { off / pivot };
        if pivot == 0.0 {
            pivot = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `j`-th smallest eigenvalue (0-based).
pub fn eigenvalue(d: &[f64], e: &[f64], j: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(d, e);
    let pad = 1e-12 * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE;
    lo -= pad;
    hi += pad;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T − σ) x = b` with a partially pivoted LU; `b` is overwritten.
fn shifted_solve(d: &[f64], e: &[f64], sigma: f64, b: &mut [f64]) {
    let n = d.len();
    if n == 1 {
        let p = d[0] - sigma;
        b[0] /= if p == 0.0 { f64::EPSILON } else { p };
        return;
    }
    // rows hold (diag, super, super2) after elimination
    let mut diag: Vec<f64> = d.iter().map(|v| v - sigma).collect();
    let mut sup: Vec<f64> = e.to_vec();
    sup.push(0.0);
    let mut sub: Vec<f64> = e.to_vec();
    let mut sup2 = vec![0.0; n];
    let tiny = f64::EPSILON * d.iter().chain(e).fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n - 1 {
        if sub[i].abs() > diag[i].abs() {
            // swap rows i and i+1
            std::mem::swap(&mut diag[i], &mut sub[i]);
            let (a, c) = (sup[i], diag[i + 1]);
            sup[i] = c;
            diag[i + 1] = a;
            let next = if i + 1 < n - 1 { sup[i + 1] } else { 0.0 };
            sup2[i] = next;
            if i + 1 < n - 1 {
                sup[i + 1] = 0.0;
            }
            b.swap(i, i + 1);
            // after the swap, row i+1 holds the old row i: (sub, a, 0)
            let f = sub[i] / diag[i];
            diag[i + 1] -= f * sup[i];
            if i + 1 < n - 1 {
                sup[i + 1] -= f * sup2[i];
            }
            b[i + 1] -= f * b[i];
        } else {
            if diag[i] == 0.0 {
                diag[i] = tiny;
            }
            let f = sub[i] / diag[i];
            diag[i + 1] -= f * sup[i];
            b[i + 1] -= f * b[i];
        }
    }
    if diag[n - 1] == 0.0 {
        diag[n - 1] = tiny;
    }
    b[n - 1] /= diag[n - 1];
    b[n - 2] = (b[n - 2] - sup[n - 2] * b[n - 1]) / diag[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - sup[i] * b[i + 1] - sup2[i] * b[i + 2]) / diag[i];
    }
}

fn apply(d: &[f64], e: &[f64], x: &[f64], out: &mut [f64]) {
    let n = d.len();
    for i in 0..n {
        let mut v = d[i] * x[i];
        if i > 0 {
            v += e[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            v += e[i] * x[i + 1];
        }
        out[i] = v;
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

/// Unit eigenvector for the eigenvalue `lambda`, orthogonal to `previous`.
pub fn eigenvector(d: &[f64], e: &[f64], lambda: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = d.len();
    let scale = d.iter().chain(e).fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let sigma = lambda + 64.0 * f64::EPSILON * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i as f64) * 0.618).sin()).collect();
    normalize(&mut x);
    let mut ax = vec![0.0; n];
    for _ in 0..INVERSE_STEPS {
        shifted_solve(d, e, sigma, &mut x);
        for p in previous {
            let c: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(p).for_each(|(a, b)| *a -= c * b);
        }
        normalize(&mut x);
        apply(d, e, &x, &mut ax);
        let residual = ax.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if residual <= 1e-9 * scale {
            return Ok(x);
        }
    }
    Err(Error::EigenNotConverged(format!("inverse iteration stalled at λ = {lambda}")))
}
