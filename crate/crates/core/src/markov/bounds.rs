//! Series and closed forms for the absorption time `X_d` of `d` independent
//! geometric processes, `P(X_d <= l) = (1 - q^l)^d`.

use std::f64::consts::{LN_2, PI};

pub const DEFAULT_TOL: f64 = 1e-12;

pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|i| 1.0 / i as f64).sum()
}

/// `1 - (1 - q^l)^d`, accurate when `q^l` is tiny.
fn survival(d: usize, q: f64, l: usize) -> f64 {
    let ql = q.powi(l as i32);
    -(d as f64 * (-ql).ln_1p()).exp_m1()
}

/// `E[X_d] = Σ_{l>=0} (1 - (1 - q^l)^d)`, truncated at the first term below
/// `tol` plus the tail bound `d q^L / (1 - q)`.
pub fn expected_series(d: usize, q: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut l = 0;
    loop {
        let term = survival(d, q, l);
        if term < tol {
            return sum + d as f64 * q.powi(l as i32) / (1.0 - q);
        }
        sum += term;
        l += 1;
    }
}

/// `Σ_{l>=1} l (1 - (1 - q^l)^d)`, with the tail bounded by
/// `d q^L (L/(1-q) + q/(1-q)^2)`.
pub fn weighted_series(d: usize, q: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut l = 1;
    loop {
        let term = l as f64 * survival(d, q, l);
        if term < tol {
            let ql = q.powi(l as i32);
            return sum + d as f64 * ql * (l as f64 / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
        }
        sum += term;
        l += 1;
    }
}

/// `Var[X_d] = 2 Σ_{l>=1} l (1 - (1 - q^l)^d) + E - E²`.
pub fn variance_series(d: usize, q: f64, tol: f64) -> f64 {
    let e = expected_series(d, q, tol);
    2.0 * weighted_series(d, q, tol) + e - e * e
}

/// `-H_d / ln q + 1/2`.
pub fn harmonic_bound(d: usize, q: f64) -> f64 {
    -harmonic(d) / q.ln() + 0.5
}

/// Expected rounds to a legal coloring after a corrupted broadcast that hit
/// `d` neighbors: `H_d / ln 2 + 1/2`.
pub fn containment_bound_message(d: usize) -> f64 {
    harmonic(d) / LN_2 + 0.5
}

/// `(1/ln²2) Σ_{i<=d} 1/i² + 1/4`.
pub fn variance_formula(d: usize) -> f64 {
    (1..=d).map(|i| 1.0 / (i * i) as f64).sum::<f64>() / (LN_2 * LN_2) + 0.25
}

/// `π² / (6 ln²2) + 1/4`, the limit of [`variance_formula`].
pub fn variance_bound() -> f64 {
    PI * PI / (6.0 * LN_2 * LN_2) + 0.25
}

/// Integral bound on [`weighted_series`]: `(1/ln²q) Σ_{i<=d} H_i / i`.
pub fn comp2_bound(d: usize, q: f64) -> f64 {
    let lq = q.ln();
    let mut h = 0.0;
    let mut sum = 0.0;
    for i in 1..=d {
        h += 1.0 / i as f64;
        sum += h / i as f64;
    }
    sum / (lq * lq)
}

/// Expected containment time after a memory fault at a node of independent
/// degree `delta_i`: `H / ln 2 + 11/2`.
pub fn containment_bound_memory(delta_i: usize) -> f64 {
    harmonic(delta_i) / LN_2 + 5.5
}
