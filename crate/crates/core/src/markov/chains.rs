use nalgebra::DMatrix;

use super::{AbsorbingChain, MarkovError};

/// Binomial coefficient as a float; exact for every value below 2^53.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Recovery after a corrupted broadcast that hit `d` independent neighbors:
/// each unresolved neighbor resolves with probability 1/2 per round.
///
/// State `k` counts unresolved neighbors; states are ordered `d, d-1, ..., 0`
/// and `0` absorbs.
pub fn message_chain(d: usize) -> Result<AbsorbingChain, MarkovError> {
    if d == 0 {
        return Err(MarkovError::Parameter("message_chain needs d >= 1".into()));
    }
    let n = d + 1;
    let index = |k: usize| d - k;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..=d {
        let scale = 0.5f64.powi(k as i32);
        for j in 0..=k {
            m[(index(k), index(k - j))] = binomial(k, j) * scale;
        }
    }
    let labels = (0..=d).rev().map(|k| k.to_string()).collect();
    AbsorbingChain::new(labels, m, index(0))
}

/// The lumped chain of a memory fault at a node with `d` conflicting
/// neighbors. States, in order: `I`, `C0`..`Cd`, `P`, `F`; `F` absorbs.
pub fn memory_chain(d: usize) -> Result<AbsorbingChain, MarkovError> {
    if d == 0 {
        return Err(MarkovError::Parameter("memory_chain needs d >= 1".into()));
    }
    let n = d + 4;
    let (init, p, f) = (0, d + 2, d + 3);
    let c = |i: usize| 1 + i;
    let df = d as f64;
    let half_pow = |e: usize| 0.5f64.powi(e as i32);
    let mut m = DMatrix::zeros(n, n);

    m[(init, p)] = (df - 1.0) / (2.0 * df) + half_pow(d + 1) / df;
    m[(init, c(0))] = (df - 1.0) / df * half_pow(d + 1) + 1.0 / (2.0 * df);
    for j in 1..=d {
        m[(init, c(j))] = binomial(d, d - j) * half_pow(d + 1);
    }

    for i in 0..=d {
        let r = d - i;
        let rf = r as f64;
        for j in i..=d {
            // (1/4)^(d-i) (3^(d-j) - 2^(d-j)) regrouped to stay in range.
            let spread = (0.75f64.powi((d - j) as i32) - 0.5f64.powi((d - j) as i32)) * 0.25f64.powi((j - i) as i32);
            m[(c(i), c(j))] = binomial(r, d - j) * half_pow(r + 1) + binomial(r, j - i) * spread / (rf + 1.0);
        }
        m[(c(i), p)] = if i < d { 0.75f64.powi(r as i32) / (rf + 1.0) + (rf - 1.0) / (2.0 * (rf + 1.0)) } else { 0.5 };
    }
    m[(p, f)] = 1.0;
    m[(f, f)] = 1.0;

    let mut labels = vec!["I".to_string()];
    labels.extend((0..=d).map(|i| format!("C{i}")));
    labels.push("P".into());
    labels.push("F".into());
    AbsorbingChain::new(labels, m, f)
}

/// Upper-triangular chain on states `0..=d` from lower bounds `p_ij`, `i < j`;
/// the diagonal keeps the residual mass and state `d` absorbs. Entries on or
/// below the diagonal of `lower_bounds` are ignored.
pub fn dominating_chain(d: usize, lower_bounds: &DMatrix<f64>) -> Result<AbsorbingChain, MarkovError> {
    let n = d + 1;
    if lower_bounds.nrows() != n || lower_bounds.ncols() != n {
        return Err(MarkovError::Shape { rows: lower_bounds.nrows(), cols: lower_bounds.ncols(), labels: n });
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..d {
        let mut mass = 0.0;
        for j in i + 1..n {
            let p = lower_bounds[(i, j)];
            if p < 0.0 || !p.is_finite() {
                return Err(MarkovError::Negative { row: i, col: j, value: p });
            }
            m[(i, j)] = p;
            mass += p;
        }
        if mass > 1.0 + super::ROW_SUM_TOL {
            return Err(MarkovError::Parameter(format!("row {i} carries mass {mass} > 1")));
        }
        m[(i, i)] = (1.0 - mass).max(0.0);
    }
    m[(d, d)] = 1.0;
    let labels = (0..n).map(|i| format!("S{i}")).collect();
    AbsorbingChain::new(labels, m, d)
}
