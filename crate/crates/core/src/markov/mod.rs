//! Absorbing Markov chains: construction checks and absorption-time moments.
//!
//! For transient block `Q` the expected steps to absorption solve
//! `(I - Q) a = 1`, and with `(I - Q) b = a` the variance is `2b - a - a²`.
//! Both are computed with linear solves, never by forming `(I - Q)^-1`.

mod bounds;
mod chains;

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

pub use bounds::{
    comp2_bound, containment_bound_memory, containment_bound_message, expected_series, harmonic, harmonic_bound,
    variance_bound, variance_formula, variance_series, weighted_series, DEFAULT_TOL,
};
pub use chains::{binomial, dominating_chain, memory_chain, message_chain};

/// Row sums must equal 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("matrix is {rows}x{cols} but there are {labels} state labels")]
    Shape { rows: usize, cols: usize, labels: usize },
    #[error("row {row} sums to {sum} (drift {drift:e})")]
    RowSum { row: usize, sum: f64, drift: f64 },
    #[error("negative transition probability {value} at ({row}, {col})")]
    Negative { row: usize, col: usize, value: f64 },
    #[error("absorbing state {0} does not map to itself with probability 1")]
    NotAbsorbing(usize),
    #[error("absorbing state unreachable from state {0}")]
    Unreachable(usize),
    #[error("invalid chain parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    labels: Vec<String>,
    matrix: DMatrix<f64>,
    absorbing: usize,
}

impl AbsorbingChain {
    pub fn new(labels: Vec<String>, matrix: DMatrix<f64>, absorbing: usize) -> Result<Self, MarkovError> {
        let n = labels.len();
        if matrix.nrows() != n || matrix.ncols() != n || absorbing >= n {
            return Err(MarkovError::Shape { rows: matrix.nrows(), cols: matrix.ncols(), labels: n });
        }
        for i in 0..n {
            for j in 0..n {
                let p = matrix[(i, j)];
                if p < 0.0 || !p.is_finite() {
                    return Err(MarkovError::Negative { row: i, col: j, value: p });
                }
            }
            let sum: f64 = matrix.row(i).iter().sum();
            let drift = (sum - 1.0).abs();
            if drift > ROW_SUM_TOL {
                return Err(MarkovError::RowSum { row: i, sum, drift });
            }
        }
        if matrix[(absorbing, absorbing)] != 1.0 {
            return Err(MarkovError::NotAbsorbing(absorbing));
        }
        Ok(Self { labels, matrix, absorbing })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn absorbing(&self) -> usize {
        self.absorbing
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn max_row_drift(&self) -> f64 {
        (0..self.len()).map(|i| (self.matrix.row(i).sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    fn transient(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i != self.absorbing).collect()
    }

    /// First state (in label order) with no positive-probability path to the
    /// absorbing state.
    fn unreachable_state(&self) -> Option<usize> {
        let n = self.len();
        let mut reaches = vec![false; n];
        reaches[self.absorbing] = true;
        let mut queue = VecDeque::from([self.absorbing]);
        while let Some(j) = queue.pop_front() {
            for (i, r) in reaches.iter_mut().enumerate() {
                if !*r && self.matrix[(i, j)] > 0.0 {
                    *r = true;
                    queue.push_back(i);
                }
            }
        }
        reaches.iter().position(|r| !r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSolution {
    pub labels: Vec<String>,
    /// Expected steps to absorption from each state (0 at the absorbing state).
    pub expected: Vec<f64>,
    pub variance: Vec<f64>,
}

impl ChainSolution {
    pub fn expected_from(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.expected[i])
    }

    pub fn variance_from(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.variance[i])
    }
}

/// Solve `(I - Q) x = rhs` by back substitution; `m` must be upper triangular.
fn back_substitute(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = rhs.len();
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= m[(i, j)] * x[j];
        }
        x[i] = acc / m[(i, i)];
    }
    x
}

fn is_upper_triangular(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == 0.0))
}

pub fn solve_absorbing(chain: &AbsorbingChain) -> Result<ChainSolution, MarkovError> {
    if let Some(i) = chain.unreachable_state() {
        return Err(MarkovError::Unreachable(i));
    }
    let transient = chain.transient();
    let t = transient.len();
    let mut a_mat = DMatrix::<f64>::zeros(t, t);
    for (r, &i) in transient.iter().enumerate() {
        for (c, &j) in transient.iter().enumerate() {
            let identity = if r == c { 1.0 } else { 0.0 };
            a_mat[(r, c)] = identity - chain.matrix[(i, j)];
        }
    }
    let ones = DVector::from_element(t, 1.0);
    let (a, b) = if is_upper_triangular(&a_mat) {
        let a = back_substitute(&a_mat, &ones);
        let b = back_substitute(&a_mat, &a);
        (a, b)
    } else {
        let lu = a_mat.lu();
        let a = lu.solve(&ones).ok_or(MarkovError::Unreachable(transient[0]))?;
        let b = lu.solve(&a).ok_or(MarkovError::Unreachable(transient[0]))?;
        (a, b)
    };

    let mut expected = vec![0.0; chain.len()];
    let mut variance = vec![0.0; chain.len()];
    for (r, &i) in transient.iter().enumerate() {
        expected[i] = a[r];
        // Clamp rounding noise around zero for deterministic chains.
        variance[i] = (2.0 * b[r] - a[r] - a[r] * a[r]).max(0.0);
    }
    Ok(ChainSolution { labels: chain.labels.clone(), expected, variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(stay: f64) -> AbsorbingChain {
        let m = DMatrix::from_row_slice(2, 2, &[stay, 1.0 - stay, 0.0, 1.0]);
        AbsorbingChain::new(vec!["T".into(), "A".into()], m, 1).unwrap()
    }

    #[test]
    fn geometric_half() {
        let s = solve_absorbing(&two_state(0.5)).unwrap();
        assert!((s.expected[0] - 2.0).abs() < 1e-12);
        assert!((s.variance[0] - 2.0).abs() < 1e-12);
        assert_eq!(s.expected[1], 0.0);
    }

    #[test]
    fn certain_absorption() {
        let s = solve_absorbing(&two_state(0.0)).unwrap();
        assert_eq!(s.expected[0], 1.0);
        assert_eq!(s.variance[0], 0.0);
    }

    #[test]
    fn geometric_family_matches_closed_form() {
        for k in 1..20 {
            let stay = k as f64 / 20.0;
            let p = 1.0 - stay;
            let s = solve_absorbing(&two_state(stay)).unwrap();
            assert!((s.expected[0] - 1.0 / p).abs() < 1e-10);
            assert!((s.variance[0] - stay / (p * p)).abs() < 1e-9);
        }
    }

    #[test]
    fn general_path_agrees_with_triangular_path() {
        // Same chain twice: once with states ordered so (I-Q) is upper
        // triangular, once reversed so LU is used.
        let fwd = DMatrix::from_row_slice(3, 3, &[0.5, 0.3, 0.2, 0.0, 0.25, 0.75, 0.0, 0.0, 1.0]);
        let rev = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.75, 0.25, 0.0, 0.2, 0.3, 0.5]);
        let a = solve_absorbing(&AbsorbingChain::new(vec!["x".into(), "y".into(), "z".into()], fwd, 2).unwrap()).unwrap();
        let b = solve_absorbing(&AbsorbingChain::new(vec!["z".into(), "y".into(), "x".into()], rev, 0).unwrap()).unwrap();
        for label in ["x", "y"] {
            assert!((a.expected_from(label).unwrap() - b.expected_from(label).unwrap()).abs() < 1e-12);
            assert!((a.variance_from(label).unwrap() - b.variance_from(label).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn unreachable_absorbing_state_is_reported() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let chain = AbsorbingChain::new(vec!["a".into(), "b".into(), "f".into()], m, 2).unwrap();
        let err = solve_absorbing(&chain).unwrap_err();
        assert_eq!(err, MarkovError::Unreachable(0));
        assert_eq!(err.to_string(), "absorbing state unreachable from state 0");
    }

    #[test]
    fn construction_checks() {
        let bad_sum = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.0, 1.0]);
        assert!(matches!(
            AbsorbingChain::new(vec!["a".into(), "b".into()], bad_sum, 1),
            Err(MarkovError::RowSum { row: 0, .. })
        ));
        let leaky = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(AbsorbingChain::new(vec!["a".into(), "b".into()], leaky, 1), Err(MarkovError::NotAbsorbing(1)));
    }
}
