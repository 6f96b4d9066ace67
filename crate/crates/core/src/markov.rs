//! The finite-state Markov state process and the joint law of the current
//! state with the two delayed observations the encoders see.
//!
//! Transition matrices are stored source-first: `K[(j, l)] = P(next = l |
//! current = j)`, so the stationary law is a row vector with `πK = π`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// An irreducible, aperiodic, homogeneous chain on `k ≥ 1` labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    labels: Vec<String>,
    transition: Matrix,
    stationary: Vec<f64>,
}

impl MarkovChain {
    /// Validates and builds a chain. Rejects negative entries, rows that do
    /// not sum to one, and chains that are reducible or periodic (no power
    /// `K^m`, `m ≤ k²`, is entrywise positive).
    pub fn new(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::arg("chain needs at least one state"));
        }
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::arg(format!("transition matrix must be {k}x{k}")));
        }
        for (j, row) in rows.iter().enumerate() {
            if let Some(l) = row.iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::arg(format!("transition entry ({j}, {l}) is negative or not finite")));
            }
            let sum: f64 = row.iter().sum();
            if libm::fabs(sum - 1.0) > ROW_SUM_TOL {
                return Err(Error::arg(format!("transition row {j} sums to {sum}, not 1")));
            }
        }
        let transition = Matrix::from_rows(rows)?;
        if !is_primitive(&transition)? {
            return Err(Error::arg("chain is not irreducible and aperiodic (no power K^m with m <= k^2 is positive)"));
        }
        let stationary = solve_stationary(&transition)?;
        Ok(MarkovChain { labels, transition, stationary })
    }

    /// Two-state good/bad chain with `P(B|G) = b`, `P(G|B) = g`.
    pub fn gilbert_elliott(g: f64, b: f64) -> Result<Self> {
        Self::new(vec!["G".into(), "B".into()], &[vec![1.0 - b, b], vec![g, 1.0 - g]])
    }

    /// The one-state chain (a channel without state).
    pub fn single_state() -> Self {
        MarkovChain { labels: vec!["S0".into()], transition: Matrix::identity(1), stationary: vec![1.0] }
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    /// The unique π with `πK = π`, computed at construction.
    pub fn stationary_distribution(&self) -> &[f64] {
        &self.stationary
    }

    /// `K^d`; `K^0` is the identity.
    pub fn n_step_matrix(&self, d: u64) -> Matrix {
        self.transition.pow(d).expect("transition matrix is square by construction")
    }

    /// Smallest `d` for which every row of `K^d` is within total-variation
    /// distance `tol` of π. Used as the finite stand-in for an infinite
    /// delay. Capped at `max_d`.
    pub fn mixing_horizon(&self, tol: f64, max_d: u64) -> u64 {
        let k = self.num_states();
        let mut power = Matrix::identity(k);
        for d in 0..=max_d {
            let worst = (0..k)
                .map(|j| 0.5 * power.row(j).iter().zip(&self.stationary).map(|(a, b)| libm::fabs(a - b)).sum::<f64>())
                .fold(0.0, f64::max);
            if worst < tol {
                return d;
            }
            power = power.mul(&self.transition).expect("square");
        }
        max_d
    }

    /// Joint law of `(S̃1, S̃2, S)` for encoder delays `d1 ≥ d2`.
    pub fn delayed_state_joint(&self, d1: u64, d2: u64) -> Result<DelayedStateJoint> {
        if d2 > d1 {
            return Err(Error::arg(format!("delays must satisfy d1 >= d2 (got d1 = {d1}, d2 = {d2})")));
        }
        let k = self.num_states();
        let gap = self.n_step_matrix(d1 - d2);
        let tail = self.n_step_matrix(d2);
        let mut table = vec![0.0; k * k * k];
        for a in 0..k {
            for b in 0..k {
                let head = self.stationary[a] * gap[(a, b)];
                for s in 0..k {
                    table[(a * k + b) * k + s] = head * tail[(b, s)];
                }
            }
        }
        Ok(DelayedStateJoint { d1: Some(d1), d2, n1: k, n2: k, k, table })
    }

    /// Joint law when encoder 1 has no CSI at all: `S̃1` is a constant (a
    /// one-letter alphabet) and `(S̃2, S)` keep their delay-`d2` law. This is
    /// the limit of [`delayed_state_joint`](Self::delayed_state_joint) as
    /// `d1` grows without bound.
    pub fn blind_encoder1_joint(&self, d2: u64) -> DelayedStateJoint {
        let k = self.num_states();
        let tail = self.n_step_matrix(d2);
        let mut table = vec![0.0; k * k];
        for b in 0..k {
            for s in 0..k {
                table[b * k + s] = self.stationary[b] * tail[(b, s)];
            }
        }
        DelayedStateJoint { d1: None, d2, n1: 1, n2: k, k, table }
    }
}

fn is_primitive(k: &Matrix) -> Result<bool> {
    let n = k.rows();
    let mut power = k.clone();
    for _ in 1..=(n * n).max(1) {
        if (0..n).all(|i| power.row(i).iter().all(|&v| v > 0.0)) {
            return Ok(true);
        }
        power = power.mul(k)?;
    }
    Ok(false)
}

/// Solves `π(K − I) = 0`, `Σπ = 1` by replacing one balance equation with
/// the normalization.
fn solve_stationary(k: &Matrix) -> Result<Vec<f64>> {
    let n = k.rows();
    let mut a = k.transpose().sub(&Matrix::identity(n))?;
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let inv = a.inverse().map_err(|_| Error::Internal("stationary system singular for a primitive chain".into()))?;
    let mut pi: Vec<f64> = (0..n).map(|i| inv[(i, n - 1)]).collect();
    for p in &mut pi {
        *p = p.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    Ok(pi)
}

/// `P(S̃1 = a, S̃2 = b, S = s)` stored as a dense `n1 × n2 × k` table.
///
/// Normally `n1 = n2 = k`. The blind-encoder-1 variant has `n1 = 1` and
/// `d1 = None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedStateJoint {
    d1: Option<u64>,
    d2: u64,
    n1: usize,
    n2: usize,
    k: usize,
    table: Vec<f64>,
}

impl DelayedStateJoint {
    pub fn d1(&self) -> Option<u64> {
        self.d1
    }

    pub fn d2(&self) -> u64 {
        self.d2
    }

    /// Alphabet sizes `(|S̃1|, |S̃2|, |S|)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.k)
    }

    pub fn prob(&self, a: usize, b: usize, s: usize) -> f64 {
        self.table[(a * self.n2 + b) * self.k + s]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Marginal of `S̃1`.
    pub fn marginal_delayed1(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n1];
        for a in 0..self.n1 {
            for b in 0..self.n2 {
                for s in 0..self.k {
                    m[a] += self.prob(a, b, s);
                }
            }
        }
        m
    }

    /// `P(S̃1 = a, S̃2 = b)`; this is the weight of `P2[a][b]` in the second
    /// power budget.
    pub fn marginal_delayed_pair(&self) -> Vec<Vec<f64>> {
        (0..self.n1).map(|a| (0..self.n2).map(|b| (0..self.k).map(|s| self.prob(a, b, s)).sum()).collect()).collect()
    }

    /// Marginal of the current state `S`.
    pub fn marginal_state(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for a in 0..self.n1 {
            for b in 0..self.n2 {
                for (s, ms) in m.iter_mut().enumerate() {
                    *ms += self.prob(a, b, s);
                }
            }
        }
        m
    }
}
