//! The diagonal-vector Gaussian FSM-MAC with conferencing encoders and
//! delayed CSI.
//!
//! Decision variables are per-delayed-state, per-subchannel powers `P` and
//! private powers `γ = βP`; in these variables every rate bound is concave,
//! and so is the weighted sum-rate of the region they cut out.

mod covariance;
mod solver;

pub use covariance::{check_gaussian_markov, GaussianTripleCovariance};
pub use solver::{
    common_message_slice, conferencing_to_common, maximize_weighted_rate, maximize_weighted_rate_common, trace_boundary, weighted_value,
    Solution, SolveStatus, SolverConfig, TracePoint,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::discrete::{ConferencingConfig, RateBounds};
use crate::markov::MarkovChain;
use crate::{Error, Result};

const FEAS_SLACK: f64 = 1e-9;

/// Which capacity formula the log terms follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogConvention {
    /// Proper complex signalling: `log2(1 + snr)`.
    Complex,
    /// Real signalling: `½·log2(1 + snr)`.
    Real,
}

impl LogConvention {
    pub fn factor(self) -> f64 {
        match self {
            LogConvention::Complex => 1.0,
            LogConvention::Real => 0.5,
        }
    }
}

/// A problem instance. Gains are amplitudes `|g_{j,i}(s)|`, indexed
/// `[state][subchannel]`; noise is normalized to unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMacSpec {
    subchannels: usize,
    gains1: Vec<Vec<f64>>,
    gains2: Vec<Vec<f64>>,
    pbar1: f64,
    pbar2: f64,
    conf: ConferencingConfig,
    chain: MarkovChain,
    d1: u64,
    d2: u64,
    log: LogConvention,
    /// `P(S̃1=a, S̃2=b, S=s)` flattened `(a·k + b)·k + s`.
    weights: Vec<f64>,
    /// `P(S̃1=a)`.
    budget1: Vec<f64>,
    /// `P(S̃1=a, S̃2=b)` flattened `a·k + b`.
    budget2: Vec<f64>,
}

impl GaussianMacSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        chain: MarkovChain,
        gains1: Vec<Vec<f64>>,
        gains2: Vec<Vec<f64>>,
        pbar1: f64,
        pbar2: f64,
        conf: ConferencingConfig,
        d1: u64,
        d2: u64,
        log: LogConvention,
    ) -> Result<Self> {
        let k = chain.num_states();
        let n = gains1.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::arg("need at least one subchannel"));
        }
        for (name, g) in [("gains1", &gains1), ("gains2", &gains2)] {
            if g.len() != k {
                return Err(Error::arg(format!("{name} needs one row per state ({k}), got {}", g.len())));
            }
            if g.iter().any(|row| row.len() != n) {
                return Err(Error::arg(format!("{name} rows must all have {n} subchannels")));
            }
            if g.iter().flatten().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::arg(format!("{name} entries must be finite and nonnegative")));
            }
        }
        if !(pbar1 >= 0.0 && pbar1.is_finite() && pbar2 >= 0.0 && pbar2.is_finite()) {
            return Err(Error::arg("power budgets must be finite and nonnegative"));
        }
        ConferencingConfig::new(conf.c12, conf.c21)?;
        let joint = chain.delayed_state_joint(d1, d2)?;
        let weights = joint.table().to_vec();
        let budget1 = joint.marginal_delayed1();
        let budget2 = joint.marginal_delayed_pair().concat();
        Ok(GaussianMacSpec { subchannels: n, gains1, gains2, pbar1, pbar2, conf, chain, d1, d2, log, weights, budget1, budget2 })
    }

    pub fn num_states(&self) -> usize {
        self.chain.num_states()
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn gains1(&self) -> &[Vec<f64>] {
        &self.gains1
    }

    pub fn gains2(&self) -> &[Vec<f64>] {
        &self.gains2
    }

    pub fn budgets(&self) -> (f64, f64) {
        (self.pbar1, self.pbar2)
    }

    pub fn conf(&self) -> ConferencingConfig {
        self.conf
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn delays(&self) -> (u64, u64) {
        (self.d1, self.d2)
    }

    pub fn log_convention(&self) -> LogConvention {
        self.log
    }

    /// Same instance with different link capacities.
    pub fn with_conf(&self, conf: ConferencingConfig) -> Result<Self> {
        ConferencingConfig::new(conf.c12, conf.c21)?;
        Ok(GaussianMacSpec { conf, ..self.clone() })
    }

    /// Same instance with different power budgets.
    pub fn with_budgets(&self, pbar1: f64, pbar2: f64) -> Result<Self> {
        if !(pbar1 >= 0.0 && pbar1.is_finite() && pbar2 >= 0.0 && pbar2.is_finite()) {
            return Err(Error::arg("power budgets must be finite and nonnegative"));
        }
        Ok(GaussianMacSpec { pbar1, pbar2, ..self.clone() })
    }

    /// Same instance with every gain multiplied by `alpha`.
    pub fn with_scaled_gains(&self, alpha: f64) -> Result<Self> {
        let scale = |g: &[Vec<f64>]| g.iter().map(|r| r.iter().map(|x| x * alpha).collect()).collect();
        GaussianMacSpec::new(
            self.chain.clone(),
            scale(&self.gains1),
            scale(&self.gains2),
            self.pbar1,
            self.pbar2,
            self.conf,
            self.d1,
            self.d2,
            self.log,
        )
    }

    pub(crate) fn weight(&self, a: usize, b: usize, s: usize) -> f64 {
        let k = self.num_states();
        self.weights[(a * k + b) * k + s]
    }

    pub(crate) fn budget1_weight(&self, a: usize) -> f64 {
        self.budget1[a]
    }

    pub(crate) fn budget2_weight(&self, a: usize, b: usize) -> f64 {
        self.budget2[a * self.num_states() + b]
    }

    /// Single-state scalar channel with unit gains, the setting of the
    /// correlation-vs-SNR analysis.
    pub fn scalar_single_state(p1: f64, p2: f64, conf: ConferencingConfig, log: LogConvention) -> Result<Self> {
        GaussianMacSpec::new(MarkovChain::single_state(), vec![vec![1.0]], vec![vec![1.0]], p1, p2, conf, 0, 0, log)
    }
}

/// Powers and private powers. `p1[s̃1][i]`, `gamma1[s̃1][i]`,
/// `p2[s̃1][s̃2][i]`, `gamma2[s̃1][s̃2][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub p1: Vec<Vec<f64>>,
    pub gamma1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<Vec<f64>>>,
    pub gamma2: Vec<Vec<Vec<f64>>>,
}

impl Allocation {
    pub fn zeros(k: usize, n: usize) -> Self {
        Allocation {
            p1: vec![vec![0.0; n]; k],
            gamma1: vec![vec![0.0; n]; k],
            p2: vec![vec![vec![0.0; n]; k]; k],
            gamma2: vec![vec![vec![0.0; n]; k]; k],
        }
    }

    /// Budgets spread evenly over subchannels and delayed states, with
    /// private fraction `beta` (`γ = βP`).
    pub fn uniform(spec: &GaussianMacSpec, beta: f64) -> Self {
        let (k, n) = (spec.num_states(), spec.subchannels());
        let (pb1, pb2) = spec.budgets();
        let v1 = pb1 / n as f64;
        let v2 = pb2 / n as f64;
        Allocation {
            p1: vec![vec![v1; n]; k],
            gamma1: vec![vec![beta * v1; n]; k],
            p2: vec![vec![vec![v2; n]; k]; k],
            gamma2: vec![vec![vec![beta * v2; n]; k]; k],
        }
    }

    fn check_shape(&self, k: usize, n: usize) -> Result<()> {
        let ok1 = |t: &Vec<Vec<f64>>| t.len() == k && t.iter().all(|r| r.len() == n);
        let ok2 = |t: &Vec<Vec<Vec<f64>>>| t.len() == k && t.iter().all(ok1);
        if ok1(&self.p1) && ok1(&self.gamma1) && ok2(&self.p2) && ok2(&self.gamma2) {
            Ok(())
        } else {
            Err(Error::arg(format!("allocation shape does not match {k} states x {n} subchannels")))
        }
    }

    /// Convex combination `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &Allocation, lambda: f64) -> Allocation {
        let m1 = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect()).collect()
        };
        Allocation {
            p1: m1(&self.p1, &other.p1),
            gamma1: m1(&self.gamma1, &other.gamma1),
            p2: self.p2.iter().zip(&other.p2).map(|(a, b)| m1(a, b)).collect(),
            gamma2: self.gamma2.iter().zip(&other.gamma2).map(|(a, b)| m1(a, b)).collect(),
        }
    }

    /// Every power and private power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Allocation {
        let zero = Allocation::zeros(self.p1.len(), self.p1.first().map_or(0, Vec::len));
        self.mix(&zero, factor)
    }
}

/// The constraint families an allocation must satisfy.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `Σ π(s̃1) Σ_i P1 ≤ P̄1`.
    Budget1 { used: f64, budget: f64 },
    /// `Σ P(s̃1, s̃2) Σ_i P2 ≤ P̄2`.
    Budget2 { used: f64, budget: f64 },
    /// `0 ≤ γ1 ≤ P1` at `(s̃1, i)`.
    Private1 { s1: usize, subchannel: usize, gamma: f64, power: f64 },
    /// `0 ≤ γ2 ≤ P2` at `(s̃1, s̃2, i)`.
    Private2 { s1: usize, s2: usize, subchannel: usize, gamma: f64, power: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Budget1 { used, budget } => {
                write!(f, "user-1 average power {used} exceeds budget {budget}")
            }
            Violation::Budget2 { used, budget } => {
                write!(f, "user-2 average power {used} exceeds budget {budget}")
            }
            Violation::Private1 { s1, subchannel, gamma, power } => {
                write!(f, "user-1 private power gamma1 = {gamma} outside [0, P1 = {power}] at cell (s1 = {s1}, i = {subchannel})")
            }
            Violation::Private2 { s1, s2, subchannel, gamma, power } => write!(
                f,
                "user-2 private power gamma2 = {gamma} outside [0, P2 = {power}] at cell (s1 = {s1}, s2 = {s2}, i = {subchannel})"
            ),
        }
    }
}

/// `Ok(None)` when every constraint holds within `1e-9`; otherwise the first
/// violation in the order: budget 1, budget 2, private 1, private 2.
pub fn feasible(spec: &GaussianMacSpec, alloc: &Allocation) -> Result<Option<Violation>> {
    let (k, n) = (spec.num_states(), spec.subchannels());
    alloc.check_shape(k, n)?;
    let (pb1, pb2) = spec.budgets();
    let mut used1 = 0.0;
    let mut used2 = 0.0;
    for a in 0..k {
        used1 += spec.budget1_weight(a) * alloc.p1[a].iter().sum::<f64>();
        for b in 0..k {
            used2 += spec.budget2_weight(a, b) * alloc.p2[a][b].iter().sum::<f64>();
        }
    }
    if used1 > pb1 + FEAS_SLACK {
        return Ok(Some(Violation::Budget1 { used: used1, budget: pb1 }));
    }
    if used2 > pb2 + FEAS_SLACK {
        return Ok(Some(Violation::Budget2 { used: used2, budget: pb2 }));
    }
    let bad = |g: f64, p: f64| !(g >= -FEAS_SLACK && g <= p + FEAS_SLACK);
    for a in 0..k {
        for i in 0..n {
            let (g, p) = (alloc.gamma1[a][i], alloc.p1[a][i]);
            if bad(g, p) {
                return Ok(Some(Violation::Private1 { s1: a, subchannel: i, gamma: g, power: p }));
            }
        }
    }
    for a in 0..k {
        for b in 0..k {
            for i in 0..n {
                let (g, p) = (alloc.gamma2[a][b][i], alloc.p2[a][b][i]);
                if bad(g, p) {
                    return Ok(Some(Violation::Private2 { s1: a, s2: b, subchannel: i, gamma: g, power: p }));
                }
            }
        }
    }
    Ok(None)
}

/// The four bounds for a feasible allocation, with link capacities added to
/// the first three.
pub fn rate_bounds_gaussian(spec: &GaussianMacSpec, alloc: &Allocation) -> Result<RateBounds> {
    Ok(common_bounds_gaussian(spec, alloc)?.with_links(spec.conf()))
}

/// The bounds without link capacities: the common-message region, where
/// `bsum` limits `R0 + R1 + R2`.
pub fn common_bounds_gaussian(spec: &GaussianMacSpec, alloc: &Allocation) -> Result<RateBounds> {
    if let Some(v) = feasible(spec, alloc)? {
        return Err(Error::Infeasible(format!("{v}")));
    }
    let x = solver::flatten(spec, alloc);
    let b = solver::eval_bounds(spec, &x, None)?;
    Ok(b)
}
