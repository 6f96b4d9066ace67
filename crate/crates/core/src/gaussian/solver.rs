//! Concave maximization of the weighted sum-rate over allocations.
//!
//! For weights `μ1 ≥ μ2` the best weighted rate of the polytope cut out by
//! bounds `(b1, b2, b12, bsum)` equals the minimum of five linear forms in
//! the bounds (the dual vertices of the small LP):
//!
//! ```text
//! μ1 b1 + μ2 b2,  (μ1−μ2) b1 + μ2 b12,  (μ1−μ2) b1 + μ2 bsum,  μ1 b12,  μ1 bsum
//! ```
//!
//! (mirrored when `μ2 > μ1`). Each bound is concave in `(P, γ)`, so the
//! objective is a minimum of concave functions. The solver runs projected
//! subgradient ascent with step `c/√t` from several starts, then polishes
//! with a log-barrier interior-point method (Newton steps with exact
//! Hessians), which copes with the steep curvature of the correlation
//! term `√(D1·D2)` where one user sends almost no common power.
//! Projection is the exact Euclidean projection onto
//! `{0 ≤ γ ≤ P, weighted budget}`, one user at a time.
//!
//! Optimality is certified, not guessed. Writing
//! `√(D1·D2) = min_t (t·D1 + D2/t)/2` makes every bound, for fixed `t`,
//! smooth, concave and no smaller than the original, so its linearization
//! is a global overestimate. With the barrier's form multipliers `λ`,
//! `Σ λ_k cut_k` maximized over the (polyhedral) feasible set bounds the
//! optimum from above; its distance to the achieved value is reported as
//! [`Solution::optimality_gap`].

use alloc::vec;
use alloc::vec::Vec;

use super::{feasible, Allocation, GaussianMacSpec};
use crate::discrete::{weighted_rate, ConferencingConfig, RateBounds, RatePoint, RegionMode};
use crate::{par, rng, Error, Result};

const LN2: f64 = core::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Largest certified optimality gap (bits) reported as converged.
    pub tolerance: f64,
    /// Subgradient iterations per start.
    pub max_iterations: usize,
    /// Newton steps of the interior-point polish per start.
    pub polish_iterations: usize,
    /// Seeded random starts, on top of the two deterministic ones.
    pub multistarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-6, max_iterations: 1500, polish_iterations: 300, multistarts: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Iteration budget ran out; the result is the best feasible iterate.
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub point: RatePoint,
    pub allocation: Allocation,
    pub value: f64,
    /// Bounds at the returned allocation (links included in conferencing
    /// mode, excluded in common-message mode).
    pub bounds: RateBounds,
    /// Certified bound on how far `value` can be below the optimum.
    pub optimality_gap: f64,
    pub status: SolveStatus,
    /// Index of the start that produced the result (0: γ = P, 1: γ = 0,
    /// 2.. seeded random).
    pub start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub theta: f64,
    pub point: RatePoint,
    pub value: f64,
    pub status: SolveStatus,
}

struct Layout {
    k: usize,
    n: usize,
}

impl Layout {
    fn of(spec: &GaussianMacSpec) -> Self {
        Layout { k: spec.num_states(), n: spec.subchannels() }
    }
    fn len1(&self) -> usize {
        self.k * self.n
    }
    fn len2(&self) -> usize {
        self.k * self.k * self.n
    }
    fn p1(&self, a: usize, i: usize) -> usize {
        a * self.n + i
    }
    fn g1(&self, a: usize, i: usize) -> usize {
        self.len1() + a * self.n + i
    }
    fn p2(&self, a: usize, b: usize, i: usize) -> usize {
        2 * self.len1() + (a * self.k + b) * self.n + i
    }
    fn g2(&self, a: usize, b: usize, i: usize) -> usize {
        2 * self.len1() + self.len2() + (a * self.k + b) * self.n + i
    }
    fn total(&self) -> usize {
        2 * self.len1() + 2 * self.len2()
    }
}

pub(crate) fn flatten(spec: &GaussianMacSpec, alloc: &Allocation) -> Vec<f64> {
    let l = Layout::of(spec);
    let mut x = vec![0.0; l.total()];
    for a in 0..l.k {
        for i in 0..l.n {
            x[l.p1(a, i)] = alloc.p1[a][i];
            x[l.g1(a, i)] = alloc.gamma1[a][i];
            for b in 0..l.k {
                x[l.p2(a, b, i)] = alloc.p2[a][b][i];
                x[l.g2(a, b, i)] = alloc.gamma2[a][b][i];
            }
        }
    }
    x
}

fn unflatten(spec: &GaussianMacSpec, x: &[f64]) -> Allocation {
    let l = Layout::of(spec);
    let mut out = Allocation::zeros(l.k, l.n);
    for a in 0..l.k {
        for i in 0..l.n {
            out.p1[a][i] = x[l.p1(a, i)];
            out.gamma1[a][i] = x[l.g1(a, i)];
            for b in 0..l.k {
                out.p2[a][b][i] = x[l.p2(a, b, i)];
                out.gamma2[a][b][i] = x[l.g2(a, b, i)];
            }
        }
    }
    out
}

/// Bounds without link capacities; fills the four gradients when asked.
pub(crate) fn eval_bounds(spec: &GaussianMacSpec, x: &[f64], grads: Option<&mut [Vec<f64>; 4]>) -> Result<RateBounds> {
    let l = Layout::of(spec);
    let kappa = spec.log_convention().factor();
    let mut out = [0.0f64; 4];
    let mut grads = grads;
    if let Some(g) = grads.as_deref_mut() {
        for v in g.iter_mut() {
            v.clear();
            v.resize(l.total(), 0.0);
        }
    }
    for a in 0..l.k {
        for b in 0..l.k {
            for s in 0..l.k {
                let w = spec.weight(a, b, s);
                if w == 0.0 {
                    continue;
                }
                let wk = w * kappa;
                for i in 0..l.n {
                    let (g1, g2) = (spec.gains1()[s][i], spec.gains2()[s][i]);
                    let (h1, h2, cross) = (g1 * g1, g2 * g2, 2.0 * g1 * g2);
                    let (ip1, ig1, ip2, ig2) = (l.p1(a, i), l.g1(a, i), l.p2(a, b, i), l.g2(a, b, i));
                    let (p1, q1, p2, q2) = (x[ip1], x[ig1], x[ip2], x[ig2]);
                    let d1 = p1 - q1;
                    let d2 = p2 - q2;
                    let radicand = d1 * d2;
                    if radicand < 0.0 && !(d1 > -1e-9 * (1.0 + p1.abs()) && d2 > -1e-9 * (1.0 + p2.abs())) {
                        return Err(Error::Internal(alloc::format!("negative radicand {radicand} at (s1 = {a}, s2 = {b}, i = {i})")));
                    }
                    let (d1, d2) = (d1.max(0.0), d2.max(0.0));
                    let t1 = 1.0 + h1 * q1;
                    let t2 = 1.0 + h2 * q2;
                    let t12 = 1.0 + h1 * q1 + h2 * q2;
                    let root = libm::sqrt(d1 * d2);
                    let tsum = 1.0 + h1 * p1 + h2 * p2 + cross * root;
                    out[0] += wk * libm::log2(t1);
                    out[1] += wk * libm::log2(t2);
                    out[2] += wk * libm::log2(t12);
                    out[3] += wk * libm::log2(tsum);
                    if let Some(g) = grads.as_deref_mut() {
                        let c = wk / LN2;
                        g[0][ig1] += c * h1 / t1;
                        g[1][ig2] += c * h2 / t2;
                        g[2][ig1] += c * h1 / t12;
                        g[2][ig2] += c * h2 / t12;
                        // derivative of √(D1·D2) taken slightly inside the
                        // boundary so it stays finite
                        let e1 = d1 + 1e-9 * p1.abs().max(1e-9);
                        let e2 = d2 + 1e-9 * p2.abs().max(1e-9);
                        let dr1 = 0.5 * libm::sqrt(e2 / e1);
                        let dr2 = 0.5 * libm::sqrt(e1 / e2);
                        let cs = c / tsum;
                        g[3][ip1] += cs * (h1 + cross * dr1);
                        g[3][ig1] -= cs * cross * dr1;
                        g[3][ip2] += cs * (h2 + cross * dr2);
                        g[3][ig2] -= cs * cross * dr2;
                    }
                }
            }
        }
    }
    Ok(RateBounds { b1: out[0], b2: out[1], b12: out[2], bsum: out[3] })
}

/// Clamp range of `t` in `√(D1·D2) = min_t (t·D1 + D2/t)/2`.
const T_MIN: f64 = 1e-12;
const T_MAX: f64 = 1e12;

/// The bounds with every `√(D1·D2)` replaced by `(t·D1 + D2/t)/2` at
/// `t = √(D2/D1)` (clamped), with exact gradients. For fixed `t` each
/// replaced bound is smooth, concave and no smaller than the true bound
/// anywhere, and equal to it at `y` unless the clamp was active.
fn eval_cut(spec: &GaussianMacSpec, y: &[f64], g: &mut [Vec<f64>; 4]) -> Result<RateBounds> {
    let l = Layout::of(spec);
    let kappa = spec.log_convention().factor();
    let mut out = [0.0f64; 4];
    for v in g.iter_mut() {
        v.clear();
        v.resize(l.total(), 0.0);
    }
    for a in 0..l.k {
        for b in 0..l.k {
            for i in 0..l.n {
                let (ip1, ig1, ip2, ig2) = (l.p1(a, i), l.g1(a, i), l.p2(a, b, i), l.g2(a, b, i));
                let (p1, q1, p2, q2) = (y[ip1], y[ig1], y[ip2], y[ig2]);
                let (d1, d2) = ((p1 - q1).max(0.0), (p2 - q2).max(0.0));
                let t = if d1 == 0.0 && d2 == 0.0 {
                    1.0
                } else if d1 == 0.0 {
                    T_MAX
                } else {
                    libm::sqrt(d2 / d1).clamp(T_MIN, T_MAX)
                };
                let root = 0.5 * (t * d1 + d2 / t);
                for s in 0..l.k {
                    let w = spec.weight(a, b, s);
                    if w == 0.0 {
                        continue;
                    }
                    let wk = w * kappa;
                    let (g1, g2) = (spec.gains1()[s][i], spec.gains2()[s][i]);
                    let (h1, h2, cross) = (g1 * g1, g2 * g2, 2.0 * g1 * g2);
                    let t1 = 1.0 + h1 * q1;
                    let t2 = 1.0 + h2 * q2;
                    let t12 = 1.0 + h1 * q1 + h2 * q2;
                    let tsum = 1.0 + h1 * p1 + h2 * p2 + cross * root;
                    out[0] += wk * libm::log2(t1);
                    out[1] += wk * libm::log2(t2);
                    out[2] += wk * libm::log2(t12);
                    out[3] += wk * libm::log2(tsum);
                    let c = wk / LN2;
                    g[0][ig1] += c * h1 / t1;
                    g[1][ig2] += c * h2 / t2;
                    g[2][ig1] += c * h1 / t12;
                    g[2][ig2] += c * h2 / t12;
                    let cs = c / tsum;
                    g[3][ip1] += cs * (h1 + cross * 0.5 * t);
                    g[3][ig1] -= cs * cross * 0.5 * t;
                    g[3][ip2] += cs * (h2 + cross * 0.5 / t);
                    g[3][ig2] -= cs * cross * 0.5 / t;
                }
            }
        }
    }
    Ok(RateBounds { b1: out[0], b2: out[1], b12: out[2], bsum: out[3] })
}

/// The weighted-rate objective as a minimum of linear forms in the bounds.
struct Objective {
    /// Coefficients on `(b1, b2, b12, bsum)`.
    terms: Vec<[f64; 4]>,
    /// Added to the raw bounds before the forms are applied.
    shift: [f64; 4],
    mode: RegionMode,
    links: ConferencingConfig,
    mu: (f64, f64),
}

impl Objective {
    fn new(mu1: f64, mu2: f64, mode: RegionMode, links: ConferencingConfig) -> Self {
        let shift = match mode {
            RegionMode::Conferencing => [links.c12, links.c21, links.c12 + links.c21, 0.0],
            RegionMode::Common { r0 } => [0.0, 0.0, 0.0, -r0],
        };
        let raw = if mu1 >= mu2 {
            [[mu1, mu2, 0.0, 0.0], [mu1 - mu2, 0.0, mu2, 0.0], [mu1 - mu2, 0.0, 0.0, mu2], [0.0, 0.0, mu1, 0.0], [0.0, 0.0, 0.0, mu1]]
        } else {
            [[mu1, mu2, 0.0, 0.0], [0.0, mu2 - mu1, mu1, 0.0], [0.0, mu2 - mu1, 0.0, mu1], [0.0, 0.0, mu2, 0.0], [0.0, 0.0, 0.0, mu2]]
        };
        // a form with positive weight on an unbounded constraint never binds
        let terms = raw.into_iter().filter(|t| (0..4).all(|j| t[j] == 0.0 || shift[j].is_finite())).collect();
        Objective { terms, shift, mode, links, mu: (mu1, mu2) }
    }

    fn term_values(&self, b: &RateBounds) -> Vec<f64> {
        let raw = [b.b1, b.b2, b.b12, b.bsum];
        self.terms.iter().map(|t| (0..4).filter(|&j| t[j] != 0.0).map(|j| t[j] * (raw[j] + self.shift[j])).sum()).collect()
    }

    fn shifted(&self, b: RateBounds) -> RateBounds {
        match self.mode {
            RegionMode::Conferencing => b.with_links(self.links),
            RegionMode::Common { .. } => b,
        }
    }

    fn value(&self, spec: &GaussianMacSpec, x: &[f64]) -> Result<f64> {
        let b = eval_bounds(spec, x, None)?;
        Ok(self.term_values(&b).into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Exact minimum and the gradient of one minimizing form.
    fn subgradient(&self, spec: &GaussianMacSpec, x: &[f64], g: &mut [Vec<f64>; 4], out: &mut [f64]) -> Result<f64> {
        let b = eval_bounds(spec, x, Some(g))?;
        let vals = self.term_values(&b);
        let (arg, &val) = vals.iter().enumerate().fold((0, &f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let t = self.terms[arg];
        for (o, idx) in out.iter_mut().zip(0..) {
            *o = (0..4).map(|j| t[j] * g[j][idx]).sum();
        }
        Ok(val)
    }
}

/// Euclidean projection of `(p, q)` onto the wedge `{0 ≤ q ≤ p}`.
fn wedge(p: f64, q: f64) -> (f64, f64) {
    if q >= 0.0 && q <= p {
        (p, q)
    } else if q < 0.0 {
        (p.max(0.0), 0.0)
    } else if p + q > 0.0 {
        let t = 0.5 * (p + q);
        (t, t)
    } else {
        (0.0, 0.0)
    }
}

/// Projects the cells `(p_c, q_c)` with budget weights `w_c` onto
/// `{0 ≤ q ≤ p, Σ w·p ≤ budget}`. The multiplier of the budget is found by
/// bisection; cells with zero weight are only projected onto their wedge.
fn project_user(x: &mut [f64], cells: &[(usize, usize, f64)], budget: f64) {
    let used = |x: &[f64], lambda: f64| -> f64 { cells.iter().map(|&(ip, iq, w)| w * wedge(x[ip] - lambda * w, x[iq]).0).sum() };
    let apply = |x: &mut [f64], lambda: f64| {
        for &(ip, iq, w) in cells {
            let (p, q) = wedge(x[ip] - lambda * w, x[iq]);
            x[ip] = p;
            x[iq] = q;
        }
    };
    if used(x, 0.0) <= budget {
        apply(x, 0.0);
        return;
    }
    let mut hi = cells.iter().filter(|c| c.2 > 0.0).map(|&(ip, iq, w)| (x[ip].abs() + x[iq].abs()) / w).fold(0.0, f64::max) + 1.0;
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(x, mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    apply(x, hi);
}

fn project(spec: &GaussianMacSpec, x: &mut [f64]) {
    let l = Layout::of(spec);
    let (pb1, pb2) = spec.budgets();
    let mut cells1 = Vec::with_capacity(l.len1());
    let mut cells2 = Vec::with_capacity(l.len2());
    for a in 0..l.k {
        for i in 0..l.n {
            cells1.push((l.p1(a, i), l.g1(a, i), spec.budget1_weight(a)));
            for b in 0..l.k {
                cells2.push((l.p2(a, b, i), l.g2(a, b, i), spec.budget2_weight(a, b)));
            }
        }
    }
    project_user(x, &cells1, pb1);
    project_user(x, &cells2, pb2);
}

#[cfg(test)]
fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Run {
    x: Vec<f64>,
    value: f64,
    /// Certified upper bound on the optimum.
    upper: f64,
}

fn solve_from(spec: &GaussianMacSpec, obj: &Objective, mut x: Vec<f64>, cfg: &SolverConfig) -> Result<Run> {
    let dim = x.len();
    let (pb1, pb2) = spec.budgets();
    let scale = pb1.max(pb2).max(1e-12);
    project(spec, &mut x);
    let mut g4: [Vec<f64>; 4] = Default::default();
    let mut dir = vec![0.0; dim];

    let mut best_x = x.clone();
    let mut best = obj.value(spec, &x)?;
    for t in 1..=cfg.max_iterations {
        let v = obj.subgradient(spec, &x, &mut g4, &mut dir)?;
        if v > best {
            best = v;
            best_x.copy_from_slice(&x);
        }
        let norm = libm::sqrt(dir.iter().map(|d| d * d).sum::<f64>());
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let step = 0.5 * scale / libm::sqrt(t as f64) / norm;
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += step * di;
        }
        project(spec, &mut x);
    }
    let v = obj.value(spec, &x)?;
    if v > best {
        best = v;
        best_x.copy_from_slice(&x);
    }

    let mut run = Run { x: best_x, value: best, upper: f64::INFINITY };
    // single forms certify points where one form alone is optimal
    let mut candidates: Vec<Vec<f64>> =
        (0..obj.terms.len()).map(|k| (0..obj.terms.len()).map(|j| if j == k { 1.0 } else { 0.0 }).collect()).collect();
    let mut anchor = run.x.clone();
    if let Some((x, mut lambda)) = barrier_polish(spec, obj, &run.x, cfg.polish_iterations)? {
        let total: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= total);
        candidates.push(lambda);
        let v = obj.value(spec, &x)?;
        if v >= run.value {
            run.value = v;
            run.x.copy_from_slice(&x);
        }
        // cuts are steep at the boundary; the interior iterate keeps them tight
        anchor = x;
    }
    for lambda in &candidates {
        run.upper = run.upper.min(certificate(spec, obj, &anchor, lambda)?);
    }
    Ok(run)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bounds, gradients and dense Hessians (row-major, `dim × dim`) at a
/// point with `D1, D2 > 0` wherever the correlation term matters.
fn eval_hessian(spec: &GaussianMacSpec, x: &[f64], g: &mut [Vec<f64>; 4], hess: &mut [Vec<f64>; 4]) -> RateBounds {
    let l = Layout::of(spec);
    let dim = l.total();
    let kappa = spec.log_convention().factor();
    let mut out = [0.0f64; 4];
    for v in g.iter_mut() {
        v.clear();
        v.resize(dim, 0.0);
    }
    for v in hess.iter_mut() {
        v.clear();
        v.resize(dim * dim, 0.0);
    }
    for a in 0..l.k {
        for b in 0..l.k {
            for i in 0..l.n {
                let idx = [l.p1(a, i), l.g1(a, i), l.p2(a, b, i), l.g2(a, b, i)];
                let (p1, q1, p2, q2) = (x[idx[0]], x[idx[1]], x[idx[2]], x[idx[3]]);
                let (d1, d2) = ((p1 - q1).max(0.0), (p2 - q2).max(0.0));
                // √(D1·D2) with its first and second derivatives in (D1, D2)
                let root = libm::sqrt(d1 * d2);
                let (r1, r2, r11, r22, r12) = if d1 > 0.0 && d2 > 0.0 {
                    (0.5 * root / d1, 0.5 * root / d2, -0.25 * root / (d1 * d1), -0.25 * root / (d2 * d2), 0.25 / root)
                } else {
                    (0.0, 0.0, 0.0, 0.0, 0.0)
                };
                for s in 0..l.k {
                    let w = spec.weight(a, b, s);
                    if w == 0.0 {
                        continue;
                    }
                    let wk = w * kappa;
                    let (g1, g2) = (spec.gains1()[s][i], spec.gains2()[s][i]);
                    let (h1, h2, cross) = (g1 * g1, g2 * g2, 2.0 * g1 * g2);
                    let t1 = 1.0 + h1 * q1;
                    let t2 = 1.0 + h2 * q2;
                    let t12 = 1.0 + h1 * q1 + h2 * q2;
                    let tsum = 1.0 + h1 * p1 + h2 * p2 + cross * root;
                    out[0] += wk * libm::log2(t1);
                    out[1] += wk * libm::log2(t2);
                    out[2] += wk * libm::log2(t12);
                    out[3] += wk * libm::log2(tsum);
                    let c = wk / LN2;
                    // gradients of the arguments over (p1, γ1, p2, γ2)
                    let grads = [
                        [0.0, h1, 0.0, 0.0],
                        [0.0, 0.0, 0.0, h2],
                        [0.0, h1, 0.0, h2],
                        [h1 + cross * r1, -cross * r1, h2 + cross * r2, -cross * r2],
                    ];
                    let args = [t1, t2, t12, tsum];
                    for j in 0..4 {
                        let (gt, t) = (grads[j], args[j]);
                        for u in 0..4 {
                            g[j][idx[u]] += c * gt[u] / t;
                            for v in 0..4 {
                                hess[j][idx[u] * dim + idx[v]] -= c * gt[u] * gt[v] / (t * t);
                            }
                        }
                    }
                    // curvature of the correlation term: v1 = e_p1 − e_γ1, v2 = e_p2 − e_γ2
                    let v1 = [1.0, -1.0, 0.0, 0.0];
                    let v2 = [0.0, 0.0, 1.0, -1.0];
                    let cs = c * cross / tsum;
                    for u in 0..4 {
                        for v in 0..4 {
                            let second = r11 * v1[u] * v1[v] + r22 * v2[u] * v2[v] + r12 * (v1[u] * v2[v] + v2[u] * v1[v]);
                            hess[3][idx[u] * dim + idx[v]] += cs * second;
                        }
                    }
                }
            }
        }
    }
    RateBounds { b1: out[0], b2: out[1], b12: out[2], bsum: out[3] }
}

/// `(p, γ, weight, user)` index pairs of the cells the polish moves:
/// positive budget weight and positive budget.
fn free_cells(spec: &GaussianMacSpec) -> Vec<(usize, usize, f64, usize)> {
    let l = Layout::of(spec);
    let (pb1, pb2) = spec.budgets();
    let mut cells = Vec::new();
    for a in 0..l.k {
        for i in 0..l.n {
            let w = spec.budget1_weight(a);
            if w > 0.0 && pb1 > 0.0 {
                cells.push((l.p1(a, i), l.g1(a, i), w, 0));
            }
        }
    }
    for a in 0..l.k {
        for b in 0..l.k {
            for i in 0..l.n {
                let w = spec.budget2_weight(a, b);
                if w > 0.0 && pb2 > 0.0 {
                    cells.push((l.p2(a, b, i), l.g2(a, b, i), w, 1));
                }
            }
        }
    }
    cells
}

/// Shrink factor of the barrier weight between centerings.
const BARRIER_SHRINK: f64 = 0.1;
/// Newton steps allowed per barrier weight.
const CENTERING_STEPS: usize = 50;
/// Barrier gap (bits) at which the polish stops.
const BARRIER_GAP: f64 = 1e-9;

/// Interior-point polish of a feasible point: Newton's method on
///
/// ```text
/// max r − τ·[Σ log(form_k − r) + Σ log γ + Σ log(P − γ) + Σ log(budget slack)]
/// ```
///
/// for a decreasing sequence of `τ`. Curvature of the correlation term near
/// `D = 0` is what stalls first-order methods; Newton steps absorb it.
/// Returns the last iterate and the normalized form multipliers
/// `τ/(form_k − r)`, or `None` if no interior start exists.
fn barrier_polish(spec: &GaussianMacSpec, obj: &Objective, x0: &[f64], max_steps: usize) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let cells = free_cells(spec);
    if cells.is_empty() || obj.terms.is_empty() {
        return Ok(None);
    }
    let dim = x0.len();
    let budgets = {
        let (pb1, pb2) = spec.budgets();
        [pb1, pb2]
    };
    // strictly interior start: a small step toward a central point
    let mut weight_sum = [0.0f64; 2];
    for c in &cells {
        weight_sum[c.3] += c.2;
    }
    let mut x = x0.to_vec();
    let alpha = 1e-3;
    for &(ip, iq, _, u) in &cells {
        let centre = 0.5 * budgets[u] / weight_sum[u];
        x[ip] = (1.0 - alpha) * x[ip] + alpha * centre;
        x[iq] = (1.0 - alpha) * x[iq] + alpha * 0.5 * centre;
    }
    // variable order: the free coordinates (p then γ per cell), then r
    let mut pos = vec![usize::MAX; dim];
    for (j, &(ip, iq, _, _)) in cells.iter().enumerate() {
        pos[ip] = 2 * j;
        pos[iq] = 2 * j + 1;
    }
    let n = 2 * cells.len() + 1;
    let nterms = obj.terms.len();
    let ncons = nterms + 2 * cells.len() + 2;

    let forms = |b: &RateBounds| obj.term_values(b);
    let slack = |x: &[f64]| -> [f64; 2] {
        let mut used = [0.0f64; 2];
        for &(ip, _, w, u) in &cells {
            used[u] += w * x[ip];
        }
        [budgets[0] - used[0], budgets[1] - used[1]]
    };
    // barrier objective (to minimize) at weight 1/t, or None outside the domain
    let merit = |x: &[f64], r: f64, t: f64| -> Result<Option<f64>> {
        let mut f = -t * r;
        for &(ip, iq, _, _) in &cells {
            let (p, q) = (x[ip], x[iq]);
            if !(q > 0.0 && p - q > 0.0) {
                return Ok(None);
            }
            f -= libm::log(q) + libm::log(p - q);
        }
        let sl = slack(x);
        for (u, &s) in sl.iter().enumerate() {
            if weight_sum[u] > 0.0 {
                if !(s > 0.0) {
                    return Ok(None);
                }
                f -= libm::log(s);
            }
        }
        for v in forms(&eval_bounds(spec, x, None)?) {
            if !(v - r > 0.0) {
                return Ok(None);
            }
            f -= libm::log(v - r);
        }
        Ok(Some(f))
    };

    let b = eval_bounds(spec, &x, None)?;
    let fmin = forms(&b).into_iter().fold(f64::INFINITY, f64::min);
    let mut r = fmin - 1e-3 * (1.0 + fmin.abs());
    let mut t = ncons as f64 / 1e-3;
    let mut g4: [Vec<f64>; 4] = Default::default();
    let mut h4: [Vec<f64>; 4] = Default::default();
    let mut steps = 0;
    let mut lambda = vec![1.0 / nterms as f64; nterms];
    loop {
        // centering
        for _ in 0..CENTERING_STEPS {
            if steps >= max_steps {
                return Ok(Some((x, lambda)));
            }
            steps += 1;
            let b = eval_hessian(spec, &x, &mut g4, &mut h4);
            let vals = forms(&b);
            let mut grad = nalgebra::DVector::<f64>::zeros(n);
            let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
            grad[n - 1] = -t;
            for (k, term) in obj.terms.iter().enumerate() {
                let s = vals[k] - r;
                // ∇(form_k − r) on the free coordinates
                let mut gs = nalgebra::DVector::<f64>::zeros(n);
                for (full, &p) in pos.iter().enumerate() {
                    if p != usize::MAX {
                        gs[p] = (0..4).map(|j| term[j] * g4[j][full]).sum();
                    }
                }
                gs[n - 1] = -1.0;
                lambda[k] = 1.0 / (t * s);
                grad -= &gs / s;
                hess.ger(1.0 / (s * s), &gs, &gs, 1.0);
                for (fu, &pu) in pos.iter().enumerate() {
                    if pu == usize::MAX {
                        continue;
                    }
                    for (fv, &pv) in pos.iter().enumerate() {
                        if pv == usize::MAX {
                            continue;
                        }
                        let second: f64 = (0..4).filter(|&j| term[j] != 0.0).map(|j| term[j] * h4[j][fu * dim + fv]).sum();
                        hess[(pu, pv)] -= second / s;
                    }
                }
            }
            let sl = slack(&x);
            for (j, &(ip, iq, w, u)) in cells.iter().enumerate() {
                let (pp, pq) = (2 * j, 2 * j + 1);
                let q = x[iq];
                let d = x[ip] - q;
                grad[pq] -= 1.0 / q;
                hess[(pq, pq)] += 1.0 / (q * q);
                grad[pp] -= 1.0 / d;
                grad[pq] += 1.0 / d;
                let dd = 1.0 / (d * d);
                hess[(pp, pp)] += dd;
                hess[(pq, pq)] += dd;
                hess[(pp, pq)] -= dd;
                hess[(pq, pp)] -= dd;
                grad[pp] += w / sl[u];
                for (k, &(_, _, w2, u2)) in cells.iter().enumerate() {
                    if u2 == u {
                        hess[(pp, 2 * k)] += w * w2 / (sl[u] * sl[u]);
                    }
                }
            }
            let mut shift = 0.0;
            let step = loop {
                let mut m = hess.clone();
                for d in 0..n {
                    m[(d, d)] += shift;
                }
                if let Some(ch) = m.cholesky() {
                    break ch.solve(&(-&grad));
                }
                shift = if shift == 0.0 { 1e-12 * (1.0 + hess.diagonal().amax()) } else { 10.0 * shift };
                if !shift.is_finite() {
                    return Ok(Some((x, lambda)));
                }
            };
            let decrement = -grad.dot(&step);
            // the barrier problem is solved to within decrement/2 (in units of 1/t)
            if !(decrement > 1e-9) {
                break;
            }
            let f0 = match merit(&x, r, t)? {
                Some(f) => f,
                None => return Ok(Some((x, lambda))),
            };
            let mut a = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut y = x.clone();
                for (full, &p) in pos.iter().enumerate() {
                    if p != usize::MAX {
                        y[full] += a * step[p];
                    }
                }
                let ry = r + a * step[n - 1];
                if let Some(f) = merit(&y, ry, t)? {
                    if f <= f0 - 0.25 * a * decrement {
                        x = y;
                        r = ry;
                        moved = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if ncons as f64 / t <= BARRIER_GAP {
            break;
        }
        t /= BARRIER_SHRINK;
    }
    Ok(Some((x, lambda)))
}

/// An upper bound on the optimum: `max Σ λ_k cut_k` over the feasible set,
/// where `cut_k` overestimates form `k` everywhere and touches it at `y`.
fn certificate(spec: &GaussianMacSpec, obj: &Objective, y: &[f64], lambda: &[f64]) -> Result<f64> {
    let mut g4: [Vec<f64>; 4] = Default::default();
    let b = eval_cut(spec, y, &mut g4)?;
    let vals = obj.term_values(&b);
    let mut c = vec![0.0; y.len()];
    let mut base = 0.0;
    for ((term, v), &l) in obj.terms.iter().zip(vals).zip(lambda) {
        if l == 0.0 {
            continue;
        }
        let g: Vec<f64> = (0..y.len()).map(|idx| (0..4).filter(|&j| term[j] != 0.0).map(|j| term[j] * g4[j][idx]).sum()).collect();
        base += l * (v - dot(&g, y));
        c.iter_mut().zip(&g).for_each(|(ci, gi)| *ci += l * gi);
    }
    Ok(base + linear_max(spec, &c))
}

/// `max c·v` over the feasible set, which separates into one budget
/// polytope per user whose vertices put the whole budget on one cell.
fn linear_max(spec: &GaussianMacSpec, c: &[f64]) -> f64 {
    let l = Layout::of(spec);
    let (pb1, pb2) = spec.budgets();
    let mut best1 = 0.0f64;
    let mut best2 = 0.0f64;
    let per_unit = |ip: usize, iq: usize| c[ip].max(c[ip] + c[iq]);
    let mut unbounded = false;
    for a in 0..l.k {
        for i in 0..l.n {
            let v = per_unit(l.p1(a, i), l.g1(a, i));
            let w = spec.budget1_weight(a);
            if w > 0.0 {
                best1 = best1.max(v / w);
            } else if v > 0.0 {
                unbounded = true;
            }
            for b in 0..l.k {
                let v = per_unit(l.p2(a, b, i), l.g2(a, b, i));
                let w = spec.budget2_weight(a, b);
                if w > 0.0 {
                    best2 = best2.max(v / w);
                } else if v > 0.0 {
                    unbounded = true;
                }
            }
        }
    }
    if unbounded {
        f64::INFINITY
    } else {
        pb1 * best1 + pb2 * best2
    }
}

fn starts(spec: &GaussianMacSpec, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut out = vec![flatten(spec, &Allocation::uniform(spec, 1.0)), flatten(spec, &Allocation::uniform(spec, 0.0))];
    let l = Layout::of(spec);
    for j in 0..cfg.multistarts {
        let mut r = rng::stream(cfg.seed, &[0x6a55, j as u64]);
        let mut x = vec![0.0; l.total()];
        for v in x.iter_mut().take(l.len1()) {
            *v = r.random::<f64>();
        }
        for a in 0..l.k {
            for b in 0..l.k {
                for i in 0..l.n {
                    x[l.p2(a, b, i)] = r.random::<f64>();
                }
            }
        }
        // scale powers onto a random fraction of each budget, then draw γ
        let (pb1, pb2) = spec.budgets();
        let used1: f64 = (0..l.k).flat_map(|a| (0..l.n).map(move |i| (a, i))).map(|(a, i)| spec.budget1_weight(a) * x[l.p1(a, i)]).sum();
        let mut used2 = 0.0;
        for a in 0..l.k {
            for b in 0..l.k {
                for i in 0..l.n {
                    used2 += spec.budget2_weight(a, b) * x[l.p2(a, b, i)];
                }
            }
        }
        let f1 = (0.5 + 0.5 * r.random::<f64>()) * pb1 / used1.max(1e-300);
        let f2 = (0.5 + 0.5 * r.random::<f64>()) * pb2 / used2.max(1e-300);
        for a in 0..l.k {
            for i in 0..l.n {
                x[l.p1(a, i)] *= f1;
                x[l.g1(a, i)] = r.random::<f64>() * x[l.p1(a, i)];
                for b in 0..l.k {
                    x[l.p2(a, b, i)] *= f2;
                    x[l.g2(a, b, i)] = r.random::<f64>() * x[l.p2(a, b, i)];
                }
            }
        }
        out.push(x);
    }
    out
}

fn solve(spec: &GaussianMacSpec, obj: Objective, cfg: &SolverConfig) -> Result<Solution> {
    let (mu1, mu2) = obj.mu;
    if !(mu1 >= 0.0 && mu2 >= 0.0 && mu1 + mu2 > 0.0) {
        return Err(Error::arg("weights must be nonnegative with a positive sum"));
    }
    let starts = starts(spec, cfg);
    let runs = par::map_indices(starts.len(), |j| solve_from(spec, &obj, starts[j].clone(), cfg));
    let mut best: Option<(usize, Run)> = None;
    // every start's bound is global, so the tightest one applies to the best value
    let mut upper = f64::INFINITY;
    for (j, run) in runs.into_iter().enumerate() {
        let run = run?;
        upper = upper.min(run.upper);
        if best.as_ref().is_none_or(|(_, b)| run.value > b.value) {
            best = Some((j, run));
        }
    }
    let (start, run) = best.expect("at least two starts");
    let gap = (upper - run.value).max(0.0);
    let allocation = unflatten(spec, &run.x);
    if let Some(v) = feasible(spec, &allocation)? {
        return Err(Error::Internal(alloc::format!("solver left the feasible set: {v}")));
    }
    let bounds = obj.shifted(eval_bounds(spec, &run.x, None)?);
    let (value, point) = weighted_rate(&bounds, obj.mode, mu1, mu2);
    Ok(Solution {
        point,
        allocation,
        value,
        bounds,
        optimality_gap: gap,
        status: if gap <= cfg.tolerance { SolveStatus::Converged } else { SolveStatus::BudgetExhausted },
        start,
    })
}

/// Best `μ1 R1 + μ2 R2` over the conferencing region. Non-convergence is
/// reported through [`Solution::status`], never as an error.
pub fn maximize_weighted_rate(spec: &GaussianMacSpec, mu1: f64, mu2: f64, cfg: &SolverConfig) -> Result<Solution> {
    solve(spec, Objective::new(mu1, mu2, RegionMode::Conferencing, spec.conf()), cfg)
}

/// Best `μ1 R1 + μ2 R2` over the common-message region at fixed `R0 = r0`
/// (link capacities are ignored; `bsum` bounds `R0 + R1 + R2`).
pub fn maximize_weighted_rate_common(spec: &GaussianMacSpec, r0: f64, mu1: f64, mu2: f64, cfg: &SolverConfig) -> Result<Solution> {
    if !(r0 >= 0.0) {
        return Err(Error::arg("common rate must be nonnegative"));
    }
    solve(spec, Objective::new(mu1, mu2, RegionMode::Common { r0 }, ConferencingConfig::none()), cfg)
}

/// Exact objective value of an allocation (no optimization).
pub fn weighted_value(spec: &GaussianMacSpec, alloc: &crate::gaussian::Allocation, mu1: f64, mu2: f64) -> Result<f64> {
    let b = super::rate_bounds_gaussian(spec, alloc)?;
    Ok(weighted_rate(&b, RegionMode::Conferencing, mu1, mu2).0)
}

fn directions(n: usize) -> Vec<f64> {
    let half_pi = core::f64::consts::FRAC_PI_2;
    (0..n).map(|j| (j as f64 + 0.5) * half_pi / n as f64).collect()
}

fn trace_with(spec: &GaussianMacSpec, n: usize, cfg: &SolverConfig, mode: RegionMode) -> Result<Vec<TracePoint>> {
    if n < 2 {
        return Err(Error::arg("boundary trace needs at least 2 directions"));
    }
    let thetas = directions(n);
    let sols = par::map_indices(n, |j| {
        let (mu1, mu2) = (libm::cos(thetas[j]), libm::sin(thetas[j]));
        let cfg = SolverConfig { seed: cfg.seed ^ (j as u64).wrapping_mul(0x9E37_79B9), ..cfg.clone() };
        match mode {
            RegionMode::Conferencing => maximize_weighted_rate(spec, mu1, mu2, &cfg),
            RegionMode::Common { r0 } => maximize_weighted_rate_common(spec, r0, mu1, mu2, &cfg),
        }
    });
    sols.into_iter()
        .zip(thetas)
        .map(|(s, theta)| s.map(|s| TracePoint { theta, point: s.point, value: s.value, status: s.status }))
        .collect()
}

/// Boundary points for directions `θ_j = (j + ½)·(π/2)/n`, weights
/// `(cos θ, sin θ)`.
pub fn trace_boundary(spec: &GaussianMacSpec, n_directions: usize, cfg: &SolverConfig) -> Result<Vec<TracePoint>> {
    trace_with(spec, n_directions, cfg, RegionMode::Conferencing)
}

/// The `(R1, R2)` boundary of the common-message region at `R0 = r0`.
pub fn common_message_slice(spec: &GaussianMacSpec, r0: f64, n_directions: usize, cfg: &SolverConfig) -> Result<Vec<TracePoint>> {
    trace_with(spec, n_directions, cfg, RegionMode::Common { r0 })
}

/// Maps a conferencing rate pair to the common-message triple carried by
/// the message split: the shared parts `min(Rj, Cj)` form the common
/// message and the remainders stay private. When `Rj ≥ Cj` this is
/// `(C12 + C21, R1 − C12, R2 − C21)`.
pub fn conferencing_to_common(point: RatePoint, conf: ConferencingConfig) -> RatePoint {
    let s1 = point.r1.min(conf.c12);
    let s2 = point.r2.min(conf.c21);
    RatePoint { r0: s1 + s2, r1: point.r1 - s1, r2: point.r2 - s2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{rate_bounds_gaussian, LogConvention};
    use crate::markov::MarkovChain;

    #[test]
    fn wedge_projection_cases() {
        assert_eq!(wedge(2.0, 1.0), (2.0, 1.0));
        assert_eq!(wedge(2.0, -1.0), (2.0, 0.0));
        assert_eq!(wedge(-2.0, -1.0), (0.0, 0.0));
        assert_eq!(wedge(1.0, 3.0), (2.0, 2.0));
        assert_eq!(wedge(-1.0, 0.5), (0.0, 0.0));
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        let chain = MarkovChain::gilbert_elliott(0.2, 0.1).unwrap();
        let g = vec![vec![1.0, 0.5], vec![0.1, 0.3]];
        let spec = GaussianMacSpec::new(chain, g.clone(), g, 3.0, 2.0, ConferencingConfig::none(), 2, 1, LogConvention::Real).unwrap();
        let mut r = rng::stream(4, &[]);
        use rand::Rng;
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..Layout::of(&spec).total()).map(|_| 10.0 * (r.random::<f64>() - 0.3)).collect();
            project(&spec, &mut x);
            assert_eq!(feasible(&spec, &unflatten(&spec, &x)).unwrap(), None);
            let mut y = x.clone();
            project(&spec, &mut y);
            assert!(inf_norm_diff(&x, &y) < 1e-9);
        }
    }

    #[test]
    fn projection_beats_random_feasible_points() {
        // the Euclidean projection is the closest feasible point
        let spec = GaussianMacSpec::scalar_single_state(1.0, 1.0, ConferencingConfig::none(), LogConvention::Real).unwrap();
        let z = vec![1.5, 0.2, 0.3, 0.9];
        let mut p = z.clone();
        project(&spec, &mut p);
        let d = |a: &[f64]| a.iter().zip(&z).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
        let mut r = rng::stream(9, &[]);
        use rand::Rng;
        for _ in 0..2000 {
            let p1 = r.random::<f64>();
            let p2 = r.random::<f64>();
            let cand = [p1, r.random::<f64>() * p1, p2, r.random::<f64>() * p2];
            assert!(d(&p) <= d(&cand) + 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let chain = MarkovChain::gilbert_elliott(0.3, 0.1).unwrap();
        let g1 = vec![vec![1.0, 0.4], vec![0.2, 0.7]];
        let g2 = vec![vec![0.8, 0.5], vec![0.3, 0.9]];
        let spec = GaussianMacSpec::new(chain, g1, g2, 4.0, 3.0, ConferencingConfig::none(), 2, 1, LogConvention::Complex).unwrap();
        let mut x = flatten(&spec, &Allocation::uniform(&spec, 0.4));
        // asymmetric interior point
        for (j, v) in x.iter_mut().enumerate() {
            *v *= 1.0 + 0.05 * (j % 5) as f64;
        }
        let mut g: [Vec<f64>; 4] = Default::default();
        eval_bounds(&spec, &x, Some(&mut g)).unwrap();
        let h = 1e-6;
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let bp = eval_bounds(&spec, &xp, None).unwrap();
            let bm = eval_bounds(&spec, &xm, None).unwrap();
            let fd =
                [(bp.b1 - bm.b1) / (2.0 * h), (bp.b2 - bm.b2) / (2.0 * h), (bp.b12 - bm.b12) / (2.0 * h), (bp.bsum - bm.bsum) / (2.0 * h)];
            for m in 0..4 {
                assert!((fd[m] - g[m][j]).abs() < 1e-6, "bound {m} var {j}: fd {} vs {}", fd[m], g[m][j]);
            }
        }
    }

    #[test]
    fn hessians_match_finite_differences() {
        let chain = MarkovChain::gilbert_elliott(0.3, 0.1).unwrap();
        let g1 = vec![vec![1.0, 0.4], vec![0.2, 0.7]];
        let g2 = vec![vec![0.8, 0.5], vec![0.3, 0.9]];
        let spec = GaussianMacSpec::new(chain, g1, g2, 4.0, 3.0, ConferencingConfig::none(), 2, 1, LogConvention::Real).unwrap();
        let mut x = flatten(&spec, &Allocation::uniform(&spec, 0.4));
        for (j, v) in x.iter_mut().enumerate() {
            *v *= 1.0 + 0.07 * (j % 3) as f64;
        }
        let dim = x.len();
        let (mut g, mut hs): ([Vec<f64>; 4], [Vec<f64>; 4]) = Default::default();
        eval_hessian(&spec, &x, &mut g, &mut hs);
        let mut ge: [Vec<f64>; 4] = Default::default();
        eval_bounds(&spec, &x, Some(&mut ge)).unwrap();
        let step = 1e-5;
        for j in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let [mut gp, mut gm, mut scratch] = <[[Vec<f64>; 4]; 3]>::default();
            eval_hessian(&spec, &xp, &mut gp, &mut scratch);
            eval_hessian(&spec, &xm, &mut gm, &mut scratch);
            for m in 0..4 {
                assert!((g[m][j] - ge[m][j]).abs() < 1e-7);
                for i in 0..dim {
                    let fd = (gp[m][i] - gm[m][i]) / (2.0 * step);
                    assert!((fd - hs[m][i * dim + j]).abs() < 1e-6, "bound {m} ({i},{j}): fd {fd} vs {}", hs[m][i * dim + j]);
                }
            }
        }
    }

    #[test]
    fn single_user_scalar_uses_full_power() {
        let spec = GaussianMacSpec::scalar_single_state(10.0, 10.0, ConferencingConfig::none(), LogConvention::Real).unwrap();
        let sol = maximize_weighted_rate(&spec, 1.0, 0.0, &SolverConfig::default()).unwrap();
        assert!((sol.point.r1 - 0.5 * libm::log2(11.0)).abs() < 1e-6, "{:?}", sol.point);
        assert!((sol.allocation.gamma1[0][0] - 10.0).abs() < 1e-3);
        assert!((sol.allocation.p1[0][0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn single_user_is_certified() {
        let spec = GaussianMacSpec::scalar_single_state(10.0, 10.0, ConferencingConfig::none(), LogConvention::Real).unwrap();
        let sol = maximize_weighted_rate(&spec, 1.0, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert!(sol.optimality_gap <= 1e-6);
        assert!(sol.value + sol.optimality_gap >= 0.5 * libm::log2(11.0) - 1e-12);
    }

    #[test]
    fn linear_max_matches_vertex_enumeration() {
        let chain = MarkovChain::gilbert_elliott(0.2, 0.3).unwrap();
        let g = vec![vec![1.0, 0.5], vec![0.3, 0.2]];
        let spec = GaussianMacSpec::new(chain, g.clone(), g, 4.0, 7.0, ConferencingConfig::none(), 2, 1, LogConvention::Real).unwrap();
        let l = Layout::of(&spec);
        let mut r = rng::stream(5, &[1]);
        for _ in 0..20 {
            use rand::Rng;
            let c: Vec<f64> = (0..l.total()).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
            // vertices: origin, or one cell at full budget with γ ∈ {0, P}
            let (pb1, pb2) = spec.budgets();
            let mut v1 = vec![0.0f64];
            let mut v2 = vec![0.0f64];
            for a in 0..l.k {
                for i in 0..l.n {
                    let p = pb1 / spec.budget1_weight(a);
                    v1.push(p * c[l.p1(a, i)]);
                    v1.push(p * (c[l.p1(a, i)] + c[l.g1(a, i)]));
                    for b in 0..l.k {
                        let p = pb2 / spec.budget2_weight(a, b);
                        v2.push(p * c[l.p2(a, b, i)]);
                        v2.push(p * (c[l.p2(a, b, i)] + c[l.g2(a, b, i)]));
                    }
                }
            }
            let brute = v1.iter().copied().fold(f64::MIN, f64::max) + v2.iter().copied().fold(f64::MIN, f64::max);
            assert!((linear_max(&spec, &c) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_bounds_a_longer_run() {
        let chain = MarkovChain::gilbert_elliott(0.1, 0.1).unwrap();
        let g = vec![vec![1.0], vec![0.1]];
        let spec =
            GaussianMacSpec::new(chain, g.clone(), g, 10.0, 10.0, ConferencingConfig::new(0.3, 0.1).unwrap(), 2, 2, LogConvention::Real)
                .unwrap();
        let short = SolverConfig { max_iterations: 50, polish_iterations: 3, multistarts: 0, ..SolverConfig::default() };
        let quick = maximize_weighted_rate(&spec, 0.6, 0.8, &short).unwrap();
        let full = maximize_weighted_rate(&spec, 0.6, 0.8, &SolverConfig::default()).unwrap();
        assert!(quick.value + quick.optimality_gap >= full.value - 1e-12);
        assert!(full.optimality_gap <= 1e-6, "{}", full.optimality_gap);
    }

    #[test]
    fn zero_budgets_give_zero() {
        let spec = GaussianMacSpec::scalar_single_state(0.0, 0.0, ConferencingConfig::none(), LogConvention::Real).unwrap();
        let sol = maximize_weighted_rate(&spec, 1.0, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let spec = GaussianMacSpec::scalar_single_state(1.0, 1.0, ConferencingConfig::none(), LogConvention::Real).unwrap();
        assert!(maximize_weighted_rate(&spec, 0.0, 0.0, &SolverConfig::default()).is_err());
        assert!(maximize_weighted_rate(&spec, -1.0, 1.0, &SolverConfig::default()).is_err());
        assert!(trace_boundary(&spec, 1, &SolverConfig::default()).is_err());
    }

    #[test]
    fn mapping_to_common_is_inside_common_region() {
        let chain = MarkovChain::gilbert_elliott(0.1, 0.1).unwrap();
        let g = vec![vec![1.0], vec![0.1]];
        let conf = ConferencingConfig { c12: 0.3, c21: 0.2 };
        let spec = GaussianMacSpec::new(chain, g.clone(), g, 10.0, 10.0, conf, 2, 2, LogConvention::Real).unwrap();
        let sol = maximize_weighted_rate(&spec, 1.0, 1.0, &SolverConfig::default()).unwrap();
        let common = super::super::common_bounds_gaussian(&spec, &sol.allocation).unwrap();
        let t = conferencing_to_common(sol.point, conf);
        let slack = 1e-9;
        assert!(t.r1 <= common.b1 + slack && t.r2 <= common.b2 + slack);
        assert!(t.r1 + t.r2 <= common.b12 + slack);
        assert!(t.r0 + t.r1 + t.r2 <= common.bsum + slack);
        if sol.point.r1 >= conf.c12 && sol.point.r2 >= conf.c21 {
            assert!((t.r0 - (conf.c12 + conf.c21)).abs() < 1e-12);
            assert!((t.r1 - (sol.point.r1 - conf.c12)).abs() < 1e-12);
        }
        let b = rate_bounds_gaussian(&spec, &sol.allocation).unwrap();
        assert!((b.b1 - common.b1 - conf.c12).abs() < 1e-12);
    }
}
