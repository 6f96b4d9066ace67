//! Rate bounds of the common-message and conferencing regions for one input
//! policy, the geometry of the resulting rate polytope, and a quantized
//! search over policies that yields inner bounds on the capacity region.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::info::{assemble_joint, cardinality_cap, names, DmcChannel, InputPolicy, JointPmf, PolicyShape};
use crate::markov::DelayedStateJoint;
use crate::{par, rng, Error, Result};

const DEDUP_TOL: f64 = 1e-12;

/// Right-hand sides of the four rate constraints, in bits.
///
/// `b12` bounds `R1 + R2`. `bsum` bounds `R0 + R1 + R2` for the common
/// message region and is the second `R1 + R2` bound for conferencing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    pub bsum: f64,
}

impl RateBounds {
    /// The binding sum-rate constraint on `R1 + R2` when `R0 = r0`.
    pub fn sum_limit(&self, mode: RegionMode) -> f64 {
        match mode {
            RegionMode::Conferencing => self.b12.min(self.bsum),
            RegionMode::Common { r0 } => self.b12.min(self.bsum - r0),
        }
    }

    /// Adds link capacities to the first three bounds.
    pub fn with_links(self, conf: ConferencingConfig) -> RateBounds {
        RateBounds { b1: self.b1 + conf.c12, b2: self.b2 + conf.c21, b12: self.b12 + conf.c12 + conf.c21, bsum: self.bsum }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePoint {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePoint { r0: 0.0, r1, r2 }
    }
}

/// Conferencing link capacities in bits per channel use. `f64::INFINITY`
/// stands for an unlimited link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConferencingConfig {
    pub c12: f64,
    pub c21: f64,
}

impl ConferencingConfig {
    pub fn new(c12: f64, c21: f64) -> Result<Self> {
        if !(c12 >= 0.0) || !(c21 >= 0.0) {
            return Err(Error::arg(format!("link capacities must be nonnegative (c12 = {c12}, c21 = {c21})")));
        }
        Ok(ConferencingConfig { c12, c21 })
    }

    pub fn none() -> Self {
        ConferencingConfig { c12: 0.0, c21: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionMode {
    /// `(R1, R2)` with links folded into the bounds.
    Conferencing,
    /// The `(R1, R2)` slice of the common-message region at fixed `R0`.
    Common { r0: f64 },
}

/// `I(X1;Y|X2,U,S,S̃1,S̃2)`, `I(X2;Y|X1,U,S,S̃1,S̃2)`,
/// `I(X1,X2;Y|U,S,S̃1,S̃2)` and `I(X1,X2;Y|S,S̃1,S̃2)`.
pub fn common_message_bounds(joint: &JointPmf) -> Result<RateBounds> {
    use names::*;
    for n in ALL {
        joint.position(n)?;
    }
    Ok(RateBounds {
        b1: joint.conditional_mutual_information(&[X1], &[Y], &[X2, U, S, S1, S2])?,
        b2: joint.conditional_mutual_information(&[X2], &[Y], &[X1, U, S, S1, S2])?,
        b12: joint.conditional_mutual_information(&[X1, X2], &[Y], &[U, S, S1, S2])?,
        bsum: joint.conditional_mutual_information(&[X1, X2], &[Y], &[S, S1, S2])?,
    })
}

/// The common-message bounds with `c12`, `c21` and `c12 + c21` added to the
/// first three.
pub fn conferencing_bounds(joint: &JointPmf, conf: ConferencingConfig) -> Result<RateBounds> {
    Ok(common_message_bounds(joint)?.with_links(conf))
}

/// Vertices of `{r ≥ 0 : r1 ≤ b1, r2 ≤ b2, r1 + r2 ≤ m}` counterclockwise
/// from the origin, where `m` is the binding sum constraint for `mode`.
/// Regions with no area collapse to the origin.
pub fn polytope_vertices(bounds: &RateBounds, mode: RegionMode) -> Vec<RatePoint> {
    let r0 = match mode {
        RegionMode::Conferencing => 0.0,
        RegionMode::Common { r0 } => r0,
    };
    let at = |r1: f64, r2: f64| RatePoint { r0, r1, r2 };
    let m = bounds.sum_limit(mode);
    let e1 = bounds.b1.min(m);
    let e2 = bounds.b2.min(m);
    if !(m > DEDUP_TOL && e1 > DEDUP_TOL && e2 > DEDUP_TOL) {
        return vec![at(0.0, 0.0)];
    }
    let raw = [at(0.0, 0.0), at(e1, 0.0), at(e1, e2.min(m - e1)), at(e1.min(m - e2), e2), at(0.0, e2)];
    let mut out: Vec<RatePoint> = Vec::with_capacity(5);
    for p in raw {
        let dup = out.last().is_some_and(|q| libm::fabs(q.r1 - p.r1) <= DEDUP_TOL && libm::fabs(q.r2 - p.r2) <= DEDUP_TOL);
        if !dup {
            out.push(p);
        }
    }
    out
}

/// `max μ1 r1 + μ2 r2` over the polytope, with the maximizer. Ties go to the
/// lexicographically larger `(r1, r2)`. Weights must be nonnegative.
pub fn weighted_rate(bounds: &RateBounds, mode: RegionMode, mu1: f64, mu2: f64) -> (f64, RatePoint) {
    let r0 = match mode {
        RegionMode::Conferencing => 0.0,
        RegionMode::Common { r0 } => r0,
    };
    let m = bounds.sum_limit(mode).max(0.0);
    let (r1, r2) = if mu1 >= mu2 {
        let r1 = bounds.b1.max(0.0).min(m);
        (r1, bounds.b2.max(0.0).min(m - r1))
    } else {
        let r2 = bounds.b2.max(0.0).min(m);
        (bounds.b1.max(0.0).min(m - r2), r2)
    };
    // 0·∞ cannot occur: r1 and r2 are finite because bsum is
    (mu1 * r1 + mu2 * r2, RatePoint { r0, r1, r2 })
}

/// Knobs of [`inner_bound_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// `|U|`; must not exceed the cardinality cap.
    pub u_size: usize,
    /// Grid points per simplex edge (≥ 2): coordinates are multiples of
    /// `1 / (levels − 1)`.
    pub levels: usize,
    /// Random restarts of coordinate ascent (used when the full grid exceeds
    /// `exhaustive_limit`).
    pub restarts: usize,
    /// Upper bound on coordinate-ascent sweeps per restart.
    pub max_sweeps: usize,
    /// Enumerate the whole policy grid when it has at most this many points.
    pub exhaustive_limit: usize,
    pub seed: u64,
    pub mu1: f64,
    pub mu2: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { u_size: 2, levels: 5, restarts: 8, max_sweeps: 20, exhaustive_limit: 20_000, seed: 0, mu1: 1.0, mu2: 1.0 }
    }
}

/// Default `|U|` at desk scale: `min(4, cap)`.
pub fn default_u_size(x1: usize, x2: usize, states: usize) -> usize {
    cardinality_cap(x1, x2, states).min(4)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub value: f64,
    pub point: RatePoint,
    pub bounds: RateBounds,
    pub policy: InputPolicy,
    /// Policies evaluated across all restarts.
    pub evaluations: usize,
    /// True when the whole grid was enumerated.
    pub exhaustive: bool,
}

/// All points of the `n`-simplex whose coordinates are multiples of
/// `1/(levels − 1)`, in lexicographic order of the integer compositions.
pub fn simplex_grid(n: usize, levels: usize) -> Vec<Vec<f64>> {
    let total = levels.saturating_sub(1);
    let mut out = Vec::new();
    let mut parts = vec![0usize; n];
    fn rec(i: usize, left: usize, parts: &mut [usize], total: usize, out: &mut Vec<Vec<f64>>) {
        let n = parts.len();
        if i == n - 1 {
            parts[i] = left;
            out.push(parts.iter().map(|&p| p as f64 / total.max(1) as f64).collect());
            return;
        }
        for take in (0..=left).rev() {
            parts[i] = take;
            rec(i + 1, left - take, parts, total, out);
        }
    }
    if n == 0 {
        return out;
    }
    if total == 0 {
        // one level: only meaningful for a single-letter alphabet
        if n == 1 {
            out.push(vec![1.0]);
        }
        return out;
    }
    rec(0, total, &mut parts, total, &mut out);
    out
}

struct Evaluator<'a> {
    states: &'a DelayedStateJoint,
    channel: &'a DmcChannel,
    conf: ConferencingConfig,
    mu1: f64,
    mu2: f64,
}

impl Evaluator<'_> {
    fn eval(&self, policy: &InputPolicy) -> Result<(f64, RatePoint, RateBounds)> {
        let joint = assemble_joint(self.states, policy, self.channel)?;
        let bounds = conferencing_bounds(&joint, self.conf)?;
        let (v, p) = weighted_rate(&bounds, RegionMode::Conferencing, self.mu1, self.mu2);
        Ok((v, p, bounds))
    }
}

/// Searches quantized input policies for the best weighted sum-rate
/// `μ1 R1 + μ2 R2` of the conferencing region. The value is achieved by the
/// returned policy, so it is an inner bound on the true optimum.
///
/// Small grids are enumerated exhaustively. Otherwise each restart starts
/// from a grid point (restart 0: nearest to uniform; others: seeded random)
/// and runs coordinate ascent, one conditional row at a time over that
/// row's grid. Deterministic in `seed` regardless of thread count.
pub fn inner_bound_search(
    states: &DelayedStateJoint,
    channel: &DmcChannel,
    conf: ConferencingConfig,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    if cfg.levels < 2 {
        return Err(Error::arg("search grid needs at least 2 levels"));
    }
    if !(cfg.mu1 >= 0.0 && cfg.mu2 >= 0.0 && cfg.mu1 + cfg.mu2 > 0.0) {
        return Err(Error::arg("search weights must be nonnegative and not both zero"));
    }
    let (n1, n2, k) = states.dims();
    let (x1, x2, _, _) = channel.dims();
    let cap = cardinality_cap(x1, x2, k);
    if cfg.u_size == 0 || cfg.u_size > cap {
        return Err(Error::arg(format!("|U| = {} outside 1..={cap}", cfg.u_size)));
    }
    let shape = PolicyShape { u: cfg.u_size, x1, x2, s1: n1, s2: n2 };
    let base = InputPolicy::uniform(shape);
    let grids: Vec<Vec<Vec<f64>>> = (0..shape.num_rows()).map(|i| simplex_grid(base.row(i).len(), cfg.levels)).collect();
    let full: Option<usize> = grids.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
    let ev = Evaluator { states, channel, conf, mu1: cfg.mu1, mu2: cfg.mu2 };

    if let Some(count) = full.filter(|&c| c <= cfg.exhaustive_limit) {
        return exhaustive(&ev, base, &grids, count);
    }
    if cfg.restarts == 0 || cfg.max_sweeps == 0 {
        return Err(Error::arg("search budget is zero (restarts and sweeps must be positive)"));
    }
    let runs = par::map_indices(cfg.restarts, |r| ascend(&ev, &base, &grids, r, cfg));
    let mut best: Option<SearchResult> = None;
    let mut evaluations = 0;
    for run in runs {
        let run = run?;
        evaluations += run.evaluations;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    best.evaluations = evaluations;
    Ok(best)
}

fn exhaustive(ev: &Evaluator<'_>, mut policy: InputPolicy, grids: &[Vec<Vec<f64>>], count: usize) -> Result<SearchResult> {
    let mut idx = vec![0usize; grids.len()];
    for (i, g) in grids.iter().enumerate() {
        policy.set_row(i, g[0].clone())?;
    }
    let mut best: Option<SearchResult> = None;
    for _ in 0..count {
        let (value, point, bounds) = ev.eval(&policy)?;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(SearchResult { value, point, bounds, policy: policy.clone(), evaluations: 0, exhaustive: true });
        }
        for i in (0..grids.len()).rev() {
            idx[i] += 1;
            if idx[i] < grids[i].len() {
                policy.set_row(i, grids[i][idx[i]].clone())?;
                break;
            }
            idx[i] = 0;
            policy.set_row(i, grids[i][0].clone())?;
        }
    }
    let mut best = best.expect("grid is nonempty");
    best.evaluations = count;
    Ok(best)
}

fn nearest_to_uniform(grid: &[Vec<f64>]) -> usize {
    let n = grid[0].len() as f64;
    let dist = |p: &Vec<f64>| p.iter().map(|x| (x - 1.0 / n) * (x - 1.0 / n)).sum::<f64>();
    let mut best = 0;
    for (i, p) in grid.iter().enumerate() {
        if dist(p) < dist(&grid[best]) - 1e-15 {
            best = i;
        }
    }
    best
}

fn ascend(ev: &Evaluator<'_>, base: &InputPolicy, grids: &[Vec<Vec<f64>>], restart: usize, cfg: &SearchConfig) -> Result<SearchResult> {
    use rand::Rng;
    let mut rng = rng::stream(cfg.seed, &[0x5eac, restart as u64]);
    let mut policy = base.clone();
    for (i, g) in grids.iter().enumerate() {
        let pick = if restart == 0 { nearest_to_uniform(g) } else { rng.random_range(0..g.len()) };
        policy.set_row(i, g[pick].clone())?;
    }
    let (mut value, mut point, mut bounds) = ev.eval(&policy)?;
    let mut evaluations = 1;
    for _ in 0..cfg.max_sweeps {
        let mut improved = false;
        for (i, g) in grids.iter().enumerate() {
            let current = policy.row(i).to_vec();
            let mut best_row = current.clone();
            for cand in g {
                if *cand == current {
                    continue;
                }
                policy.set_row(i, cand.clone())?;
                let (v, p, b) = ev.eval(&policy)?;
                evaluations += 1;
                if v > value + 1e-12 {
                    value = v;
                    point = p;
                    bounds = b;
                    best_row = cand.clone();
                    improved = true;
                }
            }
            policy.set_row(i, best_row)?;
        }
        if !improved {
            break;
        }
    }
    Ok(SearchResult { value, point, bounds, policy, evaluations, exhaustive: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::MarkovChain;

    #[test]
    fn square_and_pentagon() {
        let sq = RateBounds { b1: 1.0, b2: 1.0, b12: 2.0, bsum: 2.0 };
        let v: Vec<(f64, f64)> = polytope_vertices(&sq, RegionMode::Conferencing).iter().map(|p| (p.r1, p.r2)).collect();
        assert_eq!(v, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let pent = RateBounds { b1: 1.0, b2: 1.0, b12: 1.5, bsum: 1.7 };
        let v: Vec<(f64, f64)> = polytope_vertices(&pent, RegionMode::Conferencing).iter().map(|p| (p.r1, p.r2)).collect();
        assert_eq!(v, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn zero_area_region_is_the_origin() {
        let b = RateBounds { b1: 0.0, b2: 1.0, b12: 1.0, bsum: 1.0 };
        assert_eq!(polytope_vertices(&b, RegionMode::Conferencing), vec![RatePoint::default()]);
        let b = RateBounds { b1: 1.0, b2: 1.0, b12: 1.0, bsum: 0.4 };
        assert_eq!(polytope_vertices(&b, RegionMode::Common { r0: 0.4 }).len(), 1);
    }

    #[test]
    fn infinite_links_leave_a_triangle() {
        let b =
            RateBounds { b1: 0.3, b2: 0.2, b12: 0.6, bsum: 0.8 }.with_links(ConferencingConfig { c12: f64::INFINITY, c21: f64::INFINITY });
        let v: Vec<(f64, f64)> = polytope_vertices(&b, RegionMode::Conferencing).iter().map(|p| (p.r1, p.r2)).collect();
        assert_eq!(v, vec![(0.0, 0.0), (0.8, 0.0), (0.0, 0.8)]);
        let (val, p) = weighted_rate(&b, RegionMode::Conferencing, 0.0, 1.0);
        assert_eq!((val, p.r1, p.r2), (0.8, 0.0, 0.8));
    }

    #[test]
    fn weighted_rate_tie_breaks_toward_r1() {
        let b = RateBounds { b1: 1.0, b2: 1.0, b12: 1.5, bsum: 2.0 };
        let (v, p) = weighted_rate(&b, RegionMode::Conferencing, 1.0, 1.0);
        assert_eq!((v, p.r1, p.r2), (1.5, 1.0, 0.5));
        let (v, p) = weighted_rate(&b, RegionMode::Conferencing, 1.0, 2.0);
        assert_eq!((v, p.r1, p.r2), (2.5, 0.5, 1.0));
    }

    #[test]
    fn noiseless_pipes_give_one_bit_each() {
        let chain = MarkovChain::gilbert_elliott(0.1, 0.1).unwrap();
        let st = chain.delayed_state_joint(1, 1).unwrap();
        let shape = PolicyShape { u: 1, x1: 2, x2: 2, s1: 2, s2: 2 };
        let joint = assemble_joint(&st, &InputPolicy::uniform(shape), &DmcChannel::noiseless_pair(2, 2, 2)).unwrap();
        let b = common_message_bounds(&joint).unwrap();
        for (got, want) in [(b.b1, 1.0), (b.b2, 1.0), (b.b12, 2.0), (b.bsum, 2.0)] {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_noise_gives_zero_bounds() {
        let chain = MarkovChain::gilbert_elliott(0.2, 0.1).unwrap();
        let st = chain.delayed_state_joint(2, 1).unwrap();
        let shape = PolicyShape { u: 2, x1: 2, x2: 2, s1: 2, s2: 2 };
        let p = InputPolicy::random(shape, &mut rng::stream(1, &[]));
        let joint = assemble_joint(&st, &p, &DmcChannel::pure_noise(2, 2, 2, 3)).unwrap();
        let b = common_message_bounds(&joint).unwrap();
        assert!(b.b1 < 1e-12 && b.b2 < 1e-12 && b.b12 < 1e-12 && b.bsum < 1e-12);
    }

    #[test]
    fn missing_variable_is_an_error() {
        let j = JointPmf::new(vec![crate::info::Variable::new("X1", 2), crate::info::Variable::new("Y", 2)], vec![0.25; 4]).unwrap();
        assert!(common_message_bounds(&j).is_err());
    }

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(2, 5).len(), 5);
        assert_eq!(simplex_grid(3, 3).len(), 6);
        assert_eq!(simplex_grid(1, 4), vec![vec![1.0]]);
        for p in simplex_grid(4, 4) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn search_rejects_bad_budgets() {
        let chain = MarkovChain::gilbert_elliott(0.1, 0.1).unwrap();
        let st = chain.delayed_state_joint(1, 1).unwrap();
        let ch = DmcChannel::noiseless_pair(2, 2, 2);
        let cfg = SearchConfig { levels: 1, ..Default::default() };
        assert!(inner_bound_search(&st, &ch, ConferencingConfig::none(), &cfg).is_err());
        let cfg = SearchConfig { restarts: 0, exhaustive_limit: 0, ..Default::default() };
        assert!(inner_bound_search(&st, &ch, ConferencingConfig::none(), &cfg).is_err());
    }

    #[test]
    fn stateless_noiseless_search_finds_two_bits() {
        let st = MarkovChain::single_state().delayed_state_joint(0, 0).unwrap();
        let ch = DmcChannel::noiseless_pair(2, 2, 1);
        let cfg = SearchConfig { u_size: 1, levels: 3, ..Default::default() };
        let r = inner_bound_search(&st, &ch, ConferencingConfig::none(), &cfg).unwrap();
        assert!(r.exhaustive);
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(r.policy.p_x1()[0], vec![0.5, 0.5]);
        assert_eq!(r.policy.p_x2()[0], vec![0.5, 0.5]);
    }
}
