//! Monte Carlo simulation of the strategy-letter random coding scheme.
//!
//! Codewords are sequences of super-letters: for every time index the
//! common codeword holds one `U` symbol per value of `S̃1`, the private
//! codewords one input symbol per policy row. The encoders index into the
//! super-letter with the delayed state they observe. The decoder knows the
//! state sequence, rebuilds each candidate's input sequences, and accepts
//! candidates whose empirical joint type over `(U, X1, X2, S, S̃1, S̃2, Y)`
//! is strongly typical.
//!
//! The first `fill` positions (`d1`, or `d2` when encoder 1 is blind) carry
//! symbol 0 and are left out of the type.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::discrete::{ConferencingConfig, RatePoint};
use crate::info::{assemble_joint, DmcChannel, InputPolicy, JointPmf, PolicyShape};
use crate::markov::{DelayedStateJoint, MarkovChain};
use crate::{par, rng, Error, Result};

pub const MAX_BLOCKLENGTH: usize = 512;
/// Cap on the candidate triplets the exhaustive decoder may examine.
pub const MAX_CANDIDATES: u64 = 1 << 16;
const MAX_BOOK_SYMBOLS: usize = 1 << 27;

const TAG_BOOK: u64 = 0xb00c;
const TAG_TRIAL: u64 = 0x7a1;
const TAG_STATES: u64 = 0x57a7e;
const TAG_NOISE: u64 = 0x2015e;

/// `max(1, ⌊2^{nR}⌋)`.
pub fn message_count(n: usize, rate: f64) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::arg(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let bits = n as f64 * rate;
    if bits >= 63.0 {
        return Err(Error::arg(format!("2^(n·R) = 2^{bits} messages is beyond any desk-scale simulation")));
    }
    // absorb representation error so that e.g. n·R = 4 gives exactly 16
    Ok((libm::floor(libm::exp2(bits) * (1.0 + 1e-12))).max(1.0) as u64)
}

/// Which delayed states the encoders see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsiDelays {
    /// `None`: encoder 1 has no state information.
    pub d1: Option<u64>,
    pub d2: u64,
}

impl CsiDelays {
    pub fn new(d1: Option<u64>, d2: u64) -> Result<Self> {
        if let Some(d1) = d1 {
            if d1 < d2 {
                return Err(Error::arg(format!("delays need d1 >= d2, got d1 = {d1}, d2 = {d2}")));
            }
        }
        Ok(CsiDelays { d1, d2 })
    }

    pub fn fill_len(&self, n: usize) -> usize {
        (self.d1.unwrap_or(self.d2) as usize).min(n)
    }

    /// The delayed sequences `(s̃1, s̃2)` seen at each time (0 before the
    /// delay has elapsed).
    pub fn delayed(&self, states: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let shift = |d: u64| -> Vec<usize> {
            let d = d as usize;
            (0..states.len()).map(|i| if i >= d { states[i - d] } else { 0 }).collect()
        };
        let s1 = match self.d1 {
            Some(d1) => shift(d1),
            None => vec![0; states.len()],
        };
        (s1, shift(self.d2))
    }

    fn state_joint(&self, chain: &MarkovChain) -> Result<DelayedStateJoint> {
        match self.d1 {
            Some(d1) => chain.delayed_state_joint(d1, self.d2),
            None => Ok(chain.blind_encoder1_joint(self.d2)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebooks {
    shape: PolicyShape,
    n: usize,
    seed: u64,
    counts: [usize; 3],
    t0: Vec<u8>,
    t1: Vec<u8>,
    t2: Vec<u8>,
}

impl Codebooks {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    /// Messages per book `(|M0|, |M1|, |M2|)`.
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Component `s̃1 = a` of the common super-letter at time `i`.
    pub fn u_symbol(&self, m0: usize, i: usize, a: usize) -> u8 {
        self.t0[(m0 * self.n + i) * self.shape.s1 + a]
    }

    /// Component `row = u·|S̃1| + s̃1` of user 1's super-letter.
    pub fn x1_symbol(&self, m1: usize, i: usize, row: usize) -> u8 {
        self.t1[(m1 * self.n + i) * self.shape.u * self.shape.s1 + row]
    }

    /// Component `row = (u·|S̃1| + s̃1)·|S̃2| + s̃2` of user 2's super-letter.
    pub fn x2_symbol(&self, m2: usize, i: usize, row: usize) -> u8 {
        self.t2[(m2 * self.n + i) * self.shape.u * self.shape.s1 * self.shape.s2 + row]
    }
}

fn draw_book(rows: &[Vec<f64>], count: usize, n: usize, r: &mut rng::Stream) -> Vec<u8> {
    let mut out = Vec::with_capacity(count * n * rows.len());
    for _ in 0..count * n {
        for row in rows {
            out.push(rng::sample_index(r, row) as u8);
        }
    }
    out
}

/// Books with `2^{n·Rj}` codewords each (floored, at least one).
pub fn generate_codebooks(policy: &InputPolicy, n: usize, rates: RatePoint, seed: u64) -> Result<Codebooks> {
    let counts = [message_count(n, rates.r0)?, message_count(n, rates.r1)?, message_count(n, rates.r2)?];
    generate_codebooks_with_counts(policy, n, counts, seed)
}

/// Books with explicit message counts.
pub fn generate_codebooks_with_counts(policy: &InputPolicy, n: usize, counts: [u64; 3], seed: u64) -> Result<Codebooks> {
    let shape = policy.shape();
    if shape.u > 256 || shape.x1 > 256 || shape.x2 > 256 {
        return Err(Error::arg("codebook alphabets are limited to 256 symbols"));
    }
    if n == 0 || n > MAX_BLOCKLENGTH {
        return Err(Error::arg(format!("blocklength must be in 1..={MAX_BLOCKLENGTH}, got {n}")));
    }
    if counts.contains(&0) {
        return Err(Error::arg("every book needs at least one codeword"));
    }
    let widths = [shape.s1, shape.u * shape.s1, shape.u * shape.s1 * shape.s2];
    let symbols: u128 = counts.iter().zip(widths).map(|(&c, w)| c as u128 * (n * w) as u128).sum();
    if symbols > MAX_BOOK_SYMBOLS as u128 {
        return Err(Error::arg(format!("codebooks would hold {symbols} symbols; the limit is {MAX_BOOK_SYMBOLS}")));
    }
    let counts = counts.map(|c| c as usize);
    let t0 = draw_book(policy.p_u(), counts[0], n, &mut rng::stream(seed, &[TAG_BOOK, 0]));
    let t1 = draw_book(policy.p_x1(), counts[1], n, &mut rng::stream(seed, &[TAG_BOOK, 1]));
    let t2 = draw_book(policy.p_x2(), counts[2], n, &mut rng::stream(seed, &[TAG_BOOK, 2]));
    Ok(Codebooks { shape, n, seed, counts, t0, t1, t2 })
}

/// Channel inputs of one block, plus the auxiliary sequence behind them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub u: Vec<u8>,
    pub x1: Vec<u8>,
    pub x2: Vec<u8>,
}

/// Encodes `(m0, m1, m2)` given the delayed state sequences.
pub fn encode(books: &Codebooks, m: [usize; 3], s1: &[usize], s2: &[usize], delays: CsiDelays) -> Result<Encoded> {
    let n = books.n;
    for (j, (&mj, &cj)) in m.iter().zip(&books.counts).enumerate() {
        if mj >= cj {
            return Err(Error::arg(format!("message m{j} = {mj} out of range (book has {cj} codewords)")));
        }
    }
    if s1.len() != n || s2.len() != n {
        return Err(Error::arg(format!("delayed state sequences must have length {n}")));
    }
    let sh = books.shape;
    if s1.iter().any(|&a| a >= sh.s1) || s2.iter().any(|&b| b >= sh.s2) {
        return Err(Error::arg("delayed state out of range for the policy"));
    }
    let fill = delays.fill_len(n);
    let mut out = Encoded { u: vec![0; n], x1: vec![0; n], x2: vec![0; n] };
    for i in fill..n {
        let (a, b) = (s1[i], s2[i]);
        let u = books.u_symbol(m[0], i, a) as usize;
        out.u[i] = u as u8;
        out.x1[i] = books.x1_symbol(m[1], i, sh.row_x1(u, a));
        out.x2[i] = books.x2_symbol(m[2], i, sh.row_x2(u, a, b));
    }
    Ok(out)
}

/// State path of length `n` started from the stationary distribution.
pub fn sample_states<R: Rng + ?Sized>(chain: &MarkovChain, n: usize, r: &mut R) -> Vec<usize> {
    let mut s = Vec::with_capacity(n);
    if n == 0 {
        return s;
    }
    s.push(rng::sample_index(r, chain.stationary_distribution()));
    for i in 1..n {
        s.push(rng::sample_index(r, chain.transition().row(s[i - 1])));
    }
    s
}

/// Channel outputs for given inputs and states.
pub fn transmit<R: Rng + ?Sized>(channel: &DmcChannel, x1: &[u8], x2: &[u8], states: &[usize], r: &mut R) -> Result<Vec<usize>> {
    if x1.len() != x2.len() || x1.len() != states.len() {
        return Err(Error::arg("input and state sequences must have equal length"));
    }
    let (a1, a2, k, _) = channel.dims();
    let mut y = Vec::with_capacity(x1.len());
    for ((&u, &v), &s) in x1.iter().zip(x2).zip(states) {
        if u as usize >= a1 || v as usize >= a2 || s >= k {
            return Err(Error::arg("symbol out of range for the channel"));
        }
        y.push(rng::sample_index(r, channel.row(u as usize, v as usize, s)));
    }
    Ok(y)
}

/// Samples a state path from `π` and passes the inputs through the channel.
/// The states come from their own stream, so they do not depend on the
/// inputs.
pub fn simulate_channel(chain: &MarkovChain, channel: &DmcChannel, x1: &[u8], x2: &[u8], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let s = sample_states(chain, x1.len(), &mut rng::stream(seed, &[TAG_STATES]));
    let y = transmit(channel, x1, x2, &s, &mut rng::stream(seed, &[TAG_NOISE]))?;
    Ok((s, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoded {
    Unique([usize; 3]),
    /// More than one candidate was typical.
    Ambiguous(usize),
    NoMatch,
}

impl Decoded {
    pub fn triplet(&self) -> Option<[usize; 3]> {
        match self {
            Decoded::Unique(m) => Some(*m),
            _ => None,
        }
    }
}

/// Strong typicality test against a model joint in the canonical variable
/// order `(U, X1, X2, S, S̃1, S̃2, Y)`.
pub struct TypicalityTest<'a> {
    model: &'a JointPmf,
    strides: [usize; 7],
    epsilon: f64,
}

impl<'a> TypicalityTest<'a> {
    pub fn new(model: &'a JointPmf, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
        }
        let vars = model.variables();
        let expected = crate::info::names::ALL;
        if vars.len() != 7 || vars.iter().zip(expected).any(|(v, e)| v.name != e) {
            return Err(Error::arg("typicality model must be over (U, X1, X2, S, S1, S2, Y) in that order"));
        }
        let mut strides = [1usize; 7];
        for j in (0..6).rev() {
            strides[j] = strides[j + 1] * vars[j + 1].size;
        }
        Ok(TypicalityTest { model, strides, epsilon })
    }

    /// Cell index with the candidate-dependent coordinates left at zero.
    fn base(&self, s: usize, a: usize, b: usize, y: usize) -> usize {
        s * self.strides[3] + a * self.strides[4] + b * self.strides[5] + y * self.strides[6]
    }

    fn cell(&self, base: usize, u: usize, x1: usize, x2: usize) -> usize {
        base + u * self.strides[0] + x1 * self.strides[1] + x2 * self.strides[2]
    }

    /// Checks a finished count table over `total` samples.
    fn accepts(&self, counts: &[u32], total: usize) -> bool {
        if total == 0 {
            return true;
        }
        let inv = 1.0 / total as f64;
        self.model.table().iter().zip(counts).all(|(&p, &c)| if p == 0.0 { c == 0 } else { (c as f64 * inv - p).abs() <= self.epsilon })
    }
}

/// Exhaustive joint-typicality decoding. Candidates whose type is not
/// typical are discarded; exactly one survivor is the decision. A codebook
/// with a single candidate decodes to it unconditionally.
pub fn decode_joint_typicality(
    books: &Codebooks,
    test: &TypicalityTest<'_>,
    y: &[usize],
    states: &[usize],
    delays: CsiDelays,
) -> Result<Decoded> {
    let n = books.n;
    if y.len() != n || states.len() != n {
        return Err(Error::arg(format!("output and state sequences must have length {n}")));
    }
    let total = books.counts.iter().map(|&c| c as u64).product::<u64>();
    if total > MAX_CANDIDATES {
        return Err(Error::arg(format!("{total} candidate triplets exceed the decoder cap {MAX_CANDIDATES}")));
    }
    let sh = books.shape;
    let vars = test.model.variables();
    if vars[0].size != sh.u || vars[1].size != sh.x1 || vars[2].size != sh.x2 || vars[4].size != sh.s1 || vars[5].size != sh.s2 {
        return Err(Error::arg("typicality model and codebooks disagree on alphabets"));
    }
    if states.iter().any(|&s| s >= vars[3].size) || y.iter().any(|&v| v >= vars[6].size) {
        return Err(Error::arg("state or output symbol out of range for the model"));
    }
    if total == 1 {
        // a single candidate carries no information to decide
        return Ok(Decoded::Unique([0, 0, 0]));
    }
    let (s1, s2) = delays.delayed(states);
    let fill = delays.fill_len(n);
    let len = n - fill;
    let bases: Vec<usize> = (fill..n).map(|i| test.base(states[i], s1[i], s2[i], y[i])).collect();
    // an early exit once some cell is already too full
    let ceiling: Vec<u32> =
        test.model.table().iter().map(|&p| if p == 0.0 { 0 } else { libm::floor((p + test.epsilon) * len as f64 + 1e-9) as u32 }).collect();

    let mut counts = vec![0u32; test.model.table().len()];
    let mut u_seq = vec![0usize; len];
    let mut x1_seq = vec![0usize; len];
    let mut found: Option<[usize; 3]> = None;
    let mut hits = 0usize;
    for m0 in 0..books.counts[0] {
        for (j, i) in (fill..n).enumerate() {
            u_seq[j] = books.u_symbol(m0, i, s1[i]) as usize;
        }
        for m1 in 0..books.counts[1] {
            for (j, i) in (fill..n).enumerate() {
                x1_seq[j] = books.x1_symbol(m1, i, sh.row_x1(u_seq[j], s1[i])) as usize;
            }
            for m2 in 0..books.counts[2] {
                let mut ok = true;
                let mut filled = 0;
                for (j, i) in (fill..n).enumerate() {
                    let u = u_seq[j];
                    let x2 = books.x2_symbol(m2, i, sh.row_x2(u, s1[i], s2[i])) as usize;
                    let c = test.cell(bases[j], u, x1_seq[j], x2);
                    counts[c] += 1;
                    filled = j + 1;
                    if counts[c] > ceiling[c] {
                        ok = false;
                        break;
                    }
                }
                if ok && test.accepts(&counts, len) {
                    hits += 1;
                    found = Some([m0, m1, m2]);
                }
                // undo exactly the increments made above
                for (j, i) in (fill..fill + filled).enumerate() {
                    let u = u_seq[j];
                    let x2 = books.x2_symbol(m2, i, sh.row_x2(u, s1[i], s2[i])) as usize;
                    counts[test.cell(bases[j], u, x1_seq[j], x2)] -= 1;
                }
            }
        }
    }
    Ok(match (hits, found) {
        (1, Some(m)) => Decoded::Unique(m),
        (0, _) => Decoded::NoMatch,
        (h, _) => Decoded::Ambiguous(h),
    })
}

/// Everything a simulation needs besides rates and sizes.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub chain: MarkovChain,
    pub channel: DmcChannel,
    pub policy: InputPolicy,
    pub delays: CsiDelays,
    model: JointPmf,
}

impl Scheme {
    pub fn new(chain: MarkovChain, channel: DmcChannel, policy: InputPolicy, delays: CsiDelays) -> Result<Self> {
        let states = delays.state_joint(&chain)?;
        let model = assemble_joint(&states, &policy, &channel)?;
        Ok(Scheme { chain, channel, policy, delays, model })
    }

    /// The joint law the decoder tests against.
    pub fn model(&self) -> &JointPmf {
        &self.model
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub trials: usize,
    pub errors: usize,
    pub p_e: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorEstimate {
    fn from_counts(errors: usize, trials: usize) -> Self {
        let (lo, hi) = wilson_interval(errors, trials, 1.959_963_984_540_054);
        ErrorEstimate { trials, errors, p_e: errors as f64 / trials as f64, ci_low: lo, ci_high: hi }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Uniform draw from `0..count` using exactly one 64-bit word.
fn draw_message<R: RngCore + ?Sized>(r: &mut R, count: usize) -> usize {
    ((r.next_u64() as u128 * count as u128) >> 64) as usize
}

/// One block with a freshly drawn code: draw message words, map them to
/// codebook indices, draw the state path, encode, send, decode. Returns the
/// drawn words, the transmitted indices and the decision.
#[allow(clippy::too_many_arguments)]
fn run_trial(
    scheme: &Scheme,
    test: &TypicalityTest<'_>,
    n: usize,
    counts: [u64; 3],
    draw: [usize; 3],
    seed: u64,
    trial: usize,
    to_code: impl Fn([usize; 3]) -> Result<[usize; 3]>,
) -> Result<([usize; 3], [usize; 3], Decoded)> {
    let mut r = rng::stream(seed, &[TAG_TRIAL, trial as u64]);
    let books = generate_codebooks_with_counts(&scheme.policy, n, counts, r.next_u64())?;
    let words = [draw_message(&mut r, draw[0]), draw_message(&mut r, draw[1]), draw_message(&mut r, draw[2])];
    let m = to_code(words)?;
    let states = sample_states(&scheme.chain, n, &mut r);
    let (s1, s2) = scheme.delays.delayed(&states);
    let enc = encode(&books, m, &s1, &s2, scheme.delays)?;
    let y = transmit(&scheme.channel, &enc.x1, &enc.x2, &states, &mut r)?;
    let d = decode_joint_typicality(&books, test, &y, &states, scheme.delays)?;
    Ok((words, m, d))
}

fn check_candidates(counts: [u64; 3]) -> Result<()> {
    let total = counts.iter().try_fold(1u64, |acc, &c| acc.checked_mul(c)).unwrap_or(u64::MAX);
    if total > MAX_CANDIDATES {
        return Err(Error::arg(format!("{total} candidate triplets exceed the decoder cap {MAX_CANDIDATES}")));
    }
    Ok(())
}

fn check_trials(n: usize, trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::arg("need at least one trial"));
    }
    if n == 0 || n > MAX_BLOCKLENGTH {
        return Err(Error::arg(format!("blocklength must be in 1..={MAX_BLOCKLENGTH}, got {n}")));
    }
    Ok(())
}

/// Block error probability averaged over the random-code ensemble: every
/// trial draws its own codebooks, messages, state path and channel noise.
pub fn estimate_error_rate(scheme: &Scheme, rates: RatePoint, n: usize, epsilon: f64, trials: usize, seed: u64) -> Result<ErrorEstimate> {
    check_trials(n, trials)?;
    let counts = [message_count(n, rates.r0)?, message_count(n, rates.r1)?, message_count(n, rates.r2)?];
    check_candidates(counts)?;
    let test = TypicalityTest::new(&scheme.model, epsilon)?;
    let draw = counts.map(|c| c as usize);
    let outcomes = par::map_indices(trials, |t| run_trial(scheme, &test, n, counts, draw, seed, t, Ok));
    let mut errors = 0;
    for o in outcomes {
        let (_, sent, decoded) = o?;
        if decoded.triplet() != Some(sent) {
            errors += 1;
        }
    }
    Ok(ErrorEstimate::from_counts(errors, trials))
}

/// Cell and within-cell sizes of the message split for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    /// Number of cells, `⌊2^{n·R̃}⌋` with `R̃ = min(R, C)`.
    pub cells: u64,
    /// Messages per cell, `⌊2^{n·(R − R̃)}⌋`.
    pub per_cell: u64,
}

impl SplitSizes {
    pub fn new(n: usize, rate: f64, link: f64) -> Result<Self> {
        let shared = rate.min(link);
        Ok(SplitSizes { cells: message_count(n, shared)?, per_cell: message_count(n, rate - shared)? })
    }

    /// Size of the message set the split covers.
    pub fn messages(&self) -> u64 {
        self.cells * self.per_cell
    }
}

/// Result of splitting `(m1, m2)` into a common part and private rests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMessages {
    /// Cell indices `(c1(m1), c2(m2))`, exchanged over the links.
    pub m0_prime: (u64, u64),
    pub m1_prime: u64,
    pub m2_prime: u64,
    pub sizes: (SplitSizes, SplitSizes),
}

impl SplitMessages {
    /// Single index of the common message, `c1·cells2 + c2`.
    pub fn common_index(&self) -> u64 {
        self.m0_prime.0 * self.sizes.1.cells + self.m0_prime.1
    }

    pub fn join(&self) -> (u64, u64) {
        (self.m0_prime.0 * self.sizes.0.per_cell + self.m1_prime, self.m0_prime.1 * self.sizes.1.per_cell + self.m2_prime)
    }
}

/// Splits `m_j` into cell `⌊m_j / per_cell⌋` and index `m_j mod per_cell`.
/// The message set of user `j` is `cells·per_cell` (which can be below
/// `⌊2^{n·Rj}⌋` when `n·Rj` is not an integer); on that set the split is a
/// bijection.
pub fn split_messages(m1: u64, m2: u64, rates: (f64, f64), conf: ConferencingConfig, n: usize) -> Result<SplitMessages> {
    let s1 = SplitSizes::new(n, rates.0, conf.c12)?;
    let s2 = SplitSizes::new(n, rates.1, conf.c21)?;
    if m1 >= s1.messages() || m2 >= s2.messages() {
        return Err(Error::arg(format!("messages ({m1}, {m2}) out of range ({}, {})", s1.messages(), s2.messages())));
    }
    Ok(SplitMessages {
        m0_prime: (m1 / s1.per_cell, m2 / s2.per_cell),
        m1_prime: m1 % s1.per_cell,
        m2_prime: m2 % s2.per_cell,
        sizes: (s1, s2),
    })
}

/// Inverse of [`SplitMessages::common_index`] plus the private parts.
pub fn join_messages(common: u64, m1_prime: u64, m2_prime: u64, sizes: (SplitSizes, SplitSizes)) -> (u64, u64) {
    let split = SplitMessages { m0_prime: (common / sizes.1.cells, common % sizes.1.cells), m1_prime, m2_prime, sizes };
    split.join()
}

/// Error rate of the conferencing pipeline: split `(m1, m2)`, send the
/// common-message code, rejoin the decoded parts. Errors are counted on
/// `(m1, m2)`. With zero-capacity links this reproduces
/// [`estimate_error_rate`] at `R0 = 0` trial by trial.
pub fn conferencing_error_rate(
    scheme: &Scheme,
    rates: (f64, f64),
    conf: ConferencingConfig,
    n: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    check_trials(n, trials)?;
    let s1 = SplitSizes::new(n, rates.0, conf.c12)?;
    let s2 = SplitSizes::new(n, rates.1, conf.c21)?;
    let sizes = (s1, s2);
    let counts = [s1.cells * s2.cells, s1.per_cell, s2.per_cell];
    check_candidates(counts)?;
    let test = TypicalityTest::new(&scheme.model, epsilon)?;
    // the unused first word keeps the draws aligned with the plain pipeline
    let draw = [1usize, s1.messages() as usize, s2.messages() as usize];
    let outcomes = par::map_indices(trials, |t| -> Result<bool> {
        let to_code = |w: [usize; 3]| -> Result<[usize; 3]> {
            let split = split_messages(w[1] as u64, w[2] as u64, rates, conf, n)?;
            Ok([split.common_index() as usize, split.m1_prime as usize, split.m2_prime as usize])
        };
        let (w, _, d) = run_trial(scheme, &test, n, counts, draw, seed, t, to_code)?;
        Ok(match d.triplet() {
            Some([c, p1, p2]) => join_messages(c as u64, p1 as u64, p2 as u64, sizes) != (w[1] as u64, w[2] as u64),
            None => true,
        })
    });
    let mut errors = 0;
    for o in outcomes {
        if o? {
            errors += 1;
        }
    }
    Ok(ErrorEstimate::from_counts(errors, trials))
}
