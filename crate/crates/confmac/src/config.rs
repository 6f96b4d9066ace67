//! Experiment configuration files (TOML).
//!
//! Every table rejects unknown keys. Infinite delays and link capacities
//! are written as the string `"inf"`; delays resolve to the chain's mixing
//! horizon, capacities to `f64::INFINITY`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use confmac_core::discrete::{default_u_size, ConferencingConfig, SearchConfig};
use confmac_core::gaussian::{GaussianMacSpec, LogConvention, SolverConfig};
use confmac_core::info::{DmcChannel, InputPolicy, PolicyShape};
use confmac_core::MarkovChain;

use crate::CliError;

/// Delays beyond this many steps are treated as infinite.
pub const MIXING_TOLERANCE: f64 = 1e-9;
const MIXING_MAX_STEPS: u64 = 1_000_000;

/// A nonnegative number or the sentinel `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity(pub f64);

/// A delay in symbols, `None` for `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delay(pub Option<u64>);

struct SentinelVisitor;

impl Visitor<'_> for SentinelVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a nonnegative number or \"inf\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        if v == "inf" {
            Ok(f64::INFINITY)
        } else {
            Err(E::invalid_value(de::Unexpected::Str(v), &self))
        }
    }
}

impl<'de> Deserialize<'de> for Capacity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = d.deserialize_any(SentinelVisitor)?;
        if v >= 0.0 {
            Ok(Capacity(v))
        } else {
            Err(de::Error::custom(format!("capacity must be nonnegative, got {v}")))
        }
    }
}

impl Serialize for Capacity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Delay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = d.deserialize_any(SentinelVisitor)?;
        if v.is_infinite() {
            Ok(Delay(None))
        } else if v >= 0.0 && v.fract() == 0.0 {
            Ok(Delay(Some(v as u64)))
        } else {
            Err(de::Error::custom(format!("delay must be a nonnegative integer or \"inf\", got {v}")))
        }
    }
}

impl Serialize for Delay {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(d) => s.serialize_u64(d),
            None => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_true")]
    pub plots: bool,
    pub chain: Option<ChainConfig>,
    pub delays: Option<DelayPair>,
    pub gaussian: Option<GaussianConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    pub discrete: Option<DiscreteConfig>,
    #[serde(default)]
    pub search: SearchSection,
    pub region: Option<RegionSection>,
    pub sweep: Option<SweepSection>,
    pub correlation: Option<CorrelationSection>,
    pub simulate: Option<SimulateSection>,
    pub asymptotics: Option<AsymptoticsSection>,
}

fn default_output_dir() -> String {
    "out".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Row-stochastic: `transition[a][b] = P(next = b | current = a)`.
    pub transition: Vec<Vec<f64>>,
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayPair {
    pub d1: Delay,
    pub d2: Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainUnits {
    /// Gains given as `|g|²`.
    Power,
    /// Gains given as `|g|`.
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogChoice {
    Real,
    Complex,
}

impl From<LogChoice> for LogConvention {
    fn from(c: LogChoice) -> Self {
        match c {
            LogChoice::Real => LogConvention::Real,
            LogChoice::Complex => LogConvention::Complex,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    /// `gains1[state][subchannel]`.
    pub gains1: Vec<Vec<f64>>,
    pub gains2: Vec<Vec<f64>>,
    pub gain_units: GainUnits,
    pub pbar1: f64,
    pub pbar2: f64,
    #[serde(default = "default_log")]
    pub log_convention: LogChoice,
}

fn default_log() -> LogChoice {
    LogChoice::Real
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub polish_iterations: usize,
    pub multistarts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            polish_iterations: d.polish_iterations,
            multistarts: d.multistarts,
        }
    }
}

impl SolverSection {
    pub fn to_config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            polish_iterations: self.polish_iterations,
            multistarts: self.multistarts,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    /// `|U|`; `min(4, cardinality cap)` when absent.
    pub u_size: Option<usize>,
    pub levels: usize,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub exhaustive_limit: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchConfig::default();
        SearchSection {
            u_size: None,
            levels: d.levels,
            restarts: d.restarts,
            max_sweeps: d.max_sweeps,
            exhaustive_limit: d.exhaustive_limit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// `Y = X1 ⊕ X2 ⊕ Z`, `Z ~ Bern(crossover[s])`.
    BinaryXor { crossover: Vec<f64> },
    /// `Y = X1 + X2` in every state.
    BinaryAdder,
    /// `Y = (X1, X2)`.
    NoiselessPair { x1: usize, x2: usize },
    /// Explicit rows `P(y | x1, x2, s)` indexed `(x1·|X2| + x2)·|S| + s`.
    Table { x1: usize, x2: usize, y: usize, rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    pub channel: ChannelConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkPair {
    pub c12: Capacity,
    pub c21: Capacity,
}

impl LinkPair {
    pub fn conf(&self) -> Result<ConferencingConfig, CliError> {
        Ok(ConferencingConfig::new(self.c12.0, self.c21.0)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    #[serde(default = "default_directions")]
    pub directions: usize,
    pub links: Vec<LinkPair>,
}

fn default_directions() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Symmetric link capacities `c12 = c21 = c`.
    pub capacities: Vec<Capacity>,
    /// Delay cases to sweep; the top-level `[delays]` when empty.
    #[serde(default)]
    pub delay_cases: Vec<DelayPair>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    pub links: Vec<LinkPair>,
    pub snr_db: SnrGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl SnrGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            SnrGrid::List(v) => Ok(v.clone()),
            SnrGrid::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(CliError::Config("correlation.snr_db: need step > 0 and stop >= start".into()));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|j| start + j as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Uniform {
        #[serde(default = "one")]
        u: usize,
    },
    /// Rows laid out as in the core `InputPolicy`.
    Table { u: usize, p_u: Vec<Vec<f64>>, p_x1: Vec<Vec<f64>>, p_x2: Vec<Vec<f64>> },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RateSpec {
    Explicit {
        #[serde(default)]
        r0: f64,
        r1: f64,
        r2: f64,
    },
    /// `R1 = R2 = fraction·bsum/2`, `R0 = 0`, with `bsum` evaluated for the
    /// simulated policy.
    BsumFraction { bsum_fraction: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub policy: PolicyConfig,
    pub blocklengths: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub points: Vec<RateSpec>,
    /// When present, runs the message-splitting conferencing pipeline.
    pub conferencing: Option<LinkPair>,
}

fn default_epsilon() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsSection {
    pub links: Vec<LinkPair>,
    /// Powers for the high-SNR β*; equal unit powers when absent.
    pub p1: Option<f64>,
    pub p2: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_else(|e| format!("# could not render: {e}\n"))
    }

    pub fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::Config(format!("missing field `{name}`")))
    }

    pub fn chain(&self) -> Result<MarkovChain, CliError> {
        let c = Self::require(&self.chain, "chain")?;
        let labels = match &c.labels {
            Some(l) => l.clone(),
            None => (0..c.transition.len()).map(|j| format!("S{j}")).collect(),
        };
        MarkovChain::new(labels, &c.transition).map_err(|e| CliError::Config(format!("chain: {e}")))
    }

    pub fn delays(&self) -> Result<DelayPair, CliError> {
        Self::require(&self.delays, "delays").copied()
    }

    pub fn solver(&self) -> SolverConfig {
        self.solver.to_config(self.seed)
    }

    /// The Gaussian spec with the given links and delays.
    pub fn gaussian_spec(&self, chain: &MarkovChain, links: ConferencingConfig, delays: DelayPair) -> Result<GaussianMacSpec, CliError> {
        let g = Self::require(&self.gaussian, "gaussian")?;
        let (d1, d2) = resolve_delays(chain, delays)?;
        let amp = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            match g.gain_units {
                GainUnits::Amplitude => rows.clone(),
                // negative entries pass through so the spec rejects them by name
                GainUnits::Power => rows.iter().map(|r| r.iter().map(|&v| if v >= 0.0 { v.sqrt() } else { v }).collect()).collect(),
            }
        };
        GaussianMacSpec::new(chain.clone(), amp(&g.gains1), amp(&g.gains2), g.pbar1, g.pbar2, links, d1, d2, g.log_convention.into())
            .map_err(|e| CliError::Config(format!("gaussian: {e}")))
    }

    pub fn channel(&self, states: usize) -> Result<DmcChannel, CliError> {
        let d = Self::require(&self.discrete, "discrete")?;
        let ch = match &d.channel {
            ChannelConfig::BinaryXor { crossover } => DmcChannel::binary_xor(crossover),
            ChannelConfig::BinaryAdder => Ok(DmcChannel::binary_adder(states)),
            ChannelConfig::NoiselessPair { x1, x2 } => Ok(DmcChannel::noiseless_pair(*x1, *x2, states)),
            ChannelConfig::Table { x1, x2, y, rows } => DmcChannel::new(*x1, *x2, states, *y, rows.clone()),
        }
        .map_err(|e| CliError::Config(format!("discrete.channel: {e}")))?;
        if ch.dims().2 != states {
            return Err(CliError::Config(format!("discrete.channel: defined for {} states but the chain has {states}", ch.dims().2)));
        }
        Ok(ch)
    }

    pub fn search(&self, x1: usize, x2: usize, states: usize) -> SearchConfig {
        SearchConfig {
            u_size: self.search.u_size.unwrap_or_else(|| default_u_size(x1, x2, states)),
            levels: self.search.levels,
            restarts: self.search.restarts,
            max_sweeps: self.search.max_sweeps,
            exhaustive_limit: self.search.exhaustive_limit,
            seed: self.seed,
            ..SearchConfig::default()
        }
    }

    pub fn policy(&self, shape_states: (usize, usize), channel: &DmcChannel) -> Result<InputPolicy, CliError> {
        let sim = Self::require(&self.simulate, "simulate")?;
        let (x1, x2, _, _) = channel.dims();
        let (s1, s2) = shape_states;
        let out = match &sim.policy {
            PolicyConfig::Uniform { u } => Ok(InputPolicy::uniform(PolicyShape { u: *u, x1, x2, s1, s2 })),
            PolicyConfig::Table { u, p_u, p_x1, p_x2 } => {
                InputPolicy::new(PolicyShape { u: *u, x1, x2, s1, s2 }, p_u.clone(), p_x1.clone(), p_x2.clone())
            }
        };
        out.map_err(|e| CliError::Config(format!("simulate.policy: {e}")))
    }
}

/// Finite delays for the core modules; `"inf"` becomes the mixing horizon.
pub fn resolve_delays(chain: &MarkovChain, delays: DelayPair) -> Result<(u64, u64), CliError> {
    let horizon = || chain.mixing_horizon(MIXING_TOLERANCE, MIXING_MAX_STEPS);
    let d1 = delays.d1.0.unwrap_or_else(horizon);
    let d2 = delays.d2.0.unwrap_or_else(horizon);
    if d1 < d2 {
        return Err(CliError::Config(format!("delays: need d1 >= d2, got d1 = {d1}, d2 = {d2}")));
    }
    Ok((d1, d2))
}
