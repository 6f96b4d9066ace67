//! One function per experiment kind. Each reads its sections of the
//! config, calls into the core crate and writes CSV (plus SVG when plots
//! are enabled) under the output directory.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::Serialize;

use confmac_core::asymptotics;
use confmac_core::coding::{conferencing_error_rate, estimate_error_rate, CsiDelays, Scheme};
use confmac_core::discrete::{common_message_bounds, inner_bound_search, ConferencingConfig, RatePoint, SearchConfig};
use confmac_core::gaussian::{maximize_weighted_rate, trace_boundary, SolveStatus};
use confmac_core::info::InputPolicy;
use confmac_core::MarkovChain;

use crate::config::{resolve_delays, Delay, DelayPair, ExperimentConfig, PolicyConfig, RateSpec};
use crate::output::{config_hash, write_atomic, Table};
use crate::svg::{Plot, Series};
use crate::{Artifacts, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RegionGaussian,
    RegionDiscrete,
    SweepSumrate,
    SweepCorrelation,
    Simulate,
    Asymptotics,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::RegionGaussian => "region-gaussian",
            Experiment::RegionDiscrete => "region-discrete",
            Experiment::SweepSumrate => "sweep-sumrate",
            Experiment::SweepCorrelation => "sweep-correlation",
            Experiment::Simulate => "simulate",
            Experiment::Asymptotics => "asymptotics",
        }
    }

    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub no_plots: bool,
}

struct Ctx {
    cfg: ExperimentConfig,
    hash: String,
    out: PathBuf,
    plots: bool,
    stem: String,
    artifacts: Artifacts,
}

impl Ctx {
    fn table(&self, columns: &[&str]) -> Table {
        Table::new(columns, &self.hash, self.cfg.seed)
    }

    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        let name = if suffix.is_empty() { format!("{}.{ext}", self.stem) } else { format!("{}_{suffix}.{ext}", self.stem) };
        self.out.join(name)
    }

    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        write_atomic(&path, contents)?;
        self.artifacts.files.push(path);
        Ok(())
    }

    fn write_csv(&mut self, suffix: &str, t: &Table) -> Result<(), CliError> {
        let p = self.path(suffix, "csv");
        self.write(p, &t.render())
    }

    fn write_svg(&mut self, suffix: &str, plot: &Plot) -> Result<(), CliError> {
        if !self.plots {
            return Ok(());
        }
        let p = self.path(suffix, "svg");
        self.write(p, &plot.render())
    }
}

fn load(path: &Path, ov: &Overrides) -> Result<(ExperimentConfig, String), CliError> {
    let (mut cfg, text) = ExperimentConfig::load(path)?;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(o) = &ov.out {
        cfg.output_dir = o.display().to_string();
    }
    if ov.no_plots {
        cfg.plots = false;
    }
    Ok((cfg, text))
}

/// Parses and resolves the config without computing anything; returns the
/// report printed by `validate`.
pub fn validate(path: &Path, ov: &Overrides) -> Result<String, CliError> {
    let (cfg, text) = load(path, ov)?;
    let mut resolved = Vec::new();
    if cfg.chain.is_some() {
        let chain = cfg.chain()?;
        resolved.push(format!("# states = {}", chain.num_states()));
        resolved.push(format!("# stationary = {:?}", chain.stationary_distribution()));
        if let Some(d) = cfg.delays {
            let (d1, d2) = resolve_delays(&chain, d)?;
            resolved.push(format!("# resolved delays: d1 = {d1}, d2 = {d2}"));
        }
        if let Some(d) = cfg.delays {
            if cfg.gaussian.is_some() {
                cfg.gaussian_spec(&chain, ConferencingConfig::none(), d)?;
            }
        }
        if cfg.discrete.is_some() {
            let ch = cfg.channel(chain.num_states())?;
            let (x1, x2, k, _) = ch.dims();
            resolved.push(format!("# search |U| = {}", cfg.search(x1, x2, k).u_size));
        }
    }
    for pairs in [cfg.region.as_ref().map(|r| &r.links), cfg.correlation.as_ref().map(|c| &c.links)].into_iter().flatten() {
        for l in pairs {
            l.conf()?;
        }
    }
    if let Some(c) = &cfg.correlation {
        c.snr_db.values()?;
    }
    Ok(format!("ok\n# config_hash = {}\n{}\n{}", config_hash(&text), resolved.join("\n"), cfg.to_toml()))
}

/// Runs one experiment and writes its artifacts.
pub fn run(kind: Experiment, path: &Path, ov: &Overrides) -> Result<Artifacts, CliError> {
    let (cfg, text) = load(path, ov)?;
    let mut ctx = Ctx {
        hash: config_hash(&text),
        out: PathBuf::from(&cfg.output_dir),
        plots: cfg.plots,
        stem: kind.stem(),
        cfg,
        artifacts: Artifacts::default(),
    };
    match kind {
        Experiment::RegionGaussian => region_gaussian(&mut ctx)?,
        Experiment::RegionDiscrete => region_discrete(&mut ctx)?,
        Experiment::SweepSumrate => sweep_sumrate(&mut ctx)?,
        Experiment::SweepCorrelation => sweep_correlation(&mut ctx)?,
        Experiment::Simulate => simulate(&mut ctx)?,
        Experiment::Asymptotics => asymptotics_table(&mut ctx)?,
    }
    Ok(ctx.artifacts)
}

fn fmt_cap(c: f64) -> String {
    if c.is_infinite() {
        "inf".into()
    } else {
        crate::output::fmt_g12(c)
    }
}

fn fmt_delay(d: Delay) -> String {
    d.0.map_or_else(|| "inf".into(), |v| v.to_string())
}

fn region_gaussian(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let chain = cfg.chain()?;
    let delays = cfg.delays()?;
    let region = ExperimentConfig::require(&cfg.region, "region")?.clone();
    let solver = cfg.solver();
    let mut trace = ctx.table(&["c12", "c21", "theta", "mu1", "mu2", "r1", "r2", "value", "status"]);
    let mut summary = ctx.table(&["c12", "c21", "max_r1", "max_r2", "max_sum_rate", "status"]);
    let mut series = Vec::new();
    for link in &region.links {
        let conf = link.conf()?;
        let spec = cfg.gaussian_spec(&chain, conf, delays)?;
        let points = trace_boundary(&spec, region.directions, &solver)?;
        let r1 = maximize_weighted_rate(&spec, 1.0, 0.0, &solver)?;
        let r2 = maximize_weighted_rate(&spec, 0.0, 1.0, &solver)?;
        let sum = maximize_weighted_rate(&spec, 1.0, 1.0, &solver)?;
        let mut all_ok = [r1.status, r2.status, sum.status].iter().all(|s| *s == SolveStatus::Converged);
        for p in &points {
            all_ok &= p.status == SolveStatus::Converged;
            trace.push(vec![
                fmt_cap(conf.c12).into(),
                fmt_cap(conf.c21).into(),
                p.theta.into(),
                p.theta.cos().into(),
                p.theta.sin().into(),
                p.point.r1.into(),
                p.point.r2.into(),
                p.value.into(),
                p.status.as_str().into(),
            ]);
        }
        let status = if all_ok { SolveStatus::Converged } else { SolveStatus::BudgetExhausted };
        if !all_ok {
            ctx.artifacts.notes.push(format!("c12 = {}, c21 = {}: some points hit the solver budget", conf.c12, conf.c21));
        }
        summary.push(vec![
            fmt_cap(conf.c12).into(),
            fmt_cap(conf.c21).into(),
            r1.value.into(),
            r2.value.into(),
            sum.value.into(),
            status.as_str().into(),
        ]);
        let mut outline = vec![(0.0, 0.0), (r1.value, 0.0)];
        outline.extend(points.iter().map(|p| (p.point.r1, p.point.r2)));
        outline.push((0.0, r2.value));
        series.push(Series::line(format!("C12={}, C21={}", fmt_cap(conf.c12), fmt_cap(conf.c21)), outline).closed());
    }
    ctx.write_csv("", &trace)?;
    ctx.write_csv("summary", &summary)?;
    let plot = Plot { title: "Conferencing region".into(), x_label: "R1 [bits/symbol]".into(), y_label: "R2 [bits/symbol]".into(), series };
    ctx.write_svg("", &plot)
}

#[derive(Serialize)]
struct PolicyDump {
    c12: crate::config::Capacity,
    c21: crate::config::Capacity,
    theta: f64,
    value: f64,
    policy: PolicyConfig,
}

#[derive(Serialize)]
struct PolicyFile {
    best: Vec<PolicyDump>,
}

fn policy_config(p: &InputPolicy) -> PolicyConfig {
    PolicyConfig::Table { u: p.shape().u, p_u: p.p_u().to_vec(), p_x1: p.p_x1().to_vec(), p_x2: p.p_x2().to_vec() }
}

fn region_discrete(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let chain = cfg.chain()?;
    let (d1, d2) = resolve_delays(&chain, cfg.delays()?)?;
    let states = chain.delayed_state_joint(d1, d2)?;
    let channel = cfg.channel(chain.num_states())?;
    let (x1, x2, k, _) = channel.dims();
    let region = ExperimentConfig::require(&cfg.region, "region")?.clone();
    if region.directions < 2 {
        return Err(CliError::Config("region.directions must be at least 2".into()));
    }
    let base = cfg.search(x1, x2, k);
    let mut t = ctx.table(&["c12", "c21", "theta", "mu1", "mu2", "r1", "r2", "value", "evaluations", "exhaustive"]);
    let mut dumps = Vec::new();
    let mut series = Vec::new();
    for link in &region.links {
        let conf = link.conf()?;
        let mut outline = vec![(0.0, 0.0)];
        for j in 0..region.directions {
            let theta = (j as f64 + 0.5) * FRAC_PI_2 / region.directions as f64;
            let sc =
                SearchConfig { mu1: theta.cos(), mu2: theta.sin(), seed: base.seed ^ (j as u64).wrapping_mul(0x9E37_79B9), ..base.clone() };
            let r = inner_bound_search(&states, &channel, conf, &sc)?;
            t.push(vec![
                fmt_cap(conf.c12).into(),
                fmt_cap(conf.c21).into(),
                theta.into(),
                sc.mu1.into(),
                sc.mu2.into(),
                r.point.r1.into(),
                r.point.r2.into(),
                r.value.into(),
                r.evaluations.into(),
                if r.exhaustive { "true" } else { "false" }.into(),
            ]);
            outline.push((r.point.r1, r.point.r2));
            dumps.push(PolicyDump { c12: link.c12, c21: link.c21, theta, value: r.value, policy: policy_config(&r.policy) });
        }
        let first = outline[1];
        let last = *outline.last().expect("directions >= 2");
        outline.insert(1, (first.0, 0.0));
        outline.push((0.0, last.1));
        series.push(Series::line(format!("C12={}, C21={}", fmt_cap(conf.c12), fmt_cap(conf.c21)), outline).closed());
    }
    ctx.write_csv("", &t)?;
    let dump = toml::to_string_pretty(&PolicyFile { best: dumps }).map_err(|e| CliError::Config(format!("policy dump: {e}")))?;
    let p = ctx.path("policies", "toml");
    ctx.write(p, &dump)?;
    let plot = Plot {
        title: "Inner bound (policy search)".into(),
        x_label: "R1 [bits/symbol]".into(),
        y_label: "R2 [bits/symbol]".into(),
        series,
    };
    ctx.write_svg("", &plot)
}

fn sweep_sumrate(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let chain = cfg.chain()?;
    let sweep = ExperimentConfig::require(&cfg.sweep, "sweep")?.clone();
    let cases: Vec<DelayPair> = if sweep.delay_cases.is_empty() { vec![cfg.delays()?] } else { sweep.delay_cases.clone() };
    let solver = cfg.solver();
    let mut t = ctx.table(&["d1", "d2", "c", "sum_rate", "r1", "r2", "optimality_gap", "status"]);
    let mut series = Vec::new();
    for case in cases {
        let mut curve = Vec::new();
        for c in &sweep.capacities {
            let conf = ConferencingConfig::new(c.0, c.0)?;
            let spec = cfg.gaussian_spec(&chain, conf, case)?;
            let s = maximize_weighted_rate(&spec, 1.0, 1.0, &solver)?;
            if s.status != SolveStatus::Converged {
                ctx.artifacts.notes.push(format!(
                    "d1 = {}, d2 = {}, c = {}: solver budget exhausted",
                    fmt_delay(case.d1),
                    fmt_delay(case.d2),
                    c.0
                ));
            }
            t.push(vec![
                fmt_delay(case.d1).into(),
                fmt_delay(case.d2).into(),
                fmt_cap(c.0).into(),
                s.value.into(),
                s.point.r1.into(),
                s.point.r2.into(),
                s.optimality_gap.into(),
                s.status.as_str().into(),
            ]);
            curve.push((c.0, s.value));
        }
        series.push(Series::line(format!("d1={}, d2={}", fmt_delay(case.d1), fmt_delay(case.d2)), curve));
    }
    ctx.write_csv("", &t)?;
    let plot = Plot {
        title: "Sum rate vs conferencing capacity".into(),
        x_label: "C12 = C21 [bits/symbol]".into(),
        y_label: "R1 + R2 [bits/symbol]".into(),
        series,
    };
    ctx.write_svg("", &plot)
}

fn sweep_correlation(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let corr = ExperimentConfig::require(&cfg.correlation, "correlation")?.clone();
    let grid = corr.snr_db.values()?;
    if grid.is_empty() {
        return Err(CliError::Config("correlation.snr_db is empty".into()));
    }
    let solver = cfg.solver();
    let mut t =
        ctx.table(&["c12", "c21", "snr_db", "rho_numeric", "beta", "sum_rate", "solver_gap", "status", "rho_infinity", "snr_critical_db"]);
    let (lo, hi) = grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut series = Vec::new();
    for link in &corr.links {
        let (c12, c21) = (link.c12.0, link.c21.0);
        let prof = asymptotics::correlation_profile_numeric(c12, c21, &grid, &solver)?;
        let rho_inf = asymptotics::rho_infinity(c12, c21)?;
        let crit = asymptotics::snr_critical_db(c12, c21)?;
        for j in 0..grid.len() {
            t.push(vec![
                fmt_cap(c12).into(),
                fmt_cap(c21).into(),
                grid[j].into(),
                prof.rho[j].into(),
                prof.beta[j].into(),
                prof.sum_rate[j].into(),
                prof.solver_gap[j].into(),
                prof.status[j].as_str().into(),
                rho_inf.into(),
                crit.into(),
            ]);
        }
        let label = format!("C12={}, C21={}", fmt_cap(c12), fmt_cap(c21));
        series.push(Series::line(label.clone(), grid.iter().copied().zip(prof.rho.iter().copied()).collect()));
        series.push(Series::line(format!("rho_inf {label}"), vec![(lo, rho_inf), (hi, rho_inf)]).dashed());
        if crit.is_finite() && crit >= lo && crit <= hi {
            series.push(Series::line(format!("SNR_crit {label}"), vec![(crit, 0.0), (crit, 1.0)]).dashed());
        }
    }
    ctx.write_csv("", &t)?;
    let plot = Plot { title: "Optimal input correlation vs SNR".into(), x_label: "SNR [dB]".into(), y_label: "rho*".into(), series };
    ctx.write_svg("", &plot)
}

fn simulate(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let chain: MarkovChain = cfg.chain()?;
    let delays = cfg.delays()?;
    let sim = ExperimentConfig::require(&cfg.simulate, "simulate")?.clone();
    let channel = cfg.channel(chain.num_states())?;
    // an infinite encoder-1 delay means no CSI at all there
    let d2 = delays.d2.0.ok_or_else(|| CliError::Config("delays.d2: simulation needs a finite delay".into()))?;
    let csi = CsiDelays::new(delays.d1.0, d2).map_err(|e| CliError::Config(format!("delays: {e}")))?;
    let joint = match csi.d1 {
        Some(d1) => chain.delayed_state_joint(d1, d2)?,
        None => chain.blind_encoder1_joint(d2),
    };
    let (n1, n2, _) = joint.dims();
    let policy = cfg.policy((n1, n2), &channel)?;
    let scheme = Scheme::new(chain, channel, policy, csi)?;
    let bsum = common_message_bounds(scheme.model())?.bsum;
    let conf = sim.conferencing.map(|l| l.conf()).transpose()?;
    let mut t = ctx.table(&["n", "r0", "r1", "r2", "trials", "errors", "p_e", "ci_low", "ci_high"]);
    let mut series = Vec::new();
    for spec in &sim.points {
        let rates = match *spec {
            RateSpec::Explicit { r0, r1, r2 } => RatePoint { r0, r1, r2 },
            RateSpec::BsumFraction { bsum_fraction } => {
                let r = bsum_fraction * bsum / 2.0;
                RatePoint { r0: 0.0, r1: r, r2: r }
            }
        };
        if !(rates.r0 >= 0.0 && rates.r1 >= 0.0 && rates.r2 >= 0.0) {
            return Err(CliError::Config("simulate.points: rates must be nonnegative".into()));
        }
        let mut curve = Vec::new();
        for &n in &sim.blocklengths {
            let est = match conf {
                Some(c) => {
                    if rates.r0 != 0.0 {
                        return Err(CliError::Config("simulate.points: r0 must be 0 with conferencing".into()));
                    }
                    conferencing_error_rate(&scheme, (rates.r1, rates.r2), c, n, sim.epsilon, sim.trials, cfg.seed)?
                }
                None => estimate_error_rate(&scheme, rates, n, sim.epsilon, sim.trials, cfg.seed)?,
            };
            t.push(vec![
                n.into(),
                rates.r0.into(),
                rates.r1.into(),
                rates.r2.into(),
                est.trials.into(),
                est.errors.into(),
                est.p_e.into(),
                est.ci_low.into(),
                est.ci_high.into(),
            ]);
            curve.push((n as f64, est.p_e));
        }
        let label =
            format!("R=({}, {}, {})", crate::output::fmt_g12(rates.r0), crate::output::fmt_g12(rates.r1), crate::output::fmt_g12(rates.r2));
        series.push(Series::line(label, curve));
    }
    ctx.write_csv("", &t)?;
    let plot = Plot { title: "Empirical error probability".into(), x_label: "blocklength n".into(), y_label: "P_e".into(), series };
    ctx.write_svg("", &plot)
}

fn asymptotics_table(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let a = ExperimentConfig::require(&cfg.asymptotics, "asymptotics")?.clone();
    let (p1, p2) = (a.p1.unwrap_or(1.0), a.p2.unwrap_or(1.0));
    let mut t = ctx.table(&["c12", "c21", "snr_critical", "snr_critical_db", "rho_infinity", "beta_star_high_snr", "rho_high_snr"]);
    for link in &a.links {
        let (c12, c21) = (link.c12.0, link.c21.0);
        let beta = asymptotics::beta_star_high_snr(p1, p2, c12, c21)?;
        t.push(vec![
            fmt_cap(c12).into(),
            fmt_cap(c21).into(),
            asymptotics::snr_critical(c12, c21)?.into(),
            asymptotics::snr_critical_db(c12, c21)?.into(),
            asymptotics::rho_infinity(c12, c21)?.into(),
            beta.into(),
            asymptotics::rho_from_beta(beta.clamp(0.0, 1.0))?.into(),
        ]);
    }
    ctx.write_csv("", &t)
}
