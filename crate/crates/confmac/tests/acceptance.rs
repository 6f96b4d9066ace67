//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report is printed even when everything passes.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use confmac_core::coding::{estimate_error_rate, CsiDelays, Scheme};
use confmac_core::discrete::{
    common_message_bounds, conferencing_bounds, polytope_vertices, weighted_rate, ConferencingConfig, RateBounds, RatePoint, RegionMode,
};
use confmac_core::gaussian::{
    check_gaussian_markov, common_bounds_gaussian, maximize_weighted_rate, rate_bounds_gaussian, trace_boundary, Allocation,
    GaussianMacSpec, GaussianTripleCovariance, LogConvention, SolveStatus, SolverConfig,
};
use confmac_core::info::{assemble_joint, cardinality_cap, names, DmcChannel, InputPolicy, PolicyShape};
use confmac_core::{asymptotics, rng, MarkovChain, Matrix};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_spec(c12: f64, c21: f64, log: LogConvention) -> GaussianMacSpec {
    let chain = MarkovChain::gilbert_elliott(0.1, 0.1).unwrap();
    let g = vec![vec![1.0], vec![0.1]];
    GaussianMacSpec::new(chain, g.clone(), g, 10.0, 10.0, ConferencingConfig { c12, c21 }, 2, 2, log).unwrap()
}

fn random_chain<R: Rng>(r: &mut R, k: usize) -> MarkovChain {
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..k).map(|_| 0.05 + r.random::<f64>()).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect();
    MarkovChain::new((0..k).map(|i| format!("s{i}")).collect(), &rows).unwrap()
}

fn random_row<R: Rng>(r: &mut R, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - r.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn stationary() -> Outcome {
    let chain = MarkovChain::gilbert_elliott(0.1, 0.1).map_err(|e| e.to_string())?;
    let pi = chain.stationary_distribution();
    let err = (pi[0] - 0.5).abs().max((pi[1] - 0.5).abs());
    ensure(err <= 1e-12, format!("pi = ({:.15}, {:.15}), max error {err:.1e}", pi[0], pi[1]))
}

fn markov_relations() -> Outcome {
    use names::*;
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut r = rng::stream(2, &[i]);
        let k = r.random_range(1..=3);
        let chain = random_chain(&mut r, k);
        let d2 = r.random_range(0..3);
        let d1 = d2 + r.random_range(0..3);
        let states = chain.delayed_state_joint(d1, d2).unwrap();
        let (x1, x2, y) = (r.random_range(2..=3), r.random_range(2..=3), r.random_range(2..=3));
        let u = r.random_range(1..=cardinality_cap(x1, x2, k).min(3));
        let rows = (0..x1 * x2 * k).map(|_| random_row(&mut r, y)).collect();
        let channel = DmcChannel::new(x1, x2, k, y, rows).unwrap();
        let policy = InputPolicy::random(PolicyShape { u, x1, x2, s1: k, s2: k }, &mut r);
        let joint = assemble_joint(&states, &policy, &channel).unwrap();
        for (a, b, c) in
            [(&[U][..], &[S, S2][..], &[S1][..]), (&[X1][..], &[S, S2][..], &[S1, U][..]), (&[X2][..], &[X1, S][..], &[S1, S2, U][..])]
        {
            worst = worst.max(joint.conditional_mutual_information(a, b, c).unwrap());
        }
    }
    ensure(worst <= 1e-9, format!("largest of the three conditional MIs over 100 instances: {worst:.2e}"))
}

/// Dense grid over `(β1, β2)` at full power, refined around the best cell.
/// Bounds and the polytope maximum are computed here from first principles.
fn scalar_oracle(p: (f64, f64), g: (f64, f64), c: (f64, f64), mu: (f64, f64), kappa: f64) -> f64 {
    let (h1, h2) = (g.0 * g.0, g.1 * g.1);
    let value = |b1: f64, b2: f64| {
        let (q1, q2) = (b1 * p.0, b2 * p.1);
        let r1max = kappa * (1.0 + h1 * q1).log2() + c.0;
        let r2max = kappa * (1.0 + h2 * q2).log2() + c.1;
        let s12 = kappa * (1.0 + h1 * q1 + h2 * q2).log2() + c.0 + c.1;
        let corr = 2.0 * g.0 * g.1 * ((p.0 - q1) * (p.1 - q2)).max(0.0).sqrt();
        let ssum = kappa * (1.0 + h1 * p.0 + h2 * p.1 + corr).log2();
        let m = s12.min(ssum);
        let a1 = r1max.min(m);
        let a = mu.0 * a1 + mu.1 * r2max.min(m - a1).max(0.0);
        let b2 = r2max.min(m);
        let b = mu.0 * r1max.min(m - b2).max(0.0) + mu.1 * b2;
        a.max(b)
    };
    let (mut c1, mut c2, mut half) = (0.5, 0.5, 0.5);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..8 {
        let n = 60;
        let (mut n1, mut n2) = (c1, c2);
        for i in 0..=n {
            for j in 0..=n {
                let b1 = (c1 - half + 2.0 * half * i as f64 / n as f64).clamp(0.0, 1.0);
                let b2 = (c2 - half + 2.0 * half * j as f64 / n as f64).clamp(0.0, 1.0);
                let v = value(b1, b2);
                if v > best {
                    best = v;
                    n1 = b1;
                    n2 = b2;
                }
            }
        }
        c1 = n1;
        c2 = n2;
        half *= 0.15;
    }
    best
}

fn solver_vs_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng::stream(3, &[]);
    for _ in 0..20 {
        let p = (r.random_range(0.5..20.0), r.random_range(0.5..20.0));
        let g = (r.random_range(0.2..1.5), r.random_range(0.2..1.5));
        let c = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let theta: f64 = r.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let mu = (theta.cos(), theta.sin());
        let log = if r.random::<bool>() { LogConvention::Real } else { LogConvention::Complex };
        let spec = GaussianMacSpec::new(
            MarkovChain::single_state(),
            vec![vec![g.0]],
            vec![vec![g.1]],
            p.0,
            p.1,
            ConferencingConfig { c12: c.0, c21: c.1 },
            0,
            0,
            log,
        )
        .unwrap();
        let sol = maximize_weighted_rate(&spec, mu.0, mu.1, &SolverConfig::default()).unwrap();
        let oracle = scalar_oracle(p, g, c, mu, log.factor());
        worst = worst.max((sol.value - oracle).abs());
    }
    ensure(worst <= 1e-3, format!("largest |solver - grid oracle| over 20 instances: {worst:.2e} bits"))
}

fn figure_4b() -> Outcome {
    let cfg = SolverConfig::default();
    let mut lines = Vec::new();
    let mut matched = None;
    for (log, name) in [(LogConvention::Real, "1/2 log"), (LogConvention::Complex, "log")] {
        let mut r2 = Vec::new();
        for c12 in [0.0, 0.1, 0.3, 0.5, 0.9] {
            let sol = maximize_weighted_rate(&reference_spec(c12, 0.0, log), 0.0, 1.0, &cfg).unwrap();
            if sol.status != SolveStatus::Converged {
                return Err(format!("c12 = {c12}: solver did not converge (gap {:.1e})", sol.optimality_gap));
            }
            r2.push(sol.point.r2);
        }
        let lo = r2.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rel = ((lo + hi) / 2.0 - 0.9642).abs() / 0.9642;
        lines.push(format!("{name}: max R2 in [{lo:.6}, {hi:.6}], {:.2}% from 0.9642", 100.0 * rel));
        if hi - lo <= 1e-6 && rel <= 0.02 && matched.is_none() {
            matched = Some(name);
        }
    }
    let detail = format!("{}; matched convention: {}", lines.join("; "), matched.unwrap_or("none"));
    ensure(matched.is_some(), detail)
}

fn figure_5a() -> Outcome {
    let cfg = SolverConfig::default();
    let caps = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0, f64::INFINITY];
    let mut rates = Vec::new();
    for &c in &caps {
        let sol = maximize_weighted_rate(&reference_spec(c, c, LogConvention::Real), 1.0, 1.0, &cfg).unwrap();
        if sol.status != SolveStatus::Converged {
            return Err(format!("c = {c}: solver did not converge (gap {:.1e})", sol.optimality_gap));
        }
        rates.push(sol.value);
    }
    let monotone = rates.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    let sat = *rates.last().unwrap();
    let saturated = rates[rates.len() - 4..].iter().all(|v| (v - sat).abs() <= 1e-6);
    let rel = (sat - 1.5).abs() / 1.5;
    ensure(
        monotone && saturated && rel <= 0.05,
        format!(
            "1/2 log: sum rate {:.6} (c=0) .. {sat:.6} (c=inf), nondecreasing: {monotone}, flat over c >= 1.5: {saturated}, {:.2}% from 1.5",
            rates[0],
            100.0 * rel
        ),
    )
}

fn figure_6() -> Outcome {
    let cfg = SolverConfig::default();
    let grid: Vec<f64> = (0..=100).map(|i| -10.0 + 0.5 * i as f64).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for c in [0.1, 0.3, 0.5] {
        let prof = asymptotics::correlation_profile_numeric(c, c, &grid, &cfg).unwrap();
        let crit = asymptotics::snr_critical_db(c, c).unwrap();
        let rho_inf = asymptotics::rho_infinity(c, c).unwrap();
        let low_ok = grid.iter().zip(&prof.beta).filter(|(s, _)| **s <= crit - 0.5).all(|(_, b)| *b < 1e-3);
        let rho40 = *prof.rho.last().unwrap();
        let rel = (rho40 - rho_inf).abs() / rho_inf;
        ok &= low_ok && rel <= 0.02;
        parts.push(format!(
            "c={c}: beta*<1e-3 below {:.2} dB: {low_ok}, rho(40 dB) {rho40:.4} vs {rho_inf:.4} ({:.2}%)",
            crit - 0.5,
            100.0 * rel
        ));
    }
    ensure(ok, parts.join("; "))
}

fn max_vertex_diff(a: &[RatePoint], b: &[RatePoint]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(p, q)| (p.r1 - q.r1).abs().max((p.r2 - q.r2).abs())).fold(0.0, f64::max)
}

fn reductions() -> Outcome {
    let mut worst = 0.0f64;
    // discrete: random policies on random channels
    for i in 0..30u64 {
        let mut r = rng::stream(7, &[i]);
        let chain = random_chain(&mut r, 2);
        let states = chain.delayed_state_joint(1, 0).unwrap();
        let rows = (0..8).map(|_| random_row(&mut r, 3)).collect();
        let channel = DmcChannel::new(2, 2, 2, 3, rows).unwrap();
        let policy = InputPolicy::random(PolicyShape { u: 2, x1: 2, x2: 2, s1: 2, s2: 2 }, &mut r);
        let joint = assemble_joint(&states, &policy, &channel).unwrap();
        let conf = polytope_vertices(&conferencing_bounds(&joint, ConferencingConfig::none()).unwrap(), RegionMode::Conferencing);
        let common = polytope_vertices(&common_message_bounds(&joint).unwrap(), RegionMode::Common { r0: 0.0 });
        worst = worst.max(max_vertex_diff(&conf, &common));
    }
    // Gaussian: random feasible allocations
    let spec = reference_spec(0.0, 0.0, LogConvention::Real);
    for i in 0..30u64 {
        let mut r = rng::stream(8, &[i]);
        let alloc = Allocation::uniform(&spec, r.random::<f64>()).scaled(r.random::<f64>());
        let conf = polytope_vertices(&rate_bounds_gaussian(&spec, &alloc).unwrap(), RegionMode::Conferencing);
        let common = polytope_vertices(&common_bounds_gaussian(&spec, &alloc).unwrap(), RegionMode::Common { r0: 0.0 });
        worst = worst.max(max_vertex_diff(&conf, &common));
    }
    // unlimited links: every traced point on the total-cooperation line
    let cfg = SolverConfig::default();
    let spec = reference_spec(f64::INFINITY, f64::INFINITY, LogConvention::Real);
    let line = maximize_weighted_rate(&spec, 1.0, 1.0, &cfg).unwrap().value;
    let trace = trace_boundary(&spec, 12, &cfg).unwrap();
    let off = trace.iter().map(|t| (t.point.r1 + t.point.r2 - line).abs()).fold(0.0, f64::max);
    ensure(
        worst <= 1e-9 && off <= cfg.tolerance,
        format!("conferencing(c=0) vs common R0=0 slice: {worst:.1e}; c=inf trace off the r1+r2 = {line:.6} line by {off:.1e}"),
    )
}

fn polytope_geometry() -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng::stream(11, &[]);
    for i in 0..50 {
        let b = RateBounds {
            b1: r.random_range(0.0..2.0),
            b2: r.random_range(0.0..2.0),
            b12: r.random_range(0.0..3.0),
            bsum: r.random_range(0.0..3.5),
        };
        let mode = if i % 2 == 0 { RegionMode::Conferencing } else { RegionMode::Common { r0: r.random_range(0.0..0.5) } };
        let m = b.sum_limit(mode);
        // brute force: feasible grid points, compared through support
        // functions. For nonnegative weights only the topmost feasible
        // point of each grid column can attain the maximum.
        let step = 2.5e-4;
        let mut grid = Vec::new();
        for a in 0..=(2.0 / step) as usize {
            let r1 = a as f64 * step;
            let top = (b.b2.min(m - r1) / step).floor();
            if r1 <= b.b1 && top >= 0.0 {
                grid.push((r1, top * step));
            }
        }
        let verts = polytope_vertices(&b, mode);
        for v in &verts {
            // vertices are feasible
            let excess = (v.r1 - b.b1).max(v.r2 - b.b2).max(v.r1 + v.r2 - m).max(-v.r1).max(-v.r2);
            worst = worst.max(excess.max(0.0));
        }
        for k in 0..=32 {
            let t = k as f64 / 32.0 * std::f64::consts::FRAC_PI_2;
            let (mu1, mu2) = (t.cos(), t.sin());
            let hull = grid.iter().map(|(x, y)| mu1 * x + mu2 * y).fold(f64::NEG_INFINITY, f64::max);
            let vmax = verts.iter().map(|v| mu1 * v.r1 + mu2 * v.r2).fold(f64::NEG_INFINITY, f64::max);
            let (w, _) = weighted_rate(&b, mode, mu1, mu2);
            worst = worst.max((hull - vmax).abs()).max((w - vmax).abs());
        }
    }
    ensure(worst <= 1e-3, format!("largest support-function difference over 50 polytopes x 33 directions: {worst:.2e}"))
}

fn random_matrix<R: Rng>(r: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_row_major(rows, cols, (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn markov_predicate() -> Outcome {
    let mut passed = 0;
    let mut rejected = 0;
    for i in 0..100u64 {
        let mut r = rng::stream(13, &[i]);
        let (na, nb, nc) = (r.random_range(1..=3), r.random_range(1..=3), r.random_range(1..=3));
        // A = F·B + noise, C = G·B + independent noise
        let l = random_matrix(&mut r, nb, nb);
        let sbb = l.mul(&l.transpose()).unwrap();
        let sbb = Matrix::from_row_major(
            nb,
            nb,
            (0..nb * nb).map(|k| sbb.row(k / nb)[k % nb] + if k / nb == k % nb { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap();
        let f = random_matrix(&mut r, na, nb);
        let g = random_matrix(&mut r, nc, nb);
        let ab = f.mul(&sbb).unwrap();
        let bc = sbb.mul(&g.transpose()).unwrap();
        let ac = ab.mul(&g.transpose()).unwrap();
        let cov = GaussianTripleCovariance { ab: ab.clone(), bb: sbb.clone(), bc: bc.clone(), ac: ac.clone() };
        if check_gaussian_markov(&cov, 1e-9).unwrap() {
            passed += 1;
        }
        let mut data: Vec<f64> = ac.to_rows().concat();
        let idx = r.random_range(0..data.len());
        data[idx] += 0.05;
        let bent = GaussianTripleCovariance { ab, bb: sbb, bc, ac: Matrix::from_row_major(na, nc, data).unwrap() };
        if !check_gaussian_markov(&bent, 1e-9).unwrap() {
            rejected += 1;
        }
    }
    ensure(passed == 100 && rejected == 100, format!("{passed}/100 Markov triples accepted, {rejected}/100 perturbed triples rejected"))
}

/// Noiseless binary adder with sparse inputs; `I(X1,X2;Y) = 5/128`.
fn sparse_adder() -> Scheme {
    let q = 0.002089877822830012;
    let shape = PolicyShape { u: 1, x1: 2, x2: 2, s1: 1, s2: 1 };
    let policy = InputPolicy::new(shape, vec![vec![1.0]], vec![vec![1.0 - q, q]], vec![vec![1.0 - q, q]]).unwrap();
    Scheme::new(MarkovChain::single_state(), DmcChannel::binary_adder(1), policy, CsiDelays::new(Some(0), 0).unwrap()).unwrap()
}

fn coding_trend() -> Outcome {
    let scheme = sparse_adder();
    let bsum = common_message_bounds(scheme.model()).unwrap().bsum;
    let r = 0.8 * bsum / 2.0;
    let rates = RatePoint { r0: 0.0, r1: r, r2: r };
    let mut pe = Vec::new();
    for n in [64, 128, 256] {
        pe.push(estimate_error_rate(&scheme, rates, n, 0.05, 20_000, 1).unwrap().p_e);
    }
    let decreasing = pe.windows(2).all(|w| w[1] < w[0]);
    let r_over = 1.2 * bsum / 2.0;
    let over = estimate_error_rate(&scheme, RatePoint { r0: 0.0, r1: r_over, r2: r_over }, 256, 0.05, 2_000, 1).unwrap().p_e;
    ensure(
        decreasing && over >= 0.5,
        format!(
            "bsum = {bsum:.7}; 80%: P_e(64, 128, 256) = ({:.4}, {:.4}, {:.4}) with 20000 trials each; 120% at n=256: P_e = {over:.4}",
            pe[0], pe[1], pe[2]
        ),
    )
}

fn run_cli(args: &[&str], out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_confmac"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--no-plots")
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    // a shorter copy of the trend simulation
    let trend = std::fs::read_to_string(root.join("simulate_trend.toml")).map_err(|e| e.to_string())?;
    let short = tmp.path().join("simulate_short.toml");
    std::fs::write(&short, trend.replace("trials = 20000", "trials = 2000")).map_err(|e| e.to_string())?;
    let fig4b = root.join("fig4b.toml");
    let runs: [(&str, &Path); 2] = [("region-gaussian", &fig4b), ("simulate", &short)];
    let mut compared = 0;
    for (cmd, cfg) in runs {
        let mut outputs = Vec::new();
        for (tag, threads) in [("a", 1), ("b", 4), ("c", 4)] {
            let out = tmp.path().join(format!("{cmd}_{tag}"));
            run_cli(&[cmd, "--config", cfg.to_str().unwrap()], &out, threads)?;
            outputs.push(csv_bytes(&out));
        }
        if outputs[0].is_empty() || outputs.iter().any(|o| *o != outputs[0]) {
            return Err(format!("{cmd}: CSVs differ between runs"));
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} CSVs byte-identical across 1 and 4 threads and a repeat run"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("stationary distribution", stationary),
        ("factorization Markov relations", markov_relations),
        ("Gaussian solver vs grid oracle", solver_vs_oracle),
        ("max R2 independent of c12", figure_4b),
        ("sum rate vs link capacity", figure_5a),
        ("correlation asymptotics", figure_6),
        ("region reductions", reductions),
        ("polytope geometry", polytope_geometry),
        ("Gaussian Markov predicate", markov_predicate),
        ("coding-scheme error trend", coding_trend),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
