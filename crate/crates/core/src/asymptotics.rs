//! Closed forms for the single-state scalar channel with unit gains and the
//! real (½·log) convention, plus a numeric correlation profile to check
//! them against.

use alloc::vec::Vec;

use crate::discrete::ConferencingConfig;
use crate::gaussian::{maximize_weighted_rate, weighted_value, Allocation, GaussianMacSpec, LogConvention, SolveStatus, SolverConfig};
use crate::{par, Error, Result};

fn check_capacities(c12: f64, c21: f64) -> Result<f64> {
    if !(c12 >= 0.0 && c21 >= 0.0) {
        return Err(Error::arg(alloc::format!("link capacities must be nonnegative, got ({c12}, {c21})")));
    }
    Ok(c12 + c21)
}

/// Largest SNR at which full correlation (ρ = 1) is optimal:
/// `(2^{2(C12+C21)} − 1)/4`.
pub fn snr_critical(c12: f64, c21: f64) -> Result<f64> {
    let c = check_capacities(c12, c21)?;
    Ok((libm::exp2(2.0 * c) - 1.0) / 4.0)
}

/// [`snr_critical`] in dB; `-inf` when the critical SNR is zero.
pub fn snr_critical_db(c12: f64, c21: f64) -> Result<f64> {
    let v = snr_critical(c12, c21)?;
    Ok(if v == 0.0 { f64::NEG_INFINITY } else { 10.0 * libm::log10(v) })
}

/// Optimal correlation as SNR → ∞ for equal powers.
pub fn rho_infinity(c12: f64, c21: f64) -> Result<f64> {
    let c = check_capacities(c12, c21)?;
    let v = 1.0 - 2.0 / (libm::exp2(2.0 * c) + 1.0);
    Ok(libm::sqrt(v.max(0.0)))
}

/// High-SNR intersection of the sum-rate bounds, as a private-power fraction.
pub fn beta_star_high_snr(p1: f64, p2: f64, c12: f64, c21: f64) -> Result<f64> {
    if !(p1 > 0.0 && p2 > 0.0) {
        return Err(Error::arg(alloc::format!("powers must be positive, got ({p1}, {p2})")));
    }
    let c = check_capacities(c12, c21)?;
    let s = libm::sqrt(p1) + libm::sqrt(p2);
    Ok(s * s / (libm::exp2(2.0 * c) * (p1 + p2) + 2.0 * libm::sqrt(p1 * p2)))
}

pub fn rho_from_beta(beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::arg(alloc::format!("beta must lie in [0, 1], got {beta}")));
    }
    Ok(libm::sqrt(1.0 - beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub snr_db: Vec<f64>,
    pub rho: Vec<f64>,
    pub beta: Vec<f64>,
    /// Sum rate at the symmetric optimum.
    pub sum_rate: Vec<f64>,
    /// How much the unrestricted solver beats the symmetric optimum by
    /// (should be ≈ 0).
    pub solver_gap: Vec<f64>,
    pub status: Vec<SolveStatus>,
    pub c12: f64,
    pub c21: f64,
}

/// Symmetric-β sum rate at full power `snr` for both users.
fn symmetric_sum_rate(spec: &GaussianMacSpec, snr: f64, beta: f64) -> Result<f64> {
    let mut a = Allocation::zeros(1, 1);
    a.p1[0][0] = snr;
    a.p2[0][0][0] = snr;
    a.gamma1[0][0] = beta * snr;
    a.gamma2[0][0][0] = beta * snr;
    weighted_value(spec, &a, 1.0, 1.0)
}

/// Numeric optimal correlation over an SNR grid (dB). The sum rate is
/// concave in the common private fraction β, so β* comes from a
/// golden-section search; the unconstrained solver runs alongside to
/// confirm that the symmetric restriction loses nothing.
pub fn correlation_profile_numeric(c12: f64, c21: f64, snr_db: &[f64], cfg: &SolverConfig) -> Result<CorrelationProfile> {
    check_capacities(c12, c21)?;
    let conf = ConferencingConfig::new(c12, c21)?;
    let points = par::map_indices(snr_db.len(), |j| -> Result<(f64, f64, f64, SolveStatus)> {
        let snr = libm::pow(10.0, snr_db[j] / 10.0);
        let spec = GaussianMacSpec::scalar_single_state(snr, snr, conf, LogConvention::Real)?;
        let f = |b: f64| symmetric_sum_rate(&spec, snr, b);
        let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1)?, f(x2)?);
        while hi - lo > 1e-12 {
            // ties move toward smaller β, i.e. more correlation
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2)?;
            }
        }
        let mut beta = 0.5 * (lo + hi);
        let mut best = f(beta)?;
        for edge in [0.0, 1.0] {
            let v = f(edge)?;
            if v > best + 1e-13 {
                best = v;
                beta = edge;
            }
        }
        let cfg = SolverConfig { seed: cfg.seed ^ (j as u64).wrapping_mul(0xA24B_AED4_963E_E407), ..cfg.clone() };
        let sol = maximize_weighted_rate(&spec, 1.0, 1.0, &cfg)?;
        Ok((beta, best, sol.value - best, sol.status))
    });
    let mut out = CorrelationProfile {
        snr_db: snr_db.to_vec(),
        rho: Vec::new(),
        beta: Vec::new(),
        sum_rate: Vec::new(),
        solver_gap: Vec::new(),
        status: Vec::new(),
        c12,
        c21,
    };
    for p in points {
        let (beta, rate, gap, status) = p?;
        out.rho.push(rho_from_beta(beta.clamp(0.0, 1.0))?);
        out.beta.push(beta);
        out.sum_rate.push(rate);
        out.solver_gap.push(gap);
        out.status.push(status);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_snr_values() {
        assert_eq!(snr_critical(0.0, 0.0).unwrap(), 0.0);
        assert!((snr_critical(0.5, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((snr_critical(0.9, 0.9).unwrap() - 2.7815).abs() < 1e-3);
        assert_eq!(snr_critical_db(0.0, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(snr_critical(-0.1, 0.0).is_err());
    }

    #[test]
    fn rho_limits() {
        assert_eq!(rho_infinity(0.0, 0.0).unwrap(), 0.0);
        assert!((rho_infinity(0.5, 0.5).unwrap() - libm::sqrt(0.6)).abs() < 1e-15);
        let far = rho_infinity(10.0, 10.0).unwrap();
        assert!(far < 1.0 && far > 0.999_999);
        assert!(rho_infinity(0.0, -1.0).is_err());
    }

    #[test]
    fn beta_star_examples() {
        assert!((beta_star_high_snr(1.0, 1.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta_star_high_snr(10.0, 10.0, 0.5, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert!((beta_star_high_snr(4.0, 16.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(beta_star_high_snr(0.0, 1.0, 0.0, 0.0).is_err());
        assert!((rho_from_beta(0.4).unwrap() - 0.774_596_669).abs() < 1e-9);
        assert!(rho_from_beta(1.5).is_err());
    }

    #[test]
    fn symmetric_in_capacities() {
        for (a, b) in [(0.1, 0.4), (0.0, 0.3), (0.25, 0.05)] {
            assert_eq!(snr_critical(a, b).unwrap(), snr_critical(b, a).unwrap());
            assert_eq!(rho_infinity(a, b).unwrap(), rho_infinity(b, a).unwrap());
        }
    }

    #[test]
    fn profile_matches_closed_forms() {
        let cfg = SolverConfig { max_iterations: 300, polish_iterations: 300, multistarts: 1, ..Default::default() };
        let p = correlation_profile_numeric(0.3, 0.3, &[-10.0, 40.0], &cfg).unwrap();
        assert!(p.beta[0] < 1e-3, "{:?}", p.beta);
        let inf = rho_infinity(0.3, 0.3).unwrap();
        assert!((p.rho[1] - inf).abs() <= 0.02 * inf, "{} vs {}", p.rho[1], inf);
        let none = correlation_profile_numeric(0.0, 0.0, &[0.0, 20.0], &cfg).unwrap();
        assert!(none.rho.iter().all(|r| *r < 1e-3), "{:?}", none.rho);
    }
}
