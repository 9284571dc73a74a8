//! Oracle structures and rates, tau-oracles, the excessive-bias diagnostics
//! and the constants that appear in the coverage and contraction results.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::family::{Family, Structure};
use crate::linalg::sq_dist;
use crate::selection::{minimize, SearchMode, Weights};

/// Whether the theoretical requirement `kappa > kappa_bar` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMode {
    Strict,
    /// Allows smaller `kappa`, logging a warning.
    #[default]
    Practical,
}

/// Constants of the framework, derived from `alpha`, `nu`, `kappa` and `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameworkConstants {
    pub alpha: f64,
    pub nu: f64,
    pub kappa: f64,
    pub delta: f64,
    pub mode: ConstantsMode,
    pub kappa_bar: f64,
    pub tau_bar: f64,
    pub tau0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

/// `(1 + delta) / (1 - delta) * tau_bar + 0.1`.
pub fn tau0_default(tau_bar: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Constants(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok((1.0 + delta) / (1.0 - delta) * tau_bar + 0.1)
}

/// `(32 nu + 10 + alpha) / (4 alpha)`.
pub fn kappa_bar(alpha: f64, nu: f64) -> f64 {
    (32.0 * nu + 10.0 + alpha) / (4.0 * alpha)
}

impl FrameworkConstants {
    pub const DEFAULT_ALPHA: f64 = 0.4;
    pub const DEFAULT_NU: f64 = 1.5;
    pub const DEFAULT_DELTA: f64 = 0.1;

    pub fn new(alpha: f64, nu: f64, kappa: f64, delta: f64, mode: ConstantsMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Constants(format!(
                "alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Constants(format!("nu must be positive, got {nu}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Constants(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        let kbar = kappa_bar(alpha, nu);
        if kappa <= kbar {
            match mode {
                ConstantsMode::Strict => {
                    return Err(Error::Constants(format!(
                        "kappa = {kappa} must exceed kappa_bar = {kbar} in strict mode"
                    )))
                }
                ConstantsMode::Practical => {
                    log::warn!("kappa = {kappa} is below kappa_bar = {kbar}; theoretical guarantees do not apply")
                }
            }
        }
        let tau_bar = 3.0 * (1.0 + kappa * alpha) / alpha;
        let tau0 = tau0_default(tau_bar, delta)?;
        let c3 = 6.0 / alpha + 4.0 * kappa;
        let m1 = 12.0 * c3 * (nu + 1.0) / alpha;
        Ok(FrameworkConstants {
            alpha,
            nu,
            kappa,
            delta,
            mode,
            kappa_bar: kbar,
            tau_bar,
            tau0,
            c1: kappa * alpha / 4.0 - 5.0 / 8.0 - alpha / 16.0,
            c2: alpha / 16.0,
            c3,
            m0: c3 * (2.0 * nu + 2.0 * alpha + 4.0) / alpha,
            m1,
            m2: m1 / delta,
            m3: c3,
        })
    }

    /// Defaults `alpha = 0.4`, `nu = 1.5`, `delta = 0.1` in practical mode.
    pub fn practical(kappa: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_ALPHA,
            Self::DEFAULT_NU,
            kappa,
            Self::DEFAULT_DELTA,
            ConstantsMode::Practical,
        )
    }

    /// Replaces `tau0`; it must exceed `(1 + delta) / (1 - delta) * tau_bar`.
    pub fn with_tau0(mut self, tau0: f64) -> Result<Self> {
        let floor = (1.0 + self.delta) / (1.0 - self.delta) * self.tau_bar;
        if !(tau0 > floor) {
            return Err(Error::Constants(format!(
                "tau0 = {tau0} must exceed {floor}"
            )));
        }
        self.tau0 = tau0;
        Ok(self)
    }
}

/// Minimiser of `|theta - P_I theta|^2 + tau sigma^2 rho(I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub structure: Structure,
    /// `|theta - P_I theta|^2`.
    pub approx_sq: f64,
    /// `tau sigma^2 rho(I)`.
    pub complexity: f64,
    /// `approx_sq + complexity`; equals the oracle rate `r^2(theta)` at `tau = 1`.
    pub rate_sq: f64,
    pub tau: f64,
    /// `rho(I)`.
    pub rho: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(
            "sigma must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// `r^2(I, theta) = |theta - P_I theta|^2 + sigma^2 rho(I)`.
pub fn structure_rate(theta: &[f64], family: &Family, sigma: f64, s: &Structure) -> Result<f64> {
    check_sigma(sigma)?;
    let p = family.project(s, theta)?;
    Ok(sq_dist(theta, &p) + sigma * sigma * family.rho(s))
}

/// The tau-oracle of `theta` (the oracle proper at `tau = 1`).
pub fn oracle_rate(theta: &[f64], family: &Family, sigma: f64, tau: f64) -> Result<OracleReport> {
    check_sigma(sigma)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidInput("tau must be non-negative".into()));
    }
    check_len(theta, family.ambient_dim())?;
    check_finite(theta)?;
    let w = Weights {
        rho: tau * sigma * sigma,
        dim: 0.0,
    };
    let sel = minimize(theta, family, w, SearchMode::Exact)?;
    let rho = family.rho(&sel.structure);
    let approx_sq = sq_dist(theta, &family.project_unchecked(&sel.structure, theta));
    let complexity = tau * sigma * sigma * rho;
    Ok(OracleReport {
        structure: sel.structure,
        approx_sq,
        complexity,
        rate_sq: approx_sq + complexity,
        tau,
        rho,
    })
}

/// Excessive bias ratio `|theta - P_{I*} theta|^2 / (sigma^2 (1 + rho(I*)))`
/// with `I*` the `tau0`-oracle.
pub fn ebr_ratio(
    theta: &[f64],
    family: &Family,
    sigma: f64,
    constants: &FrameworkConstants,
) -> Result<f64> {
    let star = oracle_rate(theta, family, sigma, constants.tau0)?;
    Ok(star.approx_sq / (sigma * sigma * (1.0 + star.rho)))
}

/// Whether `theta` satisfies the excessive-bias restriction with parameter `t`.
pub fn ebr_member(
    theta: &[f64],
    family: &Family,
    sigma: f64,
    constants: &FrameworkConstants,
    t: f64,
) -> Result<bool> {
    Ok(ebr_ratio(theta, family, sigma, constants)? <= t)
}

/// Whether `theta` is highly structured: `r^2(theta) <= c sigma^2 sqrt(N)`.
pub fn highly_structured(theta: &[f64], family: &Family, sigma: f64, c: f64) -> Result<bool> {
    let r = oracle_rate(theta, family, sigma, 1.0)?;
    Ok(r.rate_sq <= c * sigma * sigma * (family.ambient_dim() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::SparsityMajorant;

    #[test]
    fn constants_formulas() {
        let c = FrameworkConstants::new(0.4, 1.5, 40.0, 0.1, ConstantsMode::Strict).unwrap();
        assert!((c.kappa_bar - (48.0 + 10.4) / 1.6).abs() < 1e-12);
        assert!((c.tau_bar - 3.0 * (1.0 + 16.0) / 0.4).abs() < 1e-12);
        assert!((c.c3 - (15.0 + 160.0)).abs() < 1e-12);
        assert!((c.m1 - 12.0 * 175.0 * 2.5 / 0.4).abs() < 1e-9);
        assert!((c.m2 - c.m1 / 0.1).abs() < 1e-9);
        assert!((c.m0 - 175.0 * (3.0 + 0.8 + 4.0) / 0.4).abs() < 1e-9);
        assert_eq!(c.m3, c.c3);
        assert!((c.c2 - 0.025).abs() < 1e-15);
        assert!(FrameworkConstants::new(0.4, 1.5, 1.0, 0.1, ConstantsMode::Strict).is_err());
        assert!(FrameworkConstants::practical(1.0).is_ok());
        assert!(FrameworkConstants::new(1.5, 1.5, 1.0, 0.1, ConstantsMode::Practical).is_err());
    }

    #[test]
    fn tau0_values() {
        assert!((tau0_default(3.0, 0.1).unwrap() - (11.0 / 9.0 * 3.0 + 0.1)).abs() < 1e-12);
        assert!((tau0_default(3.0, 1e-12).unwrap() - 3.1).abs() < 1e-9);
        assert!(tau0_default(3.0, 0.2).unwrap() > tau0_default(3.0, 0.1).unwrap());
        assert!(tau0_default(3.0, 1.0).is_err());
        let c = FrameworkConstants::practical(1.0).unwrap();
        assert!(c.with_tau0(c.tau_bar).is_err());
        assert!(c.with_tau0(2.0 * c.tau_bar).is_ok());
    }

    #[test]
    fn structured_parameter_has_no_bias() {
        let f = Family::Smoothness { n: 6 };
        let theta = [3.0, -2.0, 0.0, 0.0, 0.0, 0.0];
        let r = oracle_rate(&theta, &f, 0.1, 2.0).unwrap();
        assert_eq!(r.structure, Structure::Truncation(2));
        assert_eq!(r.approx_sq, 0.0);
        assert!((r.rate_sq - 2.0 * 0.01 * 2.0).abs() < 1e-15);
        let c = FrameworkConstants::practical(1.0).unwrap();
        assert_eq!(ebr_ratio(&theta, &f, 0.1, &c).unwrap(), 0.0);
        assert!(ebr_member(&theta, &f, 0.1, &c, 0.0).unwrap());
    }

    #[test]
    fn geometric_smoothness_matches_scan() {
        let f = Family::Smoothness { n: 12 };
        let theta: Vec<f64> = (0..12).map(|i| 0.5f64.powi(i)).collect();
        let r = oracle_rate(&theta, &f, 0.5, 1.0).unwrap();
        let scan = (0..=12)
            .map(|k| structure_rate(&theta, &f, 0.5, &Structure::Truncation(k)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((r.rate_sq - scan).abs() < 1e-12);
        assert!(r.rate_sq <= 12.0 * 0.25);
    }

    #[test]
    fn deceptive_sparse_signal() {
        let f = Family::Sparsity {
            n: 50,
            majorant: SparsityMajorant::Standard,
        };
        let sigma = 2.0;
        let theta = vec![0.5 * sigma; 50];
        let c = FrameworkConstants::practical(1.0).unwrap();
        let b = ebr_ratio(&theta, &f, sigma, &c).unwrap();
        assert!(b > 1.0);
        assert!(!ebr_member(&theta, &f, sigma, &c, 0.0).unwrap());
        let scaled: Vec<f64> = theta.iter().map(|v| 3.0 * v).collect();
        assert!((ebr_ratio(&scaled, &f, 3.0 * sigma, &c).unwrap() - b).abs() < 1e-12);
    }

    #[test]
    fn report_json_has_all_fields() {
        let f = Family::Smoothness { n: 3 };
        let r = oracle_rate(&[1.0, 0.0, 0.0], &f, 1.0, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["structure", "approx_sq", "complexity", "rate_sq", "tau"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
