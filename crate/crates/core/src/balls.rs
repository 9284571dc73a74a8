//! Confidence balls: the EBR ball around a selection-based estimator and the
//! quarter ball built from an independent second sample.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::family::{Family, Structure};
use crate::linalg::sq_dist;
use crate::oracle::FrameworkConstants;

/// How the de-biasing statistic `V(Y', Y)` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VKind {
    /// Unit-variance noise: `V = N`.
    UnitVariance,
    /// Bernoulli observations: `V = sum Y'_i - sum Y'_i Y_i`.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BallKind {
    Ebr { t: f64, m: f64 },
    Quarter { m: f64, v_stat: f64 },
}

/// Constants used to build a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub sigma: f64,
    /// Multiplier of `r_hat^2` in the EBR radius (theoretical value `M_2`).
    pub m2: Option<f64>,
    pub m1: Option<f64>,
    pub rho_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBall {
    pub center: Vec<f64>,
    pub radius_sq: f64,
    pub kind: BallKind,
    pub params: BallParams,
}

impl ConfidenceBall {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius_sq.sqrt()
    }

    /// Closed-ball membership.
    pub fn contains(&self, theta: &[f64]) -> Result<bool> {
        check_len(theta, self.center.len())?;
        Ok(sq_dist(theta, &self.center) <= self.radius_sq)
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "{name} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(
            "sigma must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// `(t + 1) m2 sigma^2 (1 + rho) + (t + 2) m sigma^2`.
pub fn ebr_radius_sq(sigma: f64, rho_hat: f64, m2: f64, t: f64, m: f64) -> f64 {
    let s2 = sigma * sigma;
    (t + 1.0) * m2 * s2 * (1.0 + rho_hat) + (t + 2.0) * m * s2
}

/// EBR ball centred at `theta_hat` with `M_2` taken from `constants`.
pub fn ebr_ball(
    family: &Family,
    sigma: f64,
    constants: &FrameworkConstants,
    i_hat: &Structure,
    theta_hat: &[f64],
    t: f64,
    m: f64,
) -> Result<ConfidenceBall> {
    ebr_ball_with_m2(family, sigma, constants.m2, i_hat, theta_hat, t, m)
}

/// EBR ball with an explicit multiplier `m2`.
pub fn ebr_ball_with_m2(
    family: &Family,
    sigma: f64,
    m2: f64,
    i_hat: &Structure,
    theta_hat: &[f64],
    t: f64,
    m: f64,
) -> Result<ConfidenceBall> {
    check_sigma(sigma)?;
    check_nonneg("t", t)?;
    check_nonneg("M", m)?;
    check_nonneg("M2", m2)?;
    check_len(theta_hat, family.ambient_dim())?;
    check_finite(theta_hat)?;
    family.validate(i_hat)?;
    let rho_hat = family.rho(i_hat);
    Ok(ConfidenceBall {
        center: theta_hat.to_vec(),
        radius_sq: ebr_radius_sq(sigma, rho_hat, m2, t, m),
        kind: BallKind::Ebr { t, m },
        params: BallParams {
            sigma,
            m2: Some(m2),
            m1: None,
            rho_hat: Some(rho_hat),
        },
    })
}

/// `G_M = sqrt(M (M + M_1))`.
pub fn g_m(m: f64, m1: f64) -> f64 {
    (m * (m + m1)).sqrt()
}

/// Quarter ball `(|Y' - theta_hat|^2 - sigma^2 V + 2 sigma^2 G_M sqrt(N))_+`.
///
/// `y_prime` must be independent of the sample that produced `theta_hat`.
pub fn quarter_ball(
    y_prime: &[f64],
    theta_hat: &[f64],
    sigma: f64,
    m: f64,
    m1: f64,
    v_stat: f64,
) -> Result<ConfidenceBall> {
    check_sigma(sigma)?;
    check_nonneg("M", m)?;
    check_nonneg("M1", m1)?;
    check_len(theta_hat, y_prime.len())?;
    check_finite(y_prime)?;
    check_finite(theta_hat)?;
    if !v_stat.is_finite() {
        return Err(Error::InvalidInput("V statistic must be finite".into()));
    }
    let s2 = sigma * sigma;
    let n = y_prime.len() as f64;
    let raw = sq_dist(y_prime, theta_hat) - s2 * v_stat + 2.0 * s2 * g_m(m, m1) * n.sqrt();
    Ok(ConfidenceBall {
        center: theta_hat.to_vec(),
        radius_sq: raw.max(0.0),
        kind: BallKind::Quarter { m, v_stat },
        params: BallParams {
            sigma,
            m2: None,
            m1: Some(m1),
            rho_hat: None,
        },
    })
}

/// Splits Gaussian data into `Y + sigma Z` and `Y - sigma Z`.
///
/// Each half carries noise of variance `2 sigma^2`, and the two halves are
/// independent given the signal.
pub fn duplicate_gaussian<R: Rng + ?Sized>(
    y: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_sigma(sigma)?;
    check_finite(y)?;
    let mut a = Vec::with_capacity(y.len());
    let mut b = Vec::with_capacity(y.len());
    for &v in y {
        let z: f64 = rng.sample(StandardNormal);
        a.push(v + sigma * z);
        b.push(v - sigma * z);
    }
    Ok((a, b))
}

pub fn v_statistic(kind: VKind, y_prime: &[f64], y: &[f64]) -> Result<f64> {
    check_len(y, y_prime.len())?;
    Ok(match kind {
        VKind::UnitVariance => y_prime.len() as f64,
        VKind::Bernoulli => {
            y_prime.iter().sum::<f64>() - y_prime.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
        }
    })
}
