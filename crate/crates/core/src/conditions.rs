//! Noise generators and empirical checks of the four structural conditions:
//! the exponential moment bound on projected noise (A1), summability of the
//! majorant (A2), closure under unions (A3) and the tail behaviour of an
//! independent noise copy (A4).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg::{dot, sq_dist, sq_norm};
use crate::math::{log_sum_exp, mix_seed};

/// Upper limit for exponents before exponentiation in the moment estimate.
pub const EXPONENT_CAP: f64 = 700.0;

/// Zero-mean noise distributions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Gaussian,
    BoundedUniform {
        half_width: f64,
    },
    Rademacher,
    /// Stationary Gaussian AR(1) with unit marginal variance.
    Ar1 {
        coefficient: f64,
    },
    /// Centred Bernoulli observations, `xi_i = Y_i - theta_i`.
    BernoulliMean {
        theta: Vec<f64>,
    },
}

impl NoiseModel {
    pub fn check(&self, n: usize) -> Result<()> {
        match self {
            NoiseModel::Gaussian | NoiseModel::Rademacher => Ok(()),
            NoiseModel::BoundedUniform { half_width } => {
                if half_width.is_finite() && *half_width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(
                        "uniform half-width must be positive".into(),
                    ))
                }
            }
            NoiseModel::Ar1 { coefficient } => {
                if coefficient.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "AR(1) coefficient {coefficient} must lie in (-1, 1)"
                    )))
                }
            }
            NoiseModel::BernoulliMean { theta } => {
                if theta.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: theta.len(),
                    });
                }
                if theta.iter().all(|p| (0.0..=1.0).contains(p)) {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(
                        "Bernoulli means must lie in [0, 1]".into(),
                    ))
                }
            }
        }
    }

    /// Draws one noise vector of length `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            NoiseModel::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            NoiseModel::BoundedUniform { half_width } => (0..n)
                .map(|_| rng.gen_range(-*half_width..=*half_width))
                .collect(),
            NoiseModel::Rademacher => (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect(),
            NoiseModel::Ar1 { coefficient } => {
                let phi = *coefficient;
                let innov = (1.0 - phi * phi).sqrt();
                let mut out = Vec::with_capacity(n);
                let mut prev: f64 = 0.0;
                for i in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = if i == 0 { z } else { phi * prev + innov * z };
                    out.push(prev);
                }
                out
            }
            NoiseModel::BernoulliMean { theta } => theta
                .iter()
                .take(n)
                .map(|&p| if rng.gen::<f64>() < p { 1.0 - p } else { -p })
                .collect(),
        }
    }

    /// Per-coordinate variances.
    pub fn variances(&self, n: usize) -> Vec<f64> {
        match self {
            NoiseModel::Gaussian | NoiseModel::Rademacher | NoiseModel::Ar1 { .. } => vec![1.0; n],
            NoiseModel::BoundedUniform { half_width } => vec![half_width * half_width / 3.0; n],
            NoiseModel::BernoulliMean { theta } => theta.iter().map(|p| p * (1.0 - p)).collect(),
        }
    }

    /// `Var(|xi|^2)` for a vector of length `n`.
    pub fn sq_norm_variance(&self, n: usize) -> f64 {
        match self {
            NoiseModel::Gaussian => 2.0 * n as f64,
            NoiseModel::Rademacher => 0.0,
            NoiseModel::BoundedUniform { half_width } => {
                let h2 = half_width * half_width;
                n as f64 * (h2 * h2 / 5.0 - h2 * h2 / 9.0)
            }
            NoiseModel::Ar1 { coefficient } => {
                let r = coefficient * coefficient;
                let mut total = n as f64;
                let mut pow = 1.0;
                for lag in 1..n {
                    pow *= r;
                    total += 2.0 * (n - lag) as f64 * pow;
                }
                2.0 * total
            }
            NoiseModel::BernoulliMean { theta } => theta
                .iter()
                .map(|&p| {
                    let v = p * (1.0 - p);
                    v * (1.0 - 3.0 * v) - v * v
                })
                .sum(),
        }
    }
}

/// Bound `d_I` used in the moment check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DBound {
    #[default]
    Dimension,
    Majorant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Row {
    pub structure: String,
    pub dim: usize,
    pub bound: f64,
    /// Log-mean-exp estimate of `log E exp(alpha |P_I xi|^2)`.
    pub estimate: f64,
    pub se: f64,
    pub saturated: usize,
    /// `-(dim / 2) log(1 - 2 alpha)` for Gaussian noise with `alpha < 1/2`.
    pub reference: Option<f64>,
    pub pass: bool,
}

/// Log-mean-exp with a jackknife standard error.
pub fn log_mean_exp(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let est = log_sum_exp(x) - (n as f64).ln();
    if n == 1 {
        return (est, 0.0);
    }
    let terms: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = terms.iter().sum();
    let loo: Vec<f64> = terms
        .iter()
        .map(|t| m + ((total - t).max(f64::MIN_POSITIVE) / (n - 1) as f64).ln())
        .collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (est, var.sqrt())
}

/// Monte Carlo check of `log E exp(alpha |P_I xi|^2) <= d_I` for every
/// structure of the family.
pub fn check_a1(
    family: &Family,
    noise: &NoiseModel,
    alpha: f64,
    bound: DBound,
    reps: usize,
    seed: u64,
    cap: u128,
) -> Result<Vec<A1Row>> {
    family.check()?;
    let n = family.ambient_dim();
    noise.check(n)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput("alpha must be positive".into()));
    }
    if reps < 2 {
        return Err(Error::InvalidInput(
            "at least two replications are required".into(),
        ));
    }
    let structures = family.enumerate(cap)?;
    let draws: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, r));
            let xi = noise.sample(n, &mut rng);
            structures
                .iter()
                .map(|s| alpha * sq_norm(&family.project_unchecked(s, &xi)))
                .collect()
        })
        .collect();
    let gaussian = matches!(noise, NoiseModel::Gaussian);
    let mut rows = Vec::with_capacity(structures.len());
    for (j, s) in structures.iter().enumerate() {
        let mut saturated = 0;
        let xs: Vec<f64> = draws
            .iter()
            .map(|d| {
                if d[j] > EXPONENT_CAP {
                    saturated += 1;
                    EXPONENT_CAP
                } else {
                    d[j]
                }
            })
            .collect();
        let (estimate, se) = log_mean_exp(&xs);
        let dim = family.dim_unchecked(s);
        let b = match bound {
            DBound::Dimension => dim as f64,
            DBound::Majorant => family.rho(s),
        };
        let reference =
            (gaussian && 2.0 * alpha < 1.0).then(|| -(dim as f64) / 2.0 * (1.0 - 2.0 * alpha).ln());
        if saturated > 0 {
            log::warn!("{saturated} of {reps} exponents capped for {}", s.to_json());
        }
        rows.push(A1Row {
            structure: s.to_json(),
            dim,
            bound: b,
            estimate,
            se,
            saturated,
            reference,
            pass: estimate <= b + 2.0 * se,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub family: String,
    pub nu: f64,
    pub structures: usize,
    pub sum: f64,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

/// Relative slack, in units of machine epsilon, allowed when comparing the
/// enumerated sum with a closed-form bound that it approaches from below.
pub const A2_ULPS: f64 = 4.0;

/// Enumerated `sum_I exp(-nu rho(I))` compared with the known closed form.
pub fn check_a2(family: &Family, nu: f64, cap: u128) -> Result<A2Report> {
    family.check()?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidInput("nu must be positive".into()));
    }
    let structures = family.enumerate(cap)?;
    let logs: Vec<f64> = structures.iter().map(|s| -nu * family.rho(s)).collect();
    let sum = log_sum_exp(&logs).exp();
    let bound = family.a2_closed_form(nu);
    Ok(A2Report {
        family: family.name().to_string(),
        nu,
        structures: structures.len(),
        sum,
        bound,
        pass: bound.map(|b| sum <= b * (1.0 + A2_ULPS * f64::EPSILON)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A3Report {
    pub family: String,
    pub pairs: usize,
    pub probes: usize,
    pub containment_failures: usize,
    pub subadditivity_failures: usize,
    pub pass: bool,
}

/// Relative tolerance for the containment and subadditivity checks.
pub const A3_TOLERANCE: f64 = 1e-9;

/// Checks that the union structure of random pairs contains both members and
/// that its majorant is at most the sum of theirs.
pub fn check_a3(family: &Family, pairs: usize, probes: usize, seed: u64) -> Result<A3Report> {
    family.check()?;
    if matches!(family, Family::Clustering { .. }) {
        return Err(Error::Unsupported {
            family: family.name().to_string(),
            operation: "union structure".into(),
        });
    }
    let n = family.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut containment_failures = 0;
    let mut subadditivity_failures = 0;
    for _ in 0..pairs {
        let a = family.random_structure(&mut rng);
        let b = family.random_structure(&mut rng);
        let u = family.union(&a, &b)?;
        let (ra, rb, ru) = (family.rho(&a), family.rho(&b), family.rho(&u));
        if ru > (ra + rb) * (1.0 + A3_TOLERANCE) + A3_TOLERANCE {
            subadditivity_failures += 1;
        }
        let mut contained = true;
        for _ in 0..probes {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            for s in [&a, &b] {
                let p = family.project_unchecked(s, &v);
                let q = family.project_unchecked(&u, &p);
                if sq_dist(&p, &q) > A3_TOLERANCE * sq_norm(&p).max(1.0) {
                    contained = false;
                }
            }
        }
        if !contained {
            containment_failures += 1;
        }
    }
    Ok(A3Report {
        family: family.name().to_string(),
        pairs,
        probes,
        containment_failures,
        subadditivity_failures,
        pass: containment_failures == 0 && subadditivity_failures == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A4Row {
    pub m: f64,
    /// `P(|<v, xi>| >= sqrt(M))` over random unit `v`.
    pub psi1: f64,
    pub psi1_se: f64,
    /// `P(| |xi|^2 - V | >= M sqrt(N))` with `V` the summed variance.
    pub psi2: f64,
    pub psi2_se: f64,
    /// Chebyshev bound `Var(|xi|^2) / (M^2 N)`.
    pub psi2_envelope: f64,
}

/// Empirical tail functions of a noise vector over a grid of `M`.
pub fn check_a4(
    noise: &NoiseModel,
    m_grid: &[f64],
    reps: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<A4Row>> {
    noise.check(n)?;
    if n == 0 || reps == 0 {
        return Err(Error::InvalidInput(
            "dimension and replications must be positive".into(),
        ));
    }
    if m_grid.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidInput("M grid must be non-negative".into()));
    }
    let v_total: f64 = noise.variances(n).iter().sum();
    let stats: Vec<(f64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, r));
            let xi = noise.sample(n, &mut rng);
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = sq_norm(&v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            (dot(&v, &xi).abs(), (sq_norm(&xi) - v_total).abs())
        })
        .collect();
    let sqrt_n = (n as f64).sqrt();
    let var_sq = noise.sq_norm_variance(n);
    let rows = m_grid
        .iter()
        .map(|&m| {
            let k1 = stats.iter().filter(|(a, _)| *a >= m.sqrt()).count();
            let k2 = stats.iter().filter(|(_, b)| *b >= m * sqrt_n).count();
            let p1 = k1 as f64 / reps as f64;
            let p2 = k2 as f64 / reps as f64;
            A4Row {
                m,
                psi1: p1,
                psi1_se: (p1 * (1.0 - p1) / reps as f64).sqrt(),
                psi2: p2,
                psi2_se: (p2 * (1.0 - p2) / reps as f64).sqrt(),
                psi2_envelope: if m > 0.0 {
                    var_sq / (m * m * n as f64)
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect();
    Ok(rows)
}
