//! Monte Carlo experiments driven by JSON configurations.
//!
//! Every grid cell `(n, sigma)` draws its replications from seeds derived
//! from the master seed, the cell index and the replication index, so output
//! does not depend on the number of worker threads. The `M` and `t` grids are
//! evaluated on the same draws.

mod experiments;
mod signals;

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conditions::NoiseModel;
use crate::ddm::ConditionalLaw;
use crate::error::{Error, Result};
use crate::family::{Family, DEFAULT_ENUMERATION_CAP};
use crate::oracle::{ConstantsMode, FrameworkConstants};
use crate::selection::SearchMode;

pub use experiments::run;
pub use signals::SignalSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Contraction,
    EstimationRisk,
    CoverageEbr,
    CoverageQuarter,
    Size,
    RecoveryShell,
    RateScaling,
}

/// Point estimator built from the data-dependent measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Projection onto the selected structure.
    #[default]
    Ms,
    /// Posterior model average.
    Ma,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

fn zero() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Ambient dimensions; empty means the family's own dimension.
    #[serde(default)]
    pub n: Vec<usize>,
    /// Noise levels. For `rate-scaling` the level used is `sigma / sqrt(n)`.
    #[serde(default = "one")]
    pub sigma: Vec<f64>,
    #[serde(default = "zero")]
    pub m: Vec<f64>,
    #[serde(default = "zero")]
    pub t: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            n: Vec::new(),
            sigma: one(),
            m: zero(),
            t: zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default = "ConstantsConfig::alpha")]
    pub alpha: f64,
    #[serde(default = "ConstantsConfig::nu")]
    pub nu: f64,
    #[serde(default = "ConstantsConfig::delta")]
    pub delta: f64,
    #[serde(default)]
    pub mode: ConstantsMode,
    #[serde(default)]
    pub tau0: Option<f64>,
}

impl ConstantsConfig {
    fn alpha() -> f64 {
        FrameworkConstants::DEFAULT_ALPHA
    }

    fn nu() -> f64 {
        FrameworkConstants::DEFAULT_NU
    }

    fn delta() -> f64 {
        FrameworkConstants::DEFAULT_DELTA
    }

    pub fn build(&self, kappa: f64) -> Result<FrameworkConstants> {
        let c = FrameworkConstants::new(self.alpha, self.nu, kappa, self.delta, self.mode)?;
        match self.tau0 {
            Some(t) => c.with_tau0(t),
            None => Ok(c),
        }
    }
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            alpha: Self::alpha(),
            nu: Self::nu(),
            delta: Self::delta(),
            mode: ConstantsMode::Practical,
            tau0: None,
        }
    }
}

fn default_kappa() -> f64 {
    1.0
}

fn default_cap() -> u128 {
    DEFAULT_ENUMERATION_CAP
}

fn default_tilde_c() -> f64 {
    1.0
}

/// Configuration of `projstruct simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub experiment: Experiment,
    pub family: Family,
    pub signal: SignalSpec,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub grid: Grid,
    pub reps: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub with_dimension: bool,
    #[serde(default)]
    pub mode: SearchMode,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub constants: ConstantsConfig,
    /// Multiplier of `r_hat^2` in the EBR radius; defaults to `M_2`.
    #[serde(default)]
    pub m2: Option<f64>,
    /// `M_1` in the quarter-ball margin; defaults to the theoretical value.
    #[serde(default)]
    pub m1: Option<f64>,
    /// Contraction threshold is `contraction_multiplier * r^2(theta) + M sigma^2`.
    #[serde(default)]
    pub contraction_multiplier: Option<f64>,
    /// Recovery shell upper end is `upper_multiplier * rho(I_o) + M`; defaults to `M_0`.
    #[serde(default)]
    pub upper_multiplier: Option<f64>,
    /// Threshold `c` of the highly structured set.
    #[serde(default = "default_tilde_c")]
    pub tilde_c: f64,
    #[serde(default)]
    pub law: ConditionalLaw,
    #[serde(default = "default_cap")]
    pub cap: u128,
}

impl SimulateConfig {
    /// Checks the configuration and returns the framework constants.
    pub fn validate(&self) -> Result<FrameworkConstants> {
        self.family.check()?;
        if self.reps == 0 {
            return Err(Error::Config("reps must be positive".into()));
        }
        if self.grid.sigma.is_empty() || self.grid.m.is_empty() || self.grid.t.is_empty() {
            return Err(Error::Config("grid lists must not be empty".into()));
        }
        if self.grid.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config("grid.sigma entries must be positive".into()));
        }
        if self
            .grid
            .m
            .iter()
            .chain(&self.grid.t)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Config(
                "grid.m and grid.t entries must be non-negative".into(),
            ));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Config("kappa must be positive".into()));
        }
        for n in self.dimensions() {
            resize(&self.family, n)?;
        }
        self.constants.build(self.kappa)
    }

    pub fn dimensions(&self) -> Vec<usize> {
        if self.grid.n.is_empty() {
            vec![self.family.ambient_dim()]
        } else {
            self.grid.n.clone()
        }
    }
}

/// The family with ambient dimension `n`, for families indexed by a sequence length.
pub fn resize(family: &Family, n: usize) -> Result<Family> {
    if family.ambient_dim() == n {
        return Ok(family.clone());
    }
    let f = match family {
        Family::Smoothness { .. } => Family::Smoothness { n },
        Family::Sparsity { majorant, .. } => Family::Sparsity {
            n,
            majorant: *majorant,
        },
        Family::Clustering { clusters, .. } => Family::Clustering {
            n,
            clusters: *clusters,
        },
        Family::PiecewiseConstant { .. } => Family::PiecewiseConstant { n },
        Family::PiecewiseLinear { .. } => Family::PiecewiseLinear { n },
        Family::Wavelet { .. } if (n + 1).is_power_of_two() && n > 0 => Family::Wavelet {
            max_level: (n + 1).trailing_zeros() as usize - 1,
        },
        _ => {
            return Err(Error::Config(format!(
                "family {} cannot be resized to dimension {n}",
                family.name()
            )))
        }
    };
    f.check()?;
    Ok(f)
}

/// Numeric result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    /// Values of one column; panics on an unknown name.
    pub fn column(&self, column: &str) -> Vec<f64> {
        let j = self
            .index(column)
            .unwrap_or_else(|| panic!("no column {column}"));
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Writes CSV; missing values (NaN) are left empty.
    pub fn write_csv<W: Write>(&self, out: W, meta: &Metadata) -> Result<()> {
        let mut out = out;
        writeln!(out, "{}", meta.comment_line())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

/// Header comment written above every CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
}

impl Metadata {
    pub fn new<T: Serialize>(config: &T, seed: u64) -> Result<Self> {
        Ok(Metadata {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_hash: config_hash(config)?,
        })
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# projstruct {} seed={} config_sha256={}",
            self.version, self.seed, self.config_hash
        )
    }
}

/// SHA-256 of the compact JSON form of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Smallest `m` whose `coverage` reaches `target` among rows matching `filter`.
pub fn calibrate_m(
    table: &Table,
    coverage: &str,
    target: f64,
    filter: impl Fn(&[f64]) -> bool,
) -> Option<f64> {
    let jm = table.index("m")?;
    let jc = table.index(coverage)?;
    table
        .rows
        .iter()
        .filter(|r| filter(r) && r[jc] >= target)
        .map(|r| r[jm])
        .min_by(|a, b| a.total_cmp(b))
}

#[cfg(test)]
mod tests;
