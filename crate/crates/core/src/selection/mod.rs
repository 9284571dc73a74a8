//! Penalized structure selection: minimisation of
//! `|Y - P_I Y|^2 + sigma^2 pen(I)` over a structure family, with exact
//! algorithms where the family allows them, heuristics otherwise, and a
//! brute-force reference.

mod knots;
mod partition;
mod segment;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::family::{Family, Structure};
use crate::linalg::{sq_dist, sq_norm};
use crate::math::bell;

pub use knots::knot_table;
pub use partition::{bicluster_local_search, LocalSearchTrace};
pub use segment::{segment_dp, SegmentSolution};

/// Relative tolerance under which two objective values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Largest number of design columns handled by exhaustive regression search.
pub const REGRESSION_EXACT_MAX_COLUMNS: usize = 18;
/// Largest number of coordinates handled by exact clustering search.
pub const CLUSTERING_EXACT_MAX_N: usize = 14;
/// Largest number of row/column partition pairs searched exactly for biclustering.
pub const BICLUSTER_EXACT_MAX_PAIRS: u128 = 100_000;

/// Search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Guaranteed global minimiser; fails when no exact method fits the instance.
    #[default]
    Exact,
    /// Exact where cheap, documented heuristics otherwise.
    Heuristic,
}

/// Penalty `pen(I) = 2 kappa rho(I)`, optionally plus `dim(L_I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub sigma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub with_dimension: bool,
}

impl Penalty {
    pub fn new(sigma: f64, kappa: f64) -> Self {
        Penalty {
            sigma,
            kappa,
            with_dimension: false,
        }
    }

    pub fn with_dimension(mut self, on: bool) -> Self {
        self.with_dimension = on;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidInput(
                "sigma must be positive and finite".into(),
            ));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidInput(
                "kappa must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn weights(&self) -> Weights {
        let s2 = self.sigma * self.sigma;
        Weights {
            rho: 2.0 * self.kappa * s2,
            dim: if self.with_dimension { s2 } else { 0.0 },
        }
    }
}

/// Coefficients of the complexity terms in an objective
/// `|y - P_I y|^2 + rho_weight * rho(I) + dim_weight * dim(I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Weights {
    pub rho: f64,
    pub dim: f64,
}

/// Selected structure and its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub structure: Structure,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Scored {
    pub objective: f64,
    pub rho: f64,
    pub structure: Structure,
}

impl Scored {
    pub fn new(family: &Family, structure: Structure, residual: f64, w: Weights) -> Self {
        let rho = family.rho(&structure);
        let dim = if w.dim != 0.0 {
            family.dim_unchecked(&structure) as f64
        } else {
            0.0
        };
        Scored {
            objective: residual + w.rho * rho + w.dim * dim,
            rho,
            structure,
        }
    }

    /// Tie rule: lower objective, then smaller majorant, then canonical order.
    pub fn cmp_rank(&self, other: &Scored) -> Ordering {
        let tol = TIE_TOLERANCE * (1.0 + self.objective.abs().max(other.objective.abs()));
        if self.objective < other.objective - tol {
            return Ordering::Less;
        }
        if self.objective > other.objective + tol {
            return Ordering::Greater;
        }
        self.rho
            .total_cmp(&other.rho)
            .then_with(|| self.structure.canonical_cmp(&other.structure))
    }
}

pub(crate) fn best_of(candidates: impl IntoIterator<Item = Scored>) -> Option<Scored> {
    candidates.into_iter().reduce(|a, b| {
        if b.cmp_rank(&a) == Ordering::Less {
            b
        } else {
            a
        }
    })
}

/// Objective value of a given structure.
pub fn objective(
    y: &[f64],
    family: &Family,
    structure: &Structure,
    penalty: &Penalty,
) -> Result<f64> {
    penalty.check()?;
    let p = family.project(structure, y)?;
    Ok(Scored::new(family, structure.clone(), sq_dist(y, &p), penalty.weights()).objective)
}

fn check_inputs(y: &[f64], family: &Family) -> Result<()> {
    family.check()?;
    check_len(y, family.ambient_dim())?;
    check_finite(y)
}

/// Minimiser of the penalized objective over the family.
pub fn select_penalized(
    y: &[f64],
    family: &Family,
    penalty: &Penalty,
    mode: SearchMode,
) -> Result<Selection> {
    penalty.check()?;
    minimize(y, family, penalty.weights(), mode)
}

/// Minimiser over an explicit enumeration of the family (reference implementation).
pub fn select_bruteforce(
    y: &[f64],
    family: &Family,
    penalty: &Penalty,
    cap: u128,
) -> Result<Selection> {
    penalty.check()?;
    minimize_bruteforce(y, family, penalty.weights(), cap)
}

pub(crate) fn minimize_bruteforce(
    y: &[f64],
    family: &Family,
    w: Weights,
    cap: u128,
) -> Result<Selection> {
    check_inputs(y, family)?;
    let all = family.enumerate(cap)?;
    let best = best_of(all.into_iter().map(|s| {
        let r = sq_dist(y, &family.project_unchecked(&s, y));
        Scored::new(family, s, r, w)
    }))
    .expect("every family has at least one structure");
    Ok(finish(y, family, best, w))
}

/// Recomputes the objective through the projection so that every selector
/// reports values on the same footing.
fn finish(y: &[f64], family: &Family, best: Scored, w: Weights) -> Selection {
    let r = sq_dist(y, &family.project_unchecked(&best.structure, y));
    let s = Scored::new(family, best.structure, r, w);
    Selection {
        structure: s.structure,
        objective: s.objective,
    }
}

pub(crate) fn minimize(
    y: &[f64],
    family: &Family,
    w: Weights,
    mode: SearchMode,
) -> Result<Selection> {
    check_inputs(y, family)?;
    let best = match family {
        Family::Smoothness { n } => {
            let mut tail = vec![0.0; n + 1];
            for k in (0..*n).rev() {
                tail[k] = tail[k + 1] + y[k] * y[k];
            }
            best_of((0..=*n).map(|k| Scored::new(family, Structure::Truncation(k), tail[k], w)))
        }
        Family::Sparsity { n, .. } => {
            let total = sq_norm(y);
            let order = magnitude_order(y);
            let mut kept = 0.0;
            best_of((0..=*n).map(|k| {
                if k > 0 {
                    kept += y[order[k - 1]] * y[order[k - 1]];
                }
                let mut idx = order[..k].to_vec();
                idx.sort_unstable();
                Scored::new(
                    family,
                    Structure::SparseSet(idx),
                    (total - kept).max(0.0),
                    w,
                )
            }))
        }
        Family::Wavelet { max_level } => {
            let mut levels = Vec::with_capacity(max_level + 1);
            for j in 0..=*max_level {
                let off = (1usize << j) - 1;
                let sub = &y[off..off + (1 << j)];
                let level_family = Family::Sparsity {
                    n: 1 << j,
                    majorant: crate::family::SparsityMajorant::Standard,
                };
                let s = minimize(sub, &level_family, w, SearchMode::Exact)?;
                match s.structure {
                    Structure::SparseSet(idx) => levels.push(idx),
                    _ => unreachable!(),
                }
            }
            let s = Structure::LeveledSparse(levels);
            let r = sq_dist(y, &family.project_unchecked(&s, y));
            Some(Scored::new(family, s, r, w))
        }
        Family::PiecewiseConstant { n } => {
            let prefix = PrefixSums::new(y);
            let table = segment_dp(*n, n.saturating_sub(1), |a, b| prefix.sse(a, b));
            best_of(table.into_iter().flatten().map(|sol| {
                let s = Structure::JumpSet(sol.breaks);
                Scored::new(family, s, sol.cost, w)
            }))
        }
        Family::PiecewiseLinear { n } => {
            let table = knot_table(y, n.saturating_sub(2));
            best_of(table.into_iter().flatten().map(|sol| {
                let s = Structure::KnotSet(sol.breaks);
                Scored::new(family, s, sol.cost, w)
            }))
        }
        Family::Banding { p } => best_of((0..*p).map(|k| {
            let s = Structure::Band(k);
            let r = sq_dist(y, &family.project_unchecked(&s, y));
            Scored::new(family, s, r, w)
        })),
        Family::Regression { design } => {
            let p = design.matrix().cols();
            if p <= REGRESSION_EXACT_MAX_COLUMNS {
                return minimize_bruteforce(y, family, w, u128::MAX);
            }
            if mode == SearchMode::Exact {
                return Err(Error::ExactUnavailable {
                    family: family.name().into(),
                    reason: format!(
                        "{p} columns exceed the exhaustive limit of {REGRESSION_EXACT_MAX_COLUMNS}"
                    ),
                });
            }
            Some(regression_forward(y, family, w))
        }
        Family::Clustering { n, clusters } => {
            let exact = *n <= CLUSTERING_EXACT_MAX_N;
            if !exact && mode == SearchMode::Exact {
                return Err(Error::ExactUnavailable {
                    family: family.name().into(),
                    reason: format!("n = {n} exceeds the exact limit of {CLUSTERING_EXACT_MAX_N}"),
                });
            }
            Some(partition::clustering_search(
                y, family, *n, *clusters, w, exact,
            ))
        }
        Family::Bicluster { rows, cols } => {
            let pairs = bell(*rows).saturating_mul(bell(*cols));
            if pairs <= BICLUSTER_EXACT_MAX_PAIRS {
                return minimize_bruteforce(y, family, w, u128::MAX);
            }
            if mode == SearchMode::Exact {
                return Err(Error::ExactUnavailable {
                    family: family.name().into(),
                    reason: format!("{pairs} partition pairs exceed the exact limit of {BICLUSTER_EXACT_MAX_PAIRS}"),
                });
            }
            Some(partition::bicluster_heuristic(y, family, *rows, *cols, w))
        }
    };
    Ok(finish(y, family, best.expect("non-empty family"), w))
}

/// Indices ordered by decreasing magnitude, ties by index.
pub(crate) fn magnitude_order(y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()).then(a.cmp(&b)));
    order
}

/// Prefix sums for constant-segment residuals.
pub(crate) struct PrefixSums {
    s: Vec<f64>,
    q: Vec<f64>,
}

impl PrefixSums {
    pub fn new(y: &[f64]) -> Self {
        let mut s = vec![0.0; y.len() + 1];
        let mut q = vec![0.0; y.len() + 1];
        for (i, v) in y.iter().enumerate() {
            s[i + 1] = s[i] + v;
            q[i + 1] = q[i] + v * v;
        }
        PrefixSums { s, q }
    }

    /// Residual sum of squares of `y[a..b]` around its mean.
    pub fn sse(&self, a: usize, b: usize) -> f64 {
        let len = (b - a) as f64;
        let sum = self.s[b] - self.s[a];
        (self.q[b] - self.q[a] - sum * sum / len).max(0.0)
    }
}

fn regression_forward(y: &[f64], family: &Family, w: Weights) -> Scored {
    let design = match family {
        Family::Regression { design } => design,
        _ => unreachable!(),
    };
    let score = |columns: Vec<usize>, full_rank: bool| {
        let s = Structure::RegressionSupport { columns, full_rank };
        let r = sq_dist(y, &family.project_unchecked(&s, y));
        Scored::new(family, s, r, w)
    };
    let mut best = score(design.full_rank_columns().to_vec(), true);
    let mut current: Vec<usize> = Vec::new();
    let empty = score(Vec::new(), false);
    if empty.cmp_rank(&best) == Ordering::Less {
        best = empty;
    }
    let p = design.matrix().cols();
    while design.size_admissible(current.len() + 1) {
        let step = best_of((0..p).filter(|j| !current.contains(j)).map(|j| {
            let mut c = current.clone();
            c.push(j);
            c.sort_unstable();
            score(c, false)
        }));
        let Some(step) = step else { break };
        if let Structure::RegressionSupport { columns, .. } = &step.structure {
            current = columns.clone();
        }
        if step.cmp_rank(&best) == Ordering::Less {
            best = step;
        }
    }
    best
}
