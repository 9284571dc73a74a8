//! Data-dependent measure over structures: the posterior-like weights
//! `pi(I | Y) ∝ exp(-pen(I)/2 - |Y - P_I Y|^2 / (2 sigma^2))`, the model
//! averaged and model selected means, and sampling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::family::{
    sparsity_majorant, Family, SparsityMajorant, Structure, DEFAULT_ENUMERATION_CAP,
};
use crate::linalg::{sq_dist, sq_norm};
use crate::math::{log_add_exp, log_elementary_symmetric, log_sum_exp};
use crate::selection::Penalty;

/// Variance factor `k / (k + 1)` of the Gaussian conditional law with `k = e - 1`.
pub fn default_variance_factor() -> f64 {
    let k = std::f64::consts::E - 1.0;
    k / (k + 1.0)
}

/// Conditional law of the parameter given a structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionalLaw {
    /// `N(P_I Y, variance_factor sigma^2 P_I)`.
    Gaussian { variance_factor: f64 },
    /// `P_I Y + sigma P_I Z` with `Z` drawn uniformly from a caller-supplied pool.
    Resample { pool: Vec<Vec<f64>> },
}

impl Default for ConditionalLaw {
    fn default() -> Self {
        ConditionalLaw::Gaussian {
            variance_factor: default_variance_factor(),
        }
    }
}

/// Which structures carry weight.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidates {
    /// Every member of the family. Sparsity uses a closed-form normaliser;
    /// other families are enumerated up to `cap`.
    All { cap: u128 },
    /// An explicit list (duplicates are ignored).
    Given(Vec<Structure>),
}

impl Default for Candidates {
    fn default() -> Self {
        Candidates::All {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// How the normalising constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Enumerated,
    SymmetricPolynomial,
}

/// One exported posterior entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedStructure {
    pub structure: Structure,
    pub log_weight: f64,
}

#[derive(Debug, Clone)]
struct Entry {
    structure: Structure,
    rho: f64,
    log_weight: f64,
    projection: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Inner {
    Listed(Vec<Entry>),
    Sparse {
        n: usize,
        majorant: SparsityMajorant,
        /// `Y_i^2 / (2 sigma^2)`.
        log_x: Vec<f64>,
        /// Log prior mass per support size.
        log_lambda: Vec<f64>,
        /// Log of the normalised mass of each support size.
        log_size_mass: Vec<f64>,
        log_z: f64,
    },
}

/// The data-dependent measure for one observation.
#[derive(Debug, Clone)]
pub struct DdmPosterior {
    family: Family,
    y: Vec<f64>,
    sigma: f64,
    log_normalizer: f64,
    inner: Inner,
}

fn log_prior(family: &Family, s: &Structure, penalty: &Penalty) -> f64 {
    let mut v = -penalty.kappa * family.rho(s);
    if penalty.with_dimension {
        v -= 0.5 * family.dim_unchecked(s) as f64;
    }
    v
}

/// Builds the measure for data `y`.
pub fn structure_posterior(
    y: &[f64],
    family: &Family,
    penalty: &Penalty,
    candidates: &Candidates,
) -> Result<DdmPosterior> {
    penalty.check()?;
    family.check()?;
    check_len(y, family.ambient_dim())?;
    check_finite(y)?;
    let s2 = penalty.sigma * penalty.sigma;
    if let (Family::Sparsity { n, majorant }, Candidates::All { .. }) = (family, candidates) {
        let log_x: Vec<f64> = y.iter().map(|v| v * v / (2.0 * s2)).collect();
        let log_lambda: Vec<f64> = (0..=*n)
            .map(|k| {
                let mut v = -penalty.kappa * sparsity_majorant(*majorant, k, *n);
                if penalty.with_dimension {
                    v -= 0.5 * k as f64;
                }
                v
            })
            .collect();
        let esp = log_elementary_symmetric(&log_x);
        let joint: Vec<f64> = log_lambda.iter().zip(&esp).map(|(l, e)| l + e).collect();
        let log_z = log_sum_exp(&joint);
        let log_size_mass = joint.iter().map(|v| v - log_z).collect();
        return Ok(DdmPosterior {
            family: family.clone(),
            y: y.to_vec(),
            sigma: penalty.sigma,
            log_normalizer: log_z - sq_norm(y) / (2.0 * s2),
            inner: Inner::Sparse {
                n: *n,
                majorant: *majorant,
                log_x,
                log_lambda,
                log_size_mass,
                log_z,
            },
        });
    }
    let list = match candidates {
        Candidates::All { cap } => family.enumerate(*cap)?,
        Candidates::Given(list) => {
            let mut seen = std::collections::HashSet::new();
            let mut out = Vec::new();
            for s in list {
                family.validate(s)?;
                if seen.insert(s.clone()) {
                    out.push(s.clone());
                }
            }
            if out.is_empty() {
                return Err(Error::InvalidInput("candidate list is empty".into()));
            }
            out
        }
    };
    let mut entries: Vec<Entry> = list
        .into_iter()
        .map(|s| {
            let projection = family.project_unchecked(&s, y);
            let log_weight = log_prior(family, &s, penalty) - sq_dist(y, &projection) / (2.0 * s2);
            Entry {
                rho: family.rho(&s),
                structure: s,
                log_weight,
                projection,
            }
        })
        .collect();
    let weights: Vec<f64> = entries.iter().map(|e| e.log_weight).collect();
    let log_normalizer = log_sum_exp(&weights);
    entries
        .iter_mut()
        .for_each(|e| e.log_weight -= log_normalizer);
    Ok(DdmPosterior {
        family: family.clone(),
        y: y.to_vec(),
        sigma: penalty.sigma,
        log_normalizer,
        inner: Inner::Listed(entries),
    })
}

fn rank(a: &WeightedStructure, ra: f64, b: &WeightedStructure, rb: f64) -> Ordering {
    b.log_weight
        .total_cmp(&a.log_weight)
        .then(ra.total_cmp(&rb))
        .then_with(|| a.structure.canonical_cmp(&b.structure))
}

#[derive(Debug, PartialEq)]
struct Node {
    value: f64,
    size: usize,
    /// Positions in the decreasing order of `log_x`.
    pos: Vec<usize>,
    first_displaced: usize,
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(other.size.cmp(&self.size))
            .then(other.pos.cmp(&self.pos))
    }
}

impl DdmPosterior {
    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn normalization(&self) -> Normalization {
        match self.inner {
            Inner::Listed(_) => Normalization::Enumerated,
            Inner::Sparse { .. } => Normalization::SymmetricPolynomial,
        }
    }

    /// `log sum_I exp(-pen(I)/2 - |Y - P_I Y|^2 / (2 sigma^2))`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Number of structures carrying weight (saturating).
    pub fn support_size(&self) -> u128 {
        match &self.inner {
            Inner::Listed(e) => e.len() as u128,
            Inner::Sparse { .. } => self.family.count(),
        }
    }

    /// Normalised log weight of `s`; `-inf` for a valid structure outside the candidate list.
    pub fn log_weight(&self, s: &Structure) -> Result<f64> {
        self.family.validate(s)?;
        Ok(match (&self.inner, s) {
            (Inner::Listed(entries), _) => entries
                .iter()
                .find(|e| &e.structure == s)
                .map_or(f64::NEG_INFINITY, |e| e.log_weight),
            (
                Inner::Sparse {
                    log_x,
                    log_lambda,
                    log_z,
                    ..
                },
                Structure::SparseSet(idx),
            ) => log_lambda[idx.len()] + idx.iter().map(|&i| log_x[i]).sum::<f64>() - log_z,
            _ => unreachable!("validated"),
        })
    }

    /// Normalised probability of each support size (sparsity closed form only).
    pub fn size_distribution(&self) -> Option<Vec<f64>> {
        match &self.inner {
            Inner::Sparse { log_size_mass, .. } => {
                Some(log_size_mass.iter().map(|v| v.exp()).collect())
            }
            Inner::Listed(_) => None,
        }
    }

    /// Marginal inclusion probabilities `P(i in I | Y)` (sparsity closed form only).
    pub fn inclusion_probabilities(&self) -> Option<Vec<f64>> {
        let Inner::Sparse {
            log_x,
            log_lambda,
            log_z,
            ..
        } = &self.inner
        else {
            return None;
        };
        let n = log_x.len();
        Some(
            (0..n)
                .map(|i| {
                    let others: Vec<f64> = log_x
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| *v)
                        .collect();
                    let e = log_elementary_symmetric(&others);
                    let mut acc = f64::NEG_INFINITY;
                    for s in 1..=n {
                        acc = log_add_exp(acc, log_lambda[s] + log_x[i] + e[s - 1]);
                    }
                    (acc - log_z).exp().min(1.0)
                })
                .collect(),
        )
    }

    /// The `k` heaviest structures, heaviest first (ties: smaller majorant,
    /// then canonical order).
    pub fn top_k(&self, k: usize) -> Vec<WeightedStructure> {
        match &self.inner {
            Inner::Listed(entries) => {
                let mut v: Vec<(WeightedStructure, f64)> = entries
                    .iter()
                    .map(|e| {
                        (
                            WeightedStructure {
                                structure: e.structure.clone(),
                                log_weight: e.log_weight,
                            },
                            e.rho,
                        )
                    })
                    .collect();
                v.sort_by(|a, b| rank(&a.0, a.1, &b.0, b.1));
                v.into_iter().take(k).map(|(w, _)| w).collect()
            }
            Inner::Sparse {
                n,
                majorant,
                log_x,
                log_lambda,
                log_z,
                ..
            } => {
                let mut order: Vec<usize> = (0..*n).collect();
                order.sort_by(|&a, &b| log_x[b].total_cmp(&log_x[a]).then(a.cmp(&b)));
                let xs: Vec<f64> = order.iter().map(|&i| log_x[i]).collect();
                let mut heap = BinaryHeap::new();
                for s in 0..=*n {
                    heap.push(Node {
                        value: log_lambda[s] + xs[..s].iter().sum::<f64>() - log_z,
                        size: s,
                        pos: (0..s).collect(),
                        first_displaced: s,
                    });
                }
                let mut out: Vec<(WeightedStructure, f64)> = Vec::new();
                // best-first: every subset has one parent with a larger weight
                while let Some(node) = heap.pop() {
                    if out.len() >= k {
                        break;
                    }
                    // children: advance one element at a position not after the first displaced one
                    for j in 0..=node.first_displaced.min(node.size.saturating_sub(1)) {
                        if node.size == 0 {
                            break;
                        }
                        let next = node.pos[j] + 1;
                        let free = if j + 1 < node.size {
                            next < node.pos[j + 1]
                        } else {
                            next < *n
                        };
                        if !free {
                            continue;
                        }
                        let mut pos = node.pos.clone();
                        pos[j] = next;
                        heap.push(Node {
                            value: node.value - xs[next - 1] + xs[next],
                            size: node.size,
                            pos,
                            first_displaced: j,
                        });
                    }
                    let mut idx: Vec<usize> = node.pos.iter().map(|&p| order[p]).collect();
                    idx.sort_unstable();
                    out.push((
                        WeightedStructure {
                            structure: Structure::SparseSet(idx),
                            log_weight: node.value,
                        },
                        sparsity_majorant(*majorant, node.size, *n),
                    ));
                }
                out.sort_by(|a, b| rank(&a.0, a.1, &b.0, b.1));
                out.into_iter().take(k).map(|(w, _)| w).collect()
            }
        }
    }

    /// The heaviest structure (ties: smaller majorant, then canonical order).
    pub fn map_structure(&self) -> Structure {
        self.top_k(1).remove(0).structure
    }

    /// Model-selected mean `P_Î Y` for the heaviest structure `Î`.
    pub fn ms_mean(&self) -> Vec<f64> {
        self.family
            .project_unchecked(&self.map_structure(), &self.y)
    }

    /// Model-averaged mean `sum_I pi(I | Y) P_I Y`.
    pub fn ma_mean(&self) -> Vec<f64> {
        match &self.inner {
            Inner::Listed(entries) => {
                let mut out = vec![0.0; self.y.len()];
                for e in entries {
                    let w = e.log_weight.exp();
                    if w > 0.0 {
                        out.iter_mut()
                            .zip(&e.projection)
                            .for_each(|(o, p)| *o += w * p);
                    }
                }
                out
            }
            Inner::Sparse { .. } => {
                let pi = self.inclusion_probabilities().expect("sparse posterior");
                self.y.iter().zip(pi).map(|(y, p)| y * p).collect()
            }
        }
    }

    /// Draws a structure from the measure.
    pub fn sample_structure<R: Rng + ?Sized>(&self, rng: &mut R) -> Structure {
        match &self.inner {
            Inner::Listed(entries) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for e in entries {
                    acc += e.log_weight.exp();
                    if u < acc {
                        return e.structure.clone();
                    }
                }
                entries.last().expect("non-empty").structure.clone()
            }
            Inner::Sparse {
                n,
                log_x,
                log_size_mass,
                ..
            } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut size = *n;
                for (s, m) in log_size_mass.iter().enumerate() {
                    acc += m.exp();
                    if u < acc {
                        size = s;
                        break;
                    }
                }
                // suffix[i][s]: log e_s of log_x[i..]
                let mut suffix = vec![vec![f64::NEG_INFINITY; n + 1]; n + 1];
                suffix[*n][0] = 0.0;
                for i in (0..*n).rev() {
                    for s in 0..=n - i {
                        let skip = suffix[i + 1][s];
                        let take = if s > 0 {
                            log_x[i] + suffix[i + 1][s - 1]
                        } else {
                            f64::NEG_INFINITY
                        };
                        suffix[i][s] = log_add_exp(skip, take);
                    }
                }
                let mut idx = Vec::with_capacity(size);
                let mut left = size;
                for i in 0..*n {
                    if left == 0 {
                        break;
                    }
                    let p = (log_x[i] + suffix[i + 1][left - 1] - suffix[i][left]).exp();
                    if rng.gen::<f64>() < p {
                        idx.push(i);
                        left -= 1;
                    }
                }
                Structure::SparseSet(idx)
            }
        }
    }

    /// Draws the parameter given structure `s`.
    pub fn sample_conditional<R: Rng + ?Sized>(
        &self,
        s: &Structure,
        law: &ConditionalLaw,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let center = self.family.project(s, &self.y)?;
        let z: Vec<f64> = match law {
            ConditionalLaw::Gaussian { variance_factor } => {
                if !(variance_factor.is_finite() && *variance_factor >= 0.0) {
                    return Err(Error::InvalidInput(
                        "variance factor must be non-negative".into(),
                    ));
                }
                let sd = variance_factor.sqrt();
                (0..self.y.len())
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut *rng);
                        sd * z
                    })
                    .collect::<Vec<f64>>()
            }
            ConditionalLaw::Resample { pool } => {
                if pool.is_empty() {
                    return Err(Error::InvalidInput("resampling pool is empty".into()));
                }
                let z = &pool[rng.gen_range(0..pool.len())];
                check_len(z, self.y.len())?;
                z.clone()
            }
        };
        let pz = self.family.project_unchecked(s, &z);
        Ok(center
            .iter()
            .zip(pz)
            .map(|(c, p)| c + self.sigma * p)
            .collect())
    }

    /// One draw from the joint measure: a structure, then the parameter.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        law: &ConditionalLaw,
        rng: &mut R,
    ) -> Result<(Structure, Vec<f64>)> {
        let s = self.sample_structure(rng);
        let theta = self.sample_conditional(&s, law, rng)?;
        Ok((s, theta))
    }
}
