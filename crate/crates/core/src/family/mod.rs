//! Structure families: the index sets, their linear subspaces, projections,
//! complexity majorants and the operations needed by selection and the
//! condition checkers.

mod enumerate;
mod structure;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{Mat, OrthoBasis};
use crate::math::{ln_binomial, ln_multinomial, sparse_entropy};

pub use structure::Structure;
pub(crate) use structure::{canonical_labels, label_count};

/// Default bound on the number of structures an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Complexity majorant used by the sparsity family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityMajorant {
    /// `2 |I| log(e n / |I|)`.
    #[default]
    Standard,
    /// `max(|I|, log C(n, |I|))`.
    Binomial,
}

/// Regression design with its rank and a fixed set of linearly independent
/// columns spanning the column space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat", into = "Mat")]
pub struct Design {
    x: Mat,
    rank: usize,
    full_rank_columns: Vec<usize>,
}

impl Design {
    pub fn new(x: Mat) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::InvalidInput(
                "design matrix must be non-empty".into(),
            ));
        }
        let mut full_rank_columns = Vec::new();
        for j in 0..x.cols() {
            full_rank_columns.push(j);
            let rank = OrthoBasis::from_matrix(&x.select_columns(&full_rank_columns)).rank();
            if rank < full_rank_columns.len() {
                full_rank_columns.pop();
            }
        }
        let rank = full_rank_columns.len();
        if rank == 0 {
            return Err(Error::InvalidInput("design matrix has rank zero".into()));
        }
        Ok(Design {
            x,
            rank,
            full_rank_columns,
        })
    }

    pub fn matrix(&self) -> &Mat {
        &self.x
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn full_rank_columns(&self) -> &[usize] {
        &self.full_rank_columns
    }

    /// Whether a support of this size belongs to the small-support part of the family.
    pub fn size_admissible(&self, k: usize) -> bool {
        sparse_entropy(k, self.x.cols()) <= self.rank as f64
    }

    pub fn majorant(&self, columns: &[usize], full_rank: bool) -> f64 {
        if full_rank {
            self.rank as f64
        } else {
            sparse_entropy(columns.len(), self.x.cols())
        }
    }
}

impl TryFrom<Mat> for Design {
    type Error = Error;

    fn try_from(x: Mat) -> Result<Self> {
        Design::new(x)
    }
}

impl From<Design> for Mat {
    fn from(d: Design) -> Mat {
        d.x
    }
}

/// A family of structures indexing linear subspaces of the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Nested truncations of an `n`-vector (also used for graph and density
    /// coefficients supplied in a basis ordering).
    Smoothness { n: usize },
    /// Arbitrary supports of an `n`-vector.
    Sparsity {
        n: usize,
        #[serde(default)]
        majorant: SparsityMajorant,
    },
    /// Per-level supports of wavelet coefficients at levels `0..=max_level`,
    /// stored level by level (`2^j` coefficients at level `j`).
    Wavelet { max_level: usize },
    /// Free coordinates plus `clusters` groups sharing a common value.
    Clustering { n: usize, clusters: usize },
    /// Piecewise constant sequences (isotonic and unimodal regression).
    PiecewiseConstant { n: usize },
    /// Continuous piecewise linear sequences (convex regression).
    PiecewiseLinear { n: usize },
    /// Column supports of a regression design; the parameter is the mean `X beta`.
    Regression { design: Design },
    /// Banded symmetric `p x p` matrices, stored row-major.
    Banding { p: usize },
    /// Block-constant `rows x cols` matrices, stored row-major.
    Bicluster { rows: usize, cols: usize },
}

fn invalid(family: &Family, reason: impl Into<String>) -> Error {
    Error::InvalidStructure {
        family: family.name().to_string(),
        reason: reason.into(),
    }
}

fn check_sorted_set(family: &Family, idx: &[usize], lo: usize, hi: usize) -> Result<()> {
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(family, "indices must be strictly increasing"));
    }
    if let (Some(&first), Some(&last)) = (idx.first(), idx.last()) {
        if first < lo || last >= hi {
            return Err(invalid(family, format!("indices must lie in {lo}..{hi}")));
        }
    }
    Ok(())
}

fn check_rgs(family: &Family, labels: &[usize], len: usize) -> Result<()> {
    if labels.len() != len {
        return Err(invalid(family, format!("expected {len} labels")));
    }
    if canonical_labels(labels) != labels {
        return Err(invalid(
            family,
            "labels must appear in first-occurrence order",
        ));
    }
    Ok(())
}

fn level_offset(j: usize) -> usize {
    (1usize << j) - 1
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        0.0
    } else {
        s / c as f64
    }
}

fn bicluster_majorant(s1: usize, s2: usize, n1: usize, n2: usize) -> f64 {
    let (f1, f2) = (s1 as f64, s2 as f64);
    let (g1, g2) = (n1 as f64, n2 as f64);
    match (s1 < n1, s2 < n2) {
        (true, true) => f1 * f2 + g1 * f1.ln() + g2 * f2.ln(),
        (true, false) => f1 * g2 + g1 * f1.ln(),
        (false, true) => g1 * f2 + g2 * f2.ln(),
        (false, false) => g1 * g2,
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Smoothness { .. } => "smoothness",
            Family::Sparsity { .. } => "sparsity",
            Family::Wavelet { .. } => "wavelet",
            Family::Clustering { .. } => "clustering",
            Family::PiecewiseConstant { .. } => "piecewise_constant",
            Family::PiecewiseLinear { .. } => "piecewise_linear",
            Family::Regression { .. } => "regression",
            Family::Banding { .. } => "banding",
            Family::Bicluster { .. } => "bicluster",
        }
    }

    /// Length of the vectorised parameter.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Family::Smoothness { n }
            | Family::Sparsity { n, .. }
            | Family::Clustering { n, .. }
            | Family::PiecewiseConstant { n }
            | Family::PiecewiseLinear { n } => n,
            Family::Wavelet { max_level } => (1usize << (max_level + 1)) - 1,
            Family::Regression { ref design } => design.x.rows(),
            Family::Banding { p } => p * p,
            Family::Bicluster { rows, cols } => rows * cols,
        }
    }

    /// Checks the family parameters.
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("{}: {m}", self.name())));
        match *self {
            Family::Smoothness { n }
            | Family::Sparsity { n, .. }
            | Family::PiecewiseConstant { n }
            | Family::PiecewiseLinear { n }
                if n == 0 =>
            {
                bad("n must be positive")
            }
            Family::Clustering { n, clusters } if n == 0 || clusters == 0 => {
                bad("n and the number of clusters must be positive")
            }
            Family::Wavelet { max_level } if max_level > 24 => bad("max_level must be at most 24"),
            Family::Banding { p } if p == 0 => bad("p must be positive"),
            Family::Bicluster { rows, cols } if rows == 0 || cols == 0 => {
                bad("matrix dimensions must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Checks that `s` is a canonical member of this family.
    pub fn validate(&self, s: &Structure) -> Result<()> {
        match (self, s) {
            (Family::Smoothness { n }, Structure::Truncation(k)) => {
                if k > n {
                    return Err(invalid(self, format!("level {k} exceeds {n}")));
                }
                Ok(())
            }
            (Family::Sparsity { n, .. }, Structure::SparseSet(idx)) => {
                check_sorted_set(self, idx, 0, *n)
            }
            (Family::Wavelet { max_level }, Structure::LeveledSparse(levels)) => {
                if levels.len() != max_level + 1 {
                    return Err(invalid(self, format!("expected {} levels", max_level + 1)));
                }
                for (j, l) in levels.iter().enumerate() {
                    check_sorted_set(self, l, 0, 1 << j)?;
                }
                Ok(())
            }
            (
                Family::Clustering { n, clusters: m },
                Structure::MultiLevelPartition { free, clusters },
            ) => {
                check_sorted_set(self, free, 0, *n)?;
                if clusters.len() != *m {
                    return Err(invalid(self, format!("expected {m} clusters")));
                }
                let mut seen = vec![false; *n];
                for &i in free.iter().chain(clusters.iter().flatten()) {
                    if i >= *n || seen[i] {
                        return Err(invalid(self, "groups must partition 0..n"));
                    }
                    seen[i] = true;
                }
                if seen.iter().any(|v| !v) {
                    return Err(invalid(self, "groups must cover 0..n"));
                }
                for c in clusters {
                    check_sorted_set(self, c, 0, *n)?;
                }
                let first: Vec<usize> =
                    clusters.iter().filter_map(|c| c.first().copied()).collect();
                let nonempty = first.len();
                if clusters[..nonempty].iter().any(Vec::is_empty)
                    || first.windows(2).any(|w| w[0] > w[1])
                {
                    return Err(invalid(
                        self,
                        "non-empty clusters must come first, ordered by smallest element",
                    ));
                }
                Ok(())
            }
            (Family::PiecewiseConstant { n }, Structure::JumpSet(b)) => {
                check_sorted_set(self, b, 0, n.saturating_sub(1))
            }
            (Family::PiecewiseLinear { n }, Structure::KnotSet(k)) => {
                check_sorted_set(self, k, 1, n.saturating_sub(1))
            }
            (
                Family::Regression { design },
                Structure::RegressionSupport { columns, full_rank },
            ) => {
                if *full_rank {
                    if columns != &design.full_rank_columns {
                        return Err(invalid(
                            self,
                            "full-rank member must list the designated columns",
                        ));
                    }
                    return Ok(());
                }
                check_sorted_set(self, columns, 0, design.x.cols())?;
                if !design.size_admissible(columns.len()) {
                    return Err(invalid(self, "support too large for the design rank"));
                }
                Ok(())
            }
            (Family::Banding { p }, Structure::Band(w)) => {
                if *w >= *p {
                    return Err(invalid(self, format!("width must be below {p}")));
                }
                Ok(())
            }
            (Family::Bicluster { rows: n1, cols: n2 }, Structure::Bicluster { rows, cols }) => {
                check_rgs(self, rows, *n1)?;
                check_rgs(self, cols, *n2)
            }
            _ => Err(invalid(self, "structure variant does not match the family")),
        }
    }

    fn check_vector(&self, y: &[f64]) -> Result<()> {
        check_len(y, self.ambient_dim())?;
        check_finite(y)
    }

    /// Orthogonal projection of `y` onto the subspace of `s`.
    pub fn project(&self, s: &Structure, y: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(y)?;
        self.validate(s)?;
        Ok(self.project_unchecked(s, y))
    }

    pub(crate) fn project_unchecked(&self, s: &Structure, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        match (self, s) {
            (_, Structure::Truncation(k)) => {
                let mut out = y.to_vec();
                out[*k..].iter_mut().for_each(|v| *v = 0.0);
                out
            }
            (_, Structure::SparseSet(idx)) => {
                let mut out = vec![0.0; n];
                idx.iter().for_each(|&i| out[i] = y[i]);
                out
            }
            (_, Structure::LeveledSparse(levels)) => {
                let mut out = vec![0.0; n];
                for (j, l) in levels.iter().enumerate() {
                    let off = level_offset(j);
                    l.iter().for_each(|&k| out[off + k] = y[off + k]);
                }
                out
            }
            (_, Structure::MultiLevelPartition { free, clusters }) => {
                let mut out = vec![0.0; n];
                free.iter().for_each(|&i| out[i] = y[i]);
                for c in clusters {
                    let m = mean(c.iter().map(|&i| y[i]));
                    c.iter().for_each(|&i| out[i] = m);
                }
                out
            }
            (_, Structure::JumpSet(breaks)) => {
                let mut out = vec![0.0; n];
                let mut start = 0;
                for end in breaks.iter().map(|b| b + 1).chain(std::iter::once(n)) {
                    let m = mean(y[start..end].iter().copied());
                    out[start..end].iter_mut().for_each(|v| *v = m);
                    start = end;
                }
                out
            }
            (_, Structure::KnotSet(knots)) => knot_basis(n, knots).project(y),
            (Family::Regression { design }, Structure::RegressionSupport { columns, .. }) => {
                OrthoBasis::from_matrix(&design.x.select_columns(columns)).project(y)
            }
            (Family::Banding { p }, Structure::Band(w)) => {
                let p = *p;
                let mut out = vec![0.0; n];
                for i in 0..p {
                    for j in 0..p {
                        if i.abs_diff(j) <= *w {
                            out[i * p + j] = 0.5 * (y[i * p + j] + y[j * p + i]);
                        }
                    }
                }
                out
            }
            (Family::Bicluster { cols: n2, .. }, Structure::Bicluster { rows, cols }) => {
                let (s1, s2) = (label_count(rows), label_count(cols));
                let mut sum = vec![0.0; s1 * s2];
                let mut cnt = vec![0usize; s1 * s2];
                for (i, &a) in rows.iter().enumerate() {
                    for (j, &b) in cols.iter().enumerate() {
                        sum[a * s2 + b] += y[i * n2 + j];
                        cnt[a * s2 + b] += 1;
                    }
                }
                let mut out = vec![0.0; n];
                for (i, &a) in rows.iter().enumerate() {
                    for (j, &b) in cols.iter().enumerate() {
                        out[i * n2 + j] = sum[a * s2 + b] / cnt[a * s2 + b] as f64;
                    }
                }
                out
            }
            _ => unreachable!("structure validated against family"),
        }
    }

    /// Dimension of the subspace of `s`.
    pub fn dim(&self, s: &Structure) -> Result<usize> {
        self.validate(s)?;
        Ok(self.dim_unchecked(s))
    }

    pub(crate) fn dim_unchecked(&self, s: &Structure) -> usize {
        match (self, s) {
            (Family::PiecewiseConstant { .. }, Structure::JumpSet(b)) => b.len() + 1,
            (Family::PiecewiseLinear { n }, Structure::KnotSet(k)) => (k.len() + 2).min(*n),
            (Family::Regression { design }, Structure::RegressionSupport { columns, .. }) => {
                OrthoBasis::from_matrix(&design.x.select_columns(columns)).rank()
            }
            (Family::Banding { p }, Structure::Band(w)) => p + w * (2 * p - w - 1) / 2,
            _ => s.size(),
        }
    }

    /// Complexity majorant `rho(s)`; always at least the dimension.
    pub fn majorant(&self, s: &Structure) -> Result<f64> {
        self.validate(s)?;
        Ok(self.rho(s))
    }

    pub(crate) fn rho(&self, s: &Structure) -> f64 {
        match (self, s) {
            (Family::Smoothness { .. }, Structure::Truncation(k)) => *k as f64,
            (Family::Sparsity { n, majorant }, Structure::SparseSet(idx)) => {
                sparsity_majorant(*majorant, idx.len(), *n)
            }
            (Family::Wavelet { .. }, Structure::LeveledSparse(levels)) => levels
                .iter()
                .enumerate()
                .map(|(j, l)| sparse_entropy(l.len(), 1 << j))
                .sum(),
            (
                Family::Clustering { n, clusters: m },
                Structure::MultiLevelPartition { free, clusters },
            ) => {
                let mut parts = vec![free.len()];
                parts.extend(clusters.iter().map(Vec::len));
                ((free.len() + m).min(*n)) as f64 + ln_multinomial(&parts) + ln_binomial(n + m, *m)
            }
            (Family::PiecewiseConstant { n }, Structure::JumpSet(b)) => {
                1.0 + sparse_entropy(b.len(), *n)
            }
            (Family::PiecewiseLinear { n }, Structure::KnotSet(k)) => {
                let paper = 1.0 + 1.5 * sparse_entropy(k.len(), *n);
                paper.max(self.dim_unchecked(s) as f64)
            }
            (
                Family::Regression { design },
                Structure::RegressionSupport { columns, full_rank },
            ) => design.majorant(columns, *full_rank),
            (Family::Banding { .. }, Structure::Band(_)) => self.dim_unchecked(s) as f64,
            (Family::Bicluster { rows: n1, cols: n2 }, Structure::Bicluster { rows, cols }) => {
                bicluster_majorant(label_count(rows), label_count(cols), *n1, *n2)
            }
            _ => unreachable!("structure validated against family"),
        }
    }

    /// Slicing index `s(I)`: one entry for most families, per-level sizes for
    /// wavelets, block sizes for clustering and `(s1, s2)` for biclustering.
    pub fn slice_index(&self, s: &Structure) -> Result<Vec<usize>> {
        self.validate(s)?;
        Ok(match s {
            Structure::LeveledSparse(levels) => levels.iter().map(Vec::len).collect(),
            Structure::MultiLevelPartition { free, clusters } => std::iter::once(free.len())
                .chain(clusters.iter().map(Vec::len))
                .collect(),
            Structure::RegressionSupport { columns, full_rank } => {
                vec![if *full_rank {
                    usize::MAX
                } else {
                    columns.len()
                }]
            }
            Structure::Bicluster { rows, cols } => vec![label_count(rows), label_count(cols)],
            other => vec![other.size()],
        })
    }

    /// A structure whose subspace contains both given subspaces and whose
    /// majorant is at most the sum of theirs.
    pub fn union(&self, a: &Structure, b: &Structure) -> Result<Structure> {
        self.validate(a)?;
        self.validate(b)?;
        let merge = |x: &[usize], y: &[usize]| {
            let mut v: Vec<usize> = x.iter().chain(y).copied().collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        Ok(match (self, a, b) {
            (_, Structure::Truncation(x), Structure::Truncation(y)) => {
                Structure::Truncation(*x.max(y))
            }
            (_, Structure::Band(x), Structure::Band(y)) => Structure::Band(*x.max(y)),
            (_, Structure::SparseSet(x), Structure::SparseSet(y)) => {
                Structure::SparseSet(merge(x, y))
            }
            (_, Structure::JumpSet(x), Structure::JumpSet(y)) => Structure::JumpSet(merge(x, y)),
            (_, Structure::KnotSet(x), Structure::KnotSet(y)) => Structure::KnotSet(merge(x, y)),
            (_, Structure::LeveledSparse(x), Structure::LeveledSparse(y)) => {
                Structure::LeveledSparse(x.iter().zip(y).map(|(u, v)| merge(u, v)).collect())
            }
            (Family::Clustering { .. }, _, _) => {
                return Err(Error::Unsupported {
                    family: self.name().into(),
                    operation: "union of structures".into(),
                })
            }
            (
                Family::Regression { design },
                Structure::RegressionSupport {
                    columns: x,
                    full_rank: fx,
                },
                Structure::RegressionSupport {
                    columns: y,
                    full_rank: fy,
                },
            ) => {
                let u = merge(x, y);
                if *fx || *fy || !design.size_admissible(u.len()) {
                    Structure::RegressionSupport {
                        columns: design.full_rank_columns.clone(),
                        full_rank: true,
                    }
                } else {
                    Structure::RegressionSupport {
                        columns: u,
                        full_rank: false,
                    }
                }
            }
            (
                _,
                Structure::Bicluster { rows: r0, cols: c0 },
                Structure::Bicluster { rows: r1, cols: c1 },
            ) => {
                let rows = refine(r0, r1);
                let cols = refine(c0, c1);
                let id_rows: Vec<usize> = (0..r0.len()).collect();
                let id_cols: Vec<usize> = (0..c0.len()).collect();
                [
                    (rows.clone(), cols.clone()),
                    (rows, id_cols.clone()),
                    (id_rows.clone(), cols),
                    (id_rows, id_cols),
                ]
                .into_iter()
                .map(|(rows, cols)| Structure::Bicluster { rows, cols })
                .min_by(|p, q| self.rho(p).total_cmp(&self.rho(q)))
                .expect("candidate list is non-empty")
            }
            _ => unreachable!("structures validated against family"),
        })
    }

    /// Upper bound on the number of structures `enumerate` would produce.
    pub fn count(&self) -> u128 {
        enumerate::count(self)
    }

    /// All structures of the family (one per distinct subspace, except for
    /// clustering where a singleton cluster and a free coordinate coexist),
    /// or `CapExceeded` when the projected count is above `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<Vec<Structure>> {
        self.check()?;
        let projected = self.count();
        if projected > cap {
            return Err(Error::CapExceeded { projected, cap });
        }
        Ok(enumerate::all(self))
    }

    /// A random member of the family.
    pub fn random_structure<R: Rng + ?Sized>(&self, rng: &mut R) -> Structure {
        let subset = |rng: &mut R, lo: usize, hi: usize| -> Vec<usize> {
            let q: f64 = rng.gen();
            (lo..hi).filter(|_| rng.gen::<f64>() < q).collect()
        };
        match self {
            Family::Smoothness { n } => Structure::Truncation(rng.gen_range(0..=*n)),
            Family::Sparsity { n, .. } => Structure::SparseSet(subset(rng, 0, *n)),
            Family::Wavelet { max_level } => {
                Structure::LeveledSparse((0..=*max_level).map(|j| subset(rng, 0, 1 << j)).collect())
            }
            Family::Clustering { n, clusters } => {
                let labels: Vec<usize> = (0..*n).map(|_| rng.gen_range(0..=*clusters)).collect();
                clustering_from_labels(&labels, *clusters)
            }
            Family::PiecewiseConstant { n } => {
                Structure::JumpSet(subset(rng, 0, n.saturating_sub(1)))
            }
            Family::PiecewiseLinear { n } => {
                Structure::KnotSet(subset(rng, 1, n.saturating_sub(1)))
            }
            Family::Regression { design } => {
                if rng.gen::<f64>() < 0.1 {
                    return Structure::RegressionSupport {
                        columns: design.full_rank_columns.clone(),
                        full_rank: true,
                    };
                }
                let p = design.x.cols();
                let kmax = (0..=p)
                    .take_while(|&k| design.size_admissible(k))
                    .last()
                    .unwrap_or(0);
                let k = rng.gen_range(0..=kmax);
                let mut columns = rand::seq::index::sample(rng, p, k).into_vec();
                columns.sort_unstable();
                Structure::RegressionSupport {
                    columns,
                    full_rank: false,
                }
            }
            Family::Banding { p } => Structure::Band(rng.gen_range(0..*p)),
            Family::Bicluster { rows, cols } => {
                let k1 = rng.gen_range(1..=*rows);
                let k2 = rng.gen_range(1..=*cols);
                let r: Vec<usize> = (0..*rows).map(|_| rng.gen_range(0..k1)).collect();
                let c: Vec<usize> = (0..*cols).map(|_| rng.gen_range(0..k2)).collect();
                Structure::Bicluster {
                    rows: canonical_labels(&r),
                    cols: canonical_labels(&c),
                }
            }
        }
    }

    /// Known closed-form bound on `sum_I exp(-nu rho(I))`, if any.
    pub fn a2_closed_form(&self, nu: f64) -> Option<f64> {
        match self {
            Family::Smoothness { .. } | Family::Banding { .. } if nu > 0.0 => {
                Some(nu.exp() / (nu.exp() - 1.0))
            }
            Family::Sparsity {
                majorant: SparsityMajorant::Standard,
                ..
            }
            | Family::Regression { .. }
                if nu > 1.0 =>
            {
                Some(1.0 / (1.0 - (1.0 - nu).exp()))
            }
            Family::Clustering { .. } if nu >= 1.0 => Some(1.0),
            Family::Bicluster { .. } if nu >= 1.0 => Some(1.0 / (nu.exp() + (-nu).exp() - 2.0)),
            _ => None,
        }
    }

    /// The structure whose subspace is the whole space (or the largest member).
    pub fn largest(&self) -> Structure {
        match self {
            Family::Smoothness { n } => Structure::Truncation(*n),
            Family::Sparsity { n, .. } => Structure::SparseSet((0..*n).collect()),
            Family::Wavelet { max_level } => {
                Structure::LeveledSparse((0..=*max_level).map(|j| (0..1 << j).collect()).collect())
            }
            Family::Clustering { n, clusters } => Structure::MultiLevelPartition {
                free: (0..*n).collect(),
                clusters: vec![Vec::new(); *clusters],
            },
            Family::PiecewiseConstant { n } => {
                Structure::JumpSet((0..n.saturating_sub(1)).collect())
            }
            Family::PiecewiseLinear { n } => Structure::KnotSet((1..n.saturating_sub(1)).collect()),
            Family::Regression { design } => Structure::RegressionSupport {
                columns: design.full_rank_columns.clone(),
                full_rank: true,
            },
            Family::Banding { p } => Structure::Band(p - 1),
            Family::Bicluster { rows, cols } => Structure::Bicluster {
                rows: (0..*rows).collect(),
                cols: (0..*cols).collect(),
            },
        }
    }
}

pub(crate) fn sparsity_majorant(kind: SparsityMajorant, k: usize, n: usize) -> f64 {
    match kind {
        SparsityMajorant::Standard => sparse_entropy(k, n),
        SparsityMajorant::Binomial => (k as f64).max(ln_binomial(n, k)),
    }
}

/// Hinge basis `1, i, (i - k)_+` of continuous piecewise linear sequences.
pub(crate) fn knot_basis(n: usize, knots: &[usize]) -> OrthoBasis {
    let mut cols = vec![vec![1.0; n], (0..n).map(|i| i as f64).collect::<Vec<_>>()];
    for &k in knots {
        cols.push((0..n).map(|i| (i as f64 - k as f64).max(0.0)).collect());
    }
    OrthoBasis::from_columns(n, cols)
}

/// Common refinement of two labelings, in canonical form.
pub(crate) fn refine(a: &[usize], b: &[usize]) -> Vec<usize> {
    let pairs: Vec<usize> = a.iter().zip(b).map(|(x, y)| x * b.len() + y).collect();
    canonical_labels(&pairs)
}

/// Builds the canonical clustering structure from labels in `0..=m`,
/// label 0 meaning a free coordinate.
pub(crate) fn clustering_from_labels(labels: &[usize], m: usize) -> Structure {
    let mut free = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            free.push(i);
            continue;
        }
        match order.iter().position(|&o| o == l) {
            Some(pos) => clusters[pos].push(i),
            None => {
                order.push(l);
                clusters.push(vec![i]);
            }
        }
    }
    clusters.resize(m, Vec::new());
    Structure::MultiLevelPartition { free, clusters }
}
