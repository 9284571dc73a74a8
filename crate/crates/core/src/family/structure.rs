use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// A member of a structure family. Indices are 0-based and sorted.
///
/// * `Truncation(k)` keeps the first `k` coordinates.
/// * `SparseSet(s)` keeps the coordinates in `s`.
/// * `LeveledSparse(levels)` keeps, at each resolution level `j`, the offsets
///   listed in `levels[j]` (each offset below `2^j`).
/// * `MultiLevelPartition` keeps the `free` coordinates and averages each cluster.
/// * `JumpSet(b)` allows a change between positions `i` and `i + 1` for each `i` in `b`.
/// * `KnotSet(k)` allows a kink at each interior position in `k`.
/// * `RegressionSupport` selects design columns; `full_rank` marks the
///   distinguished maximal-rank member.
/// * `Band(w)` keeps symmetric entries with `|i - j| <= w`.
/// * `Bicluster` assigns canonical row and column labels (first occurrence order).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", content = "data", rename_all = "snake_case")]
pub enum Structure {
    Truncation(usize),
    SparseSet(Vec<usize>),
    LeveledSparse(Vec<Vec<usize>>),
    MultiLevelPartition {
        free: Vec<usize>,
        clusters: Vec<Vec<usize>>,
    },
    JumpSet(Vec<usize>),
    KnotSet(Vec<usize>),
    RegressionSupport {
        columns: Vec<usize>,
        full_rank: bool,
    },
    Band(usize),
    Bicluster {
        rows: Vec<usize>,
        cols: Vec<usize>,
    },
}

impl Structure {
    /// Size used by the canonical order: number of selected elements, level
    /// or width, depending on the variant.
    pub fn size(&self) -> usize {
        match self {
            Structure::Truncation(k) | Structure::Band(k) => *k,
            Structure::SparseSet(s) | Structure::JumpSet(s) | Structure::KnotSet(s) => s.len(),
            Structure::LeveledSparse(levels) => levels.iter().map(Vec::len).sum(),
            Structure::MultiLevelPartition { free, clusters } => {
                free.len() + clusters.iter().filter(|c| !c.is_empty()).count()
            }
            Structure::RegressionSupport { columns, .. } => columns.len(),
            Structure::Bicluster { rows, cols } => label_count(rows) * label_count(cols),
        }
    }

    fn key(&self) -> Vec<usize> {
        match self {
            Structure::Truncation(k) | Structure::Band(k) => vec![*k],
            Structure::SparseSet(s) | Structure::JumpSet(s) | Structure::KnotSet(s) => s.clone(),
            Structure::LeveledSparse(levels) => levels
                .iter()
                .flat_map(|l| std::iter::once(l.len()).chain(l.iter().copied()))
                .collect(),
            Structure::MultiLevelPartition { free, clusters } => {
                let mut k = free.clone();
                for c in clusters {
                    k.push(usize::MAX);
                    k.extend(c);
                }
                k
            }
            Structure::RegressionSupport { columns, full_rank } => {
                let mut k = vec![usize::from(*full_rank)];
                k.extend(columns);
                k
            }
            Structure::Bicluster { rows, cols } => rows.iter().chain(cols).copied().collect(),
        }
    }

    /// Canonical enumeration order: by size, then lexicographically.
    pub fn canonical_cmp(&self, other: &Structure) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.key().cmp(&other.key()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("structure serialisation cannot fail")
    }

    pub fn from_json(s: &str) -> crate::Result<Structure> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn label_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

/// Relabels so that labels appear in first-occurrence order starting at 0.
pub(crate) fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}
