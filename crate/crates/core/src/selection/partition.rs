//! Searches over partitions: exact and sorted-order clustering, and the
//! local search used for biclustering.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{best_of, segment_dp, Penalty, PrefixSums, Scored, Weights};
use crate::error::{check_finite, check_len, Error, Result};
use crate::family::{canonical_labels, label_count, Family, Structure};
use crate::linalg::sq_dist;
use crate::math::ln_factorial;

fn clustering_candidates(
    y: &[f64],
    family: &Family,
    free: &[usize],
    m: usize,
    w: Weights,
) -> Vec<Scored> {
    let n = y.len();
    let mut rest: Vec<usize> = (0..n).filter(|i| !free.contains(i)).collect();
    rest.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let build = |groups: Vec<Vec<usize>>| {
        let mut clusters: Vec<Vec<usize>> = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        clusters.sort_by_key(|c| c[0]);
        clusters.resize(m, Vec::new());
        let s = Structure::MultiLevelPartition {
            free: free.to_vec(),
            clusters,
        };
        let r = sq_dist(y, &family.project_unchecked(&s, y));
        Scored::new(family, s, r, w)
    };
    if rest.is_empty() {
        return vec![build(Vec::new())];
    }
    let sorted: Vec<f64> = rest.iter().map(|&i| y[i]).collect();
    let prefix = PrefixSums::new(&sorted);
    let table = segment_dp(rest.len(), m - 1, |a, b| {
        prefix.sse(a, b) + w.dim - w.rho * ln_factorial(b - a)
    });
    table
        .into_iter()
        .flatten()
        .map(|sol| {
            let mut groups = Vec::new();
            let mut start = 0;
            for end in sol
                .breaks
                .iter()
                .map(|b| b + 1)
                .chain(std::iter::once(rest.len()))
            {
                groups.push(rest[start..end].to_vec());
                start = end;
            }
            build(groups)
        })
        .collect()
}

/// Clustering search. For a fixed free set the optimal clusters are
/// contiguous in sorted order, so a segment dynamic program is exact; the
/// exact variant tries every free set, the heuristic only small free sets and
/// sets made of extreme values.
pub(crate) fn clustering_search(
    y: &[f64],
    family: &Family,
    n: usize,
    m: usize,
    w: Weights,
    exact: bool,
) -> Scored {
    let mut free_sets: Vec<Vec<usize>> = Vec::new();
    if exact {
        for mask in 0u64..(1u64 << n) {
            free_sets.push((0..n).filter(|i| mask >> i & 1 == 1).collect());
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
        let ext = 5.min(n);
        for lo in 0..=ext {
            for hi in 0..=ext.min(n - lo) {
                let mut f: Vec<usize> = order[..lo]
                    .iter()
                    .chain(&order[n - hi..])
                    .copied()
                    .collect();
                f.sort_unstable();
                free_sets.push(f);
            }
        }
        if n <= 40 {
            for i in 0..n {
                free_sets.push(vec![i]);
                for j in i + 1..n {
                    free_sets.push(vec![i, j]);
                }
            }
        }
        free_sets.sort();
        free_sets.dedup();
    }
    best_of(
        free_sets
            .iter()
            .flat_map(|f| clustering_candidates(y, family, f, m, w)),
    )
    .expect("at least one free set")
}

/// Objective values visited by a bicluster local search, one per accepted move.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalSearchTrace {
    pub objectives: Vec<f64>,
}

struct BlockEval<'a> {
    y: &'a [f64],
    family: &'a Family,
    n2: usize,
    w: Weights,
}

impl BlockEval<'_> {
    fn score(&self, rows: &[usize], cols: &[usize]) -> Scored {
        let rows = canonical_labels(rows);
        let cols = canonical_labels(cols);
        let (s1, s2) = (label_count(&rows), label_count(&cols));
        let mut sum = vec![0.0; s1 * s2];
        let mut sq = vec![0.0; s1 * s2];
        let mut cnt = vec![0.0; s1 * s2];
        for (i, &a) in rows.iter().enumerate() {
            for (j, &b) in cols.iter().enumerate() {
                let v = self.y[i * self.n2 + j];
                sum[a * s2 + b] += v;
                sq[a * s2 + b] += v * v;
                cnt[a * s2 + b] += 1.0;
            }
        }
        let r: f64 = (0..s1 * s2)
            .map(|k| (sq[k] - sum[k] * sum[k] / cnt[k]).max(0.0))
            .sum();
        Scored::new(self.family, Structure::Bicluster { rows, cols }, r, self.w)
    }
}

fn local_search(
    ev: &BlockEval,
    mut rows: Vec<usize>,
    mut cols: Vec<usize>,
    trace: &mut LocalSearchTrace,
) -> Scored {
    let mut cur = ev.score(&rows, &cols);
    trace.objectives.push(cur.objective);
    loop {
        let mut improved = false;
        for axis in 0..2 {
            let len = if axis == 0 { rows.len() } else { cols.len() };
            for i in 0..len {
                let labels = if axis == 0 { &rows } else { &cols };
                let top = (label_count(labels) + 1).min(len);
                let own = labels[i];
                for l in (0..top).filter(|&l| l != own) {
                    let (mut r2, mut c2) = (rows.clone(), cols.clone());
                    if axis == 0 {
                        r2[i] = l;
                    } else {
                        c2[i] = l;
                    }
                    let cand = ev.score(&r2, &c2);
                    let tol = super::TIE_TOLERANCE * (1.0 + cur.objective.abs());
                    if cand.objective < cur.objective - tol {
                        rows = match &cand.structure {
                            Structure::Bicluster { rows, .. } => rows.clone(),
                            _ => unreachable!(),
                        };
                        cols = match &cand.structure {
                            Structure::Bicluster { cols, .. } => cols.clone(),
                            _ => unreachable!(),
                        };
                        cur = cand;
                        trace.objectives.push(cur.objective);
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            return cur;
        }
    }
}

/// Single-move local search for biclustering from the given labelings:
/// rows and columns are reassigned one at a time, accepting only strict
/// improvements of the penalized objective, until no move improves.
pub fn bicluster_local_search(
    y: &[f64],
    family: &Family,
    penalty: &Penalty,
    rows: &[usize],
    cols: &[usize],
) -> Result<(crate::selection::Selection, LocalSearchTrace)> {
    penalty.check()?;
    let (n1, n2) = match family {
        Family::Bicluster { rows, cols } => (*rows, *cols),
        _ => {
            return Err(Error::Unsupported {
                family: family.name().into(),
                operation: "bicluster local search".into(),
            })
        }
    };
    check_len(y, n1 * n2)?;
    check_finite(y)?;
    if rows.len() != n1 || cols.len() != n2 {
        return Err(Error::InvalidInput(
            "initial labelings have the wrong length".into(),
        ));
    }
    let ev = BlockEval {
        y,
        family,
        n2,
        w: penalty.weights(),
    };
    let mut trace = LocalSearchTrace::default();
    let best = local_search(&ev, rows.to_vec(), cols.to_vec(), &mut trace);
    Ok((
        crate::selection::Selection {
            structure: best.structure,
            objective: best.objective,
        },
        trace,
    ))
}

fn ordered_split(means: &[f64], groups: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    let mut labels = vec![0; means.len()];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * groups / means.len();
    }
    labels
}

/// Multi-start local search: one block, marginal-mean ordered splits and ten
/// seeded random labelings.
pub(crate) fn bicluster_heuristic(
    y: &[f64],
    family: &Family,
    n1: usize,
    n2: usize,
    w: Weights,
) -> Scored {
    let ev = BlockEval { y, family, n2, w };
    let row_means: Vec<f64> = (0..n1)
        .map(|i| y[i * n2..(i + 1) * n2].iter().sum::<f64>() / n2 as f64)
        .collect();
    let col_means: Vec<f64> = (0..n2)
        .map(|j| (0..n1).map(|i| y[i * n2 + j]).sum::<f64>() / n1 as f64)
        .collect();
    let k1 = ((n1 as f64).sqrt().round() as usize).max(1);
    let k2 = ((n2 as f64).sqrt().round() as usize).max(1);
    let mut starts = vec![
        (vec![0; n1], vec![0; n2]),
        (ordered_split(&row_means, k1), ordered_split(&col_means, k2)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x6269_636c);
    for _ in 0..10 {
        let a = rng.gen_range(1..=n1.min(2 * k1));
        let b = rng.gen_range(1..=n2.min(2 * k2));
        starts.push((
            (0..n1).map(|_| rng.gen_range(0..a)).collect(),
            (0..n2).map(|_| rng.gen_range(0..b)).collect(),
        ));
    }
    let mut trace = LocalSearchTrace::default();
    starts
        .into_iter()
        .map(|(r, c)| local_search(&ev, r, c, &mut trace))
        .reduce(|a, b| {
            if b.cmp_rank(&a) == Ordering::Less {
                b
            } else {
                a
            }
        })
        .expect("at least one start")
}
