use super::{clustering_from_labels, Family, Structure};
use crate::math::{bell, binomial};

fn pow2(k: usize) -> u128 {
    if k >= 127 {
        u128::MAX
    } else {
        1u128 << k
    }
}

pub(super) fn count(family: &Family) -> u128 {
    match family {
        Family::Smoothness { n } => *n as u128 + 1,
        Family::Sparsity { n, .. } => pow2(*n),
        Family::Wavelet { .. } => pow2(family.ambient_dim()),
        Family::Clustering { n, clusters } => (*clusters as u128 + 1).saturating_pow(*n as u32),
        Family::PiecewiseConstant { n } => pow2(n.saturating_sub(1)),
        Family::PiecewiseLinear { n } => pow2(n.saturating_sub(2)),
        Family::Regression { design } => {
            let p = design.matrix().cols();
            (0..=p)
                .take_while(|&k| design.size_admissible(k))
                .fold(1u128, |acc, k| acc.saturating_add(binomial(p, k)))
        }
        Family::Banding { p } => *p as u128,
        Family::Bicluster { rows, cols } => bell(*rows).saturating_mul(bell(*cols)),
    }
}

/// All `k`-subsets of `lo..hi` in lexicographic order.
pub(crate) fn combinations(lo: usize, hi: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > hi.saturating_sub(lo) {
        return out;
    }
    let mut cur: Vec<usize> = (lo..lo + k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < hi - (k - i) {
                cur[i] += 1;
                for t in i + 1..k {
                    cur[t] = cur[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All subsets of `lo..hi`, by size then lexicographically.
pub(crate) fn subsets(lo: usize, hi: usize) -> Vec<Vec<usize>> {
    (0..=hi.saturating_sub(lo))
        .flat_map(|k| combinations(lo, hi, k))
        .collect()
}

/// All set partitions of `0..n` as restricted growth strings.
pub(crate) fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let limit = if cur.is_empty() { 0 } else { max + 1 };
        for l in 0..=limit {
            cur.push(l);
            rec(cur, n, max.max(l), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, 0, &mut out);
    out
}

fn clustering_labels(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, n: usize, m: usize, used: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=(used + 1).min(m) {
            cur.push(l);
            rec(cur, n, m, used.max(l), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, m, 0, &mut out);
    out
}

pub(super) fn all(family: &Family) -> Vec<Structure> {
    match family {
        Family::Smoothness { n } => (0..=*n).map(Structure::Truncation).collect(),
        Family::Sparsity { n, .. } => subsets(0, *n)
            .into_iter()
            .map(Structure::SparseSet)
            .collect(),
        Family::Wavelet { max_level } => {
            let mut acc: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
            for j in 0..=*max_level {
                let level = subsets(0, 1 << j);
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        level.iter().map(move |s| {
                            let mut p = prefix.clone();
                            p.push(s.clone());
                            p
                        })
                    })
                    .collect();
            }
            acc.into_iter().map(Structure::LeveledSparse).collect()
        }
        Family::Clustering { n, clusters } => clustering_labels(*n, *clusters)
            .iter()
            .map(|l| clustering_from_labels(l, *clusters))
            .collect(),
        Family::PiecewiseConstant { n } => subsets(0, n.saturating_sub(1))
            .into_iter()
            .map(Structure::JumpSet)
            .collect(),
        Family::PiecewiseLinear { n } => subsets(1, n.saturating_sub(1))
            .into_iter()
            .map(Structure::KnotSet)
            .collect(),
        Family::Regression { design } => {
            let p = design.matrix().cols();
            let mut out: Vec<Structure> = (0..=p)
                .take_while(|&k| design.size_admissible(k))
                .flat_map(|k| combinations(0, p, k))
                .map(|columns| Structure::RegressionSupport {
                    columns,
                    full_rank: false,
                })
                .collect();
            out.push(Structure::RegressionSupport {
                columns: design.full_rank_columns().to_vec(),
                full_rank: true,
            });
            out
        }
        Family::Banding { p } => (0..*p).map(Structure::Band).collect(),
        Family::Bicluster { rows, cols } => {
            let rp = partitions(*rows);
            let cp = partitions(*cols);
            rp.iter()
                .flat_map(|r| {
                    cp.iter().map(move |c| Structure::Bicluster {
                        rows: r.clone(),
                        cols: c.clone(),
                    })
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(0, 5, 2).len(), 10);
        assert_eq!(combinations(0, 3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(subsets(1, 4).len(), 8);
        assert_eq!(partitions(4).len(), 15);
    }
}
