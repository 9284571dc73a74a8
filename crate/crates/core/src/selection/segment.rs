/// Best segmentation with a given number of breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSolution {
    pub cost: f64,
    /// Break positions `b` (a change between `b` and `b + 1`), increasing.
    pub breaks: Vec<usize>,
}

/// Optimal partition of `0..n` into contiguous segments for every number of
/// breaks `0..=max_breaks`, where `cost(a, b)` is the cost of segment `a..b`.
///
/// Entry `k` of the result is `None` when `k` breaks do not fit in `n`
/// positions. Runs in `O(n^2 k)` time.
pub fn segment_dp(
    n: usize,
    max_breaks: usize,
    cost: impl Fn(usize, usize) -> f64,
) -> Vec<Option<SegmentSolution>> {
    let kmax = max_breaks.min(n.saturating_sub(1));
    let mut out = vec![None; max_breaks + 1];
    if n == 0 {
        out[0] = Some(SegmentSolution {
            cost: 0.0,
            breaks: Vec::new(),
        });
        return out;
    }
    // best[k][t]: cost of y[0..t] split into k + 1 segments
    let mut best = vec![vec![f64::INFINITY; n + 1]; kmax + 1];
    let mut arg = vec![vec![0usize; n + 1]; kmax + 1];
    for t in 1..=n {
        best[0][t] = cost(0, t);
    }
    for k in 1..=kmax {
        for t in k + 1..=n {
            let mut b = f64::INFINITY;
            let mut a = k;
            for s in k..t {
                let v = best[k - 1][s] + cost(s, t);
                if v < b {
                    b = v;
                    a = s;
                }
            }
            best[k][t] = b;
            arg[k][t] = a;
        }
    }
    for k in 0..=kmax {
        let mut breaks = Vec::with_capacity(k);
        let mut t = n;
        for kk in (1..=k).rev() {
            let s = arg[kk][t];
            breaks.push(s - 1);
            t = s;
        }
        breaks.reverse();
        out[k] = Some(SegmentSolution {
            cost: best[k][n],
            breaks,
        });
    }
    out
}
