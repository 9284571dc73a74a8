//! Exact least-squares fitting of continuous piecewise linear sequences with
//! a given number of knots: dynamic programming over the last knot, carrying
//! the cost as a function of the fitted value there, with pruning of
//! candidate functions that are nowhere minimal.

use super::segment::SegmentSolution;

#[derive(Debug, Clone, Copy)]
struct Quad {
    a: f64,
    b: f64,
    c: f64,
}

impl Quad {
    fn min(&self) -> f64 {
        self.c - self.b * self.b / (4.0 * self.a)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    q: Quad,
    knots: Vec<usize>,
}

struct Sums {
    y: Vec<f64>,
    iy: Vec<f64>,
    yy: Vec<f64>,
}

impl Sums {
    fn new(y: &[f64]) -> Self {
        let n = y.len();
        let mut s = Sums {
            y: vec![0.0; n + 1],
            iy: vec![0.0; n + 1],
            yy: vec![0.0; n + 1],
        };
        for (i, v) in y.iter().enumerate() {
            s.y[i + 1] = s.y[i] + v;
            s.iy[i + 1] = s.iy[i] + i as f64 * v;
            s.yy[i + 1] = s.yy[i] + v * v;
        }
        s
    }

    /// Cost of the points `j+1..=t` under linear interpolation between value
    /// `u` at `j` and `v` at `t`, added to `q(u)` and minimised over `u`.
    fn extend(&self, q: Quad, j: usize, t: usize) -> Quad {
        let len = (t - j) as f64;
        let s1 = len * (len + 1.0) / 2.0;
        let s2 = len * (len + 1.0) * (2.0 * len + 1.0) / 6.0;
        let ww = s2 / (len * len);
        let w1 = s1 / len;
        let uu = len - 2.0 * w1 + ww;
        let uv = w1 - ww;
        let sy = self.y[t + 1] - self.y[j + 1];
        let e = (self.iy[t + 1] - self.iy[j + 1] - j as f64 * sy) / len;
        let d = sy - e;
        let f = self.yy[t + 1] - self.yy[j + 1];
        let alpha = q.a + uu;
        let g = q.b - 2.0 * d;
        Quad {
            a: ww - uv * uv / alpha,
            b: -2.0 * e - uv * g / alpha,
            c: q.c + f - g * g / (4.0 * alpha),
        }
    }
}

/// Closed intervals where `d(v) <= 0`.
fn nonpositive_set(a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    const INF: f64 = f64::INFINITY;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return if c <= 0.0 {
                vec![(-INF, INF)]
            } else {
                Vec::new()
            };
        }
        let r = -c / b;
        return if b > 0.0 {
            vec![(-INF, r)]
        } else {
            vec![(r, INF)]
        };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return if a > 0.0 {
            Vec::new()
        } else {
            vec![(-INF, INF)]
        };
    }
    let sq = disc.sqrt();
    let (r1, r2) = {
        let x = (-b - sq) / (2.0 * a);
        let z = (-b + sq) / (2.0 * a);
        (x.min(z), x.max(z))
    };
    if a > 0.0 {
        vec![(r1, r2)]
    } else {
        vec![(-INF, r1), (r2, INF)]
    }
}

fn intersect(x: &[(f64, f64)], y: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, b) in x {
        for &(c, d) in y {
            let lo = a.max(c);
            let hi = b.min(d);
            if lo <= hi {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Keeps the candidates that attain the lower envelope somewhere.
fn prune(cands: Vec<Candidate>) -> Vec<Candidate> {
    if cands.len() <= 1 {
        return cands;
    }
    let keep: Vec<bool> = (0..cands.len())
        .map(|i| {
            let qi = cands[i].q;
            let mut region = vec![(f64::NEG_INFINITY, f64::INFINITY)];
            for (j, other) in cands.iter().enumerate() {
                if i == j {
                    continue;
                }
                let qj = other.q;
                let slack = 1e-9 * (1.0 + qi.c.abs().max(qj.c.abs()));
                let (a, b, c) = (qi.a - qj.a, qi.b - qj.b, qi.c - qj.c - slack);
                region = intersect(&region, &nonpositive_set(a, b, c));
                if region.is_empty() {
                    return false;
                }
            }
            true
        })
        .collect();
    cands
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

/// Best continuous piecewise linear fit of `y` for each number of knots
/// `0..=max_knots` (knots at interior positions `1..n-2`).
pub fn knot_table(y: &[f64], max_knots: usize) -> Vec<Option<SegmentSolution>> {
    let n = y.len();
    let mut out = vec![None; max_knots + 1];
    if n <= 2 {
        out[0] = Some(SegmentSolution {
            cost: 0.0,
            breaks: Vec::new(),
        });
        return out;
    }
    let kmax = max_knots.min(n - 2);
    let sums = Sums::new(y);
    // states[t][m]: candidates with last anchor t and m knots so far
    let mut states: Vec<Vec<Vec<Candidate>>> = vec![vec![Vec::new(); kmax + 1]; n - 1];
    states[0][0].push(Candidate {
        q: Quad {
            a: 1.0,
            b: -2.0 * y[0],
            c: y[0] * y[0],
        },
        knots: Vec::new(),
    });
    for t in 1..n - 1 {
        for m in 1..=kmax.min(t) {
            let mut cands = Vec::new();
            for j in 0..t {
                for prev in &states[j][m - 1] {
                    let mut knots = prev.knots.clone();
                    knots.push(t);
                    cands.push(Candidate {
                        q: sums.extend(prev.q, j, t),
                        knots,
                    });
                }
            }
            states[t][m] = prune(cands);
        }
    }
    for m in 0..=kmax {
        let mut best: Option<SegmentSolution> = None;
        for (j, row) in states.iter().enumerate() {
            for cand in &row[m] {
                let cost = sums.extend(cand.q, j, n - 1).min().max(0.0);
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    best = Some(SegmentSolution {
                        cost,
                        breaks: cand.knots.clone(),
                    });
                }
            }
        }
        out[m] = best;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{Family, Structure};
    use crate::linalg::sq_dist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(y: &[f64], knots: &[usize]) -> f64 {
        let f = Family::PiecewiseLinear { n: y.len() };
        sq_dist(
            y,
            &f.project(&Structure::KnotSet(knots.to_vec()), y).unwrap(),
        )
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let n = rng.gen_range(3..10);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let table = knot_table(&y, n - 2);
            let all = Family::PiecewiseLinear { n }.enumerate(1 << 12).unwrap();
            for (m, sol) in table.iter().enumerate() {
                let sol = sol.as_ref().unwrap();
                let brute = all
                    .iter()
                    .filter_map(|s| match s {
                        Structure::KnotSet(k) if k.len() == m => Some(residual(&y, k)),
                        _ => None,
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!((sol.cost - brute).abs() < 1e-9 * (1.0 + brute), "m={m}");
                assert!((residual(&y, &sol.breaks) - sol.cost).abs() < 1e-9 * (1.0 + brute));
            }
        }
    }

    #[test]
    fn exact_kink_is_found() {
        let y: Vec<f64> = (0..8).map(|i| (i as f64 - 3.0).abs()).collect();
        let sol = knot_table(&y, 2)[1].clone().unwrap();
        assert_eq!(sol.breaks, vec![3]);
        assert!(sol.cost < 1e-12);
    }
}
