//! Small numeric helpers: log-domain sums and log-combinatorics.

use std::sync::{Mutex, OnceLock};

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(v)))` for a slice; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

fn ln_factorial_table() -> &'static Mutex<Vec<f64>> {
    static TABLE: OnceLock<Mutex<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(vec![0.0]))
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    let mut table = ln_factorial_table()
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    while table.len() <= n {
        let k = table.len();
        let next = table[k - 1] + (k as f64).ln();
        table.push(next);
    }
    table[n]
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Logarithm of the multinomial coefficient `n! / prod(k_i!)` with `n = sum(k_i)`.
pub fn ln_multinomial(parts: &[usize]) -> f64 {
    let n: usize = parts.iter().sum();
    ln_factorial(n) - parts.iter().map(|&k| ln_factorial(k)).sum::<f64>()
}

/// `2 k log(e n / k)`, zero at `k = 0`.
pub fn sparse_entropy(k: usize, n: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (k, n) = (k as f64, n as f64);
    2.0 * k * (1.0 + (n / k).ln())
}

/// Logarithms of the elementary symmetric polynomials `e_0..e_n` of the
/// values `exp(log_x[i])`, computed with the one-pass recurrence in log space.
pub fn log_elementary_symmetric(log_x: &[f64]) -> Vec<f64> {
    let n = log_x.len();
    let mut e = vec![f64::NEG_INFINITY; n + 1];
    e[0] = 0.0;
    for (k, &lx) in log_x.iter().enumerate() {
        for s in (1..=k + 1).rev() {
            e[s] = log_add_exp(e[s], lx + e[s - 1]);
        }
    }
    e
}

/// Bell numbers as `u128`, saturating.
pub fn bell(n: usize) -> u128 {
    let mut row: Vec<u128> = vec![1];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last.saturating_add(*v));
        }
        row = next;
    }
    row[0]
}

/// `C(n, k)` as `u128`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let v = [0.1, -2.0, 3.5];
        let direct: f64 = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - direct).abs() < 1e-14);
        assert!((log_add_exp(0.1, 3.5) - (0.1f64.exp() + 3.5f64.exp()).ln()).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn elementary_symmetric_small() {
        let x: [f64; 3] = [1.0, 2.0, 3.0];
        let e = log_elementary_symmetric(&x.map(f64::ln));
        let expected = [1.0, 6.0, 11.0, 6.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a.exp() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn combinatorics() {
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert!((ln_multinomial(&[2, 1, 1]) - 12f64.ln()).abs() < 1e-12);
        assert_eq!(bell(3), 5);
        assert_eq!(bell(4), 15);
        assert_eq!(bell(5), 52);
        assert_eq!(binomial(18, 3), 816);
        assert_eq!(sparse_entropy(0, 10), 0.0);
        assert!((sparse_entropy(10, 10) - 20.0).abs() < 1e-12);
    }
}
