#![allow(dead_code)]

use projstruct::{Design, Family, Mat, SparsityMajorant};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_vec<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn random_design<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Design {
    let data = gaussian_vec(rows * cols, 1.0, rng);
    Design::new(Mat::new(rows, cols, data).unwrap()).unwrap()
}

/// A small instance of each family, indexed `0..FAMILY_KINDS`.
pub const FAMILY_KINDS: usize = 10;

pub fn small_family<R: Rng>(kind: usize, rng: &mut R) -> Family {
    match kind % FAMILY_KINDS {
        0 => Family::Smoothness {
            n: rng.gen_range(1..=10),
        },
        1 => Family::Sparsity {
            n: rng.gen_range(1..=8),
            majorant: SparsityMajorant::Standard,
        },
        2 => Family::Sparsity {
            n: rng.gen_range(1..=8),
            majorant: SparsityMajorant::Binomial,
        },
        3 => Family::Wavelet {
            max_level: rng.gen_range(0..=2),
        },
        4 => Family::Clustering {
            n: rng.gen_range(1..=6),
            clusters: rng.gen_range(1..=2),
        },
        5 => Family::PiecewiseConstant {
            n: rng.gen_range(1..=9),
        },
        6 => Family::PiecewiseLinear {
            n: rng.gen_range(2..=9),
        },
        7 => {
            let p = rng.gen_range(1..=5);
            Family::Regression {
                design: random_design(p + rng.gen_range(0..=3), p, rng),
            }
        }
        8 => Family::Banding {
            p: rng.gen_range(1..=4),
        },
        _ => Family::Bicluster {
            rows: rng.gen_range(1..=3),
            cols: rng.gen_range(1..=3),
        },
    }
}
