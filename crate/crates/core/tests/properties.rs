mod common;

use common::{gaussian_vec, small_family, FAMILY_KINDS};
use projstruct::balls::{ebr_radius_sq, quarter_ball};
use projstruct::ddm::{structure_posterior, Candidates};
use projstruct::linalg::{dot, sq_dist, sq_norm};
use projstruct::math::{log_elementary_symmetric, log_sum_exp};
use projstruct::oracle::{oracle_rate, structure_rate};
use projstruct::selection::{objective, select_penalized, Penalty, SearchMode};
use projstruct::{Family, Structure};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(kind: usize, seed: u64) -> (Family, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = small_family(kind, &mut rng);
    (f, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn projections_are_orthogonal_projectors(kind in 0..FAMILY_KINDS, seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (f, mut rng) = setup(kind, seed);
        let s = f.random_structure(&mut rng);
        let y = gaussian_vec(f.ambient_dim(), scale, &mut rng);
        let p = f.project(&s, &y).unwrap();
        let pp = f.project(&s, &p).unwrap();
        let tol = 1e-8 * sq_norm(&y).max(1.0);
        prop_assert!(sq_dist(&p, &pp) <= tol);
        let r: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a - b).collect();
        prop_assert!((sq_norm(&y) - sq_norm(&p) - sq_norm(&r)).abs() <= tol);
        prop_assert!(dot(&p, &r).abs() <= tol);
        let z = gaussian_vec(f.ambient_dim(), 1.0, &mut rng);
        let pz = f.project(&s, &z).unwrap();
        prop_assert!((dot(&p, &z) - dot(&y, &pz)).abs() <= 1e-8 * (sq_norm(&y) * sq_norm(&z)).sqrt().max(1.0));
    }

    #[test]
    fn majorant_dominates_dimension(kind in 0..FAMILY_KINDS, seed in any::<u64>()) {
        let (f, mut rng) = setup(kind, seed);
        let s = f.random_structure(&mut rng);
        prop_assert!(f.majorant(&s).unwrap() + 1e-12 >= f.dim(&s).unwrap() as f64);
    }

    #[test]
    fn selection_never_loses_to_another_structure(kind in 0..FAMILY_KINDS, seed in any::<u64>(), sigma in 0.05f64..3.0) {
        let (f, mut rng) = setup(kind, seed);
        let y = gaussian_vec(f.ambient_dim(), 2.0, &mut rng);
        let pen = Penalty::new(sigma, 1.0);
        let sel = select_penalized(&y, &f, &pen, SearchMode::Exact).unwrap();
        for _ in 0..5 {
            let s = f.random_structure(&mut rng);
            prop_assert!(sel.objective <= objective(&y, &f, &s, &pen).unwrap() + 1e-9);
        }
        prop_assert!((sel.objective - objective(&y, &f, &sel.structure, &pen).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn selection_is_scale_equivariant(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Family::PiecewiseConstant { n: 12 };
        let y = gaussian_vec(12, 1.0, &mut rng);
        let a = select_penalized(&y, &f, &Penalty::new(0.4, 1.0), SearchMode::Exact).unwrap();
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let b = select_penalized(&cy, &f, &Penalty::new(0.4 * c, 1.0), SearchMode::Exact).unwrap();
        prop_assert!((b.objective - c * c * a.objective).abs() < 1e-8 * (1.0 + b.objective));
    }

    #[test]
    fn union_contains_both_members(kind in 0..FAMILY_KINDS, seed in any::<u64>()) {
        let (f, mut rng) = setup(kind, seed);
        prop_assume!(!matches!(f, Family::Clustering { .. }));
        let a = f.random_structure(&mut rng);
        let b = f.random_structure(&mut rng);
        let u = f.union(&a, &b).unwrap();
        let v = gaussian_vec(f.ambient_dim(), 1.0, &mut rng);
        for s in [&a, &b] {
            let p = f.project(s, &v).unwrap();
            let q = f.project(&u, &p).unwrap();
            prop_assert!(sq_dist(&p, &q) <= 1e-9 * sq_norm(&p).max(1.0));
        }
        if !matches!(f, Family::Bicluster { .. }) {
            let (ra, rb, ru) = (f.majorant(&a).unwrap(), f.majorant(&b).unwrap(), f.majorant(&u).unwrap());
            prop_assert!(ru <= ra + rb + 1e-9);
        }
    }

    #[test]
    fn posterior_weights_are_normalised(kind in 0..FAMILY_KINDS, seed in any::<u64>(), sigma in 0.2f64..3.0) {
        let (f, mut rng) = setup(kind, seed);
        let y = gaussian_vec(f.ambient_dim(), 1.5, &mut rng);
        let post = structure_posterior(&y, &f, &Penalty::new(sigma, 1.0), &Candidates::All { cap: 1 << 16 }).unwrap();
        let all = f.enumerate(1 << 16).unwrap();
        let logs: Vec<f64> = all.iter().map(|s| post.log_weight(s).unwrap()).collect();
        prop_assert!(log_sum_exp(&logs).abs() < 1e-10);
        let map = post.map_structure();
        let sel = select_penalized(&y, &f, &Penalty::new(sigma, 1.0), SearchMode::Exact).unwrap();
        prop_assert!((post.log_weight(&map).unwrap() - post.log_weight(&sel.structure).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn oracle_sandwich_and_monotonicity(kind in 0..FAMILY_KINDS, seed in any::<u64>(), sigma in 0.1f64..2.0) {
        let (f, mut rng) = setup(kind, seed);
        let theta = gaussian_vec(f.ambient_dim(), 1.0, &mut rng);
        let mut last: Option<(f64, f64, f64)> = None;
        for tau in [0.5, 1.0, 2.0, 5.0] {
            let r = oracle_rate(&theta, &f, sigma, tau).unwrap();
            let s = f.random_structure(&mut rng);
            let at_s = sq_dist(&theta, &f.project(&s, &theta).unwrap()) + tau * sigma * sigma * f.majorant(&s).unwrap();
            prop_assert!(r.rate_sq <= at_s + 1e-9);
            if let Some((rate, rho, approx)) = last {
                prop_assert!(r.rate_sq + 1e-9 >= rate);
                prop_assert!(r.rho <= rho + 1e-9);
                prop_assert!(r.approx_sq + 1e-9 >= approx);
            }
            last = Some((r.rate_sq, r.rho, r.approx_sq));
        }
        let r1 = oracle_rate(&theta, &f, sigma, 1.0).unwrap();
        let direct = structure_rate(&theta, &f, sigma, &r1.structure).unwrap();
        prop_assert!((direct - r1.rate_sq).abs() < 1e-9);
    }

    #[test]
    fn structures_round_trip_through_json(kind in 0..FAMILY_KINDS, seed in any::<u64>()) {
        let (f, mut rng) = setup(kind, seed);
        let s = f.random_structure(&mut rng);
        prop_assert_eq!(Structure::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn symmetric_polynomials_match_expansion(x in prop::collection::vec(-3.0f64..3.0, 0..9)) {
        let e = log_elementary_symmetric(&x);
        let n = x.len();
        for k in 0..=n {
            let mut direct = f64::NEG_INFINITY;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize == k {
                    let v: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| x[i]).sum();
                    direct = log_sum_exp(&[direct, v]);
                }
            }
            prop_assert!((e[k] - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn radii_are_monotone_and_nonnegative(rho in 0.0f64..50.0, m in 0.0f64..10.0, dm in 0.0f64..5.0, t in 0.0f64..5.0, dt in 0.0f64..5.0, seed in any::<u64>()) {
        let base = ebr_radius_sq(1.3, rho, 2.0, t, m);
        prop_assert!(ebr_radius_sq(1.3, rho, 2.0, t + dt, m) >= base);
        prop_assert!(ebr_radius_sq(1.3, rho, 2.0, t, m + dm) >= base);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let yp = gaussian_vec(9, 1.0, &mut rng);
        let th = gaussian_vec(9, 0.1, &mut rng);
        let a = quarter_ball(&yp, &th, 1.0, m, 3.0, 9.0).unwrap();
        let b = quarter_ball(&yp, &th, 1.0, m + dm, 3.0, 9.0).unwrap();
        prop_assert!(a.radius_sq >= 0.0 && b.radius_sq >= a.radius_sq);
    }
}
