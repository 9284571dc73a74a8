//! Acceptance report: one line per criterion.

mod common;

use std::time::Instant;

use common::{gaussian_vec, random_design};
use projstruct::cli::simulate_csv;
use projstruct::conditions::{check_a1, check_a2, check_a3, DBound, NoiseModel};
use projstruct::ddm::{structure_posterior, Candidates};
use projstruct::family::DEFAULT_ENUMERATION_CAP;
use projstruct::linalg::{dot, sq_dist, sq_norm};
use projstruct::math::{log_sum_exp, sparse_entropy};
use projstruct::oracle::{oracle_rate, structure_rate, FrameworkConstants};
use projstruct::selection::{select_bruteforce, select_penalized, Penalty, SearchMode};
use projstruct::sim::{self, calibrate_m, Experiment, SimulateConfig, Table};
use projstruct::{Family, SparsityMajorant, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Set when the only failure is a documented property of the model.
    known: Option<&'static str>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        detail,
        known: None,
    }
}

const BICLUSTER_A3: &str = "the bicluster majorant is not subadditive over unions: rows (0,1,2)/cols (0,0,0) \
     and rows (0,0,0)/cols (0,1,0) have majorants 3 and 2+3 ln 2, while every structure containing both \
     has majorant at least 6+3 ln 2";

fn sparse(n: usize) -> Family {
    Family::Sparsity {
        n,
        majorant: SparsityMajorant::Standard,
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let families: Vec<(&str, Box<dyn Fn(&mut ChaCha8Rng) -> Family>)> = vec![
        ("smoothness n=8", Box::new(|_| Family::Smoothness { n: 8 })),
        ("sparsity n=10", Box::new(|_| sparse(10))),
        (
            "leveled J=3",
            Box::new(|_| Family::Wavelet { max_level: 3 }),
        ),
        (
            "jump n=10",
            Box::new(|_| Family::PiecewiseConstant { n: 10 }),
        ),
        ("knot n=10", Box::new(|_| Family::PiecewiseLinear { n: 10 })),
        ("banding p=4", Box::new(|_| Family::Banding { p: 4 })),
        (
            "regression p<=10",
            Box::new(|rng: &mut ChaCha8Rng| {
                let p = rng.gen_range(2..=10);
                Family::Regression {
                    design: random_design(p + rng.gen_range(0..=4), p, rng),
                }
            }),
        ),
        (
            "bicluster 3x3",
            Box::new(|_| Family::Bicluster { rows: 3, cols: 3 }),
        ),
    ];
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    for (name, make) in &families {
        let mut structure_mismatch = 0;
        for _ in 0..200 {
            let f = make(&mut rng);
            let n = f.ambient_dim();
            let s = f.random_structure(&mut rng);
            let theta = f.project(&s, &gaussian_vec(n, 3.0, &mut rng)).unwrap();
            let sigma = rng.gen_range(0.3..1.5);
            let y: Vec<f64> = theta
                .iter()
                .zip(gaussian_vec(n, sigma, &mut rng))
                .map(|(a, b)| a + b)
                .collect();
            let pen = Penalty::new(sigma, rng.gen_range(0.5..2.0));
            let fast = select_penalized(&y, &f, &pen, SearchMode::Exact).unwrap();
            let slow = select_bruteforce(&y, &f, &pen, DEFAULT_ENUMERATION_CAP).unwrap();
            worst = worst.max((fast.objective - slow.objective).abs());
            if fast.structure != slow.structure {
                structure_mismatch += 1;
            }
        }
        if structure_mismatch > 0 {
            mismatches.push(format!("{name}: {structure_mismatch}"));
        }
    }
    let pass = worst <= 1e-9 && mismatches.is_empty();
    outcome(
        pass,
        format!(
            "8 families x 200 instances, max objective gap {worst:.2e} (tol 1e-9), structure mismatches [{}]",
            mismatches.join(", ")
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let kappa = 1.0;
    let mut worst = 0.0f64;
    for n in [8usize, 12] {
        let f = sparse(n);
        for _ in 0..50 {
            let sigma = rng.gen_range(0.5..2.0);
            let y: Vec<f64> = (0..n)
                .map(|i| if i % 3 == 0 { 3.0 * sigma } else { 0.0 } + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let post = structure_posterior(
                &y,
                &f,
                &Penalty::new(sigma, kappa),
                &Candidates::All { cap: 1 << 20 },
            )
            .unwrap();
            let total: f64 = y.iter().map(|v| v * v).sum();
            let mut logs = Vec::with_capacity(1 << n);
            let mut sets = Vec::with_capacity(1 << n);
            for mask in 0u32..(1 << n) {
                let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let kept: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
                let rho = sparse_entropy(idx.len(), n);
                logs.push(-kappa * rho - (total - kept) / (2.0 * sigma * sigma));
                sets.push(idx);
            }
            let z = log_sum_exp(&logs);
            for (idx, lw) in sets.into_iter().zip(logs) {
                let ours = post.log_weight(&Structure::SparseSet(idx)).unwrap();
                worst = worst.max(((ours - (lw - z)).exp() - 1.0).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("n in {{8,12}}, 50 Y each, max relative weight error {worst:.2e} (tol 1e-10)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let f = common::small_family(i, &mut rng);
        let s = f.random_structure(&mut rng);
        let y = gaussian_vec(f.ambient_dim(), rng.gen_range(0.1..10.0), &mut rng);
        let p = f.project(&s, &y).unwrap();
        let pp = f.project(&s, &p).unwrap();
        let r: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a - b).collect();
        let scale = sq_norm(&y).max(1.0);
        let idem = sq_dist(&p, &pp) / scale;
        let pyth = (sq_norm(&y) - sq_norm(&p) - sq_norm(&r)).abs() / scale;
        let orth = dot(&p, &r).abs() / scale;
        worst = worst.max(idem).max(pyth).max(orth);
    }
    outcome(
        worst <= 1e-8,
        format!("500 triples over 10 family kinds, max relative violation {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let smooth = check_a2(&Family::Smoothness { n: 60 }, 1.0, DEFAULT_ENUMERATION_CAP).unwrap();
    let sp = check_a2(&sparse(12), 2.0, DEFAULT_ENUMERATION_CAP).unwrap();
    pass &= smooth.pass == Some(true) && sp.pass == Some(true);
    parts.push(format!(
        "A2 smoothness {:.6}<={:.6}, sparsity {:.6}<={:.6}",
        smooth.sum,
        smooth.bound.unwrap(),
        sp.sum,
        sp.bound.unwrap()
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let a3_families = vec![
        Family::Smoothness { n: 20 },
        sparse(20),
        Family::Wavelet { max_level: 3 },
        Family::PiecewiseConstant { n: 20 },
        Family::PiecewiseLinear { n: 20 },
        Family::Regression {
            design: random_design(14, 10, &mut rng),
        },
        Family::Banding { p: 6 },
        Family::Bicluster { rows: 3, cols: 3 },
    ];
    let mut a3 = Vec::new();
    let mut only_bicluster_subadditivity = true;
    for f in &a3_families {
        let r = check_a3(f, 100, 3, 405).unwrap();
        if !r.pass {
            let bic = matches!(f, Family::Bicluster { .. }) && r.containment_failures == 0;
            only_bicluster_subadditivity &= bic;
            a3.push(format!(
                "{} fails (containment {}, subadditivity {})",
                r.family, r.containment_failures, r.subadditivity_failures
            ));
        }
    }
    parts.push(if a3.is_empty() {
        format!("A3 {} families x 100 pairs ok", a3_families.len())
    } else {
        format!("A3 {}", a3.join("; "))
    });

    let rows = check_a1(
        &Family::Smoothness { n: 4 },
        &NoiseModel::Gaussian,
        0.4,
        DBound::Dimension,
        100_000,
        406,
        DEFAULT_ENUMERATION_CAP,
    )
    .unwrap();
    let worst_z = rows
        .iter()
        .filter(|r| r.se > 0.0)
        .map(|r| (r.estimate - r.reference.unwrap()).abs() / r.se)
        .fold(0.0, f64::max);
    let a1_ok = rows.iter().all(|r| r.estimate <= r.bound + 3.0 * r.se);
    pass &= a1_ok;
    parts.push(format!(
        "A1 gaussian alpha=0.4 10^5 reps: {}/{} structures within 3 s.e. of d_I (closed-form agreement max |z| {worst_z:.2})",
        rows.iter().filter(|r| r.estimate <= r.bound + 3.0 * r.se).count(),
        rows.len()
    ));

    let b0 = (std::f64::consts::E - 1.0) / (2.0 * (1.0 + std::f64::consts::E));
    let (n1, n2) = (4usize, 4usize);
    let rlab = [0, 0, 1, 1];
    let clab = [0, 1, 1, 0];
    let probs = [[0.1, 0.8], [0.6, 0.3]];
    let theta: Vec<f64> = (0..n1 * n2)
        .map(|k| probs[rlab[k / n2]][clab[k % n2]])
        .collect();
    let rows = check_a1(
        &Family::Bicluster { rows: n1, cols: n2 },
        &NoiseModel::BernoulliMean { theta },
        b0,
        DBound::Dimension,
        20_000,
        407,
        DEFAULT_ENUMERATION_CAP,
    )
    .unwrap();
    let sbm_ok = rows.iter().all(|r| r.pass);
    pass &= sbm_ok;
    parts.push(format!(
        "A1 bernoulli SBM 4x4 alpha={b0:.4}: {}/{} structures pass",
        rows.iter().filter(|r| r.pass).count(),
        rows.len()
    ));
    let a3_clean = a3.is_empty();
    let mut o = outcome(pass && a3_clean, parts.join(" | "));
    if pass && !a3_clean && only_bicluster_subadditivity {
        o.known = Some(BICLUSTER_A3);
    }
    o
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let families = vec![
        Family::Smoothness { n: 12 },
        sparse(12),
        Family::Wavelet { max_level: 3 },
        Family::Clustering { n: 8, clusters: 2 },
        Family::PiecewiseConstant { n: 12 },
        Family::PiecewiseLinear { n: 12 },
        Family::Regression {
            design: random_design(12, 8, &mut rng),
        },
        Family::Banding { p: 4 },
        Family::Bicluster { rows: 3, cols: 3 },
    ];
    let mut violations = 0;
    for f in &families {
        for _ in 0..100 {
            let n = f.ambient_dim();
            let s = f.random_structure(&mut rng);
            let base = f.project(&s, &gaussian_vec(n, 2.0, &mut rng)).unwrap();
            let theta: Vec<f64> = base
                .iter()
                .zip(gaussian_vec(n, 0.3, &mut rng))
                .map(|(a, b)| a + b)
                .collect();
            let sigma = rng.gen_range(0.2..1.0);
            let r2 = oracle_rate(&theta, f, sigma, 1.0).unwrap().rate_sq;
            let tol = 1e-9 * r2.max(1.0);
            let mut prev_rho = f64::INFINITY;
            for tau in [1.0, 2.0, 5.0] {
                let o = oracle_rate(&theta, f, sigma, tau).unwrap();
                let at = structure_rate(&theta, f, sigma, &o.structure).unwrap();
                if at < r2 - tol || at > tau * r2 + tol || o.rho > prev_rho + 1e-9 {
                    violations += 1;
                }
                prev_rho = o.rho;
            }
        }
    }
    outcome(
        violations == 0,
        format!("9 families x 100 theta, tau in {{1,2,5}}: {violations} violations of r2 <= r2(I_tau) <= tau r2 or rho monotonicity"),
    )
}

fn config(v: serde_json::Value) -> SimulateConfig {
    serde_json::from_value(v).unwrap()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_6() -> Outcome {
    let cfg = config(serde_json::json!({
        "experiment": "rate-scaling",
        "family": {"kind": "smoothness", "n": 64},
        "signal": {"kind": "sobolev", "beta": 1.0, "radius": 1.0, "reference_n": 1024},
        "grid": {"n": [64, 128, 256, 512, 1024]},
        "reps": 200
    }));
    let t = sim::run(&cfg, 606).unwrap();
    let b = slope(&t.column("log_n"), &t.column("log_mean_loss"));
    let target = -2.0 / 3.0;
    outcome(
        (b - target).abs() <= 0.15,
        format!(
            "slope of log risk on log n = {b:.3} (target -0.667 +/- 0.15), n 64..1024, 200 reps"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ratios = Vec::new();
    for s in [1usize, 5, 10] {
        let cfg = config(serde_json::json!({
            "experiment": "estimation-risk",
            "family": {"kind": "sparsity", "n": 200},
            "signal": {"kind": "sparse", "s": s, "amplitude": 8.0, "random_positions": true, "random_signs": true},
            "reps": 200
        }));
        let t = sim::run(&cfg, 700 + s as u64).unwrap();
        ratios.push(t.column("mean_loss")[0] / t.column("sparse_rate")[0]);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 10.0,
        format!(
            "n=200, s=1/5/10: mean loss / (sigma^2 s log(en/s)) = {:.3}/{:.3}/{:.3} (bound 10)",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn coverage_config(
    experiment: Experiment,
    signal: serde_json::Value,
    reps: usize,
    m_grid: &[f64],
) -> SimulateConfig {
    config(serde_json::json!({
        "experiment": experiment,
        "family": {"kind": "sparsity", "n": 100},
        "signal": signal,
        "grid": {"m": m_grid, "t": [1.0]},
        "reps": reps,
        "m2": 1.0,
        "m1": 0.0
    }))
}

fn row_at(t: &Table, m: f64) -> usize {
    let jm = t.index("m").unwrap();
    t.rows.iter().position(|r| r[jm] == m).unwrap()
}

fn criterion_8() -> Outcome {
    let structured =
        serde_json::json!({"kind": "sparse", "s": 5, "amplitude": 15.0, "random_positions": true});
    let deceptive = serde_json::json!({"kind": "constant", "value": 0.5});
    let grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();

    let cal_ebr = sim::run(
        &coverage_config(Experiment::CoverageEbr, structured.clone(), 500, &grid),
        801,
    )
    .unwrap();
    let cal_q = sim::run(
        &coverage_config(Experiment::CoverageQuarter, structured.clone(), 500, &grid),
        802,
    )
    .unwrap();
    let (Some(m_ebr), Some(m_q)) = (
        calibrate_m(&cal_ebr, "coverage", 0.95, |_| true),
        calibrate_m(&cal_q, "coverage", 0.95, |_| true),
    ) else {
        return outcome(false, "calibration grid never reached 0.95".into());
    };

    let ebr_s = sim::run(
        &coverage_config(Experiment::CoverageEbr, structured.clone(), 500, &[m_ebr]),
        811,
    )
    .unwrap();
    let ebr_d = sim::run(
        &coverage_config(Experiment::CoverageEbr, deceptive.clone(), 500, &[m_ebr]),
        812,
    )
    .unwrap();
    let q_d = sim::run(
        &coverage_config(Experiment::CoverageQuarter, deceptive, 500, &[m_q]),
        813,
    )
    .unwrap();
    let q_s = sim::run(
        &coverage_config(Experiment::CoverageQuarter, structured, 500, &[m_q]),
        814,
    )
    .unwrap();

    let i = row_at(&ebr_s, m_ebr);
    let cov_s = ebr_s.column("coverage")[i];
    let ratio = ebr_s.column("radius_ratio")[i];
    let b_s = ebr_s.column("ebr_ratio")[i];
    let cov_d = ebr_d.column("coverage")[row_at(&ebr_d, m_ebr)];
    let b_d = ebr_d.column("ebr_ratio")[row_at(&ebr_d, m_ebr)];
    let qcov_d = q_d.column("coverage")[row_at(&q_d, m_q)];
    let qcov_s = q_s.column("coverage")[row_at(&q_s, m_q)];
    let theory = FrameworkConstants::practical(1.0).unwrap();
    let pass = b_s == 0.0 && cov_s >= 0.93 && ratio <= 5.0 && cov_d < 0.90 && qcov_d >= 0.93;
    outcome(
        pass,
        format!(
            "calibrated M: EBR {m_ebr} (t=1, M2=1; theory M2={:.0}), quarter {m_q} (M1=0; theory M1={:.0}) | structured b={b_s}: EBR cov {cov_s:.3}, radius/oracle {ratio:.2}, quarter cov {qcov_s:.3} | deceptive b={b_d:.1}: EBR cov {cov_d:.3} (<0.90), quarter cov {qcov_d:.3} (>=0.93)",
            theory.m2, theory.m1
        ),
    )
}

fn criterion_9() -> Outcome {
    let signal =
        serde_json::json!({"kind": "sparse", "s": 8, "amplitude": 12.0, "random_positions": true});
    let grid: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let mk = |reps: usize, m: &[f64]| {
        config(serde_json::json!({
            "experiment": "recovery-shell",
            "family": {"kind": "sparsity", "n": 100},
            "signal": signal,
            "grid": {"m": m},
            "reps": reps
        }))
    };
    let cal = sim::run(&mk(500, &grid), 901).unwrap();
    let Some(m) = calibrate_m(&cal, "frac_lower", 0.95, |_| true) else {
        return outcome(false, "calibration grid never reached 0.95".into());
    };
    let t = sim::run(&mk(500, &[m]), 902).unwrap();
    let freq = t.column("frac_lower")[0];
    let rho_star = t.column("rho_star")[0];
    let rho_hat = t.column("mean_rho_hat")[0];
    outcome(
        freq >= 0.95,
        format!(
            "calibrated M={m}: P(rho(I_hat) >= 0.1 rho(I*) - M) = {freq:.3} over 500 reps (rho(I*)={rho_star:.2}, mean rho(I_hat)={rho_hat:.2})"
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    let mut differing = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_str()
                .unwrap()
                .starts_with("simulate_")
        })
        .collect();
    entries.sort();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    for p in entries {
        let cfg: SimulateConfig = projstruct::cli::load_config(&p).unwrap();
        let a = simulate_csv(&cfg, 1234).unwrap();
        let b = simulate_csv(&cfg, 1234).unwrap();
        let c = one.install(|| simulate_csv(&cfg, 1234)).unwrap();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if a != b || a != c {
            differing.push(name.clone());
        }
        names.push(name);
    }
    outcome(
        differing.is_empty() && !names.is_empty(),
        format!(
            "{} simulate configs, repeated and single-threaded runs byte-identical; differing: [{}]",
            names.len(),
            differing.join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("selector-correctness", criterion_1),
        ("ddm-exactness", criterion_2),
        ("projection-algebra", criterion_3),
        ("condition-suite", criterion_4),
        ("tau-oracle-relations", criterion_5),
        ("sobolev-rate-scaling", criterion_6),
        ("sparsity-risk-bound", criterion_7),
        ("coverage-dichotomy", criterion_8),
        ("recovery-shell", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut known = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if let Some(flt) = &filter {
            if !name.contains(flt.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "[{}] {:>2} {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        if !o.pass {
            match o.known {
                Some(why) => {
                    known += 1;
                    println!("       known deviation: {why}");
                }
                None => failed += 1,
            }
        }
    }
    if known > 0 {
        println!("{known} criteria fail for documented reasons");
    }
    if failed > 0 {
        println!("{failed} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
