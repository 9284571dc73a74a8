use super::*;
use crate::family::SparsityMajorant;

fn config(experiment: Experiment) -> SimulateConfig {
    serde_json::from_value(serde_json::json!({
        "experiment": experiment,
        "family": {"kind": "sparsity", "n": 20},
        "signal": {"kind": "sparse", "s": 2, "amplitude": 8.0},
        "grid": {"m": [0.0, 1.0, 4.0], "t": [0.0, 1.0]},
        "reps": 40,
        "m2": 1.0,
        "m1": 0.0
    }))
    .unwrap()
}

const ALL: [Experiment; 7] = [
    Experiment::Contraction,
    Experiment::EstimationRisk,
    Experiment::CoverageEbr,
    Experiment::CoverageQuarter,
    Experiment::Size,
    Experiment::RecoveryShell,
    Experiment::RateScaling,
];

#[test]
fn every_experiment_runs_and_is_deterministic() {
    for e in ALL {
        let cfg = config(e);
        let a = run(&cfg, 7).unwrap();
        let b = run(&cfg, 7).unwrap();
        assert_eq!(a, b, "{e:?}");
        assert!(!a.rows.is_empty());
        assert!(a.rows.iter().all(|r| r.len() == a.columns.len()));
        let c = run(&cfg, 8).unwrap();
        assert_ne!(a, c, "{e:?}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = config(Experiment::CoverageQuarter);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| run(&cfg, 3)).unwrap();
    let b = four.install(|| run(&cfg, 3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn coverage_is_monotone_in_m() {
    let t = run(&config(Experiment::CoverageEbr), 1).unwrap();
    let zero_t: Vec<f64> = t
        .rows
        .iter()
        .filter(|r| r[3] == 0.0)
        .map(|r| r[4])
        .collect();
    assert!(zero_t.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(calibrate_m(&t, "coverage", 0.0, |_| true), Some(0.0));
    assert_eq!(calibrate_m(&t, "coverage", 2.0, |_| true), None);
}

#[test]
fn csv_has_metadata_and_header() {
    let cfg = config(Experiment::RateScaling);
    let t = run(&cfg, 5).unwrap();
    let meta = Metadata::new(&cfg, 5).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf, &meta).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# projstruct "));
    assert!(first.contains("seed=5"));
    assert_eq!(meta.config_hash.len(), 64);
    assert_eq!(
        lines.next().unwrap(),
        "n,sigma,log_n,mean_loss,se,log_mean_loss,oracle_rate"
    );
    assert!(!text.contains('\r'));
}

#[test]
fn resize_rules() {
    let f = Family::Sparsity {
        n: 5,
        majorant: SparsityMajorant::Binomial,
    };
    assert_eq!(
        resize(&f, 9).unwrap(),
        Family::Sparsity {
            n: 9,
            majorant: SparsityMajorant::Binomial
        }
    );
    assert_eq!(
        resize(&Family::Wavelet { max_level: 1 }, 15).unwrap(),
        Family::Wavelet { max_level: 3 }
    );
    assert!(resize(&Family::Wavelet { max_level: 1 }, 10).is_err());
    assert!(resize(&Family::Banding { p: 3 }, 4).is_err());
    assert!(resize(&Family::Banding { p: 3 }, 9).is_ok());
}

#[test]
fn config_errors() {
    let mut cfg = config(Experiment::Size);
    cfg.reps = 0;
    assert!(matches!(run(&cfg, 1), Err(Error::Config(_))));
    let bad = serde_json::from_value::<SimulateConfig>(serde_json::json!({
        "experiment": "coverage-ebr", "family": {"kind": "smoothness", "n": 3},
        "signal": {"kind": "constant", "value": 1.0}, "reps": 1, "unknown": 1
    }));
    assert!(bad.is_err());
    let mut q = config(Experiment::CoverageQuarter);
    q.noise = NoiseModel::BoundedUniform { half_width: 1.0 };
    assert!(run(&q, 1).is_err());
}
