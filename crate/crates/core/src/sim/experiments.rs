use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{resize, Estimator, Experiment, SimulateConfig, Table};
use crate::balls::{duplicate_gaussian, ebr_radius_sq, g_m};
use crate::conditions::NoiseModel;
use crate::ddm::{structure_posterior, Candidates};
use crate::error::{Error, Result};
use crate::family::{Family, Structure};
use crate::linalg::sq_dist;
use crate::math::mix_seed;
use crate::oracle::{ebr_ratio, oracle_rate, FrameworkConstants};
use crate::selection::{select_penalized, Penalty};

fn columns(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::Contraction => &[
            "n",
            "sigma",
            "m",
            "frac_exceed",
            "se",
            "mean_loss",
            "oracle_rate",
        ],
        Experiment::EstimationRisk => &[
            "n",
            "sigma",
            "mean_loss",
            "se",
            "median_loss",
            "q90_loss",
            "oracle_rate",
            "risk_ratio",
            "mean_rho_hat",
            "sparse_rate",
        ],
        Experiment::CoverageEbr => &[
            "n",
            "sigma",
            "m",
            "t",
            "coverage",
            "se",
            "mean_radius_sq",
            "mean_loss",
            "oracle_rate",
            "radius_ratio",
            "ebr_ratio",
            "m2",
        ],
        Experiment::CoverageQuarter => &[
            "n",
            "sigma",
            "m",
            "coverage",
            "se",
            "mean_radius_sq",
            "mean_loss",
            "oracle_rate",
            "radius_ratio",
            "m1",
        ],
        Experiment::Size => &[
            "n",
            "sigma",
            "m",
            "t",
            "ebr_radius_sq",
            "quarter_radius_sq",
            "oracle_rate",
            "sigma2_sqrt_n",
            "highly_structured",
        ],
        Experiment::RecoveryShell => &[
            "n",
            "sigma",
            "m",
            "frac_lower",
            "frac_upper",
            "frac_shell",
            "se_shell",
            "rho_star",
            "rho_oracle",
            "mean_rho_hat",
        ],
        Experiment::RateScaling => &[
            "n",
            "sigma",
            "log_n",
            "mean_loss",
            "se",
            "log_mean_loss",
            "oracle_rate",
        ],
    }
}

/// Runs an experiment and returns one row per grid cell.
pub fn run(cfg: &SimulateConfig, seed: u64) -> Result<Table> {
    let constants = cfg.validate()?;
    let mut table = Table::new(columns(cfg.experiment));
    let mut index = 0u64;
    for n in cfg.dimensions() {
        let family = resize(&cfg.family, n)?;
        cfg.noise.check(n)?;
        for &sigma0 in &cfg.grid.sigma {
            let sigma = if cfg.experiment == Experiment::RateScaling {
                sigma0 / (n as f64).sqrt()
            } else {
                sigma0
            };
            let cell_seed = mix_seed(seed, index);
            index += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cell_seed, u64::MAX));
            let theta = cfg.signal.generate(n, sigma, &mut rng)?;
            let cell = Cell {
                cfg,
                family: family.clone(),
                theta,
                sigma,
                constants: &constants,
                seed: cell_seed,
            };
            cell.run(&mut table)?;
        }
    }
    Ok(table)
}

struct Cell<'a> {
    cfg: &'a SimulateConfig,
    family: Family,
    theta: Vec<f64>,
    sigma: f64,
    constants: &'a FrameworkConstants,
    seed: u64,
}

struct Fit {
    structure: Structure,
    estimate: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_err(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

fn frequency(hits: impl Iterator<Item = bool>, reps: usize) -> (f64, f64) {
    let p = hits.filter(|&b| b).count() as f64 / reps as f64;
    (p, (p * (1.0 - p) / reps as f64).sqrt())
}

fn unit_variance(noise: &NoiseModel) -> bool {
    match noise {
        NoiseModel::Gaussian | NoiseModel::Rademacher | NoiseModel::Ar1 { .. } => true,
        NoiseModel::BoundedUniform { half_width } => {
            (half_width * half_width / 3.0 - 1.0).abs() < 1e-12
        }
        NoiseModel::BernoulliMean { .. } => false,
    }
}

/// Radius statistic `|Y' - theta_hat|^2 - s^2 N` and noise level `s` of the
/// quarter ball, with `theta_hat` computed from an independent sample.
struct QuarterDraw {
    stat: f64,
    sigma: f64,
    loss: f64,
}

impl Cell<'_> {
    fn n(&self) -> usize {
        self.theta.len()
    }

    fn penalty(&self, sigma: f64) -> Penalty {
        Penalty::new(sigma, self.cfg.kappa).with_dimension(self.cfg.with_dimension)
    }

    fn observe(&self, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let xi = self.cfg.noise.sample(self.n(), rng);
        self.theta
            .iter()
            .zip(xi)
            .map(|(t, e)| t + sigma * e)
            .collect()
    }

    fn fit(&self, y: &[f64], sigma: f64) -> Result<Fit> {
        let pen = self.penalty(sigma);
        let sel = select_penalized(y, &self.family, &pen, self.cfg.mode)?;
        let estimate = match self.cfg.estimator {
            Estimator::Ms => self.family.project(&sel.structure, y)?,
            Estimator::Ma => structure_posterior(
                y,
                &self.family,
                &pen,
                &Candidates::All { cap: self.cfg.cap },
            )?
            .ma_mean(),
        };
        Ok(Fit {
            structure: sel.structure,
            estimate,
        })
    }

    fn replicate<T: Send>(
        &self,
        f: impl Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        (0..self.cfg.reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, r));
                f(&mut rng)
            })
            .collect()
    }

    fn quarter_supported(&self) -> Result<()> {
        if matches!(self.family, Family::Banding { .. }) {
            return Err(Error::Unsupported {
                family: "banding".into(),
                operation: "quarter ball".into(),
            });
        }
        if !unit_variance(&self.cfg.noise) {
            return Err(Error::Config(
                "the quarter ball requires unit-variance noise".into(),
            ));
        }
        Ok(())
    }

    fn quarter_draw(&self, y: &[f64], rng: &mut ChaCha8Rng) -> Result<QuarterDraw> {
        let (y1, y2, s) = if matches!(self.cfg.noise, NoiseModel::Gaussian) {
            let (a, b) = duplicate_gaussian(y, self.sigma, rng)?;
            (a, b, self.sigma * std::f64::consts::SQRT_2)
        } else {
            (self.observe(self.sigma, rng), y.to_vec(), self.sigma)
        };
        let fit = self.fit(&y2, s)?;
        Ok(QuarterDraw {
            stat: sq_dist(&y1, &fit.estimate) - s * s * self.n() as f64,
            sigma: s,
            loss: sq_dist(&fit.estimate, &self.theta),
        })
    }

    fn quarter_radius(&self, d: &QuarterDraw, m: f64, m1: f64) -> f64 {
        let s2 = d.sigma * d.sigma;
        (d.stat + 2.0 * s2 * g_m(m, m1) * (self.n() as f64).sqrt()).max(0.0)
    }

    fn m2(&self) -> f64 {
        self.cfg.m2.unwrap_or(self.constants.m2)
    }

    fn m1(&self) -> f64 {
        self.cfg.m1.unwrap_or(self.constants.m1)
    }

    fn run(&self, table: &mut Table) -> Result<()> {
        let cfg = self.cfg;
        let n = self.n() as f64;
        let sigma = self.sigma;
        let s2 = sigma * sigma;
        let reps = cfg.reps;
        let oracle = oracle_rate(&self.theta, &self.family, sigma, 1.0)?;
        let r2 = oracle.rate_sq;
        match cfg.experiment {
            Experiment::Contraction => {
                let pen = self.penalty(sigma);
                let losses = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    let post = structure_posterior(
                        &y,
                        &self.family,
                        &pen,
                        &Candidates::All { cap: cfg.cap },
                    )?;
                    let (_, v) = post.sample(&cfg.law, rng)?;
                    Ok(sq_dist(&v, &self.theta))
                })?;
                let mult = cfg.contraction_multiplier.unwrap_or(1.0);
                for &m in &cfg.grid.m {
                    let (p, se) = frequency(losses.iter().map(|l| *l >= mult * r2 + m * s2), reps);
                    table.push(vec![n, sigma, m, p, se, mean(&losses), r2]);
                }
            }
            Experiment::EstimationRisk => {
                let draws = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    let fit = self.fit(&y, sigma)?;
                    Ok((
                        sq_dist(&fit.estimate, &self.theta),
                        self.family.majorant(&fit.structure)?,
                    ))
                })?;
                let losses: Vec<f64> = draws.iter().map(|d| d.0).collect();
                let rhos: Vec<f64> = draws.iter().map(|d| d.1).collect();
                let sparse_rate = match cfg.signal.sparsity() {
                    Some(s) if s > 0 => s2 * s as f64 * (std::f64::consts::E * n / s as f64).ln(),
                    _ => f64::NAN,
                };
                let ml = mean(&losses);
                table.push(vec![
                    n,
                    sigma,
                    ml,
                    std_err(&losses),
                    quantile(&losses, 0.5),
                    quantile(&losses, 0.9),
                    r2,
                    ml / r2,
                    mean(&rhos),
                    sparse_rate,
                ]);
            }
            Experiment::CoverageEbr => {
                let draws = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    let fit = self.fit(&y, sigma)?;
                    Ok((
                        sq_dist(&fit.estimate, &self.theta),
                        self.family.majorant(&fit.structure)?,
                    ))
                })?;
                let b = ebr_ratio(&self.theta, &self.family, sigma, self.constants)?;
                let m2 = self.m2();
                let losses: Vec<f64> = draws.iter().map(|d| d.0).collect();
                for &m in &cfg.grid.m {
                    for &t in &cfg.grid.t {
                        let radii: Vec<f64> = draws
                            .iter()
                            .map(|d| ebr_radius_sq(sigma, d.1, m2, t, m))
                            .collect();
                        let (p, se) =
                            frequency(losses.iter().zip(&radii).map(|(l, r)| l <= r), reps);
                        let mr = mean(&radii);
                        table.push(vec![
                            n,
                            sigma,
                            m,
                            t,
                            p,
                            se,
                            mr,
                            mean(&losses),
                            r2,
                            mr / r2,
                            b,
                            m2,
                        ]);
                    }
                }
            }
            Experiment::CoverageQuarter => {
                self.quarter_supported()?;
                let draws = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    self.quarter_draw(&y, rng)
                })?;
                let m1 = self.m1();
                let losses: Vec<f64> = draws.iter().map(|d| d.loss).collect();
                for &m in &cfg.grid.m {
                    let radii: Vec<f64> = draws
                        .iter()
                        .map(|d| self.quarter_radius(d, m, m1))
                        .collect();
                    let (p, se) = frequency(losses.iter().zip(&radii).map(|(l, r)| l <= r), reps);
                    let mr = mean(&radii);
                    table.push(vec![n, sigma, m, p, se, mr, mean(&losses), r2, mr / r2, m1]);
                }
            }
            Experiment::Size => {
                let quarter = self.quarter_supported().is_ok();
                let draws = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    let fit = self.fit(&y, sigma)?;
                    let rho = self.family.majorant(&fit.structure)?;
                    let q = if quarter {
                        Some(self.quarter_draw(&y, rng)?)
                    } else {
                        None
                    };
                    Ok((rho, q))
                })?;
                let m2 = self.m2();
                let m1 = self.m1();
                let tilde = r2 <= cfg.tilde_c * s2 * n.sqrt();
                for &m in &cfg.grid.m {
                    for &t in &cfg.grid.t {
                        let ebr = mean(
                            &draws
                                .iter()
                                .map(|d| ebr_radius_sq(sigma, d.0, m2, t, m))
                                .collect::<Vec<_>>(),
                        );
                        let qr = if quarter {
                            mean(
                                &draws
                                    .iter()
                                    .map(|d| self.quarter_radius(d.1.as_ref().unwrap(), m, m1))
                                    .collect::<Vec<_>>(),
                            )
                        } else {
                            f64::NAN
                        };
                        table.push(vec![
                            n,
                            sigma,
                            m,
                            t,
                            ebr,
                            qr,
                            r2,
                            s2 * n.sqrt(),
                            if tilde { 1.0 } else { 0.0 },
                        ]);
                    }
                }
            }
            Experiment::RecoveryShell => {
                let rhos = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    let fit = self.fit(&y, sigma)?;
                    self.family.majorant(&fit.structure)
                })?;
                let star = oracle_rate(&self.theta, &self.family, sigma, self.constants.tau0)?;
                let delta = self.constants.delta;
                let up = cfg.upper_multiplier.unwrap_or(self.constants.m0);
                for &m in &cfg.grid.m {
                    let lower = |r: &f64| *r >= delta * star.rho - m;
                    let upper = |r: &f64| *r <= up * oracle.rho + m;
                    let (pl, _) = frequency(rhos.iter().map(lower), reps);
                    let (pu, _) = frequency(rhos.iter().map(upper), reps);
                    let (ps, se) = frequency(rhos.iter().map(|r| lower(r) && upper(r)), reps);
                    table.push(vec![
                        n,
                        sigma,
                        m,
                        pl,
                        pu,
                        ps,
                        se,
                        star.rho,
                        oracle.rho,
                        mean(&rhos),
                    ]);
                }
            }
            Experiment::RateScaling => {
                let losses = self.replicate(|rng| {
                    let y = self.observe(sigma, rng);
                    let fit = self.fit(&y, sigma)?;
                    Ok(sq_dist(&fit.estimate, &self.theta))
                })?;
                let ml = mean(&losses);
                table.push(vec![n, sigma, n.ln(), ml, std_err(&losses), ml.ln(), r2]);
            }
        }
        Ok(())
    }
}
