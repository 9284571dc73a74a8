use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter generators. Amplitudes of `sparse`, `constant` and `steps` are
/// in units of the noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    Values {
        theta: Vec<f64>,
    },
    Sparse {
        s: usize,
        amplitude: f64,
        #[serde(default)]
        random_positions: bool,
        #[serde(default)]
        random_signs: bool,
    },
    Constant {
        value: f64,
    },
    /// `theta_i = c i^{-beta - 1/2}` scaled so that `sum i^{2 beta} theta_i^2 = radius^2`
    /// over the first `reference_n` coordinates (default: all `n`). A fixed
    /// `reference_n` gives the same sequence, truncated, for every `n` up to it.
    Sobolev {
        beta: f64,
        radius: f64,
        #[serde(default)]
        reference_n: Option<usize>,
    },
    /// Piecewise constant with `jumps` evenly spaced jumps alternating in sign.
    Steps {
        jumps: usize,
        amplitude: f64,
    },
}

impl SignalSpec {
    /// Whether generation consumes randomness.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            SignalSpec::Sparse {
                random_positions: true,
                ..
            } | SignalSpec::Sparse {
                random_signs: true,
                ..
            }
        )
    }

    /// Number of nonzero coordinates for sparse signals.
    pub fn sparsity(&self) -> Option<usize> {
        match self {
            SignalSpec::Sparse { s, .. } => Some(*s),
            _ => None,
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            SignalSpec::Values { theta } => {
                if theta.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: theta.len(),
                    });
                }
                Ok(theta.clone())
            }
            SignalSpec::Sparse {
                s,
                amplitude,
                random_positions,
                random_signs,
            } => {
                if *s > n {
                    return Err(Error::Config(format!("sparsity {s} exceeds dimension {n}")));
                }
                let positions: Vec<usize> = if *random_positions {
                    let mut p = sample(rng, n, *s).into_vec();
                    p.sort_unstable();
                    p
                } else {
                    (0..*s).collect()
                };
                let mut theta = vec![0.0; n];
                for i in positions {
                    let sign = if *random_signs && rng.gen::<bool>() {
                        -1.0
                    } else {
                        1.0
                    };
                    theta[i] = sign * amplitude * sigma;
                }
                Ok(theta)
            }
            SignalSpec::Constant { value } => Ok(vec![value * sigma; n]),
            SignalSpec::Sobolev {
                beta,
                radius,
                reference_n,
            } => {
                if !(*beta > 0.0 && *radius >= 0.0) {
                    return Err(Error::Config(
                        "sobolev signal needs beta > 0 and radius >= 0".into(),
                    ));
                }
                let m = reference_n.unwrap_or(n);
                if m < n {
                    return Err(Error::Config(format!(
                        "reference_n = {m} is below the dimension {n}"
                    )));
                }
                let harmonic: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
                let c = radius / harmonic.sqrt();
                Ok((1..=n).map(|i| c * (i as f64).powf(-beta - 0.5)).collect())
            }
            SignalSpec::Steps { jumps, amplitude } => {
                if *jumps >= n.max(1) {
                    return Err(Error::Config(format!(
                        "{jumps} jumps do not fit in dimension {n}"
                    )));
                }
                let seg = n as f64 / (*jumps + 1) as f64;
                Ok((0..n)
                    .map(|i| {
                        let k = (i as f64 / seg).floor() as usize;
                        if k.is_multiple_of(2) {
                            0.0
                        } else {
                            amplitude * sigma
                        }
                    })
                    .collect())
            }
        }
    }
}
