//! Conversion of raw data into sequence and matrix observations.

use std::f64::consts::{PI, SQRT_2};
use std::io::Read;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Sup-norm bound of the trigonometric basis.
pub const TRIG_SUP: f64 = SQRT_2;

/// Trigonometric basis on `[0, 1]`, 1-based: `phi_1 = 1`,
/// `phi_{2k} = sqrt(2) cos(2 pi k x)`, `phi_{2k+1} = sqrt(2) sin(2 pi k x)`.
pub fn trig_basis(i: usize, x: f64) -> f64 {
    assert!(i >= 1, "basis index is 1-based");
    if i == 1 {
        return 1.0;
    }
    let k = (i / 2) as f64;
    let arg = 2.0 * PI * k * x;
    if i.is_multiple_of(2) {
        SQRT_2 * arg.cos()
    } else {
        SQRT_2 * arg.sin()
    }
}

/// Empirical Fourier coefficients `Y_i = mean_l phi_i(X_l)` and the noise
/// level `sigma_n = sqrt(C log n / n)`.
pub fn density_to_sequence(samples: &[f64], n_coeffs: usize, c: f64) -> Result<(Vec<f64>, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    if n_coeffs == 0 {
        return Err(Error::InvalidInput("n_coeffs must be positive".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidInput("C must be positive".into()));
    }
    if let Some((i, x)) = samples
        .iter()
        .enumerate()
        .find(|(_, x)| !(0.0..=1.0).contains(*x))
    {
        return Err(Error::InvalidInput(format!(
            "sample {i} = {x} lies outside [0, 1]"
        )));
    }
    let n = samples.len() as f64;
    let y: Vec<f64> = (1..=n_coeffs)
        .map(|i| {
            let v = samples.iter().map(|&x| trig_basis(i, x)).sum::<f64>() / n;
            v.clamp(-TRIG_SUP, TRIG_SUP)
        })
        .collect();
    Ok((y, (c * n.ln() / n).sqrt()))
}

/// Sample second-moment matrix `(1/n) sum_l X_l X_l^T`.
pub fn covariance_to_matrix(rows: &[Vec<f64>]) -> Result<Mat> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidInput("no rows".into()))?;
    let p = first.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
        return Err(Error::InvalidInput(format!(
            "ragged input: row {i} has {} entries, expected {p}",
            r.len()
        )));
    }
    let n = rows.len() as f64;
    let mut m = Mat::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = rows.iter().map(|r| r[a] * r[b]).sum::<f64>() / n;
            m.set(a, b, v);
            m.set(b, a, v);
        }
    }
    Ok(m)
}

/// Eigen-decomposition of the graph Laplacian `D - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianBasis {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub basis: Mat,
}

/// Laplacian eigenbasis ordered by ascending eigenvalue; each eigenvector is
/// signed so that its first non-negligible entry is positive.
pub fn laplacian_eigen_order(adjacency: &Mat) -> Result<LaplacianBasis> {
    let n = adjacency.rows();
    if n == 0 || adjacency.cols() != n {
        return Err(Error::InvalidInput(
            "adjacency matrix must be square and non-empty".into(),
        ));
    }
    for i in 0..n {
        if adjacency.get(i, i) != 0.0 {
            return Err(Error::InvalidInput(format!("self-loop at vertex {i}")));
        }
        for j in 0..n {
            let a = adjacency.get(i, j);
            if a != 0.0 && a != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) is not 0 or 1"
                )));
            }
            if a != adjacency.get(j, i) {
                return Err(Error::InvalidInput(format!(
                    "adjacency is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let lap = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (0..n).map(|k| adjacency.get(i, k)).sum()
        } else {
            -adjacency.get(i, j)
        }
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let columns: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-10) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect();
    Ok(LaplacianBasis {
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        basis: Mat::from_columns(&columns)?,
    })
}

fn parse_records<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!(
                        "record {}: cannot parse '{f}' as a number",
                        line + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if !row.is_empty() {
            out.push(row);
        }
    }
    Ok(out)
}

/// Reads a vector, one value per line (or comma separated on one line).
pub fn read_vector<R: Read>(reader: R) -> Result<Vec<f64>> {
    Ok(parse_records(reader)?.into_iter().flatten().collect())
}

/// Reads matrix rows; rows may differ in length, which callers validate.
pub fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    parse_records(reader)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_sample_gives_basis_values() {
        let x = 0.3;
        let (y, sigma) = density_to_sequence(&[x], 7, 1.0).unwrap();
        for (i, v) in y.iter().enumerate() {
            assert_eq!(*v, trig_basis(i + 1, x));
        }
        assert_eq!(sigma, 0.0);
        let (_, s) = density_to_sequence(&vec![0.5; 100], 1, 1.0).unwrap();
        assert!((s * s - 100f64.ln() / 100.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let (y, _) = density_to_sequence(&xs, 9, 1.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        for v in &y[1..] {
            // Each coefficient has variance 1/n under the uniform law.
            assert!(v.abs() < 3.0 / (n as f64).sqrt(), "{v}");
        }
        assert!(y.iter().all(|v| v.abs() <= TRIG_SUP));
    }

    #[test]
    fn density_errors() {
        assert!(density_to_sequence(&[1.2], 3, 1.0).is_err());
        assert!(density_to_sequence(&[], 3, 1.0).is_err());
        assert!(density_to_sequence(&[0.5], 0, 1.0).is_err());
    }

    #[test]
    fn covariance_examples() {
        let m = covariance_to_matrix(&[vec![1.0, 2.0, -1.0]]).unwrap();
        assert_eq!(m.get(1, 2), -2.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert!(covariance_to_matrix(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10_000;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..3)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let c = covariance_to_matrix(&rows).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(c.get(a, b), c.get(b, a));
                let se = if a == b {
                    (2.0 / n as f64).sqrt()
                } else {
                    (1.0 / n as f64).sqrt()
                };
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((c.get(a, b) - target).abs() < 3.0 * se);
            }
        }
        let dm = DMatrix::from_fn(3, 3, |i, j| c.get(i, j));
        assert!(SymmetricEigen::new(dm)
            .eigenvalues
            .iter()
            .all(|&l| l >= -1e-10));
    }

    #[test]
    fn path_and_complete_graphs() {
        let path = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let b = laplacian_eigen_order(&path).unwrap();
        for (l, e) in b.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!((l - e).abs() < 1e-12);
        }
        let c0 = b.basis.column(0);
        assert!(c0.iter().all(|v| (v - 1.0 / 3f64.sqrt()).abs() < 1e-12));
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let k = laplacian_eigen_order(&Mat::from_rows(&rows).unwrap()).unwrap();
        assert!(k.eigenvalues[0].abs() < 1e-12);
        assert!(k.eigenvalues[1..]
            .iter()
            .all(|l| (l - n as f64).abs() < 1e-10));
        let g = k.basis.transpose();
        for i in 0..n {
            for j in 0..n {
                let d = crate::linalg::dot(g.row(i), g.row(j));
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_rejects_bad_adjacency() {
        let asym = Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(laplacian_eigen_order(&asym).is_err());
        let lp = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(laplacian_eigen_order(&lp).is_err());
    }

    #[test]
    fn csv_readers() {
        let v = read_vector("# header\n1.5\n2\n\n-3e-1\n".as_bytes()).unwrap();
        assert_eq!(v, vec![1.5, 2.0, -0.3]);
        let r = read_rows("1, 2\n3,4,5\n".as_bytes()).unwrap();
        assert_eq!(r, vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]);
        assert!(read_vector("x\n".as_bytes()).is_err());
    }
}
