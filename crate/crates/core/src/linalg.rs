//! Dense linear algebra used by the projections: a row-major matrix type and
//! least-squares projection onto a column span via pivoted Gram-Schmidt.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};

/// Relative threshold below which a pivoted column is treated as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Mat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Mat::new(rows.len(), cols, data)
    }

    /// Builds an `n x k` matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let k = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        let mut m = Mat::zeros(n, k);
        for (j, c) in columns.iter().enumerate() {
            check_len(c, n)?;
            for (i, v) in c.iter().enumerate() {
                m.data[i * k + j] = *v;
            }
        }
        check_finite(&m.data)?;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix with the selected columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                m.data[i * idx.len() + k] = self.get(i, j);
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Mat::from_rows(&rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared Euclidean norm.
pub fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orthonormal basis of a column span, built with column pivoting.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    n: usize,
    q: Vec<Vec<f64>>,
    pivots: Vec<usize>,
}

impl OrthoBasis {
    /// Orthonormalises the columns of `x`; columns whose residual norm falls
    /// below `RANK_TOLERANCE` times the largest column norm are dropped.
    pub fn from_matrix(x: &Mat) -> Self {
        let cols: Vec<Vec<f64>> = (0..x.cols()).map(|j| x.column(j)).collect();
        Self::from_columns(x.rows(), cols)
    }

    pub fn from_columns(n: usize, mut cols: Vec<Vec<f64>>) -> Self {
        let max_norm = cols.iter().map(|c| sq_norm(c).sqrt()).fold(0.0, f64::max);
        let threshold = RANK_TOLERANCE * max_norm;
        let mut remaining: Vec<usize> = (0..cols.len()).collect();
        let mut q: Vec<Vec<f64>> = Vec::new();
        let mut pivots = Vec::new();
        while !remaining.is_empty() && max_norm > 0.0 {
            let (pos, best) = remaining
                .iter()
                .enumerate()
                .map(|(pos, &j)| (pos, sq_norm(&cols[j])))
                .fold(
                    (0, -1.0),
                    |acc, (pos, v)| if v > acc.1 { (pos, v) } else { acc },
                );
            if best.sqrt() <= threshold {
                break;
            }
            let j = remaining.remove(pos);
            let mut v = std::mem::take(&mut cols[j]);
            // second pass restores orthogonality lost to cancellation
            for _ in 0..2 {
                for u in &q {
                    let c = dot(u, &v);
                    v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = sq_norm(&v).sqrt();
            if norm <= threshold {
                continue;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            for &k in &remaining {
                let c = dot(&v, &cols[k]);
                cols[k].iter_mut().zip(&v).for_each(|(a, b)| *a -= c * b);
            }
            q.push(v);
            pivots.push(j);
        }
        OrthoBasis { n, q, pivots }
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// Original column indices kept as pivots, in pivot order.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for u in &self.q {
            let c = dot(u, y);
            out.iter_mut().zip(u).for_each(|(a, b)| *a += c * b);
        }
        out
    }
}

/// Orthogonal projection of `y` onto the column span of `x`.
pub fn least_squares_project(x: &Mat, y: &[f64]) -> Result<Vec<f64>> {
    check_len(y, x.rows())?;
    check_finite(y)?;
    Ok(OrthoBasis::from_matrix(x).project(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_columns() {
        let x = Mat::from_columns(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let p = least_squares_project(&x, &[5.0, 7.0]).unwrap();
        assert!((p[0] - 5.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        assert_eq!(OrthoBasis::from_matrix(&x).rank(), 1);
    }

    #[test]
    fn projection_onto_full_space_is_identity() {
        let x = Mat::from_columns(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let p = least_squares_project(&x, &[3.0, -4.0]).unwrap();
        assert!((p[0] - 3.0).abs() < 1e-12 && (p[1] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_columns_project_to_zero() {
        let x = Mat::zeros(3, 2);
        assert_eq!(
            least_squares_project(&x, &[1.0, 2.0, 3.0]).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn rejects_bad_input() {
        let x = Mat::zeros(3, 1);
        assert!(matches!(
            least_squares_project(&x, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            least_squares_project(&x, &[1.0, f64::NAN, 0.0]),
            Err(Error::NonFinite(1))
        ));
        assert!(Mat::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
