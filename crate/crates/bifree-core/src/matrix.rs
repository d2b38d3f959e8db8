//! Dense matrices over exact rationals: just enough linear algebra for the
//! operator-valued machinery (products, kron-style assembly, solving small
//! systems for change of basis).

use crate::rat::Q;
use crate::{Error, Result};
use num_traits::{One, Zero};

/// A dense rows × cols matrix with exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    a: Vec<Q>,
}

impl RatMatrix {
    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            a: vec![Q::zero(); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    /// Matrix unit `E_{i,j}` (0-based indices).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = RatMatrix::zeros(n, n);
        m.set(i, j, Q::one());
        m
    }

    /// Builds from nested row vectors.
    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Ok(RatMatrix {
            rows: r,
            cols: c,
            a: rows.into_iter().flatten().collect(),
        })
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Entry accessor.
    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.a[i * self.cols + j]
    }

    /// Entry mutator.
    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.a[i * self.cols + j] = v;
    }

    /// Adds `v` into an entry.
    pub fn add_at(&mut self, i: usize, j: usize, v: &Q) {
        let idx = i * self.cols + j;
        self.a[idx] += v.clone();
    }

    /// True when every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
    }

    /// Matrix sum.
    pub fn add(&self, other: &RatMatrix) -> Result<RatMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidArgument("shape mismatch in add".into()));
        }
        let a = self
            .a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| x.clone() + y.clone())
            .collect();
        Ok(RatMatrix {
            rows: self.rows,
            cols: self.cols,
            a,
        })
    }

    /// Matrix difference.
    pub fn sub(&self, other: &RatMatrix) -> Result<RatMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidArgument("shape mismatch in sub".into()));
        }
        let a = self
            .a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| x.clone() - y.clone())
            .collect();
        Ok(RatMatrix {
            rows: self.rows,
            cols: self.cols,
            a,
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &Q) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    /// Matrix product.
    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidArgument(format!(
                "shape mismatch in mul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let y = other.get(k, j);
                    if !y.is_zero() {
                        out.add_at(i, j, &(x.clone() * y.clone()));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Q]) -> Result<Vec<Q>> {
        if self.cols != v.len() {
            return Err(Error::InvalidArgument("shape mismatch in apply".into()));
        }
        let mut out = vec![Q::zero(); self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self.get(i, j);
                if !x.is_zero() {
                    out[i] += x.clone() * v[j].clone();
                }
            }
        }
        Ok(out)
    }

    /// Solves `self · x = b` for square invertible `self` by Gaussian
    /// elimination.
    pub fn solve(&self, b: &[Q]) -> Result<Vec<Q>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(Error::InvalidArgument("solve requires square system".into()));
        }
        let n = self.rows;
        let mut aug: Vec<Vec<Q>> = (0..n)
            .map(|i| {
                let mut row: Vec<Q> = (0..n).map(|j| self.get(i, j).clone()).collect();
                row.push(b[i].clone());
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !aug[r][col].is_zero())
                .ok_or_else(|| Error::InvalidArgument("singular system".into()))?;
            aug.swap(col, pivot);
            let inv = Q::one() / aug[col][col].clone();
            for j in col..=n {
                aug[col][j] = aug[col][j].clone() * inv.clone();
            }
            for r in 0..n {
                if r != col && !aug[r][col].is_zero() {
                    let f = aug[r][col].clone();
                    for j in col..=n {
                        let delta = f.clone() * aug[col][j].clone();
                        aug[r][j] = aug[r][j].clone() - delta;
                    }
                }
            }
        }
        Ok(aug.into_iter().map(|mut row| row.pop().unwrap()).collect())
    }
}
