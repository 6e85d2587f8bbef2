//! Small dense matrices over a finite field with exact Gaussian elimination.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};
use crate::ffield::{FieldCtx, FieldElement};

#[derive(Clone, Debug)]
pub struct Mat {
    ctx: FieldCtx,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Mat {
    pub fn zeros(ctx: FieldCtx, rows: usize, cols: usize) -> Mat {
        Mat {
            ctx,
            rows,
            cols,
            data: vec![ctx.zero(); rows * cols],
        }
    }

    pub fn identity(ctx: FieldCtx, n: usize) -> Mat {
        let mut m = Mat::zeros(ctx, n, n);
        for i in 0..n {
            m[(i, i)] = ctx.one();
        }
        m
    }

    pub fn from_rows(ctx: FieldCtx, rows: Vec<Vec<FieldElement>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Mat::zeros(ctx, r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix rows");
            for (j, v) in row.into_iter().enumerate() {
                m.ctx = m.ctx.join(v.ctx());
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(ctx: FieldCtx, cols: &[Vec<FieldElement>]) -> Mat {
        let c = cols.len();
        let r = cols.first().map_or(0, |col| col.len());
        let mut m = Mat::zeros(ctx, r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m.ctx = m.ctx.join(v.ctx());
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Vec<FieldElement> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.ctx, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, c: FieldElement) -> Mat {
        Mat {
            ctx: self.ctx.join(c.ctx()),
            data: self.data.iter().map(|v| *v * c).collect(),
            ..*self
        }
    }

    pub fn apply(&self, x: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(x.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|i| {
                let mut acc = self.ctx.zero();
                for j in 0..self.cols {
                    acc += self[(i, j)] * x[j];
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(pr, r);
            let inv = m[(r, c)].inv().expect("pivot is nonzero");
            for j in 0..m.cols {
                m[(r, j)] = m[(r, j)] * inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)];
                    for j in 0..m.cols {
                        let v = m[(r, j)];
                        m[(i, j)] -= f * v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> Result<FieldElement> {
        if self.rows != self.cols {
            return Err(Error::Structural("determinant of a non-square matrix".into()));
        }
        let mut m = self.clone();
        let mut det = self.ctx.one();
        for c in 0..m.cols {
            let Some(pr) = (c..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                return Ok(self.ctx.zero());
            };
            if pr != c {
                m.swap_rows(pr, c);
                det = -det;
            }
            let piv = m[(c, c)];
            det *= piv;
            let inv = piv.inv()?;
            for i in c + 1..m.rows {
                let f = m[(i, c)] * inv;
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let v = m[(c, j)];
                    m[(i, j)] -= f * v;
                }
            }
        }
        Ok(det)
    }

    /// Basis of the right kernel.
    pub fn kernel(&self) -> Vec<Vec<FieldElement>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![self.ctx.zero(); self.cols];
                v[f] = self.ctx.one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, f)];
                }
                v
            })
            .collect()
    }

    /// The unique solution of `self x = b`; errors unless the system has full
    /// column rank and is consistent.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Vec<FieldElement>> {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let mut aug = Mat::zeros(self.ctx, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, self.cols)] = b[i];
            aug.ctx = aug.ctx.join(b[i].ctx());
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return Err(Error::Domain("inconsistent linear system".into()));
        }
        if pivots.len() < self.cols {
            return Err(Error::Rank {
                rank: pivots.len(),
                expected: self.cols,
            });
        }
        Ok((0..self.cols).map(|i| r[(i, self.cols)]).collect())
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut m = Mat::zeros(self.ctx.join(other.ctx), self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                m[(i, self.cols + j)] = other[(i, j)];
            }
        }
        m
    }
}

/// Entries are compared by value, so a matrix over `F_p` equals its image
/// over `F_{p^2}`.
impl PartialEq for Mat {
    fn eq(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Eq for Mat {}

impl Index<(usize, usize)> for Mat {
    type Output = FieldElement;
    fn index(&self, (i, j): (usize, usize)) -> &FieldElement {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElement {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matrix shapes");
        let mut out = Mat::zeros(self.ctx.join(rhs.ctx), self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(l, j)];
                }
            }
        }
        out
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            ctx: self.ctx.join(rhs.ctx),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
            ..*self
        }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            ctx: self.ctx.join(rhs.ctx),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
            ..*self
        }
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
