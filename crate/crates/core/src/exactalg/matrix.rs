use std::collections::BTreeMap;
use std::fmt;

use super::{AlgebraError, MPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Lower,
    Full,
}

/// Square matrix of polynomials, `(n+1) x (n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMatrix {
    dim: usize,
    entries: Vec<MPoly>,
    shape: Shape,
}

impl TriMatrix {
    pub fn zeros(dim: usize, shape: Shape) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        TriMatrix {
            dim,
            entries: vec![MPoly::zero(); dim * dim],
            shape,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, Shape::Lower);
        for i in 0..dim {
            m.entries[i * dim + i] = MPoly::one();
        }
        m
    }

    pub fn diagonal(diag: Vec<MPoly>) -> Self {
        let mut m = Self::zeros(diag.len(), Shape::Lower);
        for (i, d) in diag.into_iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from rows; the shape is lower when nothing sits above the
    /// diagonal.
    pub fn from_rows(rows: Vec<Vec<MPoly>>) -> Result<Self, AlgebraError> {
        let dim = rows.len();
        let mut m = Self::zeros(dim.max(1), Shape::Full);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(AlgebraError::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                m.entries[i * dim + j] = v;
            }
        }
        if m.is_lower() {
            m.shape = Shape::Lower;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension index: the matrix is `(n+1) x (n+1)`.
    pub fn n(&self) -> usize {
        self.dim - 1
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn get(&self, i: usize, j: usize) -> &MPoly {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MPoly) {
        if j > i && !v.is_zero() {
            self.shape = Shape::Full;
        }
        self.entries[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[MPoly] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_lower(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self.get(i, j).is_zero()))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn diag(&self) -> Vec<MPoly> {
        (0..self.dim).map(|i| self.get(i, i).clone()).collect()
    }

    /// Off-diagonal nonzero positions in row-major order.
    pub fn off_diagonal_support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j && !self.get(i, j).is_zero() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Leading `(k+1) x (k+1)` block.
    pub fn leading_block(&self, k: usize) -> TriMatrix {
        let dim = (k + 1).min(self.dim);
        let mut m = Self::zeros(dim, self.shape);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = self.get(i, j).clone();
            }
        }
        m
    }

    pub fn transpose(&self) -> TriMatrix {
        let mut m = Self::zeros(self.dim, Shape::Full);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[j * self.dim + i] = self.get(i, j).clone();
            }
        }
        if m.is_lower() {
            m.shape = Shape::Lower;
        }
        m
    }

    pub fn map(&self, f: impl Fn(&MPoly) -> MPoly) -> TriMatrix {
        let mut m = TriMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(f).collect(),
            shape: self.shape,
        };
        if m.shape == Shape::Lower && !m.is_lower() {
            m.shape = Shape::Full;
        }
        m
    }

    pub fn try_map(
        &self,
        f: impl Fn(&MPoly) -> Result<MPoly, AlgebraError>,
    ) -> Result<TriMatrix, AlgebraError> {
        let entries = self.entries.iter().map(f).collect::<Result<_, _>>()?;
        let mut m = TriMatrix {
            dim: self.dim,
            entries,
            shape: self.shape,
        };
        if m.shape == Shape::Lower && !m.is_lower() {
            m.shape = Shape::Full;
        }
        Ok(m)
    }

    pub fn rename(&self, from: &str, to: &str) -> TriMatrix {
        self.map(|p| p.rename(from, to))
    }

    pub fn mul(&self, other: &TriMatrix) -> Result<TriMatrix, AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let both_lower = self.shape == Shape::Lower && other.shape == Shape::Lower;
        let mut m = Self::zeros(
            n,
            if both_lower { Shape::Lower } else { Shape::Full },
        );
        for i in 0..n {
            for j in 0..n {
                if both_lower && j > i {
                    continue;
                }
                let range = if both_lower { j..=i } else { 0..=n - 1 };
                let mut acc = MPoly::zero();
                for k in range {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                m.entries[i * n + j] = acc;
            }
        }
        if !both_lower && m.is_lower() {
            m.shape = Shape::Lower;
        }
        Ok(m)
    }

    /// Inverse of a lower-triangular matrix by forward substitution. Each
    /// diagonal entry must be a unit: a nonzero rational times a Laurent
    /// monomial.
    pub fn tri_invert(&self) -> Result<TriMatrix, AlgebraError> {
        let n = self.dim;
        if !self.is_lower() {
            let (i, j) = self
                .off_diagonal_support()
                .into_iter()
                .find(|(i, j)| j > i)
                .unwrap();
            return Err(AlgebraError::SingularDiagonal {
                index: i,
                entry: format!("matrix has nonzero entry above the diagonal at ({i}, {j})"),
            });
        }
        let inv_diag: Vec<MPoly> = (0..n)
            .map(|i| {
                self.get(i, i)
                    .unit_inverse()
                    .ok_or_else(|| AlgebraError::SingularDiagonal {
                        index: i,
                        entry: self.get(i, i).to_string(),
                    })
            })
            .collect::<Result<_, _>>()?;
        let mut x = Self::zeros(n, Shape::Lower);
        for i in 0..n {
            x.entries[i * n + i] = inv_diag[i].clone();
            for j in (0..i).rev() {
                let mut acc = MPoly::zero();
                for k in j..i {
                    let a = self.get(i, k);
                    let b = x.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                x.entries[i * n + j] = -(&acc * &inv_diag[i]);
            }
        }
        Ok(x)
    }

    pub fn subs(
        &self,
        values: &BTreeMap<String, super::Rational>,
    ) -> Result<TriMatrix, AlgebraError> {
        self.try_map(|p| p.subs(values))
    }

    pub fn eval_f64(&self, values: &BTreeMap<String, f64>) -> Result<NumMatrix, AlgebraError> {
        let entries = self
            .entries
            .iter()
            .map(|p| p.eval_f64(values))
            .collect::<Result<Vec<_>, _>>()?;
        NumMatrix::new(self.dim, entries)
    }
}

impl fmt::Display for TriMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.entries.iter().map(|p| p.to_string()).collect();
        let width: Vec<usize> = (0..self.dim)
            .map(|j| (0..self.dim).map(|i| cells[i * self.dim + j].len()).max().unwrap())
            .collect();
        for i in 0..self.dim {
            write!(f, "[")?;
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{:>w$}", cells[i * self.dim + j], w = width[j])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Dense square matrix of finite doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct NumMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl NumMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self, AlgebraError> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(AlgebraError::DimensionMismatch {
                left: dim * dim,
                right: entries.len(),
            });
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(AlgebraError::NonFinite {
                row: k / dim,
                col: k % dim,
            });
        }
        Ok(NumMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AlgebraError> {
        Self::new(rows.len(), rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        let mut e = vec![0.0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = 1.0;
        }
        NumMatrix { dim, entries: e }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn transpose(&self) -> NumMatrix {
        let n = self.dim;
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                e[j * n + i] = self.entries[i * n + j];
            }
        }
        NumMatrix { dim: n, entries: e }
    }

    pub fn mul(&self, other: &NumMatrix) -> Result<NumMatrix, AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    e[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        NumMatrix::new(n, e)
    }

    pub fn max_abs_diff(&self, other: &NumMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Lower-triangular `D` with `D D^T = self`, positive diagonal.
    pub fn cholesky(&self) -> Result<NumMatrix, AlgebraError> {
        let n = self.dim;
        let max_diag = (0..n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max);
        let floor = 1e-13 * max_diag;
        let mut d = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = self.get(j, j);
            for k in 0..j {
                pivot -= d[j * n + k] * d[j * n + k];
            }
            if pivot <= floor {
                return Err(AlgebraError::NotPositiveDefinite { pivot: j, value: pivot });
            }
            let djj = pivot.sqrt();
            d[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= d[i * n + k] * d[j * n + k];
                }
                d[i * n + j] = s / djj;
            }
        }
        NumMatrix::new(n, d)
    }

    /// Solves `L x = b` for lower-triangular `L = self`.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.get(i, k) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
        x
    }

    /// Inverse of a lower-triangular matrix.
    pub fn lower_inverse(&self) -> NumMatrix {
        let n = self.dim;
        let mut out = NumMatrix::identity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.forward_solve(&e);
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        out
    }

    /// Solves the symmetric positive definite system `self x = b`.
    pub fn spd_solve(&self, b: &[f64]) -> Result<Vec<f64>, AlgebraError> {
        let l = self.cholesky()?;
        let y = l.forward_solve(b);
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l.get(k, i) * x[k];
            }
            x[i] = s / l.get(i, i);
        }
        Ok(x)
    }

    pub fn spd_inverse(&self) -> Result<NumMatrix, AlgebraError> {
        let l = self.cholesky()?;
        let li = l.lower_inverse();
        li.transpose().mul(&li)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::int;

    fn t() -> MPoly {
        MPoly::var("t")
    }

    #[test]
    fn invert_unit_lower() {
        let m = TriMatrix::from_rows(vec![
            vec![MPoly::one(), MPoly::zero()],
            vec![t(), MPoly::one()],
        ])
        .unwrap();
        let inv = m.tri_invert().unwrap();
        assert_eq!(inv.get(1, 0), &-t());
        assert_eq!(m.mul(&inv).unwrap(), TriMatrix::identity(2));
        assert_eq!(TriMatrix::identity(3).tri_invert().unwrap(), TriMatrix::identity(3));
    }

    #[test]
    fn non_unit_diagonal_rejected() {
        let m = TriMatrix::diagonal(vec![MPoly::one(), t() + MPoly::one()]);
        assert!(matches!(
            m.tri_invert(),
            Err(AlgebraError::SingularDiagonal { index: 1, .. })
        ));
        let z = TriMatrix::diagonal(vec![MPoly::zero()]);
        assert!(z.tri_invert().is_err());
    }

    #[test]
    fn exponential_diagonals_multiply() {
        let et = MPoly::var("E_t");
        let es_inv = MPoly::var("E_s").unit_inverse().unwrap();
        let a = TriMatrix::diagonal(vec![MPoly::one(), et.clone(), et.pow(2)]);
        let b = TriMatrix::diagonal(vec![MPoly::one(), es_inv.clone(), es_inv.pow(2)]);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.get(2, 2), &(et.pow(2) * es_inv.pow(2)));
        assert!(p.is_diagonal());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(TriMatrix::identity(2).mul(&TriMatrix::identity(3)).is_err());
    }

    #[test]
    fn cholesky_examples() {
        let i4 = NumMatrix::identity(4);
        assert_eq!(i4.cholesky().unwrap(), i4);
        let m = NumMatrix::from_rows(&[
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 2.5],
        ])
        .unwrap();
        let d = m.cholesky().unwrap();
        let back = d.mul(&d.transpose()).unwrap();
        assert!(back.max_abs_diff(&m) <= 1e-12 * m.max_abs());
        let bad = NumMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            bad.cholesky(),
            Err(AlgebraError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn spd_solve_roundtrip() {
        let m = NumMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = m.spd_solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        let inv = m.spd_inverse().unwrap();
        assert!(inv.mul(&m).unwrap().max_abs_diff(&NumMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(NumMatrix::new(1, vec![f64::NAN]).is_err());
        let m = TriMatrix::diagonal(vec![MPoly::var("x")]);
        let vals = BTreeMap::from([("x".to_string(), 2.0)]);
        assert_eq!(m.eval_f64(&vals).unwrap().get(0, 0), 2.0);
        let _ = int(0);
    }
}
