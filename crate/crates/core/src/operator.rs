//! Grids, signals and dense operators shared by the rest of the crate.
//!
//! Everything is stored densely in `f64`. Operators are square and
//! row-major; the ∞-norm (maximum absolute row sum) is the norm used for
//! every operator-level comparison.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-dimensional grid with per-point spacing and correlation radius.
///
/// The smoothing scale at point `i` is `sigma_i = radius_i / dx_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    dx: Vec<f64>,
    radius: Vec<f64>,
}

impl Grid1D {
    pub fn new(dx: Vec<f64>, radius: Vec<f64>) -> Result<Self> {
        if dx.len() != radius.len() {
            return Err(Error::DimensionMismatch {
                expected: dx.len(),
                found: radius.len(),
            });
        }
        if dx.len() < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 points, got {}",
                dx.len()
            )));
        }
        for (i, (&h, &r)) in dx.iter().zip(&radius).enumerate() {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid(format!("dx[{i}] = {h} must be positive")));
            }
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!(
                    "radius[{i}] = {r} must be positive"
                )));
            }
            let sigma = r / h;
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::invalid(format!("sigma[{i}] = {sigma} is not usable")));
            }
        }
        Ok(Self { dx, radius })
    }

    /// Unit spacing with a constant scale, so `sigma_i = sigma` everywhere.
    pub fn uniform(m: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![1.0; m], vec![sigma; m])
    }

    /// Constant physical radius and spacing (e.g. 120 km over 6 km cells).
    pub fn with_radius(m: usize, radius: f64, dx: f64) -> Result<Self> {
        Self::new(vec![dx; m], vec![radius; m])
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.radius[i] / self.dx[i]
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.sigma(i)).collect()
    }

    pub fn has_unit_spacing(&self) -> bool {
        self.dx.iter().all(|&h| h == 1.0)
    }
}

/// A real vector living on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// Unit impulse at `j` (zero-based).
    pub fn impulse(m: usize, j: usize) -> Self {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        Self(v)
    }

    pub fn from_fn(m: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..m).map(f).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Signal) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        Signal(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Signal) -> Signal {
        Signal(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> Signal {
        Signal(self.0.iter().map(|a| c * a).collect())
    }

    /// `self += c * x`
    pub fn axpy(&mut self, c: f64, x: &Signal) {
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += c * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Signal {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    m: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![0.0; m * m],
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut a = Self::zeros(m);
        for i in 0..m {
            a.data[i * m + i] = 1.0;
        }
        a
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                data.push(f(i, j));
            }
        }
        Self { m, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let mut data = Vec::with_capacity(m * m);
        for row in rows {
            Error::check_dim(m, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_data(m, data)
    }

    pub fn from_data(m: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_dim(m * m, data.len())?;
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                k / m.max(1),
                k % m.max(1)
            )));
        }
        Ok(Self { m, data })
    }

    /// Builds an operator whose column `j` is `col(j)`.
    pub fn from_columns(m: usize, mut col: impl FnMut(usize) -> Result<Signal>) -> Result<Self> {
        let mut a = Self::zeros(m);
        for j in 0..m {
            let c = col(j)?;
            Error::check_dim(m, c.len())?;
            for (i, v) in c.iter().enumerate() {
                a.data[i * m + j] = *v;
            }
        }
        Ok(a)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.m + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn column(&self, j: usize) -> Signal {
        Signal::from_fn(self.m, |i| self.get(i, j))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.m, |i, j| self.get(j, i))
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.m)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mat_vec(&self, s: &[f64]) -> Result<Signal> {
        Error::check_dim(self.m, s.len())?;
        Ok(Signal::from_fn(self.m, |i| {
            self.row(i).iter().zip(s).map(|(a, b)| a * b).sum()
        }))
    }

    pub fn matmul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        Error::check_dim(self.m, other.m)?;
        let m = self.m;
        let mut out = Self::zeros(m);
        for i in 0..m {
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * m..(k + 1) * m];
                let dst = &mut out.data[i * m..(i + 1) * m];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        Error::check_dim(self.m, other.m)?;
        Ok(Self {
            m: self.m,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        Error::check_dim(self.m, other.m)?;
        Ok(Self {
            m: self.m,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> DenseOperator {
        Self {
            m: self.m,
            data: self.data.iter().map(|a| c * a).collect(),
        }
    }

    /// `self * diag(d)`: scales column `j` by `d[j]`.
    pub fn mul_diag(&self, d: &DiagonalOperator) -> Result<DenseOperator> {
        Error::check_dim(self.m, d.len())?;
        Ok(Self::from_fn(self.m, |i, j| self.get(i, j) * d.diag()[j]))
    }

    /// Central `(m - 2t) x (m - 2t)` block.
    pub fn submatrix(&self, start: usize, len: usize) -> Result<DenseOperator> {
        if start + len > self.m {
            return Err(Error::invalid(format!(
                "block [{start}, {}) exceeds dimension {}",
                start + len,
                self.m
            )));
        }
        Ok(Self::from_fn(len, |i, j| self.get(start + i, start + j)))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

/// Nonnegative diagonal operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some((i, d)) = diag
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d >= 0.0))
        {
            return Err(Error::invalid(format!(
                "diagonal entry {i} = {d} must be finite and nonnegative"
            )));
        }
        Ok(Self { diag })
    }

    pub fn zeros(m: usize) -> Self {
        Self { diag: vec![0.0; m] }
    }

    pub fn identity(m: usize) -> Self {
        Self { diag: vec![1.0; m] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn inf_norm(&self) -> f64 {
        self.diag.iter().fold(0.0, |acc, &d| acc.max(d))
    }

    pub fn apply(&self, s: &[f64]) -> Result<Signal> {
        Error::check_dim(self.diag.len(), s.len())?;
        Ok(Signal::new(
            self.diag.iter().zip(s).map(|(d, x)| d * x).collect(),
        ))
    }

    pub fn to_dense(&self) -> DenseOperator {
        let m = self.diag.len();
        DenseOperator::from_fn(m, |i, j| if i == j { self.diag[i] } else { 0.0 })
    }
}

/// Maximum absolute row sum.
pub fn inf_norm(a: &DenseOperator) -> f64 {
    a.inf_norm()
}

pub fn mat_vec(a: &DenseOperator, s: &Signal) -> Result<Signal> {
    a.mat_vec(s)
}

/// Relative pivot threshold below which a matrix is reported singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct LuFactors {
    m: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: &DenseOperator) -> Result<Self> {
        let m = a.dim();
        let mut lu = a.data().to_vec();
        let mut perm: Vec<usize> = (0..m).collect();
        let scale = a.max_abs();
        if scale == 0.0 {
            return Err(Error::Singular {
                column: 0,
                pivot: 0.0,
            });
        }
        for k in 0..m {
            let (p, pivot) = (k..m)
                .map(|i| (i, lu[i * m + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot < SINGULAR_PIVOT_RATIO * scale {
                return Err(Error::Singular { column: k, pivot });
            }
            if p != k {
                for j in 0..m {
                    lu.swap(k * m + j, p * m + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * m + k];
            for i in (k + 1)..m {
                let f = lu[i * m + k] / d;
                lu[i * m + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..m {
                        lu[i * m + j] -= f * lu[k * m + j];
                    }
                }
            }
        }
        Ok(Self { m, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Signal> {
        let m = self.m;
        Error::check_dim(m, b.len())?;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            let s: f64 = (0..i).map(|j| self.lu[i * m + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..m).rev() {
            let s: f64 = ((i + 1)..m).map(|j| self.lu[i * m + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * m + i];
        }
        Ok(Signal::new(x))
    }

    pub fn inverse(&self) -> Result<DenseOperator> {
        DenseOperator::from_columns(self.m, |j| self.solve(&Signal::impulse(self.m, j)))
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &DenseOperator, b: &Signal) -> Result<Signal> {
    Error::check_dim(a.dim(), b.len())?;
    LuFactors::factor(a)?.solve(b)
}

pub fn invert(a: &DenseOperator) -> Result<DenseOperator> {
    LuFactors::factor(a)?.inverse()
}
