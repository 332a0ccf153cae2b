//! Gaussian recursive filters of order 1 and 3.
//!
//! One filter iteration is a causal sweep followed by an anti-causal sweep:
//!
//! ```text
//! p_i = beta_i s_i + sum_j alpha_ij p_(i-j)     i = 0 .. m-1
//! s_i = beta_i p_i + sum_j alpha_ij s_(i+j)     i = m-1 .. 0
//! ```
//!
//! Terms whose index falls outside the grid are dropped. Repeating the pair
//! `K` times realizes the operator `F = (L U)^-K` with the banded factors
//! returned by [`build_lu`].

use crate::error::{Error, Result};
use crate::operator::{DenseOperator, Grid1D, Signal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterOrder {
    First,
    Third,
}

impl FilterOrder {
    pub fn lags(self) -> usize {
        match self {
            FilterOrder::First => 1,
            FilterOrder::Third => 3,
        }
    }

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(FilterOrder::First),
            3 => Ok(FilterOrder::Third),
            _ => Err(Error::invalid(format!("filter order must be 1 or 3, got {n}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterSpec {
    pub order: FilterOrder,
    pub iterations: usize,
    /// Third order only: evaluate the coefficients at `q(sigma)`.
    pub use_q: bool,
}

impl FilterSpec {
    pub fn first(iterations: usize) -> Self {
        Self {
            order: FilterOrder::First,
            iterations,
            use_q: false,
        }
    }

    pub fn third(use_q: bool) -> Self {
        Self {
            order: FilterOrder::Third,
            iterations: 1,
            use_q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("filter needs at least one iteration"));
        }
        match self.order {
            FilterOrder::Third if self.iterations != 1 => Err(Error::invalid(format!(
                "third-order coefficients are defined for a single iteration, got K = {}",
                self.iterations
            ))),
            FilterOrder::First if self.use_q => Err(Error::invalid(
                "the q(sigma) substitution only applies to the third-order filter",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderCoeffs {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `E_i = K / sigma_i^2`
    pub e: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThirdOrderCoeffs {
    /// `[alpha_i1, alpha_i2, alpha_i3]` per point.
    pub alpha: Vec<[f64; 3]>,
    pub beta: Vec<f64>,
    pub a: Vec<f64>,
}

/// Smoothing coefficients for either filter order.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterCoefficients {
    First(FirstOrderCoeffs),
    Third(ThirdOrderCoeffs),
}

impl FilterCoefficients {
    /// Coefficients for `spec` on `grid`; first-order values depend on `K`.
    pub fn compute(grid: &Grid1D, spec: &FilterSpec) -> Result<Self> {
        spec.validate()?;
        match spec.order {
            FilterOrder::First => Ok(Self::First(first_order_coeffs(grid, spec.iterations)?)),
            FilterOrder::Third => Ok(Self::Third(third_order_coeffs(grid, spec.use_q)?)),
        }
    }

    pub fn order(&self) -> FilterOrder {
        match self {
            Self::First(_) => FilterOrder::First,
            Self::Third(_) => FilterOrder::Third,
        }
    }

    pub fn len(&self) -> usize {
        self.betas().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn betas(&self) -> &[f64] {
        match self {
            Self::First(c) => &c.beta,
            Self::Third(c) => &c.beta,
        }
    }

    /// Lag weights `alpha_i1 .. alpha_in` at point `i`.
    pub fn alphas(&self, i: usize) -> &[f64] {
        match self {
            Self::First(c) => std::slice::from_ref(&c.alpha[i]),
            Self::Third(c) => &c.alpha[i],
        }
    }
}

/// First-order coefficients with `E_i = K / sigma_i^2`.
pub fn first_order_coeffs(grid: &Grid1D, iterations: usize) -> Result<FirstOrderCoeffs> {
    if iterations == 0 {
        return Err(Error::invalid("filter needs at least one iteration"));
    }
    let k = iterations as f64;
    let m = grid.len();
    let mut out = FirstOrderCoeffs {
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        e: Vec::with_capacity(m),
    };
    for sigma in grid.sigmas() {
        let e = k / (sigma * sigma);
        let root = (e * (e + 2.0)).sqrt();
        out.alpha.push(1.0 + e - root);
        out.beta.push(root - e);
        out.e.push(e);
    }
    Ok(out)
}

/// Effective scale replacing `sigma` in the third-order coefficients.
pub fn q_of_sigma(sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if sigma > 2.5 {
        Ok(0.98711 * sigma - 0.96330)
    } else {
        let radicand = 1.0 - 0.26891 * sigma;
        if radicand < 0.0 {
            return Err(Error::Domain(format!("q(sigma) undefined for sigma = {sigma}")));
        }
        Ok(3.97156 - 4.14554 * radicand.sqrt())
    }
}

/// Third-order coefficients from the cubic `a(sigma)`.
pub fn third_order_coeffs(grid: &Grid1D, use_q: bool) -> Result<ThirdOrderCoeffs> {
    let m = grid.len();
    let mut out = ThirdOrderCoeffs {
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        a: Vec::with_capacity(m),
    };
    for (i, sigma) in grid.sigmas().into_iter().enumerate() {
        let s = if use_q { q_of_sigma(sigma)? } else { sigma };
        if !(s > 0.0) {
            return Err(Error::Domain(format!(
                "effective scale at point {i} is {s}; third-order coefficients need a positive scale"
            )));
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let a = 3.738128 + 5.788982 * s + 3.382473 * s2 + s3;
        out.alpha.push([
            (5.788982 * s + 6.764946 * s2 + 3.0 * s3) / a,
            -(3.382473 * s2 + 3.0 * s3) / a,
            s3 / a,
        ]);
        out.beta.push(3.738128 / a);
        out.a.push(a);
    }
    Ok(out)
}

fn check_compatible(len: usize, coeffs: &FilterCoefficients, spec: &FilterSpec) -> Result<()> {
    spec.validate()?;
    if coeffs.order() != spec.order {
        return Err(Error::invalid(format!(
            "coefficients are {:?} order but the filter spec asks for {:?}",
            coeffs.order(),
            spec.order
        )));
    }
    Error::check_dim(coeffs.len(), len)
}

/// Runs one causal/anti-causal sweep pair in place.
fn sweep_pair(s: &mut [f64], p: &mut [f64], coeffs: &FilterCoefficients) {
    let m = s.len();
    let beta = coeffs.betas();
    for i in 0..m {
        let mut acc = beta[i] * s[i];
        for (j, a) in coeffs.alphas(i).iter().enumerate() {
            if let Some(prev) = i.checked_sub(j + 1) {
                acc += a * p[prev];
            }
        }
        p[i] = acc;
    }
    for i in (0..m).rev() {
        let mut acc = beta[i] * p[i];
        for (j, a) in coeffs.alphas(i).iter().enumerate() {
            let next = i + j + 1;
            if next < m {
                acc += a * s[next];
            }
        }
        s[i] = acc;
    }
}

/// Applies `K` filter iterations to `s0`.
pub fn apply_filter(s0: &Signal, coeffs: &FilterCoefficients, spec: &FilterSpec) -> Result<Signal> {
    check_compatible(s0.len(), coeffs, spec)?;
    let mut s = s0.clone();
    let mut p = vec![0.0; s0.len()];
    for _ in 0..spec.iterations {
        sweep_pair(s.as_mut_slice(), &mut p, coeffs);
    }
    Ok(s)
}

/// Lower and upper banded factors with `(L U)^K s^K = s^0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedFactors {
    pub lower: DenseOperator,
    pub upper: DenseOperator,
}

pub fn build_lu(coeffs: &FilterCoefficients) -> BandedFactors {
    let m = coeffs.len();
    let mut lower = DenseOperator::zeros(m);
    let mut upper = DenseOperator::zeros(m);
    let beta = coeffs.betas();
    for i in 0..m {
        lower.set(i, i, 1.0 / beta[i]);
        upper.set(i, i, 1.0 / beta[i]);
        for (j, a) in coeffs.alphas(i).iter().enumerate() {
            let lag = j + 1;
            if i >= lag {
                lower.set(i, i - lag, -a / beta[i]);
            }
            if i + lag < m {
                upper.set(i, i + lag, -a / beta[i]);
            }
        }
    }
    BandedFactors { lower, upper }
}

/// Dense `F = (L U)^-K`, assembled column by column from filtered unit
/// impulses.
pub fn materialize_f(coeffs: &FilterCoefficients, spec: &FilterSpec) -> Result<DenseOperator> {
    let m = coeffs.len();
    check_compatible(m, coeffs, spec)?;
    DenseOperator::from_columns(m, |j| apply_filter(&Signal::impulse(m, j), coeffs, spec))
}

/// Convenience: `F` for a homogeneous unit-spacing grid.
pub fn materialize_homogeneous(m: usize, sigma: f64, spec: &FilterSpec) -> Result<DenseOperator> {
    let grid = Grid1D::uniform(m, sigma)?;
    let coeffs = FilterCoefficients::compute(&grid, spec)?;
    materialize_f(&coeffs, spec)
}

/// Row-major two-dimensional field.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Filters every row of `field` (coefficients sized to the column count).
pub fn filter_rows(field: &Field2D, coeffs: &FilterCoefficients, spec: &FilterSpec) -> Result<Field2D> {
    check_compatible(field.cols, coeffs, spec)?;
    let mut out = field.clone();
    let mut p = vec![0.0; field.cols];
    for r in 0..field.rows {
        let row = &mut out.data[r * field.cols..(r + 1) * field.cols];
        for _ in 0..spec.iterations {
            sweep_pair(row, &mut p, coeffs);
        }
    }
    Ok(out)
}

/// Filters every column of `field` (coefficients sized to the row count).
pub fn filter_columns(field: &Field2D, coeffs: &FilterCoefficients, spec: &FilterSpec) -> Result<Field2D> {
    check_compatible(field.rows, coeffs, spec)?;
    let mut out = field.clone();
    let mut col = vec![0.0; field.rows];
    let mut p = vec![0.0; field.rows];
    for c in 0..field.cols {
        for (r, v) in col.iter_mut().enumerate() {
            *v = field.get(r, c);
        }
        for _ in 0..spec.iterations {
            sweep_pair(&mut col, &mut p, coeffs);
        }
        for (r, v) in col.iter().enumerate() {
            out.set(r, c, *v);
        }
    }
    Ok(out)
}

/// Separable 2D smoothing: the 1D filter along every row, then along every
/// column.
pub fn apply_separable_2d(
    field: &Field2D,
    coeffs_x: &FilterCoefficients,
    coeffs_y: &FilterCoefficients,
    spec: &FilterSpec,
) -> Result<Field2D> {
    let along_x = filter_rows(field, coeffs_x, spec)?;
    filter_columns(&along_x, coeffs_y, spec)
}
