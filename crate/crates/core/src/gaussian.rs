//! Exact discrete Gaussian convolution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{DenseOperator, Grid1D, Signal};

/// Normalized Gaussian density `exp(-x^2 / 2 sigma^2) / (sigma sqrt(2 pi))`.
pub fn gaussian_kernel(x: f64, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(kernel(x, sigma))
}

#[inline]
fn kernel(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Inputs for building the convolution operator `V`.
#[derive(Clone, Debug)]
pub struct GaussianOperatorSpec {
    pub grid: Grid1D,
    /// When set, every row uses this scale instead of the grid's `sigma_i`.
    pub homogeneous_sigma: Option<f64>,
}

impl GaussianOperatorSpec {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            homogeneous_sigma: None,
        }
    }

    pub fn homogeneous(m: usize, sigma: f64) -> Result<Self> {
        Ok(Self {
            grid: Grid1D::uniform(m, sigma)?,
            homogeneous_sigma: Some(sigma),
        })
    }

    fn row_sigma(&self, i: usize) -> f64 {
        self.homogeneous_sigma.unwrap_or_else(|| self.grid.sigma(i))
    }
}

/// Dense `V` with `V_ij = g(i - j)` evaluated at the row point's scale.
///
/// Offsets are in grid units; spacing only enters through `sigma_i`.
pub fn build_v(spec: &GaussianOperatorSpec) -> Result<DenseOperator> {
    let m = spec.grid.len();
    let sigmas: Vec<f64> = (0..m).map(|i| spec.row_sigma(i)).collect();
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::Domain(format!("sigma must be positive, got {s}")));
    }
    Ok(DenseOperator::from_fn(m, |i, j| {
        kernel(i as f64 - j as f64, sigmas[i])
    }))
}

/// Shorthand for the homogeneous unit-spacing operator.
pub fn build_v_homogeneous(m: usize, sigma: f64) -> Result<DenseOperator> {
    build_v(&GaussianOperatorSpec::homogeneous(m, sigma)?)
}

/// Discrete Gaussian convolution `s = V s0`.
pub fn convolve(v: &DenseOperator, s0: &Signal) -> Result<Signal> {
    v.mat_vec(s0)
}

/// Compares a rectangle-rule evaluation of the continuous convolution of
/// `s0` against `(V s0)_i` at every interior grid point, returning the
/// largest absolute gap.
///
/// Grid points sit at `x_i = i` and the quadrature weight of cell `j` is
/// `dx_j`, so only unit-spacing grids are accepted.
pub fn quadrature_check(
    s0: impl Fn(f64) -> f64,
    grid: &Grid1D,
    sigma: f64,
) -> Result<f64> {
    if !grid.has_unit_spacing() {
        return Err(Error::Unsupported(
            "quadrature check requires unit grid spacing".into(),
        ));
    }
    let m = grid.len();
    let v = build_v(&GaussianOperatorSpec {
        grid: grid.clone(),
        homogeneous_sigma: Some(sigma),
    })?;
    let samples = Signal::from_fn(m, |j| s0(j as f64));
    let vs = convolve(&v, &samples)?;

    let mut worst = 0.0f64;
    for i in 1..m - 1 {
        let xi = i as f64;
        let integral: f64 = (0..m)
            .map(|j| {
                let tau = j as f64;
                grid.dx()[j] * gaussian_kernel(xi - tau, sigma).unwrap_or(0.0) * s0(tau)
            })
            .sum();
        worst = worst.max((integral - vs[i]).abs());
    }
    Ok(worst)
}
