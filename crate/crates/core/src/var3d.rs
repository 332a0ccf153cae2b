//! The 3D-Var computational kernel in control-variable (dual) form.
//!
//! With `B = V V`, `Psi = H^T R^-1 H` and misfit `d`, the analysis increment
//! is `dx = V v` where `v` solves
//!
//! ```text
//! (I + V Psi V) v = V H^T R^-1 d
//! ```
//!
//! by conjugate gradients. The filtered backends replace every application
//! of `V` with a recursive filter.

use crate::error::{Error, Result};
use crate::gaussian::{build_v, GaussianOperatorSpec};
use crate::operator::{DenseOperator, DiagonalOperator, Grid1D, Signal};
use crate::recfilter::{apply_filter, materialize_f, FilterCoefficients, FilterSpec};

/// Point-selection observation operator `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObsOperator {
    m: usize,
    indices: Vec<usize>,
}

impl ObsOperator {
    /// `indices` are zero-based grid points, strictly increasing.
    pub fn new(m: usize, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::invalid(format!(
                "observation index {bad} outside grid of {m} points"
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "observation indices must be strictly increasing",
            ));
        }
        Ok(Self { m, indices })
    }

    pub fn every_point(m: usize) -> Self {
        Self {
            m,
            indices: (0..m).collect(),
        }
    }

    pub fn grid_len(&self) -> usize {
        self.m
    }

    /// Number of observations `p`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `H x`
    pub fn gather(&self, x: &[f64]) -> Result<Signal> {
        Error::check_dim(self.m, x.len())?;
        Ok(Signal::new(self.indices.iter().map(|&i| x[i]).collect()))
    }

    /// `H^T y`
    pub fn scatter(&self, y: &[f64]) -> Result<Signal> {
        Error::check_dim(self.indices.len(), y.len())?;
        let mut out = Signal::zeros(self.m);
        for (&i, &v) in self.indices.iter().zip(y) {
            out.as_mut_slice()[i] = v;
        }
        Ok(out)
    }
}

/// Which operator stands in for `V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Rf1 { iterations: usize },
    Rf3 { use_q: bool },
}

impl Backend {
    pub fn filter_spec(&self) -> Option<FilterSpec> {
        match *self {
            Backend::Exact => None,
            Backend::Rf1 { iterations } => Some(FilterSpec::first(iterations)),
            Backend::Rf3 { use_q } => Some(FilterSpec::third(use_q)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Backend::Exact => "exact".into(),
            Backend::Rf1 { iterations } => format!("rf1_k{iterations}"),
            Backend::Rf3 { .. } => "rf3".into(),
        }
    }
}

/// One assimilation instance.
#[derive(Clone, Debug)]
pub struct VarProblem {
    pub grid: Grid1D,
    pub obs: ObsOperator,
    /// Observation-error variances, one per observation.
    pub r_diag: Vec<f64>,
    pub backend: Backend,
    /// `d = y - H x_b`
    pub misfit: Vec<f64>,
    /// Background standard deviation; `B = sigma_b^2 V V`.
    pub sigma_b: f64,
}

impl VarProblem {
    pub fn new(
        grid: Grid1D,
        obs: ObsOperator,
        r_diag: Vec<f64>,
        misfit: Vec<f64>,
        backend: Backend,
    ) -> Result<Self> {
        let prob = Self {
            grid,
            obs,
            r_diag,
            backend,
            misfit,
            sigma_b: 1.0,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_sigma_b(mut self, sigma_b: f64) -> Result<Self> {
        self.sigma_b = sigma_b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_backend(&self, backend: Backend) -> Self {
        Self {
            backend,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        Error::check_dim(self.grid.len(), self.obs.grid_len())?;
        Error::check_dim(self.obs.len(), self.r_diag.len())?;
        Error::check_dim(self.obs.len(), self.misfit.len())?;
        if let Some(r) = self.r_diag.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!(
                "observation-error variance {r} must be positive"
            )));
        }
        if self.misfit.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("misfit contains non-finite values"));
        }
        if !(self.sigma_b.is_finite() && self.sigma_b > 0.0) {
            return Err(Error::invalid(format!(
                "background standard deviation {} must be positive",
                self.sigma_b
            )));
        }
        if let Some(spec) = self.backend.filter_spec() {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Gaussian operator `V` built from the grid's scales (without `sigma_b`).
    pub fn gaussian_operator(&self) -> Result<DenseOperator> {
        build_v(&GaussianOperatorSpec::new(self.grid.clone()))
    }
}

/// `Psi = H^T R^-1 H`: `1 / r_j` at observed points, zero elsewhere.
pub fn assemble_psi(prob: &VarProblem) -> DiagonalOperator {
    let mut diag = vec![0.0; prob.len()];
    for (&i, &r) in prob.obs.indices().iter().zip(&prob.r_diag) {
        diag[i] = 1.0 / r;
    }
    DiagonalOperator::new(diag).expect("positive variances give a nonnegative diagonal")
}

/// The action standing in for `sigma_b V` in the dual system.
#[derive(Clone, Debug)]
pub enum Background {
    Dense(DenseOperator),
    Filtered {
        coeffs: FilterCoefficients,
        spec: FilterSpec,
        scale: f64,
    },
}

impl Background {
    pub fn for_problem(prob: &VarProblem) -> Result<Self> {
        match prob.backend.filter_spec() {
            None => Ok(Background::Dense(
                prob.gaussian_operator()?.scale(prob.sigma_b),
            )),
            Some(spec) => Ok(Background::Filtered {
                coeffs: FilterCoefficients::compute(&prob.grid, &spec)?,
                spec,
                scale: prob.sigma_b,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Background::Dense(a) => a.dim(),
            Background::Filtered { coeffs, .. } => coeffs.len(),
        }
    }

    pub fn apply(&self, s: &Signal) -> Result<Signal> {
        match self {
            Background::Dense(a) => a.mat_vec(s),
            Background::Filtered {
                coeffs,
                spec,
                scale,
            } => {
                let out = apply_filter(s, coeffs, spec)?;
                Ok(if *scale == 1.0 { out } else { out.scale(*scale) })
            }
        }
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        match self {
            Background::Dense(a) => Ok(a.clone()),
            Background::Filtered {
                coeffs,
                spec,
                scale,
            } => Ok(materialize_f(coeffs, spec)?.scale(*scale)),
        }
    }

    /// Dense `(A + A^T) / 2`, for studying how much the filter's asymmetry
    /// matters to CG.
    pub fn symmetrized(&self) -> Result<Background> {
        let a = self.to_dense()?;
        Ok(Background::Dense(a.add(&a.transpose())?.scale(0.5)))
    }
}

fn dual_product(
    rho: &Signal,
    psi: &DiagonalOperator,
    mut apply_v: impl FnMut(&Signal) -> Result<Signal>,
) -> Result<Signal> {
    Error::check_dim(psi.len(), rho.len())?;
    let z1 = apply_v(rho)?;
    let z2 = psi.apply(&z1)?;
    let z3 = apply_v(&z2)?;
    Ok(rho.add(&z3))
}

/// `q = rho + V (Psi (V rho))`, in that order.
pub fn matvec_exact(rho: &Signal, v: &DenseOperator, psi: &DiagonalOperator) -> Result<Signal> {
    Error::check_dim(v.dim(), rho.len())?;
    dual_product(rho, psi, |s| v.mat_vec(s))
}

/// Same four steps with the recursive filter in place of both `V`
/// applications.
pub fn matvec_filtered(
    rho: &Signal,
    coeffs: &FilterCoefficients,
    spec: &FilterSpec,
    psi: &DiagonalOperator,
) -> Result<Signal> {
    dual_product(rho, psi, |s| apply_filter(s, coeffs, spec))
}

/// `rho + B (Psi rho)` style products for an arbitrary background action.
pub fn matvec_dual(rho: &Signal, background: &Background, psi: &DiagonalOperator) -> Result<Signal> {
    Error::check_dim(background.dim(), rho.len())?;
    dual_product(rho, psi, |s| background.apply(s))
}

/// Iteration history of one conjugate-gradient run.
#[derive(Clone, Debug, PartialEq)]
pub struct CgReport {
    pub solution: Signal,
    /// `||r_k|| / ||b||` for k = 0, 1, ..., iterations.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Conjugate-gradient state, advanced one step at a time by the caller
/// supplying `q_k = A rho_k`.
#[derive(Clone, Debug)]
pub struct CgIteration {
    x: Signal,
    r: Signal,
    direction: Signal,
    rr: f64,
    b_norm: f64,
    k: usize,
    history: Vec<f64>,
}

impl CgIteration {
    /// Starts from `x_0 = 0`, so `r_0 = rho_0 = b`.
    pub fn start(b: &Signal) -> Self {
        let rr = b.dot(b);
        let b_norm = rr.sqrt();
        let mut it = Self {
            x: Signal::zeros(b.len()),
            r: b.clone(),
            direction: b.clone(),
            rr,
            b_norm,
            k: 0,
            history: Vec::new(),
        };
        it.history.push(it.relative_residual());
        it
    }

    pub fn direction(&self) -> &Signal {
        &self.direction
    }

    pub fn solution(&self) -> &Signal {
        &self.x
    }

    pub fn iterations(&self) -> usize {
        self.k
    }

    pub fn relative_residual(&self) -> f64 {
        if self.b_norm == 0.0 {
            0.0
        } else {
            self.rr.sqrt() / self.b_norm
        }
    }

    /// Applies one step given `q = A rho_k`.
    pub fn advance(&mut self, q: &Signal) -> Result<()> {
        Error::check_dim(self.x.len(), q.len())?;
        let alpha = self.rr / self.direction.dot(q);
        if !alpha.is_finite() {
            return Err(Error::Divergence { iteration: self.k });
        }
        self.x.axpy(alpha, &self.direction);
        self.r.axpy(-alpha, q);
        let rr_next = self.r.dot(&self.r);
        let beta = rr_next / self.rr;
        if !(rr_next.is_finite() && beta.is_finite()) {
            return Err(Error::Divergence { iteration: self.k });
        }
        let mut next = self.r.clone();
        next.axpy(beta, &self.direction);
        self.direction = next;
        self.rr = rr_next;
        self.k += 1;
        self.history.push(self.relative_residual());
        Ok(())
    }

    pub fn into_report(self, eps: f64) -> CgReport {
        let converged = self.relative_residual() <= eps;
        CgReport {
            solution: self.x,
            residual_norms: self.history,
            iterations: self.k,
            converged,
        }
    }
}

/// Conjugate gradients from a zero initial guess, stopping when
/// `||r_k|| / ||b|| <= eps` or after `max_iter` iterations.
pub fn cg_solve(
    mut apply_a: impl FnMut(&Signal) -> Result<Signal>,
    b: &Signal,
    eps: f64,
    max_iter: usize,
) -> Result<CgReport> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("CG tolerance must be positive, got {eps}")));
    }
    if !b.is_finite() {
        return Err(Error::invalid("right-hand side contains non-finite values"));
    }
    let mut it = CgIteration::start(b);
    while it.relative_residual() > eps && it.iterations() < max_iter {
        let q = apply_a(it.direction())?;
        it.advance(&q)?;
    }
    Ok(it.into_report(eps))
}

/// Dual right-hand side `V H^T R^-1 d` through the chosen background action.
pub fn build_rhs(prob: &VarProblem, background: &Background) -> Result<Signal> {
    let weighted: Vec<f64> = prob
        .misfit
        .iter()
        .zip(&prob.r_diag)
        .map(|(d, r)| d / r)
        .collect();
    background.apply(&prob.obs.scatter(&weighted)?)
}

/// Result of an assimilation run.
#[derive(Clone, Debug)]
pub struct Assimilation {
    pub increment: Signal,
    pub report: CgReport,
}

/// Solves the dual system for the problem's backend and maps the control
/// variable back to the increment.
pub fn assimilate(prob: &VarProblem, eps: f64, max_iter: usize) -> Result<Assimilation> {
    prob.validate()?;
    let background = Background::for_problem(prob)?;
    assimilate_with(prob, &background, eps, max_iter)
}

/// [`assimilate`] with an explicit background action.
pub fn assimilate_with(
    prob: &VarProblem,
    background: &Background,
    eps: f64,
    max_iter: usize,
) -> Result<Assimilation> {
    Error::check_dim(prob.len(), background.dim())?;
    let psi = assemble_psi(prob);
    let rhs = build_rhs(prob, background)?;
    let report = cg_solve(|rho| matvec_dual(rho, background, &psi), &rhs, eps, max_iter)?;
    let increment = background.apply(&report.solution)?;
    Ok(Assimilation { increment, report })
}

/// Solves the untransformed system `(I + B Psi) dx = B H^T R^-1 d` with CG
/// on its dense assembly. Exact backend only.
pub fn primal_solve(prob: &VarProblem, eps: f64, max_iter: usize) -> Result<Assimilation> {
    prob.validate()?;
    if prob.backend != Backend::Exact {
        return Err(Error::Unsupported(
            "the primal system is only assembled for the exact backend".into(),
        ));
    }
    let v = prob.gaussian_operator()?.scale(prob.sigma_b);
    let b = v.matmul(&v)?;
    let psi = assemble_psi(prob);
    let a = DenseOperator::identity(prob.len()).add(&b.mul_diag(&psi)?)?;
    let weighted: Vec<f64> = prob
        .misfit
        .iter()
        .zip(&prob.r_diag)
        .map(|(d, r)| d / r)
        .collect();
    let rhs = b.mat_vec(&prob.obs.scatter(&weighted)?)?;
    let report = cg_solve(|x| a.mat_vec(x), &rhs, eps, max_iter)?;
    Ok(Assimilation {
        increment: report.solution.clone(),
        report,
    })
}

/// Dense `I + A Psi A` for a background action (diagnostics and oracles).
pub fn dense_dual_matrix(background: &Background, psi: &DiagonalOperator) -> Result<DenseOperator> {
    let a = background.to_dense()?;
    let m = a.dim();
    DenseOperator::identity(m).add(&a.mul_diag(psi)?.matmul(&a)?)
}
