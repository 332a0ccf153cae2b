//! Operator-level diagnostics: distances between `V` and its recursive-filter
//! replacements, edge trimming, the per-iteration CG error bound, and
//! conditioning of the primal and dual systems.

use crate::error::{Error, Result};
use crate::operator::{invert, DenseOperator, DiagonalOperator};
use crate::recfilter::FilterSpec;
use crate::var3d::{assemble_psi, build_rhs, matvec_dual, Background, CgIteration, VarProblem};

/// `||A - B||_inf`
pub fn operator_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    Ok(a.sub(b)?.inf_norm())
}

/// Drops the first and last `t` rows and columns.
pub fn trim_operator(a: &DenseOperator, t: usize) -> Result<DenseOperator> {
    let m = a.dim();
    if 2 * t >= m {
        return Err(Error::invalid(format!(
            "cannot trim {t} rows from each side of a {m}x{m} operator"
        )));
    }
    a.submatrix(t, m - 2 * t)
}

/// Edge width `2 sigma`, rounded to the nearest grid point.
pub fn trim_width(sigma: f64) -> usize {
    (2.0 * sigma).round() as usize
}

/// Norms entering the per-iteration bound on `||q_k - q~_k||`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorBoundInputs {
    pub norm_v: f64,
    pub norm_f: f64,
    pub norm_psi: f64,
    /// `||F - V||`
    pub dist_fv: f64,
    /// `||rho_k - rho~_k||`
    pub norm_ek: f64,
    pub norm_rho_tilde: f64,
}

impl ErrorBoundInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("norm_v", self.norm_v),
            ("norm_f", self.norm_f),
            ("norm_psi", self.norm_psi),
            ("dist_fv", self.dist_fv),
            ("norm_ek", self.norm_ek),
            ("norm_rho_tilde", self.norm_rho_tilde),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, v)) => Err(Error::invalid(format!("{name} = {v} must be >= 0"))),
            None => Ok(()),
        }
    }
}

/// `(1 + |V| |Psi| |V|) |e_k| + |F - V| |Psi| (|V| + |F|) |rho~_k|`
pub fn theorem_bound(inp: &ErrorBoundInputs) -> f64 {
    (1.0 + inp.norm_v * inp.norm_psi * inp.norm_v) * inp.norm_ek
        + inp.dist_fv * inp.norm_psi * (inp.norm_v + inp.norm_f) * inp.norm_rho_tilde
}

/// The bound with `|V|, |F| <= 1` substituted:
/// `(1 + |Psi|) |e_k| + 2 |F - V| |Psi| |rho~_k|`.
pub fn specialized_bound(inp: &ErrorBoundInputs) -> f64 {
    (1.0 + inp.norm_psi) * inp.norm_ek + 2.0 * inp.dist_fv * inp.norm_psi * inp.norm_rho_tilde
}

/// Condition number `||A|| ||A^-1||` in the ∞-norm.
pub fn condition_number_inf(a: &DenseOperator) -> Result<f64> {
    Ok(a.inf_norm() * invert(a)?.inf_norm())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionPair {
    /// `mu(I + B Psi)` with `B = V V`
    pub primal: f64,
    /// `mu(I + V Psi V)`
    pub dual: f64,
}

pub fn condition_compare(v: &DenseOperator, psi: &DiagonalOperator) -> Result<ConditionPair> {
    Error::check_dim(v.dim(), psi.len())?;
    let eye = DenseOperator::identity(v.dim());
    let b = v.matmul(v)?;
    let primal = eye.add(&b.mul_diag(psi)?)?;
    let dual = eye.add(&v.mul_diag(psi)?.matmul(v)?)?;
    Ok(ConditionPair {
        primal: condition_number_inf(&primal)?,
        dual: condition_number_inf(&dual)?,
    })
}

/// One paired CG step of the exact and filtered solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundStep {
    pub iteration: usize,
    /// `||q_k - q~_k||_inf` as computed.
    pub measured: f64,
    pub theorem: f64,
    pub specialized: f64,
    pub inputs: ErrorBoundInputs,
}

impl BoundStep {
    pub fn holds(&self) -> bool {
        self.measured <= self.theorem
    }
}

#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub steps: Vec<BoundStep>,
    /// `max |F_ij - F_ji|` of the filter operator.
    pub filter_asymmetry: f64,
}

impl BoundCheck {
    pub fn violations(&self) -> usize {
        self.steps.iter().filter(|s| !s.holds()).count()
    }
}

/// Runs CG on the exact dual system and on its filtered counterpart in
/// lockstep. Each solver follows its own direction sequence; at every step
/// the products `q_k` (exact) and `q~_k` (filtered) are compared against the
/// bound evaluated with the measured `e_k = rho_k - rho~_k`.
///
/// Stops as soon as either solver meets `eps` or after `max_iter` steps.
pub fn paired_bound_check(
    prob: &VarProblem,
    filter: FilterSpec,
    eps: f64,
    max_iter: usize,
) -> Result<BoundCheck> {
    prob.validate()?;
    let exact_prob = prob.with_backend(crate::var3d::Backend::Exact);
    let exact = Background::for_problem(&exact_prob)?;
    let filtered = Background::Filtered {
        coeffs: crate::recfilter::FilterCoefficients::compute(&prob.grid, &filter)?,
        spec: filter,
        scale: prob.sigma_b,
    };
    let psi = assemble_psi(prob);
    let v = exact.to_dense()?;
    let f = filtered.to_dense()?;
    let norm_v = v.inf_norm();
    let norm_f = f.inf_norm();
    let norm_psi = psi.inf_norm();
    let dist_fv = operator_distance(&f, &v)?;

    let mut it_exact = CgIteration::start(&build_rhs(prob, &exact)?);
    let mut it_filt = CgIteration::start(&build_rhs(prob, &filtered)?);
    let mut steps = Vec::new();
    while it_exact.relative_residual() > eps
        && it_filt.relative_residual() > eps
        && steps.len() < max_iter
    {
        let rho = it_exact.direction().clone();
        let rho_t = it_filt.direction().clone();
        let q = matvec_dual(&rho, &exact, &psi)?;
        let q_t = matvec_dual(&rho_t, &filtered, &psi)?;
        let inputs = ErrorBoundInputs {
            norm_v,
            norm_f,
            norm_psi,
            dist_fv,
            norm_ek: rho.sub(&rho_t).inf_norm(),
            norm_rho_tilde: rho_t.inf_norm(),
        };
        steps.push(BoundStep {
            iteration: steps.len(),
            measured: q.sub(&q_t).inf_norm(),
            theorem: theorem_bound(&inputs),
            specialized: specialized_bound(&inputs),
            inputs,
        });
        it_exact.advance(&q)?;
        it_filt.advance(&q_t)?;
    }
    Ok(BoundCheck {
        steps,
        filter_asymmetry: f.max_asymmetry(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::build_v_homogeneous;
    use crate::operator::{Grid1D, Signal};
    use crate::recfilter::materialize_homogeneous;
    use crate::var3d::{matvec_exact, matvec_filtered, Backend, ObsOperator};
    use crate::FilterCoefficients;
    use proptest::prelude::*;

    #[test]
    fn distance_to_self_is_zero() {
        let v = build_v_homogeneous(40, 3.0).unwrap();
        assert_eq!(operator_distance(&v, &v).unwrap(), 0.0);
        assert!(operator_distance(&v, &DenseOperator::identity(39)).is_err());
    }

    #[test]
    fn trimming() {
        let a = build_v_homogeneous(30, 3.0).unwrap();
        assert_eq!(trim_operator(&a, 0).unwrap(), a);
        assert_eq!(
            trim_operator(&DenseOperator::identity(12), 3).unwrap(),
            DenseOperator::identity(6)
        );
        let t = trim_width(20.0);
        assert_eq!(t, 40);
        let big = DenseOperator::identity(301);
        assert_eq!(trim_operator(&big, t).unwrap().dim(), 221);
        assert!(trim_operator(&DenseOperator::identity(10), 5).is_err());
    }

    #[test]
    fn trimming_never_increases_distance() {
        let v = build_v_homogeneous(120, 8.0).unwrap();
        let f = materialize_homogeneous(120, 8.0, &FilterSpec::first(1)).unwrap();
        let full = operator_distance(&f, &v).unwrap();
        for t in [1, 5, 16, 40] {
            let tr = operator_distance(&trim_operator(&f, t).unwrap(), &trim_operator(&v, t).unwrap()).unwrap();
            assert!(tr <= full);
        }
    }

    #[test]
    fn bound_arithmetic() {
        let zero = ErrorBoundInputs {
            norm_v: 1.0,
            norm_f: 1.0,
            norm_psi: 3.0,
            ..Default::default()
        };
        assert_eq!(theorem_bound(&zero), 0.0);
        assert_eq!(specialized_bound(&zero), 0.0);

        let inp = ErrorBoundInputs {
            norm_v: 1.0,
            norm_f: 1.0,
            norm_psi: 1.0,
            dist_fv: 0.2,
            norm_ek: 0.1,
            norm_rho_tilde: 1.0,
        };
        assert!((theorem_bound(&inp) - 0.6).abs() < 1e-15);
        assert!((specialized_bound(&inp) - 0.6).abs() < 1e-15);
        assert!(ErrorBoundInputs { norm_ek: -1.0, ..inp }.validate().is_err());
        assert!(inp.validate().is_ok());
    }

    #[test]
    fn condition_numbers() {
        let v = build_v_homogeneous(30, 3.0).unwrap();
        let c = condition_compare(&v, &DiagonalOperator::zeros(30)).unwrap();
        assert!((c.primal - 1.0).abs() < 1e-14 && (c.dual - 1.0).abs() < 1e-14);

        // with Psi = I both systems are I + V^2
        let v = build_v_homogeneous(200, 10.0).unwrap();
        let c = condition_compare(&v, &DiagonalOperator::identity(200)).unwrap();
        assert!((c.primal - c.dual).abs() <= 1e-12 * c.primal);

        assert!(condition_number_inf(&DenseOperator::zeros(3)).is_err());
    }

    #[test]
    fn single_step_bound_with_shared_input() {
        let m = 90;
        let v = build_v_homogeneous(m, 6.0).unwrap();
        let spec = FilterSpec::first(1);
        let coeffs = FilterCoefficients::compute(&Grid1D::uniform(m, 6.0).unwrap(), &spec).unwrap();
        let f = materialize_homogeneous(m, 6.0, &spec).unwrap();
        let psi = DiagonalOperator::new((0..m).map(|i| if i % 5 == 2 { 2.5 } else { 0.0 }).collect()).unwrap();
        let rho = Signal::from_fn(m, |i| (i as f64 * 0.13).sin() * 3.0);
        let q = matvec_exact(&rho, &v, &psi).unwrap();
        let qt = matvec_filtered(&rho, &coeffs, &spec, &psi).unwrap();
        let inp = ErrorBoundInputs {
            norm_v: v.inf_norm(),
            norm_f: f.inf_norm(),
            norm_psi: psi.inf_norm(),
            dist_fv: operator_distance(&f, &v).unwrap(),
            norm_ek: 0.0,
            norm_rho_tilde: rho.inf_norm(),
        };
        assert!(q.sub(&qt).inf_norm() <= theorem_bound(&inp));
    }

    #[test]
    fn paired_run_respects_bound() {
        let m = 150;
        let idx: Vec<usize> = (0..15).map(|k| 5 + 10 * k).collect();
        let prob = VarProblem::new(
            Grid1D::uniform(m, 10.0).unwrap(),
            ObsOperator::new(m, idx).unwrap(),
            vec![0.5; 15],
            (0..15).map(|k| (k as f64).cos()).collect(),
            Backend::Exact,
        )
        .unwrap();
        for spec in [FilterSpec::first(1), FilterSpec::first(5), FilterSpec::third(true)] {
            let check = paired_bound_check(&prob, spec, 1e-10, m).unwrap();
            assert!(!check.steps.is_empty());
            assert_eq!(check.violations(), 0);
            assert!(check.filter_asymmetry.is_finite());
            for s in &check.steps {
                assert!(s.theorem <= s.specialized * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn specialized_dominates_when_norms_at_most_one(
            nv in 0.0f64..=1.0, nf in 0.0f64..=1.0, np in 0.0f64..20.0,
            d in 0.0f64..2.0, e in 0.0f64..5.0, r in 0.0f64..5.0,
        ) {
            let inp = ErrorBoundInputs { norm_v: nv, norm_f: nf, norm_psi: np, dist_fv: d, norm_ek: e, norm_rho_tilde: r };
            prop_assert!(theorem_bound(&inp) <= specialized_bound(&inp) * (1.0 + 1e-15));
        }
    }
}
