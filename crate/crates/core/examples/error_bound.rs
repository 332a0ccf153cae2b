//! Per-iteration check that replacing V by a recursive filter inside CG
//! perturbs the matrix-vector products by no more than the a-priori bound.
//!
//! cargo run --release --example error_bound

use gaussrf::analysis::paired_bound_check;
use gaussrf::experiments::SyntheticSetup;
use gaussrf::var3d::Backend;
use gaussrf::FilterSpec;

fn main() -> gaussrf::Result<()> {
    let inst = SyntheticSetup {
        m: 150,
        sigma: 8.0,
        obs_count: 30,
        noise: 0.2,
        seed: 11,
    }
    .generate(Backend::Exact)?;

    for spec in [FilterSpec::first(1), FilterSpec::first(10), FilterSpec::third(true)] {
        let check = paired_bound_check(&inst.problem, spec, 1e-10, 150)?;
        println!(
            "{:?} K={}: {} steps, {} violations, asymmetry of F {:.1e}",
            spec.order,
            spec.iterations,
            check.steps.len(),
            check.violations(),
            check.filter_asymmetry
        );
        for s in check.steps.iter().take(5) {
            println!(
                "  k={:<2} measured {:.3e}  bound {:.3e}  specialized {:.3e}",
                s.iteration, s.measured, s.theorem, s.specialized
            );
        }
    }
    Ok(())
}
