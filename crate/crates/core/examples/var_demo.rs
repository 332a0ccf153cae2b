//! A synthetic 3D-Var analysis: truth, background, noisy observations, and
//! the increment from each background backend.
//!
//! cargo run --release --example var_demo

use gaussrf::experiments::SyntheticSetup;
use gaussrf::var3d::{assimilate, Backend};

fn main() -> gaussrf::Result<()> {
    let setup = SyntheticSetup {
        m: 200,
        sigma: 10.0,
        obs_count: 20,
        noise: 0.1,
        seed: 7,
    };
    let inst = setup.generate(Backend::Exact)?;
    let err_b = inst.background.sub(&inst.truth).norm2();
    println!("background error (2-norm): {err_b:.4}");

    for backend in [
        Backend::Exact,
        Backend::Rf1 { iterations: 1 },
        Backend::Rf1 { iterations: 5 },
        Backend::Rf3 { use_q: true },
    ] {
        let out = assimilate(&inst.problem.with_backend(backend), 1e-10, 200)?;
        let analysis = inst.background.add(&out.increment);
        println!(
            "{:>8}: {:>3} CG iterations, analysis error {:.4}",
            backend.label(),
            out.report.iterations,
            analysis.sub(&inst.truth).norm2()
        );
    }
    Ok(())
}
