//! Infinity-norm condition numbers of the primal and dual 3D-Var matrices.
//!
//! cargo run --release --example conditioning

use gaussrf::analysis::condition_compare;
use gaussrf::experiments::SyntheticSetup;
use gaussrf::var3d::{assemble_psi, assimilate, primal_solve, Backend};

fn main() -> gaussrf::Result<()> {
    println!("{:>4} {:>6} {:>5} {:>10} {:>10} {:>6} {:>6}", "m", "sigma", "obs", "primal", "dual", "it_p", "it_d");
    for (m, sigma, obs, seed) in [(60, 3.0, 6, 1), (100, 5.0, 20, 2), (150, 8.0, 50, 3), (200, 12.0, 100, 4)] {
        let inst = SyntheticSetup { m, sigma, obs_count: obs, noise: 0.3, seed }.generate(Backend::Exact)?;
        let p = &inst.problem;
        let v = p.gaussian_operator()?.scale(p.sigma_b);
        let c = condition_compare(&v, &assemble_psi(p))?;
        let it_p = primal_solve(p, 1e-8, m)?.report.iterations;
        let it_d = assimilate(p, 1e-8, m)?.report.iterations;
        println!("{m:>4} {sigma:>6} {obs:>5} {:>10.3} {:>10.3} {it_p:>6} {it_d:>6}", c.primal, c.dual);
    }
    Ok(())
}
