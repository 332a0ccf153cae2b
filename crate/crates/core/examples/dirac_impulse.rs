//! Impulse responses: the columns of V and F through the grid center.
//!
//! cargo run --release --example dirac_impulse

use gaussrf::gaussian::{build_v_homogeneous, gaussian_kernel};
use gaussrf::recfilter::{apply_filter, FilterCoefficients};
use gaussrf::{FilterSpec, Grid1D, Signal};

fn main() -> gaussrf::Result<()> {
    let (m, sigma) = (301, 20.0);
    let center = m / 2;
    let grid = Grid1D::uniform(m, sigma)?;
    let s0 = Signal::impulse(m, center);

    let exact = build_v_homogeneous(m, sigma)?.mat_vec(&s0)?;
    println!("g(0, sigma)   peak {:.6}", gaussian_kernel(0.0, sigma)?);
    println!("V             peak {:.6}", exact[center]);
    let mut specs: Vec<FilterSpec> = [1, 5, 10].map(FilterSpec::first).to_vec();
    specs.push(FilterSpec::third(true));
    for spec in specs {
        let c = FilterCoefficients::compute(&grid, &spec)?;
        let out = apply_filter(&s0, &c, &spec)?;
        let gap = out.sub(&exact).inf_norm();
        println!(
            "{:?} K={:<3} peak {:.6}  max gap {:.2e}",
            spec.order, spec.iterations, out[center], gap
        );
    }
    Ok(())
}
