//! How far the recursive filters are from the exact Gaussian operator.
//!
//! cargo run --release --example filter_vs_exact -- [m]

use gaussrf::analysis::operator_distance;
use gaussrf::gaussian::build_v_homogeneous;
use gaussrf::recfilter::materialize_homogeneous;
use gaussrf::FilterSpec;

fn main() -> gaussrf::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(601);
    println!("m = {m}");
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "sigma", "K=1", "K=50", "F3", "F3(q)");
    for sigma in [5.0, 10.0, 25.0, 50.0] {
        let v = build_v_homogeneous(m, sigma)?;
        let dist = |spec: FilterSpec| -> gaussrf::Result<f64> {
            operator_distance(&materialize_homogeneous(m, sigma, &spec)?, &v)
        };
        println!(
            "{:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            sigma,
            dist(FilterSpec::first(1))?,
            dist(FilterSpec::first(50))?,
            dist(FilterSpec::third(false))?,
            dist(FilterSpec::third(true))?,
        );
    }
    Ok(())
}
