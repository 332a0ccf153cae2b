//! Two-dimensional smoothing of a point source by filtering rows then
//! columns.
//!
//! cargo run --release --example separable_2d

use gaussrf::recfilter::{apply_separable_2d, Field2D, FilterCoefficients};
use gaussrf::{FilterSpec, Grid1D};

fn main() -> gaussrf::Result<()> {
    let (rows, cols) = (41, 61);
    let mut field = Field2D::zeros(rows, cols);
    field.set(rows / 2, cols / 2, 1.0);

    let spec = FilterSpec::first(4);
    let cx = FilterCoefficients::compute(&Grid1D::uniform(cols, 5.0)?, &spec)?;
    let cy = FilterCoefficients::compute(&Grid1D::uniform(rows, 3.0)?, &spec)?;
    let out = apply_separable_2d(&field, &cx, &cy, &spec)?;

    let total: f64 = out.data().iter().sum();
    println!("mass after smoothing: {total:.6}");
    for r in (0..rows).step_by(5) {
        let line: String = (0..cols)
            .step_by(3)
            .map(|c| match out.get(r, c) / out.get(rows / 2, cols / 2) {
                x if x > 0.6 => '#',
                x if x > 0.3 => '+',
                x if x > 0.05 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{line}|");
    }
    Ok(())
}
