//! Smooths a sampled cosine with the exact operator and the filters and
//! writes the curves as CSV.
//!
//! cargo run --release --example cos_signal > cos.csv

use gaussrf::experiments::{cos_samples, response_table};

fn main() -> gaussrf::Result<()> {
    let (xs, s0) = cos_samples(252);
    let t = response_table(&xs, &s0, 15.0, &[1, 5, 50], true)?;

    let v = t.column_f64("v").unwrap();
    let half = xs.len() / 2;
    for col in ["rf1_k1", "rf1_k5", "rf1_k50", "rf3"] {
        let c = t.column_f64(col).unwrap();
        let mad: f64 = (0..half)
            .map(|i| (c[i].unwrap() - v[i].unwrap()).abs())
            .sum::<f64>()
            / half as f64;
        eprintln!("{col:>8}: mean |F s - V s| on the left half = {mad:.5}");
    }
    t.write_csv(std::io::stdout().lock())
}
