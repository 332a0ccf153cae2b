//! Distances on the central block once boundary rows and columns are cut,
//! on a grid with spacing 6 and correlation radius 120.
//!
//! cargo run --release --example edge_effects

use gaussrf::experiments::{run_table3, ExperimentConfig};

fn main() -> gaussrf::Result<()> {
    for use_q in [false, true] {
        let t = run_table3(&ExperimentConfig {
            use_q: Some(use_q),
            ..Default::default()
        })?;
        println!("use_q = {use_q}");
        for row in &t.rows {
            let k = row[0].as_f64().unwrap();
            print!("  K = {k:>3}  F1 {:.4}", row[1].as_f64().unwrap());
            if let Some(d3) = row[2].as_f64() {
                print!("  F3 {d3:.4}");
            }
            println!();
        }
    }
    Ok(())
}
