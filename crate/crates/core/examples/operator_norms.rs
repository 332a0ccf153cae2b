//! Infinity norms of the one-pass first- and third-order filters.
//!
//! cargo run --release --example operator_norms

use gaussrf::experiments::{run_table1, ExperimentConfig};

fn main() -> gaussrf::Result<()> {
    for use_q in [false, true] {
        let cfg = ExperimentConfig {
            use_q: Some(use_q),
            ..Default::default()
        };
        let t = run_table1(&cfg)?;
        println!("use_q = {use_q}");
        println!("{:>6} {:>10} {:>10}", "sigma", "||F1||", "||F3||");
        for row in &t.rows {
            let v: Vec<f64> = row.iter().filter_map(|c| c.as_f64()).collect();
            println!("{:>6} {:>10.4} {:>10.4}", v[0], v[1], v[2]);
        }
    }
    Ok(())
}
