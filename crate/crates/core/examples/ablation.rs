//! Seeded points-only versus points-and-lines comparison, the same run the
//! `simulate` command performs from a JSON spec.
//!
//! `cargo run --release --example ablation [seeds]`

use lineslam::sim::{run_experiment, ExperimentSpec};

fn main() -> lineslam::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let list: Vec<String> = (0..seeds).map(|s| s.to_string()).collect();
    let spec = ExperimentSpec::from_json(&format!(
        r#"{{"scene": {{"points": 30, "lines": 30}}, "noise": {{"pixel_sigma": 1.0}}, "seeds": [{}]}}"#,
        list.join(",")
    ))?;
    let out = run_experiment(&spec)?;
    for s in &out.report.summaries {
        println!("{:<12} mean ATE {:.5} m, max {:.5} m, {} failures", s.mode.label(), s.mean_ate, s.max_ate, s.failures);
    }
    if let Some(c) = &out.report.comparison {
        println!("lines lower the mean ATE by {:.1}% and win {}/{} seeds", c.mean_improvement_pct, c.wins, c.seeds);
    }
    Ok(())
}
