//! Times the three composition algorithms over a tolerance sweep on a dense
//! catalog holding planted Einstein crosses.
//!
//! Usage: `cargo run --release --example bench_crossover [n] [side] [reps]`

use constellation::bench::{run_bench, BenchConfig};
use constellation::catalog::{generate_dense, Rect};
use constellation::patterns::einstein_cross;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(20_000), |s| s.parse())?;
    let side: f64 = args.get(1).map_or(Ok(1e-3), |s| s.parse())?;
    let reps: usize = args.get(2).map_or(Ok(5), |s| s.parse())?;

    let q = einstein_cross(1e-6)?;
    let catalog = generate_dense(n, &q, (1.00000001, 1.0000009), 20, 7, Rect::new(0.0, 0.0, side, side))?;
    let cfg = BenchConfig {
        epsilons: vec![1e-7, 5e-7, 1e-6, 2e-6, 3e-6],
        reps,
        ..BenchConfig::default()
    };
    let report = run_bench(&catalog, &q, &cfg)?;
    println!(
        "{:>9} {:>9} {:>10} {:>8} {:>11} {:>8} {:>10} {:>9}",
        "epsilon", "algo", "total_ms", "conf", "compose_ms", "conf", "solutions", "occupancy"
    );
    for c in &report.cells {
        println!(
            "{:>9.1e} {:>9} {:>10.2} {:>8.3} {:>11.2} {:>8.3} {:>10} {:>9.2}",
            c.epsilon,
            c.algorithm.name(),
            c.elapsed_ms.median,
            c.elapsed_ms.conf,
            c.compose_ms.median,
            c.compose_ms.conf,
            c.solutions,
            c.mean_bucket_occupancy
        );
    }
    println!("{}", report.summary);
    Ok(())
}
