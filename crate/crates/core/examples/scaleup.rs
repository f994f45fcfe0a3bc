//! Pure queries on dense catalogs of growing size with seed-fixed planted
//! counts, plus a scale-invariant run on the smallest catalog.

use constellation::bench::{run_scaleup, ScaleupConfig};
use constellation::patterns::einstein_cross;

fn main() -> anyhow::Result<()> {
    let cfg = ScaleupConfig::default();
    let q = einstein_cross(cfg.epsilon)?;
    let report = run_scaleup(&q, &cfg)?;
    println!(
        "{:>6} {:>7} {:>8} {:>9} {:>6} {:>10}",
        "size", "planted", "expected", "solutions", "oracle", "elapsed_ms"
    );
    for r in &report.rows {
        let oracle = r.oracle_solutions.map_or("-".to_string(), |o| o.to_string());
        println!(
            "{:>6} {:>7} {:>8} {:>9} {:>6} {:>10.1}",
            r.size, r.planted, r.expected, r.solutions, oracle, r.elapsed_ms
        );
    }
    if let Some(g) = &report.general {
        println!(
            "general run on {} points, scale range {:?}: {} solutions, {}/{} planted recovered, verified = {}",
            g.size, g.scale_range, g.solutions, g.planted_recovered, g.planted, g.verified
        );
    }
    println!(
        "counts as expected: {}, nondecreasing: {}",
        report.all_expected, report.nondecreasing
    );
    Ok(())
}
