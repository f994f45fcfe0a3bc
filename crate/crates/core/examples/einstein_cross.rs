//! Finds an Einstein cross hidden among uniform noise.
//!
//! Usage: `cargo run --release --example einstein_cross [noise] [epsilon]`

use constellation::catalog::{generate_uniform, Rect};
use constellation::patterns::{einstein_cross, einstein_cross_at};
use constellation::{execute_query, Catalog, Point, QueryConfig, Vec2};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let noise: usize = args.first().map_or(Ok(10_000), |s| s.parse())?;
    let eps: f64 = args.get(1).map_or(Ok(1e-6), |s| s.parse())?;

    let mut points = generate_uniform(noise, Rect::new(0.0, 0.0, 1.0, 1.0), &[], 1)?
        .points()
        .to_vec();
    for (i, p) in einstein_cross_at(Vec2::new(0.25, 0.75)).into_iter().enumerate() {
        points.push(Point {
            id: 1_000_000 + i as u64,
            x: p.x,
            y: p.y,
            attrs: vec![],
        });
    }
    let catalog = Catalog::new(points, vec![])?;

    let q = einstein_cross(eps)?;
    let out = execute_query(&catalog, &q, &QueryConfig::for_pattern(&q))?;
    println!(
        "{} points, epsilon {eps:e}: {} solutions in {:.1} ms",
        catalog.len(),
        out.solutions.len(),
        out.stats.total_ms
    );
    for s in &out.solutions {
        println!("  A B C D = {:?}", s.ids);
    }
    println!(
        "entry level {}, {} anchors, {} comparisons, {} node pairs pruned of {}",
        out.stats.entry_level,
        out.stats.totals.anchors_total,
        out.stats.totals.comparisons,
        out.stats.totals.node_pairs_pruned,
        out.stats.totals.node_pairs_tested
    );
    Ok(())
}
