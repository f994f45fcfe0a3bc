//! Scale-invariant search: a triangle planted at three different sizes is
//! found with a satisfying scale window for each copy, under both constant
//! and proportional tolerances.

use constellation::{execute_query, Catalog, Point, QueryConfig, QueryMode, QueryPattern, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let shape = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.3, 0.8)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut points = Vec::new();
    for (copy, (scale, ox, oy)) in [(0.6, 1.0, 1.0), (1.0, 5.0, 2.0), (1.8, 2.0, 6.0)]
        .into_iter()
        .enumerate()
    {
        for (i, p) in shape.iter().enumerate() {
            points.push(Point {
                id: (copy * 10 + i) as u64,
                x: ox + p.x * scale,
                y: oy + p.y * scale,
                attrs: vec![],
            });
        }
    }
    for id in 100..400 {
        points.push(Point {
            id,
            x: rng.gen_range(0.0..10.0),
            y: rng.gen_range(0.0..10.0),
            attrs: vec![],
        });
    }
    let catalog = Catalog::new(points, vec![])?;
    let q = QueryPattern::build(&shape, &[], 1e-6, 0.0)?;

    for (label, cfg) in [
        ("constant epsilon 1e-6", QueryConfig::for_pattern(&q)),
        (
            "proportional e = 1e-6",
            QueryConfig::for_pattern(&q).with_relative_e(Some(1e-6)),
        ),
    ] {
        // The scale range bounds the distance of the pattern's farthest pair.
        let cfg = cfg.with_mode(QueryMode::General).with_scale_range(0.5, 2.0);
        let out = execute_query(&catalog, &q, &cfg)?;
        println!(
            "{label}: {} solutions from {} star pairs",
            out.solutions.len(),
            out.stats.totals.anchors_total
        );
        for s in &out.solutions {
            println!(
                "  {:?} scale {}",
                s.ids,
                s.scale.expect("general solutions carry a scale window")
            );
        }
    }
    Ok(())
}
