//! Builds the spatial index for a few tolerances and prints its shape.

use constellation::catalog::{generate_uniform, Rect};
use constellation::Quadtree;

fn main() -> anyhow::Result<()> {
    let catalog = generate_uniform(50_000, Rect::new(0.0, 0.0, 1.0, 1.0), &[(10.0, 20.0)], 2)?;
    println!(
        "{:>8} {:>6} {:>6} {:>7} {:>7} {:>8} {:>9}",
        "epsilon", "entry", "height", "nodes", "leaves", "max_leaf", "build_ms"
    );
    for eps in [1e-1, 1e-2, 1e-3, 1e-5, 1e-8] {
        let tree = Quadtree::build(&catalog, eps)?;
        let s = tree.stats();
        println!(
            "{:>8.0e} {:>5}{} {:>6} {:>7} {:>7} {:>8} {:>9.2}",
            eps,
            s.entry_level,
            if s.entry_level_capped { "*" } else { " " },
            s.height,
            s.node_count,
            s.leaf_count,
            s.max_leaf_points,
            s.build_ms
        );
    }
    println!("* entry level capped at the maximum depth");

    let tree = Quadtree::build(&catalog, 1e-3)?;
    let level = tree.entry_level().min(tree.height());
    let nodes = tree.nodes_at_level(level)?;
    let node = tree.node(nodes[nodes.len() / 2]);
    let near = tree.neighbors(node, 0.01);
    println!(
        "{} entry-level nodes; {} lie within 0.01 of node {:?}",
        nodes.len(),
        near.len(),
        node.quadrant
    );
    Ok(())
}
