//! Runs the three join algorithms on the same bucket sets and shows their
//! work counters. They always agree on the answer.

use constellation::catalog::{generate_dense, Rect};
use constellation::composition::{compose_with, Algorithm, JoinCounters, JoinSpec};
use constellation::filtering::{Filter, FilterCounters};
use constellation::patterns::einstein_cross;
use constellation::Quadtree;

fn main() -> anyhow::Result<()> {
    let eps = 2e-6;
    let q = einstein_cross(eps)?;
    let catalog = generate_dense(
        10_000,
        &q,
        (1.00000001, 1.0000009),
        10,
        5,
        Rect::new(0.0, 0.0, 7e-4, 7e-4),
    )?;
    let tree = Quadtree::build(&catalog, eps)?;
    let filter = Filter::new(&catalog, &tree, &q, 0.0, eps);
    let mut fc = FilterCounters::default();
    let sets: Vec<_> = filter
        .level_nodes()
        .iter()
        .flat_map(|&n| filter.bucket_sets(n, &mut fc))
        .filter(|bs| bs.is_complete())
        .collect();
    let spec = JoinSpec::pure(&q, eps);
    println!(
        "{} complete bucket sets from {} star comparisons",
        sets.len(),
        fc.comparisons
    );
    println!(
        "{:>9} {:>10} {:>10} {:>11} {:>9} {:>8} {:>9}",
        "algo", "solutions", "probes", "bit_probes", "products", "deleted", "ms"
    );
    for algo in Algorithm::CONCRETE {
        let mut jc = JoinCounters::default();
        let t = std::time::Instant::now();
        let n: usize = sets.iter().map(|bs| compose_with(algo, bs, &spec, &mut jc).len()).sum();
        println!(
            "{:>9} {:>10} {:>10} {:>11} {:>9} {:>8} {:>9.2}",
            algo.name(),
            n,
            jc.probes,
            jc.bit_probes,
            jc.matrix_products,
            jc.deleted,
            t.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
