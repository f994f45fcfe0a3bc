//! Existential queries stop at the first solution per anchor and only
//! report whether any match exists.

use constellation::catalog::{generate_dense, Rect};
use constellation::patterns::einstein_cross;
use constellation::{execute_query, QueryConfig, QueryMode};

fn main() -> anyhow::Result<()> {
    let q = einstein_cross(1e-6)?;
    let region = Rect::new(0.0, 0.0, 0.01, 0.01);
    for planted in [0, 3] {
        let catalog = generate_dense(5000, &q, (1.00000001, 1.0000009), planted, 11, region)?;
        let full = execute_query(&catalog, &q, &QueryConfig::for_pattern(&q))?;
        let ex = execute_query(
            &catalog,
            &q,
            &QueryConfig::for_pattern(&q).with_mode(QueryMode::Existential),
        )?;
        println!(
            "{planted} planted: exists = {:?}, productive anchors = {}, full query found {} solutions",
            ex.exists.expect("existential queries set exists"),
            ex.stats.totals.anchors_productive,
            full.solutions.len()
        );
    }
    Ok(())
}
