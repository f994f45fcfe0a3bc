//! Writes a dense synthetic catalog with planted crosses, then confirms each
//! planted copy is answered by a query on the written file.
//!
//! Usage: `cargo run --release --example generate_dense [out.csv]`

use constellation::catalog::{generate_dense_with_truth, Rect};
use constellation::patterns::einstein_cross;
use constellation::{execute_query, Catalog, QueryConfig};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("dense.csv").display().to_string());
    let q = einstein_cross(4.4e-6)?;
    let (catalog, truth) = generate_dense_with_truth(
        20_000,
        &q,
        (1.00000001, 1.0000009),
        50,
        7,
        Rect::new(0.0, 0.0, 1.0, 1.0),
    )?;
    catalog.write_csv(&path)?;
    println!(
        "wrote {} points with {} planted crosses to {path}",
        catalog.len(),
        truth.len()
    );

    let reread = Catalog::load_csv(&path, &[])?;
    let out = execute_query(&reread, &q, &QueryConfig::for_pattern(&q))?;
    let found = truth
        .iter()
        .filter(|t| out.solutions.iter().any(|s| s.ids == t.ids))
        .count();
    println!(
        "query found {} solutions; {found}/{} planted copies recovered",
        out.solutions.len(),
        truth.len()
    );
    Ok(())
}
