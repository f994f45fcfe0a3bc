//! Compares the engine with the brute-force oracle on random small
//! catalogs, in pure and general mode.

use constellation::catalog::{generate_uniform, Rect};
use constellation::oracle::{brute_general, brute_pure};
use constellation::{execute_query, QueryConfig, QueryMode, QueryPattern, Vec2};

fn main() -> anyhow::Result<()> {
    let shape = [Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.1), Vec2::new(0.2, 0.4)];
    let (mut agree, mut total) = (0, 0);
    for seed in 0..50 {
        let catalog = generate_uniform(120, Rect::new(0.0, 0.0, 2.0, 2.0), &[], seed)?;
        let eps = 0.01 + 0.002 * seed as f64;
        let q = QueryPattern::build(&shape, &[], eps, 0.0)?;

        let pure = execute_query(&catalog, &q, &QueryConfig::for_pattern(&q))?;
        let ids: Vec<Vec<u64>> = pure.solutions.iter().map(|s| s.ids.clone()).collect();
        let pure_ok = ids == brute_pure(&catalog, &q, eps, 0.0)?.ids();

        let cfg = QueryConfig::for_pattern(&q)
            .with_mode(QueryMode::General)
            .with_scale_range(0.3, 0.8);
        let general = execute_query(&catalog, &q, &cfg)?;
        let got: Vec<_> = general.solutions.iter().map(|s| (s.ids.clone(), s.scale)).collect();
        let general_ok = got == brute_general(&catalog, &q, cfg.epsilon_mode(), cfg.scale_range)?.solutions;

        total += 2;
        agree += usize::from(pure_ok) + usize::from(general_ok);
        if !(pure_ok && general_ok) {
            println!("seed {seed}: pure agrees = {pure_ok}, general agrees = {general_ok}");
        }
    }
    println!("{agree}/{total} engine answers equal the oracle");
    anyhow::ensure!(agree == total, "engine and oracle disagree");
    Ok(())
}
