//! Benchmark harness: tolerance sweeps across composition algorithms and
//! catalog scale-up runs.
//!
//! Each `(epsilon, algorithm)` cell is timed `reps` times against a quadtree
//! built once per tolerance. Cells report median and mean elapsed time and
//! the interval half-width `conf = alpha * sigma / sqrt(n)` with
//! `alpha = 1 - confidence_level` and `sigma` the sample standard deviation.

use std::fmt::Write as _;
use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::catalog::{generate_dense_with_truth, Catalog, PlantedInstance, Point, Rect};
use crate::composition::Algorithm;
use crate::engine::{execute_query, execute_with_tree, QueryConfig, QueryMode};
use crate::error::{Error, Result};
use crate::general::{holds_at_scale, normalize_pattern, EpsilonMode};
use crate::geometry::QueryPattern;
use crate::oracle::brute_pure_with_cap;
use crate::quadtree::Quadtree;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub conf: f64,
}

impl Summary {
    pub fn from_samples(samples: &[f64], confidence_level: f64) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_dev = if n > 1 {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let alpha = 1.0 - confidence_level;
        Self {
            n,
            median,
            mean,
            std_dev,
            conf: alpha * std_dev / (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub epsilons: Vec<f64>,
    pub algos: Vec<Algorithm>,
    pub reps: usize,
    pub confidence_level: f64,
    pub workers: usize,
    pub theta: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-7, 4.4e-6],
            algos: vec![Algorithm::BucketNl, Algorithm::MmNl, Algorithm::MmmNl],
            reps: 5,
            confidence_level: 0.95,
            workers: 1,
            theta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub epsilon: f64,
    pub algorithm: Algorithm,
    /// Query time excluding the quadtree build, in milliseconds.
    pub elapsed_ms: Summary,
    pub compose_ms: Summary,
    pub solutions: u64,
    pub anchors_total: u64,
    pub anchors_productive: u64,
    pub comparisons: u64,
    pub join_probes: u64,
    pub mm_deleted: u64,
    pub mean_bucket_occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub crate_version: String,
    pub unix_time: u64,
    pub catalog_size: usize,
    pub k: usize,
    pub workers: usize,
}

impl Environment {
    fn capture(catalog_size: usize, k: usize, workers: usize) -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            catalog_size,
            k,
            workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub environment: Environment,
    pub reps: usize,
    pub confidence_level: f64,
    pub build_ms: Vec<(f64, Summary)>,
    pub cells: Vec<BenchCell>,
    /// Per tolerance: whether every algorithm reported the same count.
    pub equivalent: Vec<(f64, bool)>,
    /// Smallest tolerance at which `mm-nl` has a lower median than
    /// `bucket-nl`.
    pub crossover_epsilon: Option<f64>,
    pub summary: String,
}

impl BenchReport {
    pub fn cell(&self, epsilon: f64, algo: Algorithm) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.epsilon == epsilon && c.algorithm == algo)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epsilon",
            "algorithm",
            "reps",
            "median_ms",
            "mean_ms",
            "std_ms",
            "conf_ms",
            "compose_median_ms",
            "solutions",
            "anchors_total",
            "anchors_productive",
            "comparisons",
            "join_probes",
            "mm_deleted",
            "mean_bucket_occupancy",
        ])?;
        for c in &self.cells {
            w.write_record([
                format!("{:e}", c.epsilon),
                c.algorithm.to_string(),
                c.elapsed_ms.n.to_string(),
                format!("{:.4}", c.elapsed_ms.median),
                format!("{:.4}", c.elapsed_ms.mean),
                format!("{:.4}", c.elapsed_ms.std_dev),
                format!("{:.4}", c.elapsed_ms.conf),
                format!("{:.4}", c.compose_ms.median),
                c.solutions.to_string(),
                c.anchors_total.to_string(),
                c.anchors_productive.to_string(),
                c.comparisons.to_string(),
                c.join_probes.to_string(),
                c.mm_deleted.to_string(),
                format!("{:.3}", c.mean_bucket_occupancy),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<bench csv>", e))?;
        Ok(())
    }

    /// Gnuplot script plotting median time with error bars per algorithm
    /// against epsilon, reading the CSV written by [`BenchReport::write_csv`].
    pub fn gnuplot_script(&self, csv_path: &str, png_path: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set terminal pngcairo size 900,600");
        let _ = writeln!(s, "set output '{png_path}'");
        let _ = writeln!(s, "set logscale x");
        let _ = writeln!(s, "set xlabel 'epsilon'");
        let _ = writeln!(s, "set ylabel 'median elapsed (ms)'");
        let _ = writeln!(s, "set key top left");
        let mut algos: Vec<Algorithm> = Vec::new();
        for c in &self.cells {
            if !algos.contains(&c.algorithm) {
                algos.push(c.algorithm);
            }
        }
        let plots: Vec<String> = algos
            .iter()
            .map(|a| {
                format!("'{csv_path}' using 1:(strcol(2) eq '{a}' ? $4 : 1/0):7 skip 1 with yerrorlines title '{a}'")
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        s
    }
}

/// Runs every `(epsilon, algorithm)` cell `reps` times.
pub fn run_bench(catalog: &Catalog, q: &QueryPattern, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.reps < 3 {
        return Err(Error::Config(format!(
            "bench needs at least 3 repetitions, got {}",
            cfg.reps
        )));
    }
    if cfg.algos.is_empty() || cfg.epsilons.is_empty() {
        return Err(Error::Config(
            "bench needs at least one epsilon and one algorithm".into(),
        ));
    }
    let mut cells = Vec::new();
    let mut build_ms = Vec::new();
    let mut equivalent = Vec::new();
    for &eps in &cfg.epsilons {
        let mut builds = Vec::with_capacity(cfg.reps);
        let mut tree = None;
        for _ in 0..cfg.reps {
            let t = Instant::now();
            tree = Some(Quadtree::build(catalog, eps)?);
            builds.push(t.elapsed().as_secs_f64() * 1e3);
        }
        let tree = tree.expect("reps >= 3");
        build_ms.push((eps, Summary::from_samples(&builds, cfg.confidence_level)));

        let mut counts = Vec::new();
        for &algo in &cfg.algos {
            let qc = QueryConfig {
                epsilon: eps,
                theta: cfg.theta,
                algo,
                workers: cfg.workers,
                ..QueryConfig::default()
            };
            let mut times = Vec::with_capacity(cfg.reps);
            let mut compose = Vec::with_capacity(cfg.reps);
            let mut last = None;
            for _ in 0..cfg.reps {
                let out = execute_with_tree(catalog, &tree, q, &qc)
                    .map_err(|e| Error::Config(format!("bench cell (epsilon {eps}, {algo}) failed: {e}")))?;
                times.push(out.stats.total_ms);
                compose.push(out.stats.totals.compose_ms);
                last = Some(out.stats);
            }
            let st = last.expect("reps >= 3");
            counts.push(st.totals.solutions);
            cells.push(BenchCell {
                epsilon: eps,
                algorithm: algo,
                elapsed_ms: Summary::from_samples(&times, cfg.confidence_level),
                compose_ms: Summary::from_samples(&compose, cfg.confidence_level),
                solutions: st.totals.solutions,
                anchors_total: st.totals.anchors_total,
                anchors_productive: st.totals.anchors_productive,
                comparisons: st.totals.comparisons,
                join_probes: st.totals.join_probes,
                mm_deleted: st.totals.mm_deleted,
                mean_bucket_occupancy: st.mean_bucket_occupancy,
            });
        }
        equivalent.push((eps, counts.windows(2).all(|w| w[0] == w[1])));
    }

    let mut report = BenchReport {
        environment: Environment::capture(catalog.len(), q.k(), cfg.workers),
        reps: cfg.reps,
        confidence_level: cfg.confidence_level,
        build_ms,
        cells,
        equivalent,
        crossover_epsilon: None,
        summary: String::new(),
    };
    let mut eps_sorted = cfg.epsilons.clone();
    eps_sorted.sort_by(f64::total_cmp);
    report.crossover_epsilon = eps_sorted.into_iter().find(|&e| {
        match (report.cell(e, Algorithm::BucketNl), report.cell(e, Algorithm::MmNl)) {
            (Some(b), Some(m)) => m.elapsed_ms.median < b.elapsed_ms.median,
            _ => false,
        }
    });
    report.summary = match report.crossover_epsilon {
        Some(e) => format!("mm-nl first beats bucket-nl at epsilon {e:e}"),
        None if report.cells.iter().any(|c| c.algorithm == Algorithm::MmNl)
            && report.cells.iter().any(|c| c.algorithm == Algorithm::BucketNl) =>
        {
            "mm-nl never beats bucket-nl in this sweep".into()
        }
        None => "crossover needs both bucket-nl and mm-nl".into(),
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleupConfig {
    pub sizes: Vec<usize>,
    /// Planted pattern copies per size.
    pub planted: Vec<usize>,
    pub epsilon: f64,
    pub seed: u64,
    pub region: Rect,
    /// Scale factors of planted copies.
    pub scale_interval: (f64, f64),
    pub algo: Algorithm,
    pub workers: usize,
    /// Sizes up to this are also answered by the brute-force oracle.
    pub oracle_max_size: usize,
    pub general: Option<GeneralRunConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralRunConfig {
    pub size: usize,
    pub planted: usize,
    pub scale_range: (f64, f64),
}

impl Default for ScaleupConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1000, 5000, 10000, 20000],
            planted: vec![0, 20, 200, 1000],
            epsilon: 4.4e-6,
            seed: 7,
            region: Rect::new(0.0, 0.0, 1.0, 1.0),
            scale_interval: (1.00000001, 1.0000009),
            algo: Algorithm::BucketNl,
            workers: 1,
            oracle_max_size: 1000,
            general: Some(GeneralRunConfig {
                size: 1000,
                planted: 10,
                scale_range: (0.5, 1.0),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleupRow {
    pub size: usize,
    pub planted: usize,
    /// Solutions per planted copy: the pattern's own self-matches at
    /// `epsilon`, found by the oracle.
    pub multiplicity: usize,
    pub expected: usize,
    pub solutions: usize,
    pub oracle_solutions: Option<usize>,
    /// Every solution uses stars of a single planted copy.
    pub within_instances: bool,
    pub elapsed_ms: f64,
    pub anchors_productive: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralRunReport {
    pub size: usize,
    pub planted: usize,
    pub scale_range: (f64, f64),
    pub solutions: usize,
    /// Planted copies whose own ids appear as a solution.
    pub planted_recovered: usize,
    /// Every solution holds at the midpoint of its scale window.
    pub verified: bool,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleupReport {
    pub epsilon: f64,
    pub seed: u64,
    pub rows: Vec<ScaleupRow>,
    pub all_expected: bool,
    pub nondecreasing: bool,
    pub general: Option<GeneralRunReport>,
}

/// Solutions of `q` against a catalog holding only the pattern itself.
pub fn self_matches(q: &QueryPattern, eps: f64) -> Result<usize> {
    let points = q
        .positions()
        .iter()
        .enumerate()
        .map(|(i, p)| Point {
            id: i as u64,
            x: p.x,
            y: p.y,
            attrs: q.element(i).attrs.clone(),
        })
        .collect();
    let c = Catalog::new(points, (0..q.attr_len()).map(|i| format!("a{i}")).collect())?;
    Ok(brute_pure_with_cap(&c, q, eps, q.theta(), q.k())?.solutions.len())
}

fn instance_of(truth: &[PlantedInstance]) -> std::collections::HashMap<u64, usize> {
    truth
        .iter()
        .enumerate()
        .flat_map(|(t, inst)| inst.ids.iter().map(move |&id| (id, t)))
        .collect()
}

pub fn run_scaleup(q: &QueryPattern, cfg: &ScaleupConfig) -> Result<ScaleupReport> {
    if cfg.sizes.len() != cfg.planted.len() {
        return Err(Error::Config(format!(
            "{} sizes but {} planted counts",
            cfg.sizes.len(),
            cfg.planted.len()
        )));
    }
    let multiplicity = self_matches(q, cfg.epsilon)?;
    let qc = QueryConfig {
        epsilon: cfg.epsilon,
        theta: q.theta(),
        algo: cfg.algo,
        workers: cfg.workers,
        ..QueryConfig::default()
    };
    let mut rows = Vec::new();
    for (&size, &planted) in cfg.sizes.iter().zip(&cfg.planted) {
        let (catalog, truth) = generate_dense_with_truth(size, q, cfg.scale_interval, planted, cfg.seed, cfg.region)?;
        let t = Instant::now();
        let out = execute_query(&catalog, q, &qc)?;
        let elapsed_ms = t.elapsed().as_secs_f64() * 1e3;
        let owner = instance_of(&truth);
        let within_instances = out.solutions.iter().all(|s| {
            let first = owner.get(&s.ids[0]);
            first.is_some() && s.ids.iter().all(|id| owner.get(id) == first)
        });
        let oracle_solutions = if size <= cfg.oracle_max_size {
            let r = brute_pure_with_cap(&catalog, q, cfg.epsilon, q.theta(), size)?;
            Some(r.solutions.len())
        } else {
            None
        };
        log::info!(
            "scaleup size {size}: {} solutions in {elapsed_ms:.1} ms",
            out.solutions.len()
        );
        rows.push(ScaleupRow {
            size,
            planted,
            multiplicity,
            expected: planted * multiplicity,
            solutions: out.solutions.len(),
            oracle_solutions,
            within_instances,
            elapsed_ms,
            anchors_productive: out.stats.totals.anchors_productive,
        });
    }
    let all_expected = rows.iter().all(|r| {
        r.solutions == r.expected && r.within_instances && r.oracle_solutions.is_none_or(|o| o == r.solutions)
    });
    let mut by_planted: Vec<&ScaleupRow> = rows.iter().collect();
    by_planted.sort_by_key(|r| r.planted);
    let nondecreasing = by_planted.windows(2).all(|w| w[0].solutions <= w[1].solutions);

    let general = match &cfg.general {
        Some(g) => Some(run_general_check(q, cfg, g)?),
        None => None,
    };
    Ok(ScaleupReport {
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        rows,
        all_expected,
        nondecreasing,
        general,
    })
}

fn run_general_check(q: &QueryPattern, cfg: &ScaleupConfig, g: &GeneralRunConfig) -> Result<GeneralRunReport> {
    // The scale range bounds the farthest-pair distance of a match, so copies
    // are planted with that distance inside the range.
    let far = q.dist_matrix().max_pair().map_or(1.0, |(_, _, d)| d);
    let plant = (g.scale_range.0 / far, g.scale_range.1 / far);
    let (catalog, truth) = generate_dense_with_truth(g.size, q, plant, g.planted, cfg.seed, cfg.region)?;
    let qc = QueryConfig {
        mode: QueryMode::General,
        epsilon: cfg.epsilon,
        theta: q.theta(),
        algo: cfg.algo,
        workers: cfg.workers,
        scale_range: g.scale_range,
        ..QueryConfig::default()
    };
    let t = Instant::now();
    let out = execute_query(&catalog, q, &qc)?;
    let elapsed_ms = t.elapsed().as_secs_f64() * 1e3;
    let (qn, _) = normalize_pattern(q);
    let mode = EpsilonMode::Constant(cfg.epsilon);
    let verified = out.solutions.iter().all(|s| {
        let pos: Vec<_> = s.ids.iter().map(|&id| catalog.points()[id as usize].pos()).collect();
        s.scale
            .is_some_and(|iv| iv.satisfiable() && holds_at_scale(&pos, qn.dist_matrix(), mode, iv.midpoint()))
    });
    let found: std::collections::HashSet<&[u64]> = out.solutions.iter().map(|s| s.ids.as_slice()).collect();
    let planted_recovered = truth.iter().filter(|t| found.contains(t.ids.as_slice())).count();
    Ok(GeneralRunReport {
        size: g.size,
        planted: g.planted,
        scale_range: g.scale_range,
        solutions: out.solutions.len(),
        planted_recovered,
        verified,
        elapsed_ms,
    })
}
