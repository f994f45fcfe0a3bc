//! Query execution: quadtree build, per-anchor filtering, composition and
//! verification, spread over worker threads.
//!
//! Work is split into tasks (entry-level nodes for pure queries, candidate
//! `s1` stars for general ones) and task `i` goes to worker `i % workers`.
//! Workers share the catalog and tree read-only and keep their own results
//! and counters; the merge sorts solutions by id sequence, so the output
//! does not depend on the number of workers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::composition::{self, Algorithm, Assignment, CycleOrder, JoinCounters, JoinSpec, Solution};
use crate::error::{Error, Result};
use crate::filtering::{BucketSet, Filter, FilterCounters};
use crate::general::{EpsilonMode, GeneralCounters, GeneralSearch, DEFAULT_SCALE_RANGE};
use crate::geometry::{attrs_within, distance_match, euclidean_distance, QueryPattern};
use crate::quadtree::{Quadtree, DEFAULT_MAX_DEPTH};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    #[default]
    Pure,
    General,
    Existential,
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryMode::Pure => "pure",
            QueryMode::General => "general",
            QueryMode::Existential => "existential",
        })
    }
}

impl FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pure" => Ok(QueryMode::Pure),
            "general" => Ok(QueryMode::General),
            "existential" => Ok(QueryMode::Existential),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

pub const DEFAULT_SELECTION_THRESHOLD: f64 = 0.003;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryConfig {
    pub mode: QueryMode,
    pub algo: Algorithm,
    pub epsilon: f64,
    pub theta: f64,
    /// Allowed scale factors for general queries.
    pub scale_range: (f64, f64),
    /// Scale-proportional tolerance fraction for general queries.
    pub relative_e: Option<f64>,
    pub workers: usize,
    /// `auto` picks `bucket-nl` when `epsilon <= selection_threshold`.
    pub selection_threshold: f64,
    pub cycle_order: CycleOrder,
    /// Tree descent during filtering; off means every node pair is scanned.
    pub descend: bool,
    pub max_depth: u32,
    /// Record per-anchor bucket sizes.
    pub trace_filter: bool,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self {
            mode: QueryMode::Pure,
            algo: Algorithm::Auto,
            epsilon: 0.0,
            theta: 0.0,
            scale_range: DEFAULT_SCALE_RANGE,
            relative_e: None,
            workers: 1,
            selection_threshold: DEFAULT_SELECTION_THRESHOLD,
            cycle_order: CycleOrder::ElementIndex,
            descend: true,
            max_depth: DEFAULT_MAX_DEPTH,
            trace_filter: false,
        }
    }
}

impl QueryConfig {
    /// Defaults with the pattern's own tolerance and attribute threshold.
    pub fn for_pattern(q: &QueryPattern) -> Self {
        Self {
            epsilon: q.epsilon(),
            theta: q.theta(),
            ..Self::default()
        }
    }

    pub fn with_mode(mut self, mode: QueryMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_algo(mut self, algo: Algorithm) -> Self {
        self.algo = algo;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_scale_range(mut self, low: f64, high: f64) -> Self {
        self.scale_range = (low, high);
        self
    }

    pub fn with_relative_e(mut self, e: Option<f64>) -> Self {
        self.relative_e = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and >= 0, got {}", self.epsilon));
        }
        if !(self.theta >= 0.0) {
            return bad(format!("theta must be >= 0, got {}", self.theta));
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if let Some(e) = self.relative_e {
            if !(0.0..1.0).contains(&e) {
                return bad(format!("relative_e must lie in [0, 1), got {e}"));
            }
        }
        let (low, high) = self.scale_range;
        if self.mode == QueryMode::General && !(low > 0.0 && low <= high && high.is_finite()) {
            return bad(format!("invalid scale range [{low}, {high}]"));
        }
        Ok(())
    }

    pub fn epsilon_mode(&self) -> EpsilonMode {
        match self.relative_e {
            Some(e) => EpsilonMode::Proportional(e),
            None => EpsilonMode::Constant(self.epsilon),
        }
    }
}

/// Resolves `auto` by the tolerance cutover; concrete choices pass through.
pub fn select_algorithm(cfg: &QueryConfig, eps: f64) -> Algorithm {
    match cfg.algo {
        Algorithm::Auto if eps <= cfg.selection_threshold => Algorithm::BucketNl,
        Algorithm::Auto => Algorithm::MmNl,
        other => other,
    }
}

/// Additive work counters. Totals equal the sum over workers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    /// Anchor stars (pure) or `(s1, s2)` star pairs (general) examined.
    pub anchors_total: u64,
    /// Anchors with at least one verified solution.
    pub anchors_productive: u64,
    /// Bucket sets with every bucket non-empty.
    pub bucket_sets_composed: u64,
    pub candidate_pairs: u64,
    pub bucket_entries: u64,
    /// Star-to-star distance evaluations during filtering.
    pub comparisons: u64,
    pub node_pairs_tested: u64,
    pub node_pairs_pruned: u64,
    pub descents: u64,
    pub join_probes: u64,
    pub join_bit_probes: u64,
    pub matrix_products: u64,
    pub mm_deleted: u64,
    /// Joined assignments rejected by the final check.
    pub rejected: u64,
    pub solutions: u64,
    pub filter_ms: f64,
    pub compose_ms: f64,
}

impl Counters {
    pub fn merge(&mut self, o: &Counters) {
        self.anchors_total += o.anchors_total;
        self.anchors_productive += o.anchors_productive;
        self.bucket_sets_composed += o.bucket_sets_composed;
        self.candidate_pairs += o.candidate_pairs;
        self.bucket_entries += o.bucket_entries;
        self.comparisons += o.comparisons;
        self.node_pairs_tested += o.node_pairs_tested;
        self.node_pairs_pruned += o.node_pairs_pruned;
        self.descents += o.descents;
        self.join_probes += o.join_probes;
        self.join_bit_probes += o.join_bit_probes;
        self.matrix_products += o.matrix_products;
        self.mm_deleted += o.mm_deleted;
        self.rejected += o.rejected;
        self.solutions += o.solutions;
        self.filter_ms += o.filter_ms;
        self.compose_ms += o.compose_ms;
    }

    fn add_filter(&mut self, f: &FilterCounters) {
        self.comparisons += f.comparisons;
        self.candidate_pairs += f.candidate_pairs;
        self.node_pairs_tested += f.node_pairs_tested;
        self.node_pairs_pruned += f.node_pairs_pruned;
        self.descents += f.descents;
    }

    fn add_join(&mut self, j: &JoinCounters) {
        self.join_probes += j.probes;
        self.join_bit_probes += j.bit_probes;
        self.matrix_products += j.matrix_products;
        self.mm_deleted += j.deleted;
    }

    /// Mean stars per non-anchor bucket over composed bucket sets.
    pub fn mean_bucket_occupancy(&self, k: usize) -> f64 {
        if self.bucket_sets_composed == 0 || k < 2 {
            return 0.0;
        }
        self.bucket_entries as f64 / (self.bucket_sets_composed * (k as u64 - 1)) as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub mode: QueryMode,
    pub algorithm: String,
    pub k: usize,
    pub catalog_size: usize,
    pub workers: usize,
    pub entry_level: u32,
    pub entry_level_capped: bool,
    pub tree_height: u32,
    pub node_count: usize,
    #[serde(flatten)]
    pub totals: Counters,
    pub mean_bucket_occupancy: f64,
    pub build_ms: f64,
    pub total_ms: f64,
    pub per_worker: Vec<Counters>,
}

/// Bucket sizes of one anchor, indexed by query element (anchor slot 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTrace {
    pub anchor_id: u64,
    /// Partner star in general mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner_id: Option<u64>,
    pub bucket_sizes: Vec<usize>,
    pub solutions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub solutions: Vec<Solution>,
    pub stats: QueryStats,
    /// Set for existential queries only.
    pub exists: Option<bool>,
    pub traces: Vec<AnchorTrace>,
}

#[derive(Default)]
struct WorkerOutput {
    solutions: Vec<Solution>,
    traces: Vec<AnchorTrace>,
    counters: Counters,
}

/// Runs a query end to end, building the quadtree first.
pub fn execute_query(catalog: &Catalog, q: &QueryPattern, cfg: &QueryConfig) -> Result<QueryOutcome> {
    cfg.validate()?;
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let index_eps = match cfg.mode {
        QueryMode::General => GeneralSearch::index_epsilon(cfg.epsilon_mode(), cfg.scale_range),
        _ => cfg.epsilon,
    };
    let started = Instant::now();
    let tree = Quadtree::build_with_max_depth(catalog, index_eps, cfg.max_depth)?;
    let build_ms = ms_since(started);
    let mut out = execute_with_tree(catalog, &tree, q, cfg)?;
    out.stats.build_ms = build_ms;
    out.stats.total_ms += build_ms;
    Ok(out)
}

/// Runs a query against an existing quadtree of `catalog`.
pub fn execute_with_tree(
    catalog: &Catalog,
    tree: &Quadtree,
    q: &QueryPattern,
    cfg: &QueryConfig,
) -> Result<QueryOutcome> {
    cfg.validate()?;
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    if q.attr_len() > 0 && q.attr_len() != catalog.attr_len() {
        return Err(Error::Pattern(format!(
            "pattern has {} attributes but the catalog has {}",
            q.attr_len(),
            catalog.attr_len()
        )));
    }
    let started = Instant::now();
    let algo = select_algorithm(cfg, cfg.epsilon);
    let outputs = match cfg.mode {
        QueryMode::Pure | QueryMode::Existential => run_pure(catalog, tree, q, cfg, algo)?,
        QueryMode::General => run_general(catalog, tree, q, cfg, algo)?,
    };

    let mut solutions = Vec::new();
    let mut traces = Vec::new();
    let mut totals = Counters::default();
    let mut per_worker = Vec::with_capacity(outputs.len());
    for w in outputs {
        totals.merge(&w.counters);
        per_worker.push(w.counters);
        solutions.extend(w.solutions);
        traces.extend(w.traces);
    }
    solutions.sort_by(|a, b| a.ids.cmp(&b.ids));
    solutions.dedup_by(|a, b| a.ids == b.ids);
    traces.sort_by_key(|t| (t.anchor_id, t.partner_id));

    let exists = (cfg.mode == QueryMode::Existential).then_some(totals.anchors_productive > 0);
    let ts = tree.stats();
    let stats = QueryStats {
        mode: cfg.mode,
        algorithm: algo.name().to_string(),
        k: q.k(),
        catalog_size: catalog.len(),
        workers: cfg.workers,
        entry_level: ts.entry_level,
        entry_level_capped: ts.entry_level_capped,
        tree_height: ts.height,
        node_count: ts.node_count,
        mean_bucket_occupancy: totals.mean_bucket_occupancy(q.k()),
        totals,
        build_ms: 0.0,
        total_ms: ms_since(started),
        per_worker,
    };
    Ok(QueryOutcome {
        solutions,
        stats,
        exists,
        traces,
    })
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs `tasks` interleaved over `workers` scoped threads.
fn run_parallel<T, F>(tasks: &[T], workers: usize, work: F) -> Result<Vec<WorkerOutput>>
where
    T: Sync,
    F: Fn(&T, &mut WorkerOutput) -> Result<()> + Sync,
{
    let run = |w: usize| -> Result<WorkerOutput> {
        let mut out = WorkerOutput::default();
        for task in tasks.iter().skip(w).step_by(workers) {
            work(task, &mut out)?;
        }
        Ok(out)
    };
    if workers == 1 {
        return Ok(vec![run(0)?]);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers).map(|w| s.spawn(move || run(w))).collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(worker, h)| match h.join() {
                Ok(r) => r,
                Err(panic) => Err(Error::WorkerPanic {
                    worker,
                    message: panic_message(&panic),
                }),
            })
            .collect()
    })
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

fn trace(bs: &BucketSet, partner: Option<u64>, solutions: usize) -> AnchorTrace {
    AnchorTrace {
        anchor_id: bs.anchor.id,
        partner_id: partner,
        bucket_sizes: bs.sizes(),
        solutions,
    }
}

fn run_pure(
    catalog: &Catalog,
    tree: &Quadtree,
    q: &QueryPattern,
    cfg: &QueryConfig,
    algo: Algorithm,
) -> Result<Vec<WorkerOutput>> {
    let filter = Filter::new(catalog, tree, q, cfg.theta, cfg.epsilon).with_descent(cfg.descend);
    let spec = JoinSpec::pure(q, cfg.epsilon).with_order(cfg.cycle_order);
    let existential = cfg.mode == QueryMode::Existential;
    run_parallel(filter.level_nodes(), cfg.workers, |&node, out| {
        let t = Instant::now();
        let mut fc = FilterCounters::default();
        let sets = filter.bucket_sets(node, &mut fc);
        out.counters.add_filter(&fc);
        out.counters.filter_ms += ms_since(t);

        let t = Instant::now();
        for bs in &sets {
            out.counters.anchors_total += 1;
            let mut found = 0;
            if bs.is_complete() {
                out.counters.bucket_sets_composed += 1;
                out.counters.bucket_entries += bs.entries() as u64;
                let mut jc = JoinCounters::default();
                if existential {
                    found = usize::from(composition::existential(bs, &spec, &mut jc));
                } else {
                    for a in composition::compose_with(algo, bs, &spec, &mut jc) {
                        if verify_pure(&a, catalog, q, cfg) {
                            out.solutions.push(Solution {
                                ids: a.ids(),
                                scale: None,
                            });
                            found += 1;
                        } else {
                            out.counters.rejected += 1;
                        }
                    }
                }
                out.counters.add_join(&jc);
            }
            if found > 0 {
                out.counters.anchors_productive += 1;
                if !existential {
                    out.counters.solutions += found as u64;
                }
            }
            if cfg.trace_filter {
                out.traces.push(trace(bs, None, found));
            }
        }
        out.counters.compose_ms += ms_since(t);
        Ok(())
    })
}

/// Final pure-mode check: distinct stars, attributes and every pairwise
/// distance within `epsilon`.
fn verify_pure(a: &Assignment, catalog: &Catalog, q: &QueryPattern, cfg: &QueryConfig) -> bool {
    let k = q.k();
    if a.0.len() != k {
        return false;
    }
    for i in 0..k {
        let star = &catalog.points()[a.0[i].index as usize];
        if !attrs_within(&star.attrs, &q.element(i).attrs, cfg.theta) {
            return false;
        }
        for j in (i + 1)..k {
            if a.0[i].index == a.0[j].index
                || !distance_match(
                    euclidean_distance(a.0[i].pos, a.0[j].pos),
                    q.distance(i, j),
                    cfg.epsilon,
                )
            {
                return false;
            }
        }
    }
    true
}

fn run_general(
    catalog: &Catalog,
    tree: &Quadtree,
    q: &QueryPattern,
    cfg: &QueryConfig,
    algo: Algorithm,
) -> Result<Vec<WorkerOutput>> {
    let search = GeneralSearch::new(catalog, tree, q, cfg.epsilon_mode(), cfg.scale_range, cfg.theta)?;
    let (a_idx, _) = search.config().farthest_pair;
    let attr_ok = |star: u32| {
        attrs_within(
            &catalog.points()[star as usize].attrs,
            &q.element(a_idx).attrs,
            cfg.theta,
        )
    };
    let stars: Vec<u32> = (0..catalog.len() as u32).filter(|&s| attr_ok(s)).collect();
    run_parallel(&stars, cfg.workers, |&star, out| {
        let t = Instant::now();
        let mut gc = GeneralCounters::default();
        let mut cands = Vec::new();
        search.candidates_for(star, &mut gc, &mut cands);
        out.counters.comparisons += gc.comparisons;
        out.counters.candidate_pairs += gc.candidate_pairs;
        out.counters.anchors_total += gc.star_pairs;
        out.counters.filter_ms += ms_since(t);

        let t = Instant::now();
        for cand in &cands {
            let bs = &cand.buckets;
            out.counters.bucket_entries += bs.entries() as u64;
            out.counters.bucket_sets_composed += 1;
            let spec = search.join_spec(cand.scalebasic).with_order(cfg.cycle_order);
            let mut jc = JoinCounters::default();
            let mut found = 0;
            for a in composition::compose_with(algo, bs, &spec, &mut jc) {
                match search.validate(&a) {
                    Some(scale) => {
                        out.solutions.push(Solution {
                            ids: a.ids(),
                            scale: Some(scale),
                        });
                        found += 1;
                    }
                    None => out.counters.rejected += 1,
                }
            }
            out.counters.add_join(&jc);
            if found > 0 {
                out.counters.anchors_productive += 1;
                out.counters.solutions += found as u64;
            }
            if cfg.trace_filter {
                out.traces
                    .push(trace(bs, Some(catalog.points()[cand.s2 as usize].id), found));
            }
        }
        out.counters.compose_ms += ms_since(t);
        Ok(())
    })
}
