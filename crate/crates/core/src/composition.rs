//! Joining bucket candidates into full assignments.
//!
//! The non-anchor buckets of a [`BucketSet`] are arranged in a cycle
//! `B_c0 -> B_c1 -> ... -> B_c0`. `Bucket_NL` walks that cycle with a nested
//! loop, checking every constraint against the stars already placed. The
//! matrix variants first build one [`PairMatrix`] per cycle edge and use the
//! diagonal of the boolean chain product to delete head-bucket stars that lie
//! on no closed chain: once for `MM_NL`, once per rotation for `MMM_NL`. The
//! nested loop that follows reads cycle edges from the matrices instead of
//! recomputing distances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};
use crate::filtering::{BucketSet, Candidate};
use crate::general::ScaleInterval;
use crate::geometry::{distance_match, euclidean_distance, DistMatrix, QueryPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    BucketNl,
    MmNl,
    MmmNl,
    Auto,
}

impl Algorithm {
    pub const CONCRETE: [Algorithm; 3] = [Algorithm::BucketNl, Algorithm::MmNl, Algorithm::MmmNl];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BucketNl => "bucket-nl",
            Algorithm::MmNl => "mm-nl",
            Algorithm::MmmNl => "mmm-nl",
            Algorithm::Auto => "auto",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bucket-nl" => Ok(Algorithm::BucketNl),
            "mm-nl" => Ok(Algorithm::MmNl),
            "mmm-nl" => Ok(Algorithm::MmmNl),
            "auto" => Ok(Algorithm::Auto),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How the non-anchor buckets are arranged into the join cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleOrder {
    #[default]
    ElementIndex,
    BucketSize,
}

impl FromStr for CycleOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "index" | "element-index" => Ok(CycleOrder::ElementIndex),
            "size" | "bucket-size" => Ok(CycleOrder::BucketSize),
            other => Err(Error::Config(format!("unknown cycle order `{other}`"))),
        }
    }
}

/// Target distances and tolerance for a join.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinSpec {
    pub targets: DistMatrix,
    pub eps: f64,
    pub order: CycleOrder,
}

impl JoinSpec {
    pub fn new(targets: DistMatrix, eps: f64) -> Self {
        Self {
            targets,
            eps,
            order: CycleOrder::default(),
        }
    }

    /// Pure-mode spec: the pattern's own distances.
    pub fn pure(q: &QueryPattern, eps: f64) -> Self {
        Self::new(q.dist_matrix().clone(), eps)
    }

    pub fn with_order(mut self, order: CycleOrder) -> Self {
        self.order = order;
        self
    }

    #[inline]
    fn matches(&self, a: &Candidate, b: &Candidate, i: usize, j: usize) -> bool {
        distance_match(euclidean_distance(a.pos, b.pos), self.targets.get(i, j), self.eps)
    }
}

/// One star per query element, in element order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment(pub Vec<Candidate>);

impl Assignment {
    pub fn ids(&self) -> Vec<u64> {
        self.0.iter().map(|c| c.id).collect()
    }
}

/// A verified answer: `ids[p]` plays query element `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub ids: Vec<u64>,
    /// Satisfying scale window; `None` for pure queries.
    pub scale: Option<ScaleInterval>,
}

/// Boolean compatibility matrix between two buckets: bit `(r, c)` is set iff
/// the `r`-th star of `rows_bucket` and the `c`-th star of `cols_bucket` are
/// distinct and their distance matches the target.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    pub rows_bucket: usize,
    pub cols_bucket: usize,
    pub bits: BitMatrix,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinCounters {
    /// Distance evaluations made by joins and matrix construction.
    pub probes: u64,
    /// Cycle edges read from a pair matrix instead of recomputed.
    pub bit_probes: u64,
    pub matrix_products: u64,
    /// Stars deleted from buckets by diagonal filtering.
    pub deleted: u64,
    pub tuples: u64,
}

impl JoinCounters {
    pub fn merge(&mut self, o: &Self) {
        self.probes += o.probes;
        self.bit_probes += o.bit_probes;
        self.matrix_products += o.matrix_products;
        self.deleted += o.deleted;
        self.tuples += o.tuples;
    }
}

/// The join cycle over non-anchor elements.
pub fn cycle_order(bs: &BucketSet, order: CycleOrder) -> Vec<usize> {
    let mut cycle: Vec<usize> = bs.non_anchor().collect();
    if order == CycleOrder::BucketSize {
        cycle.sort_by_key(|&i| (bs.buckets[i].len(), i));
    }
    cycle
}

/// Working state of a join: bucket contents per cycle position and, for the
/// matrix algorithms, the edge matrix from each position to the next.
struct Plan {
    cycle: Vec<usize>,
    lists: Vec<Vec<Candidate>>,
    edges: Option<Vec<BitMatrix>>,
}

impl Plan {
    fn new(bs: &BucketSet, spec: &JoinSpec) -> Self {
        let cycle = cycle_order(bs, spec.order);
        let lists = cycle.iter().map(|&e| bs.buckets[e].clone()).collect();
        Self {
            cycle,
            lists,
            edges: None,
        }
    }

    fn with_matrices(bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> Self {
        let mut plan = Self::new(bs, spec);
        if plan.cycle.len() >= 2 {
            let ms = build_pair_matrices(bs, spec, &plan.cycle, counters);
            plan.edges = Some(ms.into_iter().map(|m| m.bits).collect());
        }
        plan
    }

    fn pair_matrices(&self) -> Vec<PairMatrix> {
        let m = self.cycle.len();
        self.edges
            .iter()
            .flatten()
            .enumerate()
            .map(|(t, bits)| PairMatrix {
                rows_bucket: self.cycle[t],
                cols_bucket: self.cycle[(t + 1) % m],
                bits: bits.clone(),
            })
            .collect()
    }

    /// Diagonal filtering of the chain starting at position `t`. Returns
    /// false when the position's bucket became empty.
    fn filter_rotation(&mut self, t: usize, counters: &mut JoinCounters) -> bool {
        let Some(edges) = self.edges.as_mut() else {
            return !self.lists[t].is_empty();
        };
        let m = edges.len();
        let rotated: Vec<PairMatrix> = (0..m)
            .map(|s| {
                let p = (t + s) % m;
                PairMatrix {
                    rows_bucket: self.cycle[p],
                    cols_bucket: self.cycle[(p + 1) % m],
                    bits: edges[p].clone(),
                }
            })
            .collect();
        counters.matrix_products += (m - 1) as u64;
        let survivors = mm_diagonal_filter(&rotated).expect("plan matrices chain by construction");
        let removed = self.lists[t].len() - survivors.len();
        if removed > 0 {
            counters.deleted += removed as u64;
            self.lists[t] = survivors.iter().map(|&r| self.lists[t][r]).collect();
            edges[t] = edges[t].select_rows(&survivors);
            let prev = (t + m - 1) % m;
            edges[prev] = edges[prev].select_cols(&survivors);
        }
        !survivors.is_empty()
    }

    fn join(
        &self,
        bs: &BucketSet,
        spec: &JoinSpec,
        limit: Option<usize>,
        counters: &mut JoinCounters,
    ) -> Vec<Assignment> {
        let mut out = Vec::new();
        if self.lists.iter().any(Vec::is_empty) {
            return out;
        }
        let mut chosen: Vec<usize> = Vec::with_capacity(self.cycle.len());
        self.extend(bs, spec, &mut chosen, limit, &mut out, counters);
        out
    }

    fn extend(
        &self,
        bs: &BucketSet,
        spec: &JoinSpec,
        chosen: &mut Vec<usize>,
        limit: Option<usize>,
        out: &mut Vec<Assignment>,
        counters: &mut JoinCounters,
    ) {
        let t = chosen.len();
        let m = self.cycle.len();
        if t == m {
            counters.tuples += 1;
            out.push(self.assignment(bs, chosen));
            return;
        }
        let next: Vec<usize> = match &self.edges {
            Some(edges) if t > 0 => {
                counters.bit_probes += 1;
                edges[t - 1].row_ones(chosen[t - 1]).collect()
            }
            _ => (0..self.lists[t].len()).collect(),
        };
        for ci in next {
            if !self.admissible(bs, spec, chosen, ci, counters) {
                continue;
            }
            chosen.push(ci);
            self.extend(bs, spec, chosen, limit, out, counters);
            chosen.pop();
            if limit.is_some_and(|l| out.len() >= l) {
                return;
            }
        }
    }

    /// Whether star `ci` of the next cycle position is consistent with the
    /// anchor and every star already placed. With edge matrices the
    /// predecessor edge is implied by how `ci` was reached and the closing
    /// edge is a bit lookup.
    fn admissible(
        &self,
        bs: &BucketSet,
        spec: &JoinSpec,
        chosen: &[usize],
        ci: usize,
        counters: &mut JoinCounters,
    ) -> bool {
        let t = chosen.len();
        let m = self.cycle.len();
        let elem = self.cycle[t];
        let c = &self.lists[t][ci];
        if c.id == bs.anchor.id || (0..t).any(|s| self.lists[s][chosen[s]].id == c.id) {
            return false;
        }
        counters.probes += 1;
        if !spec.matches(&bs.anchor, c, bs.anchor_index, elem) {
            return false;
        }
        // Predecessor first: the cyclic join predicate.
        for s in (0..t).rev() {
            if let Some(edges) = &self.edges {
                if s + 1 == t {
                    continue;
                }
                if s == 0 && t == m - 1 {
                    counters.bit_probes += 1;
                    if !edges[m - 1].get(ci, chosen[0]) {
                        return false;
                    }
                    continue;
                }
            }
            counters.probes += 1;
            if !spec.matches(&self.lists[s][chosen[s]], c, self.cycle[s], elem) {
                return false;
            }
        }
        true
    }

    fn assignment(&self, bs: &BucketSet, chosen: &[usize]) -> Assignment {
        let mut members = vec![bs.anchor; bs.k()];
        for (t, &ci) in chosen.iter().enumerate() {
            members[self.cycle[t]] = self.lists[t][ci];
        }
        Assignment(members)
    }
}

/// Nested-loop cyclic join with eager checking of every constraint
/// (anchor, cycle neighbour and non-neighbours) as each star is placed.
pub fn bucket_nl(bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> Vec<Assignment> {
    Plan::new(bs, spec).join(bs, spec, None, counters)
}

/// Same as [`bucket_nl`] but stops after `limit` assignments.
pub fn bucket_nl_limited(
    bs: &BucketSet,
    spec: &JoinSpec,
    limit: usize,
    counters: &mut JoinCounters,
) -> Vec<Assignment> {
    Plan::new(bs, spec).join(bs, spec, Some(limit), counters)
}

/// One [`PairMatrix`] per consecutive pair of `cycle`, wrapping around.
/// Cycles shorter than two have no edges and yield no matrices.
pub fn build_pair_matrices(
    bs: &BucketSet,
    spec: &JoinSpec,
    cycle: &[usize],
    counters: &mut JoinCounters,
) -> Vec<PairMatrix> {
    let m = cycle.len();
    if m < 2 {
        return Vec::new();
    }
    (0..m)
        .map(|t| {
            let (i, j) = (cycle[t], cycle[(t + 1) % m]);
            let (bi, bj) = (&bs.buckets[i], &bs.buckets[j]);
            counters.probes += (bi.len() * bj.len()) as u64;
            let bits = BitMatrix::from_fn(bi.len(), bj.len(), |r, c| {
                bi[r].id != bj[c].id && spec.matches(&bi[r], &bj[c], i, j)
            });
            PairMatrix {
                rows_bucket: i,
                cols_bucket: j,
                bits,
            }
        })
        .collect()
}

/// Row indices `r` of the head bucket with `P[r][r] = 1` for the boolean
/// chain product `P = M_1 * ... * M_m`.
pub fn mm_diagonal_filter(ms: &[PairMatrix]) -> Result<Vec<usize>> {
    let Some(first) = ms.first() else {
        return Err(Error::Contract("empty matrix chain".into()));
    };
    for (t, m) in ms.iter().enumerate() {
        let next = &ms[(t + 1) % ms.len()];
        if m.bits.cols() != next.bits.rows() {
            return Err(Error::Contract(format!(
                "matrix {t} is {}x{} but matrix {} has {} rows",
                m.bits.rows(),
                m.bits.cols(),
                (t + 1) % ms.len(),
                next.bits.rows()
            )));
        }
    }
    let mut product = first.bits.clone();
    for m in &ms[1..] {
        product = product.mul(&m.bits);
        if product.is_zero() {
            return Ok(Vec::new());
        }
    }
    Ok(product
        .diagonal()
        .into_iter()
        .enumerate()
        .filter_map(|(r, on)| on.then_some(r))
        .collect())
}

/// Diagonal filtering of the head bucket followed by the nested-loop join.
pub fn mm_nl(bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> Vec<Assignment> {
    mm_nl_limited(bs, spec, None, counters)
}

fn mm_nl_limited(
    bs: &BucketSet,
    spec: &JoinSpec,
    limit: Option<usize>,
    counters: &mut JoinCounters,
) -> Vec<Assignment> {
    if !bs.is_complete() {
        return Vec::new();
    }
    let mut plan = Plan::with_matrices(bs, spec, counters);
    if !plan.filter_rotation(0, counters) {
        return Vec::new();
    }
    plan.join(bs, spec, limit, counters)
}

/// Diagonal filtering for every rotation of the cycle, then the join.
pub fn mmm_nl(bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> Vec<Assignment> {
    if !bs.is_complete() {
        return Vec::new();
    }
    let mut plan = Plan::with_matrices(bs, spec, counters);
    for t in 0..plan.cycle.len() {
        if !plan.filter_rotation(t, counters) {
            return Vec::new();
        }
    }
    plan.join(bs, spec, None, counters)
}

/// The matrices `mmm_nl` would multiply first for each rotation, for
/// inspection: rotation `t` starts with the matrix leaving cycle position `t`.
pub fn rotations(bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> Vec<Vec<PairMatrix>> {
    let plan = Plan::with_matrices(bs, spec, counters);
    let ms = plan.pair_matrices();
    let m = ms.len();
    (0..m)
        .map(|t| (0..m).map(|s| ms[(t + s) % m].clone()).collect())
        .collect()
}

/// Whether any assignment exists. A head bucket emptied by the diagonal
/// filter refutes immediately; otherwise the join stops at the first hit.
pub fn existential(bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> bool {
    !mm_nl_limited(bs, spec, Some(1), counters).is_empty()
}

/// Runs a concrete algorithm. `Auto` must be resolved by the caller.
pub fn compose_with(algo: Algorithm, bs: &BucketSet, spec: &JoinSpec, counters: &mut JoinCounters) -> Vec<Assignment> {
    match algo {
        Algorithm::BucketNl | Algorithm::Auto => bucket_nl(bs, spec, counters),
        Algorithm::MmNl => mm_nl(bs, spec, counters),
        Algorithm::MmmNl => mmm_nl(bs, spec, counters),
    }
}
