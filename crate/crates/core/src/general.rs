//! General constellation queries: matches at an unknown scale factor.
//!
//! The pattern is normalized so its most distant pair `(p_a, p_b)` is one
//! unit apart. Every star pair `(s1, s2)` whose distance lies in the scale
//! band posits `scalebasic = dist(s1, s2)`; the remaining buckets are filled
//! with the doubled tolerance, which provably loses no true match, and every
//! joined candidate is then validated by intersecting the per-pair scale
//! windows (`MaxMin <= MinMax`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::composition::{Assignment, JoinSpec};
use crate::error::{Error, Result};
use crate::filtering::{BucketSet, Candidate};
use crate::geometry::{attrs_within, euclidean_distance, DistMatrix, QueryPattern, Vec2};
use crate::quadtree::{Quadtree, PRUNE_GUARD};

/// Satisfying scale window `[max_min, min_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleInterval {
    pub max_min: f64,
    pub min_max: f64,
}

impl ScaleInterval {
    pub fn satisfiable(&self) -> bool {
        self.max_min <= self.min_max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.max_min + self.min_max)
    }

    pub fn clip(&self, (low, high): (f64, f64)) -> Self {
        Self {
            max_min: self.max_min.max(low),
            min_max: self.min_max.min(high),
        }
    }
}

impl fmt::Display for ScaleInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.max_min, self.min_max)
    }
}

/// Distance tolerance of a general query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// Fixed additive tolerance.
    Constant(f64),
    /// Tolerance proportional to the scaled pattern distance, fraction `e < 1`.
    Proportional(f64),
}

impl EpsilonMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsilonMode::Constant(eps) if eps >= 0.0 && eps.is_finite() => Ok(()),
            EpsilonMode::Proportional(e) if (0.0..1.0).contains(&e) => Ok(()),
            other => Err(Error::Config(format!("invalid epsilon mode {other:?}"))),
        }
    }

    /// Largest allowed deviation of a star distance from `f * pij`.
    pub fn tolerance(&self, f: f64, pij: f64) -> f64 {
        match *self {
            EpsilonMode::Constant(eps) => eps,
            EpsilonMode::Proportional(e) => e * f * pij,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralConfig {
    pub epsilon_mode: EpsilonMode,
    pub scale_range: (f64, f64),
    pub farthest_pair: (usize, usize),
}

pub const DEFAULT_SCALE_RANGE: (f64, f64) = (0.5, 2.0);

/// Divides every pattern distance by the largest one. Returns the
/// normalized pattern and its farthest pair (lowest indices on ties), whose
/// distance becomes exactly 1.
pub fn normalize_pattern(q: &QueryPattern) -> (QueryPattern, (usize, usize)) {
    let (a, b, max) = q.dist_matrix().max_pair().expect("patterns have k >= 2");
    let k = q.k();
    let mut dist = DistMatrix::zeros(k);
    for i in 0..k {
        for j in (i + 1)..k {
            dist.set(i, j, q.distance(i, j) / max);
        }
    }
    dist.set(a, b, 1.0);
    (q.clone().with_dist_matrix(dist), (a, b))
}

/// The doubled search tolerance used while filling buckets: `2 * eps`, or
/// `2 * e * scalebasic / (1 - e)` in proportional mode.
pub fn effective_epsilon(scalebasic: f64, mode: EpsilonMode) -> f64 {
    match mode {
        EpsilonMode::Constant(eps) => 2.0 * eps,
        EpsilonMode::Proportional(e) => 2.0 * (e * scalebasic / (1.0 - e)),
    }
}

/// Range of scale factors under which a star distance `d` matches the
/// normalized pattern distance `pij`.
pub fn scale_window(d: f64, pij: f64, mode: EpsilonMode) -> Result<(f64, f64)> {
    if !(pij > 0.0) {
        return Err(Error::Contract(format!("pattern distance must be positive, got {pij}")));
    }
    Ok(match mode {
        EpsilonMode::Constant(eps) => ((d - eps) / pij, (d + eps) / pij),
        EpsilonMode::Proportional(e) => (d / ((1.0 + e) * pij), d / ((1.0 - e) * pij)),
    })
}

/// Intersects the scale windows of every pair. When the result is
/// satisfiable and `scale_range` is given, it is clipped to that range.
pub fn post_process(
    star_dists: &DistMatrix,
    pattern_dists: &DistMatrix,
    mode: EpsilonMode,
    scale_range: Option<(f64, f64)>,
) -> ScaleInterval {
    let k = pattern_dists.size();
    let mut iv = ScaleInterval {
        max_min: f64::NEG_INFINITY,
        min_max: f64::INFINITY,
    };
    for i in 0..k {
        for j in (i + 1)..k {
            let (lo, hi) = scale_window(star_dists.get(i, j), pattern_dists.get(i, j), mode)
                .expect("normalized patterns have no coincident elements");
            iv.max_min = iv.max_min.max(lo);
            iv.min_max = iv.min_max.min(hi);
        }
    }
    match scale_range {
        Some(range) if iv.satisfiable() => iv.clip(range),
        _ => iv,
    }
}

/// Checks every pair directly at scale `f`: `|d_ij - f * p_ij|` within the
/// mode's tolerance, up to rounding. `pattern_dists` must be normalized.
pub fn holds_at_scale(positions: &[Vec2], pattern_dists: &DistMatrix, mode: EpsilonMode, f: f64) -> bool {
    let k = pattern_dists.size();
    positions.len() == k
        && (0..k).all(|i| {
            ((i + 1)..k).all(|j| {
                let d = euclidean_distance(positions[i], positions[j]);
                let target = f * pattern_dists.get(i, j);
                let tol = mode.tolerance(f, pattern_dists.get(i, j));
                (d - target).abs() <= tol + 1e-9 * (tol + d)
            })
        })
}

/// Band of `dist(s1, s2)` values that can belong to a match at a scale in
/// `scale_range`, given that `dist(p_a, p_b) = 1`.
pub fn pair_band((low, high): (f64, f64), mode: EpsilonMode) -> (f64, f64) {
    match mode {
        EpsilonMode::Constant(eps) => ((low - eps).max(0.0), high + eps),
        EpsilonMode::Proportional(e) => (low * (1.0 - e), high * (1.0 + e)),
    }
}

/// The doubled tolerance plus rounding slack. Only used to collect
/// candidates; acceptance is decided by [`post_process`].
fn search_tolerance(scalebasic: f64, mode: EpsilonMode) -> f64 {
    let tol = effective_epsilon(scalebasic, mode);
    tol + PRUNE_GUARD * (tol + scalebasic)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralCounters {
    pub star_pairs: u64,
    pub comparisons: u64,
    pub candidate_pairs: u64,
}

impl GeneralCounters {
    pub fn merge(&mut self, o: &Self) {
        self.star_pairs += o.star_pairs;
        self.comparisons += o.comparisons;
        self.candidate_pairs += o.candidate_pairs;
    }
}

/// One posited `(s1, s2)` pair and its buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralCandidate {
    pub s1: u32,
    pub s2: u32,
    pub scalebasic: f64,
    pub buckets: BucketSet,
}

/// Bucket construction and validation for a general query.
pub struct GeneralSearch<'a> {
    catalog: &'a Catalog,
    tree: &'a Quadtree,
    pattern: QueryPattern,
    cfg: GeneralConfig,
    theta: f64,
}

impl<'a> GeneralSearch<'a> {
    pub fn new(
        catalog: &'a Catalog,
        tree: &'a Quadtree,
        pattern: &QueryPattern,
        epsilon_mode: EpsilonMode,
        scale_range: (f64, f64),
        theta: f64,
    ) -> Result<Self> {
        epsilon_mode.validate()?;
        if !(scale_range.0 > 0.0 && scale_range.0 <= scale_range.1) {
            return Err(Error::Config(format!(
                "invalid scale range [{}, {}]",
                scale_range.0, scale_range.1
            )));
        }
        let (normalized, farthest_pair) = normalize_pattern(pattern);
        Ok(Self {
            catalog,
            tree,
            pattern: normalized.with_anchor(farthest_pair.0)?,
            cfg: GeneralConfig {
                epsilon_mode,
                scale_range,
                farthest_pair,
            },
            theta,
        })
    }

    pub fn normalized_pattern(&self) -> &QueryPattern {
        &self.pattern
    }

    pub fn config(&self) -> &GeneralConfig {
        &self.cfg
    }

    /// Quadtree tolerance matching the narrowest search band.
    pub fn index_epsilon(mode: EpsilonMode, scale_range: (f64, f64)) -> f64 {
        effective_epsilon(scale_range.0, mode)
    }

    fn attrs_ok(&self, star: u32, element: usize) -> bool {
        attrs_within(
            &self.catalog.points()[star as usize].attrs,
            &self.pattern.element(element).attrs,
            self.theta,
        )
    }

    /// Every candidate pair with `s1 = star`: partners `s2` in the scale band
    /// and, for each other element `i`, the stars within the doubled
    /// tolerance of `scalebasic * dist(p_a, p_i)` from `s1` and of
    /// `scalebasic * dist(p_b, p_i)` from `s2`.
    pub fn candidates_for(&self, star: u32, counters: &mut GeneralCounters, out: &mut Vec<GeneralCandidate>) {
        let (a, b) = self.cfg.farthest_pair;
        if !self.attrs_ok(star, a) {
            return;
        }
        let k = self.pattern.k();
        let p1 = self.tree.position(star);
        let (lo, hi) = pair_band(self.cfg.scale_range, self.cfg.epsilon_mode);
        let (lo, hi) = (lo * (1.0 - PRUNE_GUARD), hi * (1.0 + PRUNE_GUARD));
        let mut partners = Vec::new();
        self.tree.points_in_annulus(p1, lo, hi, &mut partners);
        partners.sort_unstable();

        let mut found = Vec::new();
        for s2 in partners {
            if s2 == star || !self.attrs_ok(s2, b) {
                continue;
            }
            counters.star_pairs += 1;
            let p2 = self.tree.position(s2);
            let scalebasic = euclidean_distance(p1, p2);
            let tol = search_tolerance(scalebasic, self.cfg.epsilon_mode);

            let mut bs = BucketSet::new(Candidate::from_catalog(self.catalog, star), a, k);
            bs.buckets[b].push(Candidate::from_catalog(self.catalog, s2));
            let mut complete = true;
            for i in (0..k).filter(|&i| i != a && i != b) {
                let r1 = scalebasic * self.pattern.distance(a, i);
                let r2 = scalebasic * self.pattern.distance(b, i);
                found.clear();
                self.tree
                    .points_in_annulus(p1, (r1 - tol).max(0.0), r1 + tol, &mut found);
                counters.comparisons += found.len() as u64;
                found.sort_unstable();
                for &s in &found {
                    if s == star || s == s2 || !self.attrs_ok(s, i) {
                        continue;
                    }
                    if (euclidean_distance(p2, self.tree.position(s)) - r2).abs() <= tol {
                        bs.buckets[i].push(Candidate::from_catalog(self.catalog, s));
                    }
                }
                counters.candidate_pairs += bs.buckets[i].len() as u64;
                if bs.buckets[i].is_empty() {
                    complete = false;
                    break;
                }
            }
            if complete {
                out.push(GeneralCandidate {
                    s1: star,
                    s2,
                    scalebasic,
                    buckets: bs,
                });
            }
        }
    }

    /// Candidates for every star of the catalog.
    pub fn general_candidates(&self, counters: &mut GeneralCounters) -> Vec<GeneralCandidate> {
        let mut out = Vec::new();
        for star in 0..self.catalog.len() as u32 {
            self.candidates_for(star, counters, &mut out);
        }
        out
    }

    /// Join targets for a candidate: the normalized pattern scaled by
    /// `scalebasic`, with the doubled tolerance.
    pub fn join_spec(&self, scalebasic: f64) -> JoinSpec {
        JoinSpec::new(
            self.pattern.dist_matrix().scaled(scalebasic),
            search_tolerance(scalebasic, self.cfg.epsilon_mode),
        )
    }

    /// Post-processing: the satisfying scale window of a joined assignment,
    /// clipped to the scale range, or `None` when no scale works.
    pub fn validate(&self, assignment: &Assignment) -> Option<ScaleInterval> {
        let positions: Vec<_> = assignment.0.iter().map(|c| c.pos).collect();
        let iv = post_process(
            &DistMatrix::from_positions(&positions),
            self.pattern.dist_matrix(),
            self.cfg.epsilon_mode,
            Some(self.cfg.scale_range),
        );
        iv.satisfiable().then_some(iv)
    }
}
