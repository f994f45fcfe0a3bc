//! Brute-force reference answers.
//!
//! These enumerate ordered assignments of distinct catalog points directly
//! from the matching definitions, without the index, buckets or joins. A
//! partial assignment is abandoned as soon as one of its pairs fails, which
//! keeps small catalogs cheap without changing the answer. Catalogs larger
//! than the cap are refused.

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::general::{normalize_pattern, scale_window, EpsilonMode, ScaleInterval};
use crate::geometry::{distance_match, euclidean_distance, property_match, QueryPattern, Vec2};

pub const DEFAULT_CAP: usize = 200;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Id sequences in lexicographic order, with the scale window for
    /// general queries.
    pub solutions: Vec<(Vec<u64>, Option<ScaleInterval>)>,
    /// Partial assignments visited.
    pub subsets_examined: u64,
}

impl OracleResult {
    pub fn ids(&self) -> Vec<Vec<u64>> {
        self.solutions.iter().map(|(ids, _)| ids.clone()).collect()
    }

    fn finish(mut self) -> Self {
        self.solutions.sort_by(|a, b| a.0.cmp(&b.0));
        self.solutions.dedup_by(|a, b| a.0 == b.0);
        self
    }
}

fn check_cap(catalog: &Catalog, cap: usize) -> Result<()> {
    if catalog.len() > cap {
        return Err(Error::OracleCap {
            size: catalog.len(),
            cap,
        });
    }
    Ok(())
}

/// Stars allowed to play each element by attributes alone.
fn eligible(catalog: &Catalog, q: &QueryPattern, theta: f64) -> Result<Vec<Vec<usize>>> {
    (0..q.k())
        .map(|i| {
            let mut out = Vec::new();
            for (s, p) in catalog.points().iter().enumerate() {
                if property_match(p, q.element(i), theta)? {
                    out.push(s);
                }
            }
            Ok(out)
        })
        .collect()
}

pub fn brute_pure(catalog: &Catalog, q: &QueryPattern, eps: f64, theta: f64) -> Result<OracleResult> {
    brute_pure_with_cap(catalog, q, eps, theta, DEFAULT_CAP)
}

pub fn brute_pure_with_cap(
    catalog: &Catalog,
    q: &QueryPattern,
    eps: f64,
    theta: f64,
    cap: usize,
) -> Result<OracleResult> {
    check_cap(catalog, cap)?;
    let mut res = OracleResult::default();
    if q.k() > catalog.len() {
        return Ok(res);
    }
    let cands = eligible(catalog, q, theta)?;
    let pos: Vec<Vec2> = catalog.points().iter().map(|p| p.pos()).collect();
    let mut chosen = Vec::with_capacity(q.k());
    pure_rec(catalog, q, eps, &cands, &pos, &mut chosen, &mut res);
    Ok(res.finish())
}

fn pure_rec(
    catalog: &Catalog,
    q: &QueryPattern,
    eps: f64,
    cands: &[Vec<usize>],
    pos: &[Vec2],
    chosen: &mut Vec<usize>,
    res: &mut OracleResult,
) {
    let i = chosen.len();
    if i == q.k() {
        let ids = chosen.iter().map(|&s| catalog.points()[s].id).collect();
        res.solutions.push((ids, None));
        return;
    }
    for &s in &cands[i] {
        if chosen.contains(&s) {
            continue;
        }
        res.subsets_examined += 1;
        let ok = chosen
            .iter()
            .enumerate()
            .all(|(j, &t)| distance_match(euclidean_distance(pos[s], pos[t]), q.distance(j, i), eps));
        if ok {
            chosen.push(s);
            pure_rec(catalog, q, eps, cands, pos, chosen, res);
            chosen.pop();
        }
    }
}

pub fn brute_general(
    catalog: &Catalog,
    q: &QueryPattern,
    mode: EpsilonMode,
    scale_range: (f64, f64),
) -> Result<OracleResult> {
    brute_general_with_cap(catalog, q, mode, scale_range, DEFAULT_CAP)
}

/// Every ordered assignment whose exact scale window, intersected with
/// `scale_range`, is non-empty. The pattern is normalized first (a no-op
/// for an already normalized pattern). Attributes are compared with the
/// pattern's own `theta`.
pub fn brute_general_with_cap(
    catalog: &Catalog,
    q: &QueryPattern,
    mode: EpsilonMode,
    scale_range: (f64, f64),
    cap: usize,
) -> Result<OracleResult> {
    check_cap(catalog, cap)?;
    mode.validate()?;
    let mut res = OracleResult::default();
    if q.k() > catalog.len() {
        return Ok(res);
    }
    let (qn, _) = normalize_pattern(q);
    let cands = eligible(catalog, &qn, q.theta())?;
    let pos: Vec<Vec2> = catalog.points().iter().map(|p| p.pos()).collect();
    let start = ScaleInterval {
        max_min: scale_range.0,
        min_max: scale_range.1,
    };
    let mut search = GeneralRec {
        catalog,
        q: &qn,
        mode,
        cands: &cands,
        pos: &pos,
        res: &mut res,
    };
    search.rec(
        &mut Vec::new(),
        start,
        ScaleInterval {
            max_min: f64::NEG_INFINITY,
            min_max: f64::INFINITY,
        },
    );
    Ok(res.finish())
}

struct GeneralRec<'a> {
    catalog: &'a Catalog,
    q: &'a QueryPattern,
    mode: EpsilonMode,
    cands: &'a [Vec<usize>],
    pos: &'a [Vec2],
    res: &'a mut OracleResult,
}

impl GeneralRec<'_> {
    /// `range` is the scale range; `window` the intersection of the pair
    /// windows placed so far.
    fn rec(&mut self, chosen: &mut Vec<usize>, range: ScaleInterval, window: ScaleInterval) {
        let i = chosen.len();
        if i == self.q.k() {
            let clipped = window.clip((range.max_min, range.min_max));
            if window.satisfiable() && clipped.satisfiable() {
                let ids = chosen.iter().map(|&s| self.catalog.points()[s].id).collect();
                self.res.solutions.push((ids, Some(clipped)));
            }
            return;
        }
        for &s in &self.cands[i] {
            if chosen.contains(&s) {
                continue;
            }
            self.res.subsets_examined += 1;
            let mut w = window;
            for (j, &t) in chosen.iter().enumerate() {
                let (lo, hi) = scale_window(
                    euclidean_distance(self.pos[s], self.pos[t]),
                    self.q.distance(j, i),
                    self.mode,
                )
                .expect("normalized pattern has positive distances");
                w.max_min = w.max_min.max(lo);
                w.min_max = w.min_max.min(hi);
            }
            let feasible = w.max_min <= w.min_max && w.max_min <= range.min_max && w.min_max >= range.max_min;
            if feasible {
                chosen.push(s);
                self.rec(chosen, range, w);
                chosen.pop();
            }
        }
    }
}

/// All ordered pairs `(a, b)` of distinct catalog indices with `a` from
/// `n1`, `b` from `n2` and `|dist(a, b) - target| <= eps`.
pub fn brute_pairs(catalog: &Catalog, n1: &[u32], n2: &[u32], target: f64, eps: f64) -> Vec<(u32, u32)> {
    let pts = catalog.points();
    let mut out = Vec::new();
    for &a in n1 {
        for &b in n2 {
            if a != b
                && distance_match(
                    euclidean_distance(pts[a as usize].pos(), pts[b as usize].pos()),
                    target,
                    eps,
                )
            {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    out
}
