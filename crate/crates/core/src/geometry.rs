//! Query patterns and the two matching predicates every other module builds on.
//!
//! A star matches a query element when its attributes are within `theta` of
//! the element's (property match) and a set of stars matches the pattern when
//! every pairwise distance is within `epsilon` of the pattern's (distance
//! match).

use serde::{Deserialize, Serialize};

use crate::catalog::Point;
use crate::error::{Error, Result};

/// A position in the plane. Coordinates are treated as planar Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

#[inline]
pub fn euclidean_distance(a: Vec2, b: Vec2) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Inclusive additive-tolerance test: `|observed - target| <= eps`.
#[inline]
pub fn distance_match(observed: f64, target: f64, eps: f64) -> bool {
    (observed - target).abs() <= eps
}

/// Chebyshev attribute similarity. An empty query vector matches anything;
/// callers must have checked that non-empty vectors have equal length.
#[inline]
pub(crate) fn attrs_within(candidate: &[f64], query: &[f64], theta: f64) -> bool {
    query.is_empty() || candidate.iter().zip(query).all(|(a, b)| (a - b).abs() <= theta)
}

/// Property predicate `fe(e, q) <= theta` with `fe` the max-abs attribute
/// difference.
pub fn property_match(e: &Point, q: &PatternElement, theta: f64) -> Result<bool> {
    if q.attrs.is_empty() {
        return Ok(true);
    }
    if e.attrs.len() != q.attrs.len() {
        return Err(Error::Contract(format!(
            "point {} has {} attributes, query element has {}",
            e.id,
            e.attrs.len(),
            q.attrs.len()
        )));
    }
    Ok(attrs_within(&e.attrs, &q.attrs, theta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternElement {
    pub position: Vec2,
    #[serde(default)]
    pub attrs: Vec<f64>,
}

/// Dense symmetric `k x k` matrix of distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistMatrix {
    k: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            data: vec![0.0; k * k],
        }
    }

    pub fn from_positions(positions: &[Vec2]) -> Self {
        let k = positions.len();
        let mut m = Self::zeros(k);
        for i in 0..k {
            for j in (i + 1)..k {
                m.set(i, j, euclidean_distance(positions[i], positions[j]));
            }
        }
        m
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.k + j] = v;
        self.data[j * self.k + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k: self.k,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest off-diagonal entry and its lowest-index `(i, j)` pair, `i < j`.
    pub fn max_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                let d = self.get(i, j);
                if best.is_none_or(|(_, _, b)| d > b) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    pub fn min_off_diagonal(&self) -> Option<f64> {
        (0..self.k)
            .flat_map(|i| ((i + 1)..self.k).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .reduce(f64::min)
    }
}

/// A k-element query pattern with its tolerances and precomputed geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPattern {
    elements: Vec<PatternElement>,
    anchor_index: usize,
    dist: DistMatrix,
    epsilon: f64,
    theta: f64,
    min_pair_distance: f64,
    max_anchor_distance: f64,
}

impl QueryPattern {
    /// Builds a pattern from element positions and attribute vectors. The
    /// anchor is the most central element, the one whose largest distance to
    /// any other element is smallest (ties go to the lowest index).
    pub fn build(positions: &[Vec2], attrs: &[Vec<f64>], epsilon: f64, theta: f64) -> Result<Self> {
        let k = positions.len();
        if k < 2 {
            return Err(Error::Pattern(format!("need at least 2 elements, got {k}")));
        }
        if !attrs.is_empty() && attrs.len() != k {
            return Err(Error::Pattern(format!(
                "{} attribute vectors for {k} elements",
                attrs.len()
            )));
        }
        if let Some(first) = attrs.first() {
            if attrs.iter().any(|a| a.len() != first.len()) {
                return Err(Error::Pattern("attribute vectors differ in length".into()));
            }
        }
        if positions.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Pattern("non-finite element position".into()));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Pattern(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(theta >= 0.0) {
            return Err(Error::Pattern(format!("theta must be >= 0, got {theta}")));
        }

        let dist = DistMatrix::from_positions(positions);
        let min_pair_distance = dist.min_off_diagonal().unwrap_or(0.0);
        if min_pair_distance <= 0.0 {
            return Err(Error::Pattern("coincident query elements".into()));
        }

        let elements = positions
            .iter()
            .enumerate()
            .map(|(i, &position)| PatternElement {
                position,
                attrs: attrs.get(i).cloned().unwrap_or_default(),
            })
            .collect();

        let anchor_index = (0..k)
            .map(|i| (i, row_max(&dist, i)))
            .fold(
                (0, f64::INFINITY),
                |best, (i, m)| if m < best.1 { (i, m) } else { best },
            )
            .0;

        let q = Self {
            elements,
            anchor_index,
            max_anchor_distance: row_max(&dist, anchor_index),
            dist,
            epsilon,
            theta,
            min_pair_distance,
        };
        q.warn_on_wide_epsilon();
        Ok(q)
    }

    /// Overrides the anchor choice.
    pub fn with_anchor(mut self, anchor_index: usize) -> Result<Self> {
        if anchor_index >= self.k() {
            return Err(Error::Pattern(format!(
                "anchor {anchor_index} out of range for {} elements",
                self.k()
            )));
        }
        self.anchor_index = anchor_index;
        self.max_anchor_distance = row_max(&self.dist, anchor_index);
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Pattern(format!("epsilon must be >= 0, got {epsilon}")));
        }
        self.epsilon = epsilon;
        self.warn_on_wide_epsilon();
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta >= 0.0) {
            return Err(Error::Pattern(format!("theta must be >= 0, got {theta}")));
        }
        self.theta = theta;
        Ok(self)
    }

    /// Replaces the distance matrix, keeping elements and anchor. Used for
    /// normalized patterns whose matrix is no longer tied to positions.
    pub(crate) fn with_dist_matrix(mut self, dist: DistMatrix) -> Self {
        self.min_pair_distance = dist.min_off_diagonal().unwrap_or(0.0);
        self.max_anchor_distance = row_max(&dist, self.anchor_index);
        self.dist = dist;
        self
    }

    fn warn_on_wide_epsilon(&self) {
        if self.epsilon >= self.min_pair_distance {
            log::warn!(
                "epsilon {} is not below the smallest pattern distance {}",
                self.epsilon,
                self.min_pair_distance
            );
        }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &PatternElement {
        &self.elements[i]
    }

    #[inline]
    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    pub fn dist_matrix(&self) -> &DistMatrix {
        &self.dist
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist.get(i, j)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn min_pair_distance(&self) -> f64 {
        self.min_pair_distance
    }

    pub fn max_anchor_distance(&self) -> f64 {
        self.max_anchor_distance
    }

    /// Attribute vector length shared by all elements (0 when none).
    pub fn attr_len(&self) -> usize {
        self.elements.first().map_or(0, |e| e.attrs.len())
    }

    pub fn has_attrs(&self) -> bool {
        self.attr_len() > 0
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.elements.iter().map(|e| e.position).collect()
    }
}

fn row_max(dist: &DistMatrix, i: usize) -> f64 {
    dist.row(i).iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(p(0.0, 0.0), p(3.0, 4.0)), 5.0);
        assert_eq!(euclidean_distance(p(1.5, -2.0), p(1.5, -2.0)), 0.0);
        assert!((euclidean_distance(p(0.0, 0.0), p(1.0, 1.0)) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_match_examples() {
        assert!(distance_match(12.0, 8.0, 4.0));
        assert!(!distance_match(12.0000001, 8.0, 4.0));
        assert!(distance_match(3.25, 3.25, 0.0));
    }

    #[test]
    fn property_match_examples() {
        let star = |attrs: Vec<f64>| Point {
            id: 1,
            x: 0.0,
            y: 0.0,
            attrs,
        };
        let elem = |attrs: Vec<f64>| PatternElement {
            position: Vec2::default(),
            attrs,
        };
        assert!(property_match(&star(vec![]), &elem(vec![]), 0.0).unwrap());
        assert!(property_match(&star(vec![1.0, 2.0]), &elem(vec![1.2, 1.9]), 0.25).unwrap());
        assert!(!property_match(&star(vec![1.0, 2.0]), &elem(vec![1.2, 1.9]), 0.1).unwrap());
        assert!(matches!(
            property_match(&star(vec![1.0]), &elem(vec![1.2, 1.9]), 0.1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let q = QueryPattern::build(&[p(0.0, 0.0), p(1.0, 0.0), p(0.5, h)], &[], 0.1, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 1.0 };
                assert!((q.distance(i, j) - expected).abs() < 1e-12);
            }
        }
        assert!((q.min_pair_distance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_anchor_is_middle() {
        let q = QueryPattern::build(&[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)], &[], 0.1, 0.0).unwrap();
        let expected = [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(q.dist_matrix().row(i), row);
        }
        assert_eq!(q.anchor_index(), 1);
        assert_eq!(q.max_anchor_distance(), 1.0);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(QueryPattern::build(&[p(0.0, 0.0)], &[], 0.1, 0.0).is_err());
        assert!(QueryPattern::build(&[p(0.0, 0.0), p(0.0, 0.0), p(1.0, 1.0)], &[], 0.1, 0.0).is_err());
        assert!(QueryPattern::build(&[p(0.0, 0.0), p(1.0, 0.0)], &[vec![1.0]], 0.1, 0.0).is_err());
    }

    #[test]
    fn anchor_override() {
        let q = QueryPattern::build(&[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)], &[], 0.1, 0.0).unwrap();
        let q = q.with_anchor(0).unwrap();
        assert_eq!(q.anchor_index(), 0);
        assert_eq!(q.max_anchor_distance(), 2.0);
        assert!(q.with_anchor(3).is_err());
    }
}
