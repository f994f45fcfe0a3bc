//! Per-anchor candidate generation.
//!
//! Every star of an entry-level node is tried as the anchor `q_0`. Nodes
//! within reach of the anchor node are paired with it, node pairs whose
//! centroid distance cannot match `dist(q_0, q_i)` are dropped, and the
//! survivors are refined by [`Filter::tree_descend`] until a star-pair scan
//! is cheaper than another split. Matching stars land in bucket `i` of their
//! anchor's [`BucketSet`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::geometry::{attrs_within, distance_match, euclidean_distance, QueryPattern, Vec2};
use crate::quadtree::{NodeId, QuadNode, Quadtree, MIN_SPLIT_POINTS, PRUNE_GUARD};

/// Recursion limit for descents below the entry level.
const MAX_DESCENT_LEVEL: u32 = 64;

/// A catalog star as seen by the join: catalog index, id and position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: u32,
    pub id: u64,
    pub pos: Vec2,
}

impl Candidate {
    pub fn from_catalog(catalog: &Catalog, index: u32) -> Self {
        let p = &catalog.points()[index as usize];
        Self {
            index,
            id: p.id,
            pos: p.pos(),
        }
    }
}

/// Candidate lists for one anchor star, one bucket per query element. The
/// anchor's own slot stays empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSet {
    pub anchor: Candidate,
    pub anchor_index: usize,
    pub buckets: Vec<Vec<Candidate>>,
}

impl BucketSet {
    pub fn new(anchor: Candidate, anchor_index: usize, k: usize) -> Self {
        Self {
            anchor,
            anchor_index,
            buckets: vec![Vec::new(); k],
        }
    }

    pub fn k(&self) -> usize {
        self.buckets.len()
    }

    /// Element indices other than the anchor, ascending.
    pub fn non_anchor(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k()).filter(move |&i| i != self.anchor_index)
    }

    /// True when every non-anchor bucket holds at least one candidate.
    pub fn is_complete(&self) -> bool {
        self.non_anchor().all(|i| !self.buckets[i].is_empty())
    }

    pub fn entries(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.non_anchor().map(|i| self.buckets[i].len()).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounters {
    pub node_pairs_tested: u64,
    pub node_pairs_pruned: u64,
    pub descents: u64,
    /// Star-pair distance evaluations.
    pub comparisons: u64,
    pub candidate_pairs: u64,
}

impl FilterCounters {
    pub fn merge(&mut self, o: &Self) {
        self.node_pairs_tested += o.node_pairs_tested;
        self.node_pairs_pruned += o.node_pairs_pruned;
        self.descents += o.descents;
        self.comparisons += o.comparisons;
        self.candidate_pairs += o.candidate_pairs;
    }
}

/// True iff the centroid distance of the two nodes is within
/// `eps_eff + (diameter(n1) + diameter(n2)) / 2` of `target`.
pub fn node_pair_compatible(n1: &QuadNode, n2: &QuadNode, target: f64, eps_eff: f64) -> bool {
    let d = euclidean_distance(n1.centroid(), n2.centroid());
    let slack = eps_eff + 0.5 * (n1.diameter() + n2.diameter());
    (d - target).abs() <= slack + PRUNE_GUARD * (slack + target)
}

/// Bucket sets under construction for the anchors of one node.
#[derive(Debug, Default)]
pub struct AnchorBuckets {
    sets: Vec<BucketSet>,
    slot: HashMap<u32, usize>,
}

impl AnchorBuckets {
    pub fn new(catalog: &Catalog, anchors: &[u32], anchor_index: usize, k: usize) -> Self {
        let sets: Vec<BucketSet> = anchors
            .iter()
            .map(|&a| BucketSet::new(Candidate::from_catalog(catalog, a), anchor_index, k))
            .collect();
        let slot = anchors.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        Self { sets, slot }
    }

    fn push(&mut self, anchor: u32, element: usize, c: Candidate) {
        let i = self.slot[&anchor];
        self.sets[i].buckets[element].push(c);
    }

    /// Finished bucket sets ordered by anchor catalog index, each bucket
    /// ordered by candidate catalog index.
    pub fn finish(mut self) -> Vec<BucketSet> {
        for bs in &mut self.sets {
            for b in &mut bs.buckets {
                b.sort_unstable_by_key(|c| c.index);
            }
        }
        self.sets.sort_unstable_by_key(|bs| bs.anchor.index);
        self.sets
    }
}

/// Candidate generation for one pattern over one tree.
pub struct Filter<'a> {
    catalog: &'a Catalog,
    tree: &'a Quadtree,
    pattern: &'a QueryPattern,
    theta: f64,
    eps_eff: f64,
    descend: bool,
    level_nodes: Vec<NodeId>,
}

impl<'a> Filter<'a> {
    pub fn new(catalog: &'a Catalog, tree: &'a Quadtree, pattern: &'a QueryPattern, theta: f64, eps_eff: f64) -> Self {
        let level_nodes = tree
            .nodes_at_level(tree.entry_level().min(tree.height()))
            .expect("level clamped to height");
        Self {
            catalog,
            tree,
            pattern,
            theta,
            eps_eff,
            descend: true,
            level_nodes,
        }
    }

    /// Disables the cost-model descent: compatible entry-level node pairs
    /// go straight to a star-pair scan.
    pub fn with_descent(mut self, descend: bool) -> Self {
        self.descend = descend;
        self
    }

    pub fn level_nodes(&self) -> &[NodeId] {
        &self.level_nodes
    }

    pub fn tree(&self) -> &Quadtree {
        self.tree
    }

    /// Stars of `node` that pass the property screen for the anchor element.
    pub fn anchor_stars(&self, node: &QuadNode) -> Vec<u32> {
        let q0 = &self.pattern.element(self.pattern.anchor_index()).attrs;
        node.points
            .iter()
            .copied()
            .filter(|&p| attrs_within(&self.catalog.points()[p as usize].attrs, q0, self.theta))
            .collect()
    }

    /// Search radius around an anchor node's centroid: the largest anchor
    /// distance of the pattern plus the tolerance, widened by half the
    /// anchor node's diameter since anchor stars sit anywhere in the node.
    pub fn search_radius(&self, anchor_node: &QuadNode) -> f64 {
        self.pattern.max_anchor_distance() + self.eps_eff + 0.5 * anchor_node.diameter()
    }

    /// Entry-level nodes within the search radius of `node`, restricted to
    /// `level_nodes`. Empty when no star of `node` can play the anchor.
    pub fn filter_neighbors(&self, node: NodeId, level_nodes: &[NodeId]) -> Vec<NodeId> {
        let n = self.tree.node(node);
        if self.anchor_stars(n).is_empty() {
            return Vec::new();
        }
        let near = self.tree.neighbors(n, self.search_radius(n));
        if level_nodes.len() == self.level_nodes.len() && level_nodes == self.level_nodes.as_slice() {
            return near;
        }
        let allowed: std::collections::HashSet<NodeId> = level_nodes.iter().copied().collect();
        near.into_iter().filter(|id| allowed.contains(id)).collect()
    }

    /// Pairs `anchor_node` (holding only candidate anchors) with
    /// `neighbor_node` for every non-anchor element and appends the matching
    /// stars to the anchors' buckets.
    pub fn find_matching_stars(
        &self,
        acc: &mut AnchorBuckets,
        anchor_node: &QuadNode,
        neighbor_node: &QuadNode,
        counters: &mut FilterCounters,
    ) {
        let a = self.pattern.anchor_index();
        let mut pairs = Vec::new();
        for qi in (0..self.pattern.k()).filter(|&i| i != a) {
            let target = self.pattern.distance(a, qi);
            counters.node_pairs_tested += 1;
            if !node_pair_compatible(anchor_node, neighbor_node, target, self.eps_eff) {
                counters.node_pairs_pruned += 1;
                continue;
            }
            pairs.clear();
            self.tree_descend(anchor_node, neighbor_node, target, qi, &mut pairs, counters);
            counters.candidate_pairs += pairs.len() as u64;
            for &(anchor, star) in &pairs {
                acc.push(anchor, qi, Candidate::from_catalog(self.catalog, star));
            }
        }
    }

    /// Star pairs `(s1 in n1, s2 in n2)` with `dist(s1, s2)` within
    /// `eps_eff` of `target` and `s2` property-matching element `qi`.
    ///
    /// When some pair of children would fail [`node_pair_compatible`], the
    /// surviving child pairs are refined recursively; otherwise (or at leaves
    /// too small to split) the stars are scanned pairwise.
    pub fn tree_descend(
        &self,
        n1: &QuadNode,
        n2: &QuadNode,
        target: f64,
        qi: usize,
        out: &mut Vec<(u32, u32)>,
        counters: &mut FilterCounters,
    ) {
        if is_empty(n1) || is_empty(n2) {
            return;
        }
        if self.descend {
            let split1 = self.splittable(n1);
            let split2 = self.splittable(n2);
            if split1 || split2 {
                let parts1 = self.parts(n1, split1);
                let parts2 = self.parts(n2, split2);
                let total = parts1.len() * parts2.len();
                let mut surviving = Vec::with_capacity(total);
                for c1 in &parts1 {
                    for c2 in &parts2 {
                        counters.node_pairs_tested += 1;
                        if node_pair_compatible(c1, c2, target, self.eps_eff) {
                            surviving.push((c1, c2));
                        } else {
                            counters.node_pairs_pruned += 1;
                        }
                    }
                }
                if surviving.len() < total {
                    counters.descents += 1;
                    for (c1, c2) in surviving {
                        self.tree_descend(c1, c2, target, qi, out, counters);
                    }
                    return;
                }
            }
        }
        self.scan(n1, n2, target, qi, out, counters);
    }

    fn splittable(&self, n: &QuadNode) -> bool {
        !n.is_leaf() || (n.points.len() >= MIN_SPLIT_POINTS && n.level < MAX_DESCENT_LEVEL)
    }

    fn parts(&self, n: &QuadNode, split: bool) -> Vec<QuadNode> {
        if split {
            self.tree.split_node(n).into_iter().filter(|c| !is_empty(c)).collect()
        } else {
            vec![n.clone()]
        }
    }

    fn scan(
        &self,
        n1: &QuadNode,
        n2: &QuadNode,
        target: f64,
        qi: usize,
        out: &mut Vec<(u32, u32)>,
        counters: &mut FilterCounters,
    ) {
        let stars1 = self.stars(n1);
        let stars2 = self.stars(n2);
        let q_attrs = &self.pattern.element(qi).attrs;
        counters.comparisons += (stars1.len() * stars2.len()) as u64;
        for &s2 in stars2.iter() {
            if !attrs_within(&self.catalog.points()[s2 as usize].attrs, q_attrs, self.theta) {
                continue;
            }
            let p2 = self.tree.position(s2);
            for &s1 in stars1.iter() {
                if s1 != s2 && distance_match(euclidean_distance(self.tree.position(s1), p2), target, self.eps_eff) {
                    out.push((s1, s2));
                }
            }
        }
    }

    fn stars<'n>(&self, n: &'n QuadNode) -> std::borrow::Cow<'n, [u32]> {
        if n.is_leaf() {
            std::borrow::Cow::Borrowed(&n.points)
        } else {
            // Internal nodes of the built tree; children live in the arena.
            let mut pts = Vec::new();
            for c in n.children.unwrap() {
                pts.extend(self.tree.collect_points(c));
            }
            std::borrow::Cow::Owned(pts)
        }
    }

    /// All bucket sets anchored in entry-level node `node`, one per anchor
    /// star passing the property screen.
    pub fn bucket_sets(&self, node: NodeId, counters: &mut FilterCounters) -> Vec<BucketSet> {
        let n = self.tree.node(node);
        let anchors = self.anchor_stars(n);
        if anchors.is_empty() {
            return Vec::new();
        }
        let anchor_node = QuadNode {
            points: anchors.clone(),
            ..n.clone()
        };
        let mut acc = AnchorBuckets::new(self.catalog, &anchors, self.pattern.anchor_index(), self.pattern.k());
        for neighbor in self.filter_neighbors(node, &self.level_nodes) {
            self.find_matching_stars(&mut acc, &anchor_node, self.tree.node(neighbor), counters);
        }
        acc.finish()
    }
}

fn is_empty(n: &QuadNode) -> bool {
    n.is_leaf() && n.points.is_empty()
}
