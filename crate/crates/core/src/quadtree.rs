//! Region quadtree over a catalog.
//!
//! The tree is subdivided until a node reaches the entry level (the first
//! level whose node diameter is at most `epsilon`) or holds fewer than three
//! points. Only leaves store points, as catalog indices. Nodes live in an
//! arena and are addressed by [`NodeId`].
//!
//! The built tree is never mutated. [`Quadtree::split_node`] materializes the
//! children of a leaf as fresh owned nodes, so concurrent descents each work
//! on private copies.

use std::mem::size_of;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Rect};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const DEFAULT_MAX_DEPTH: u32 = 24;

/// Nodes holding fewer points than this are never split.
pub const MIN_SPLIT_POINTS: usize = 3;

/// Relative slack added to geometric pruning tests so that rounding in the
/// node bounds can never discard an exact boundary match.
pub(crate) const PRUNE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct QuadNode {
    pub quadrant: Rect,
    pub level: u32,
    pub children: Option<[NodeId; 4]>,
    /// Catalog indices; empty for internal nodes.
    pub points: Vec<u32>,
}

impl QuadNode {
    pub fn centroid(&self) -> Vec2 {
        self.quadrant.center()
    }

    pub fn diameter(&self) -> f64 {
        self.quadrant.diameter()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Result of [`compute_entry_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryLevel {
    pub level: u32,
    /// True when the depth cap was hit before the diameter fell to `eps`.
    pub capped: bool,
}

/// Smallest level whose node diameter `root_diameter / 2^L` is at most
/// `eps`, capped at `max_depth`.
pub fn compute_entry_level(root_diameter: f64, eps: f64, max_depth: u32) -> EntryLevel {
    if !(root_diameter > 0.0) || root_diameter <= eps {
        return EntryLevel {
            level: 0,
            capped: false,
        };
    }
    if !(eps > 0.0) {
        return EntryLevel {
            level: max_depth,
            capped: true,
        };
    }
    let mut level = 0;
    let mut diameter = root_diameter;
    while diameter > eps {
        if level == max_depth {
            return EntryLevel { level, capped: true };
        }
        level += 1;
        diameter = root_diameter / f64::powi(2.0, level as i32);
    }
    EntryLevel { level, capped: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub height: u32,
    pub entry_level: u32,
    pub entry_level_capped: bool,
    pub node_count: usize,
    pub leaf_count: usize,
    pub max_leaf_points: usize,
    pub build_ms: f64,
    pub bytes_estimate: usize,
}

#[derive(Debug, Clone)]
pub struct Quadtree {
    nodes: Vec<QuadNode>,
    positions: Vec<Vec2>,
    entry_level: u32,
    height: u32,
    stats: BuildStats,
}

impl Quadtree {
    pub fn build(catalog: &Catalog, eps: f64) -> Result<Self> {
        Self::build_with_max_depth(catalog, eps, DEFAULT_MAX_DEPTH)
    }

    pub fn build_with_max_depth(catalog: &Catalog, eps: f64, max_depth: u32) -> Result<Self> {
        let started = Instant::now();
        let bounds = catalog.bounds().ok_or(Error::EmptyCatalog)?;
        let positions: Vec<Vec2> = catalog.points().iter().map(|p| p.pos()).collect();
        let entry = compute_entry_level(bounds.diameter(), eps, max_depth);

        let mut nodes = vec![QuadNode {
            quadrant: bounds,
            level: 0,
            children: None,
            points: (0..positions.len() as u32).collect(),
        }];
        let mut height = 0;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &nodes[i];
            height = height.max(node.level);
            if node.level >= entry.level || node.points.len() < MIN_SPLIT_POINTS {
                continue;
            }
            let children = split_points(node, &positions);
            let base = nodes.len() as u32;
            nodes[i].children = Some([NodeId(base), NodeId(base + 1), NodeId(base + 2), NodeId(base + 3)]);
            nodes[i].points = Vec::new();
            nodes.extend(children);
            // Reverse so the NW child is processed first.
            stack.extend((base as usize..base as usize + 4).rev());
        }

        let leaves = nodes.iter().filter(|n| n.is_leaf());
        let leaf_count = leaves.clone().count();
        let max_leaf_points = leaves.map(|n| n.points.len()).max().unwrap_or(0);
        let bytes_estimate =
            nodes.len() * size_of::<QuadNode>() + positions.len() * (size_of::<u32>() + size_of::<Vec2>());
        let stats = BuildStats {
            height,
            entry_level: entry.level,
            entry_level_capped: entry.capped,
            node_count: nodes.len(),
            leaf_count,
            max_leaf_points,
            build_ms: started.elapsed().as_secs_f64() * 1e3,
            bytes_estimate,
        };
        Ok(Self {
            nodes,
            positions,
            entry_level: entry.level,
            height,
            stats,
        })
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &QuadNode {
        &self.nodes[id.0 as usize]
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    pub fn entry_level(&self) -> u32 {
        self.entry_level
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    /// Position of the point with catalog index `index`.
    #[inline]
    pub fn position(&self, index: u32) -> Vec2 {
        self.positions[index as usize]
    }

    /// Nodes at depth `level` plus shallower leaves, in Z order.
    pub fn nodes_at_level(&self, level: u32) -> Result<Vec<NodeId>> {
        if level > self.height {
            return Err(Error::LevelOutOfRange {
                level,
                height: self.height,
            });
        }
        let mut out = Vec::new();
        self.walk(self.root(), level, &mut |_| true, &mut out);
        Ok(out)
    }

    /// Entry-level nodes whose quadrant lies within `radius` of `node`'s
    /// centroid (minimum rectangle distance). Includes `node` itself.
    pub fn neighbors(&self, node: &QuadNode, radius: f64) -> Vec<NodeId> {
        let center = node.centroid();
        let limit = radius * (1.0 + PRUNE_GUARD);
        let mut out = Vec::new();
        self.walk(
            self.root(),
            self.entry_level,
            &mut |n: &QuadNode| n.quadrant.min_distance(center) <= limit,
            &mut out,
        );
        out
    }

    /// Catalog indices of every point whose distance to `center` lies in
    /// `[r_min, r_max]`, in Z order of their leaves.
    pub fn points_in_annulus(&self, center: Vec2, r_min: f64, r_max: f64, out: &mut Vec<u32>) {
        let hi = r_max * (1.0 + PRUNE_GUARD);
        let lo = r_min * (1.0 - PRUNE_GUARD);
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            if n.quadrant.min_distance(center) > hi || n.quadrant.max_distance(center) < lo {
                continue;
            }
            match n.children {
                Some(ch) => stack.extend(ch.iter().rev()),
                None => out.extend(n.points.iter().copied().filter(|&p| {
                    let d = crate::geometry::euclidean_distance(center, self.position(p));
                    d >= r_min && d <= r_max
                })),
            }
        }
    }

    /// The four children of `node`. Internal nodes return copies of their
    /// stored children; leaves are split by redistributing their points.
    pub fn split_node(&self, node: &QuadNode) -> [QuadNode; 4] {
        match node.children {
            Some(ch) => ch.map(|c| self.node(c).clone()),
            None => split_points(node, &self.positions),
        }
    }

    /// Depth-first, Z-ordered walk collecting nodes at `level` (or shallower
    /// leaves) whose subtree passes `keep`.
    fn walk(&self, id: NodeId, level: u32, keep: &mut impl FnMut(&QuadNode) -> bool, out: &mut Vec<NodeId>) {
        let n = self.node(id);
        if !keep(n) {
            return;
        }
        match n.children {
            Some(ch) if n.level < level => {
                for c in ch {
                    self.walk(c, level, keep, out);
                }
            }
            _ => out.push(id),
        }
    }

    /// Every catalog index stored in the subtree of `id`.
    pub fn collect_points(&self, id: NodeId) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            match n.children {
                Some(ch) => stack.extend(ch),
                None => out.extend_from_slice(&n.points),
            }
        }
        out
    }
}

fn split_points(node: &QuadNode, positions: &[Vec2]) -> [QuadNode; 4] {
    let quads = node.quadrant.quadrants();
    let mut children = quads.map(|quadrant| QuadNode {
        quadrant,
        level: node.level + 1,
        children: None,
        points: Vec::new(),
    });
    for &p in &node.points {
        children[node.quadrant.quadrant_of(positions[p as usize])]
            .points
            .push(p);
    }
    children
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Point;

    fn catalog(coords: &[(f64, f64)]) -> Catalog {
        let points = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Point {
                id: i as u64,
                x,
                y,
                attrs: vec![],
            })
            .collect();
        Catalog::new(points, vec![]).unwrap()
    }

    /// 4x4 grid of cells over [0,4]^2 with `per_cell` points in each cell.
    fn grid(per_cell: usize) -> Catalog {
        let mut coords = vec![(0.0, 0.0), (4.0, 4.0)];
        for cx in 0..4 {
            for cy in 0..4 {
                for j in 0..per_cell {
                    let t = (j as f64 + 1.0) / (per_cell as f64 + 1.0);
                    coords.push((cx as f64 + t, cy as f64 + 0.5 * t + 0.25));
                }
            }
        }
        catalog(&coords)
    }

    #[test]
    fn entry_level_examples() {
        assert_eq!(
            compute_entry_level(16.0, 1.0, 24),
            EntryLevel {
                level: 4,
                capped: false
            }
        );
        assert_eq!(compute_entry_level(16.0, 16.0, 24).level, 0);
        assert_eq!(compute_entry_level(16.0, 100.0, 24).level, 0);
        assert_eq!(
            compute_entry_level(1.0, 1e-9, 24),
            EntryLevel {
                level: 24,
                capped: true
            }
        );
        assert_eq!(
            compute_entry_level(1.0, 0.0, 24),
            EntryLevel {
                level: 24,
                capped: true
            }
        );
    }

    #[test]
    fn single_point_root_leaf() {
        let t = Quadtree::build(&catalog(&[(1.0, 2.0)]), 1e-6).unwrap();
        assert!(t.node(t.root()).is_leaf());
        assert_eq!(t.node(t.root()).points, vec![0]);
        assert_eq!(t.height(), 0);
    }

    #[test]
    fn four_points_split_once() {
        let c = catalog(&[(0.0, 2.0), (2.0, 2.0), (0.0, 0.0), (2.0, 0.0)]);
        let root_diameter = c.bounds().unwrap().diameter();
        let t = Quadtree::build(&c, root_diameter / 2.0).unwrap();
        assert_eq!(t.entry_level(), 1);
        let ch = t.node(t.root()).children.expect("root must split");
        for (q, c) in ch.iter().enumerate() {
            assert_eq!(t.node(*c).points, vec![q as u32]);
        }
    }

    #[test]
    fn empty_catalog_is_rejected() {
        let c = Catalog::new(vec![], vec![]).unwrap();
        assert!(matches!(Quadtree::build(&c, 1.0), Err(Error::EmptyCatalog)));
    }

    #[test]
    fn level_lists() {
        let t = Quadtree::build(&grid(3), 4f64.hypot(4.0) / 4.0).unwrap();
        assert_eq!(t.entry_level(), 2);
        assert_eq!(t.nodes_at_level(0).unwrap(), vec![t.root()]);
        assert_eq!(t.nodes_at_level(2).unwrap().len(), 16);
        assert!(t.nodes_at_level(3).is_err());
    }

    #[test]
    fn shallow_leaf_represents_its_subtree() {
        // NE quadrant of [0,4]^2 holds only two points so it stays a leaf.
        let mut coords = vec![(0.0, 0.0), (4.0, 4.0), (3.5, 3.5)];
        for (cx, cy) in [
            (0, 0),
            (1, 0),
            (0, 1),
            (1, 1),
            (2, 0),
            (3, 0),
            (2, 1),
            (3, 1),
            (0, 2),
            (1, 2),
            (0, 3),
            (1, 3),
        ] {
            for j in 0..3 {
                coords.push((cx as f64 + 0.2 + 0.2 * j as f64, cy as f64 + 0.5));
            }
        }
        let t = Quadtree::build(&catalog(&coords), 4f64.hypot(4.0) / 4.0).unwrap();
        assert_eq!(t.nodes_at_level(2).unwrap().len(), 13);
    }

    #[test]
    fn neighbors_on_grid() {
        let t = Quadtree::build(&grid(3), 4f64.hypot(4.0) / 4.0).unwrap();
        let level = t.nodes_at_level(2).unwrap();
        let corner = level
            .iter()
            .copied()
            .find(|&id| t.node(id).quadrant == Rect::new(0.0, 0.0, 1.0, 1.0))
            .unwrap();
        let n = t.node(corner);
        // Centroid (0.5, 0.5): the side neighbours are 0.5 away, the diagonal
        // one ~0.707, the next column 1.5.
        let near = t.neighbors(n, 1.0);
        let expect: Vec<Rect> = vec![
            Rect::new(0.0, 1.0, 1.0, 2.0),
            Rect::new(1.0, 1.0, 2.0, 2.0),
            Rect::new(0.0, 0.0, 1.0, 1.0),
            Rect::new(1.0, 0.0, 2.0, 1.0),
        ];
        let got: Vec<Rect> = near.iter().map(|&id| t.node(id).quadrant).collect();
        assert_eq!(got, expect);
        assert_eq!(t.neighbors(n, 0.4), vec![corner]);
        assert_eq!(t.neighbors(n, 100.0), level);
    }

    #[test]
    fn split_redistributes() {
        let c = catalog(&[(0.1, 0.1), (0.2, 0.15), (0.3, 0.2), (4.0, 4.0)]);
        let t = Quadtree::build(&c, 100.0).unwrap();
        let root = t.node(t.root()).clone();
        assert!(root.is_leaf());
        let ch = t.split_node(&root);
        let counts: Vec<usize> = ch.iter().map(|n| n.points.len()).collect();
        assert_eq!(counts, vec![0, 1, 3, 0]);
        let sw = t.split_node(&ch[2]);
        assert_eq!(sw.iter().map(|n| n.points.len()).sum::<usize>(), 3);
        assert_eq!(sw.iter().filter(|n| n.points.is_empty()).count(), 3);
    }

    #[test]
    fn annulus_query() {
        let c = catalog(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (0.0, 3.0), (2.5, 2.5)]);
        let t = Quadtree::build(&c, 0.1).unwrap();
        let mut out = Vec::new();
        t.points_in_annulus(Vec2::new(0.0, 0.0), 1.0, 3.0, &mut out);
        out.sort();
        assert_eq!(out, vec![1, 2, 3]);
    }
}
