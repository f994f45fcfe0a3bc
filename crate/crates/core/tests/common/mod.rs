#![allow(dead_code)]

use constellation::catalog::Point;
use constellation::{Catalog, QueryPattern, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn catalog_from(points: &[(f64, f64)]) -> Catalog {
    let pts = points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Point {
            id: i as u64,
            x,
            y,
            attrs: vec![],
        })
        .collect();
    Catalog::new(pts, vec![]).unwrap()
}

/// A random query instance with planted matches.
pub struct Trial {
    pub seed: u64,
    pub catalog: Catalog,
    pub pattern: QueryPattern,
    pub eps: f64,
    pub theta: f64,
    pub planted: usize,
}

impl std::fmt::Debug for Trial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Trial(seed={}, n={}, k={}, eps={:e}, theta={}, attrs={}, anchor={})",
            self.seed,
            self.catalog.len(),
            self.pattern.k(),
            self.eps,
            self.theta,
            self.catalog.attr_len(),
            self.pattern.anchor_index()
        )
    }
}

fn rotate(p: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Random pattern of `k` points in the unit square with pairwise distances
/// of at least 0.2.
pub fn random_pattern_points(r: &mut ChaCha8Rng, k: usize) -> Vec<Vec2> {
    loop {
        let pts: Vec<Vec2> = (0..k)
            .map(|_| Vec2::new(r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)))
            .collect();
        let ok =
            (0..k).all(|i| ((i + 1)..k).all(|j| constellation::geometry::euclidean_distance(pts[i], pts[j]) >= 0.2));
        if ok {
            return pts;
        }
    }
}

/// Catalog of 20 to 200 points in a square of side 3 to 10: a few rotated
/// copies of a random k-point pattern, each point displaced by at most
/// `eps / 4`, plus uniform noise. Tolerances are log-uniform in [1e-4, 1e-1]. Half of
/// the trials carry two attributes compared with `theta = 1`.
pub fn random_trial(seed: u64, k: usize) -> Trial {
    let mut r = rng(seed);
    let n: usize = r.gen_range(20..=200);
    let eps = 10f64.powf(r.gen_range(-4.0..-1.0));
    let with_attrs = r.gen_bool(0.5);
    let n_attrs = if with_attrs { 2 } else { 0 };
    let theta = if with_attrs { 1.0 } else { 0.0 };
    let side: f64 = r.gen_range(3.0..10.0);

    let shape = random_pattern_points(&mut r, k);
    let pattern_attrs: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n_attrs).map(|_| r.gen_range(0.0..4.0)).collect())
        .collect();
    let mut q = QueryPattern::build(&shape, if with_attrs { &pattern_attrs } else { &[] }, eps, theta).unwrap();
    if r.gen_bool(0.3) {
        let a = r.gen_range(0..k);
        q = q.with_anchor(a).unwrap();
    }

    let planted = r.gen_range(0..=3usize).min(n / k);
    let mut points = Vec::with_capacity(n);
    for _ in 0..planted {
        let angle = r.gen_range(0.0..std::f64::consts::TAU);
        let offset = Vec2::new(r.gen_range(1.5..side - 1.5 + 1e-9), r.gen_range(1.5..side - 1.5 + 1e-9));
        for (i, p) in shape.iter().enumerate() {
            let rp = rotate(*p, angle);
            let jitter_r = r.gen_range(0.0..eps / 4.0);
            let jitter_a = r.gen_range(0.0..std::f64::consts::TAU);
            let attrs = pattern_attrs[i].iter().map(|a| a + r.gen_range(-0.4..0.4)).collect();
            points.push((
                offset.x + rp.x + jitter_r * jitter_a.cos(),
                offset.y + rp.y + jitter_r * jitter_a.sin(),
                attrs,
            ));
        }
    }
    while points.len() < n {
        let attrs = (0..n_attrs).map(|_| r.gen_range(0.0..4.0)).collect();
        points.push((r.gen_range(0.0..side), r.gen_range(0.0..side), attrs));
    }
    // Shuffle so planted points do not always take the lowest ids.
    for i in (1..points.len()).rev() {
        let j = r.gen_range(0..=i);
        points.swap(i, j);
    }
    let pts = points
        .into_iter()
        .enumerate()
        .map(|(i, (x, y, attrs))| Point {
            id: 1000 + i as u64 * 3,
            x,
            y,
            attrs,
        })
        .collect();
    let names = (0..n_attrs).map(|i| format!("m{i}")).collect();
    Trial {
        seed,
        catalog: Catalog::new(pts, names).unwrap(),
        pattern: q,
        eps,
        theta,
        planted,
    }
}

/// The trial for index `t`: k cycles through 3, 4, 5.
pub fn trial(t: u64) -> Trial {
    random_trial(0xC0FFEE ^ (t * 7919), 3 + (t % 3) as usize)
}
