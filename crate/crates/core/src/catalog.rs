//! Catalog data model, CSV ingestion and synthetic catalog generators.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_distance, QueryPattern, Vec2};

/// One catalog object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub attrs: Vec<f64>,
}

impl Point {
    #[inline]
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub const fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Length of the diagonal.
    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    /// Smallest distance from `p` to any point of the rectangle (0 inside).
    pub fn min_distance(&self, p: Vec2) -> f64 {
        let dx = (self.min_x - p.x).max(p.x - self.max_x).max(0.0);
        let dy = (self.min_y - p.y).max(p.y - self.max_y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    /// Largest distance from `p` to any point of the rectangle.
    pub fn max_distance(&self, p: Vec2) -> f64 {
        let dx = (p.x - self.min_x).abs().max((self.max_x - p.x).abs());
        let dy = (p.y - self.min_y).abs().max((self.max_y - p.y).abs());
        (dx * dx + dy * dy).sqrt()
    }

    /// The four equal sub-rectangles in Z order: NW, NE, SW, SE.
    pub fn quadrants(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect::new(self.min_x, c.y, c.x, self.max_y),
            Rect::new(c.x, c.y, self.max_x, self.max_y),
            Rect::new(self.min_x, self.min_y, c.x, c.y),
            Rect::new(c.x, self.min_y, self.max_x, c.y),
        ]
    }

    /// Index of the quadrant (as returned by [`Rect::quadrants`]) that owns
    /// `p`. Points on a split line go east / north.
    #[inline]
    pub fn quadrant_of(&self, p: Vec2) -> usize {
        let c = self.center();
        let east = (p.x >= c.x) as usize;
        let south = (p.y < c.y) as usize;
        south * 2 + east
    }

    fn bounding(points: impl IntoIterator<Item = Vec2>) -> Option<Rect> {
        points.into_iter().fold(None, |acc, p| {
            Some(match acc {
                None => Rect::new(p.x, p.y, p.x, p.y),
                Some(r) => Rect::new(r.min_x.min(p.x), r.min_y.min(p.y), r.max_x.max(p.x), r.max_y.max(p.y)),
            })
        })
    }
}

/// An immutable point catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    points: Vec<Point>,
    bounds: Option<Rect>,
    attr_names: Vec<String>,
}

impl Catalog {
    /// Builds a catalog, checking id uniqueness and attribute arity.
    pub fn new(points: Vec<Point>, attr_names: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.id) {
                return Err(Error::DuplicateId(p.id));
            }
            if p.attrs.len() != attr_names.len() {
                return Err(Error::Contract(format!(
                    "point {} has {} attributes, catalog declares {}",
                    p.id,
                    p.attrs.len(),
                    attr_names.len()
                )));
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Contract(format!("point {} has a non-finite position", p.id)));
            }
        }
        let bounds = Rect::bounding(points.iter().map(Point::pos));
        Ok(Self {
            points,
            bounds,
            attr_names,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Tightest bounding rectangle; `None` for an empty catalog.
    pub fn bounds(&self) -> Option<Rect> {
        self.bounds
    }

    pub fn attr_names(&self) -> &[String] {
        &self.attr_names
    }

    pub fn attr_len(&self) -> usize {
        self.attr_names.len()
    }

    /// Reads a comma separated catalog. The id, x and y columns are located
    /// by name (`id`/`objid`/`obj_id`, `x`/`ra`, `y`/`dec`, case-insensitive);
    /// each requested attribute column must be present verbatim.
    pub fn load_csv(path: impl AsRef<Path>, attr_columns: &[&str]) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, attr_columns)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, attr_columns: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |names: &[&str], label: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
                .ok_or_else(|| Error::MissingColumn(label.to_string()))
        };
        let id_col = find(&["id", "objid", "obj_id"], "id")?;
        let x_col = find(&["x", "ra"], "x")?;
        let y_col = find(&["y", "dec"], "y")?;
        let attr_cols = attr_columns
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == *name)
                    .ok_or_else(|| Error::MissingColumn(name.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let row = row + 1;
            let cell = |col: usize| record.get(col).unwrap_or("");
            let real = |col: usize| -> Result<f64> {
                let raw = cell(col);
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        column: headers.get(col).unwrap_or("").to_string(),
                        value: raw.to_string(),
                    })
            };
            let id = cell(id_col).parse::<u64>().map_err(|_| Error::Parse {
                row,
                column: headers.get(id_col).unwrap_or("").to_string(),
                value: cell(id_col).to_string(),
            })?;
            points.push(Point {
                id,
                x: real(x_col)?,
                y: real(y_col)?,
                attrs: attr_cols.iter().map(|&c| real(c)).collect::<Result<_>>()?,
            });
        }
        Self::new(points, attr_columns.iter().map(|s| s.to_string()).collect())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv_to(&mut out).map_err(|e| Error::io(path, e))
    }

    /// Writes `id,x,y[,attr...]` with shortest round-trip float formatting.
    pub fn write_csv_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "id,x,y")?;
        for name in &self.attr_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for p in &self.points {
            write!(out, "{},{:?},{:?}", p.id, p.x, p.y)?;
            for a in &p.attrs {
                write!(out, ",{a:?}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// One planted copy of a pattern inside a generated catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    /// Ids in pattern-element order.
    pub ids: Vec<u64>,
    pub scale: f64,
    pub offset: Vec2,
}

/// Generates `n` points uniform in `region` with attributes uniform in
/// `attr_ranges`. Ids are `0..n`.
pub fn generate_uniform(n: usize, region: Rect, attr_ranges: &[(f64, f64)], seed: u64) -> Result<Catalog> {
    if n > 1 && region.area() <= 0.0 {
        return Err(Error::Generation(format!(
            "degenerate region {region:?} for {n} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n as u64)
        .map(|id| Point {
            id,
            x: sample(&mut rng, region.min_x, region.max_x),
            y: sample(&mut rng, region.min_y, region.max_y),
            attrs: attr_ranges.iter().map(|&(lo, hi)| sample(&mut rng, lo, hi)).collect(),
        })
        .collect();
    Catalog::new(points, attr_labels(attr_ranges.len()))
}

/// Dense catalog with planted scaled copies of `pattern`. See
/// [`generate_dense_with_truth`].
pub fn generate_dense(
    n: usize,
    pattern: &QueryPattern,
    scale_interval: (f64, f64),
    planted: usize,
    seed: u64,
    region: Rect,
) -> Result<Catalog> {
    generate_dense_with_truth(n, pattern, scale_interval, planted, seed, region).map(|(c, _)| c)
}

/// Plants `planted` copies of `pattern`, each scaled by a factor drawn
/// uniformly from `scale_interval` and translated (never rotated) to a
/// uniformly random location inside `region`, then fills up to `n` points
/// with uniform noise.
///
/// Planted points carry their element's attributes; each filler point copies
/// the attributes of a randomly chosen pattern element so that attribute
/// screening alone cannot separate signal from noise. Planted points take ids
/// `0..planted*k` in instance order, fillers follow.
pub fn generate_dense_with_truth(
    n: usize,
    pattern: &QueryPattern,
    scale_interval: (f64, f64),
    planted: usize,
    seed: u64,
    region: Rect,
) -> Result<(Catalog, Vec<PlantedInstance>)> {
    let k = pattern.k();
    let (low, high) = scale_interval;
    if k < 3 {
        return Err(Error::Generation(format!(
            "pattern must have at least 3 elements, got {k}"
        )));
    }
    if !(low > 0.0 && low <= high) {
        return Err(Error::Generation(format!("invalid scale interval [{low}, {high}]")));
    }
    if n < planted * k {
        return Err(Error::Generation(format!(
            "{planted} instances of a {k}-element pattern need at least {} points, got {n}",
            planted * k
        )));
    }

    let positions = pattern.positions();
    let shape = Rect::bounding(positions.iter().copied()).expect("k >= 3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(planted);

    for _ in 0..planted {
        let scale = sample(&mut rng, low, high);
        let (w, h) = (shape.width() * scale, shape.height() * scale);
        if w > region.width() || h > region.height() {
            return Err(Error::Generation(format!(
                "region {region:?} cannot hold the pattern at scale {scale}"
            )));
        }
        let offset = Vec2::new(
            sample(&mut rng, region.min_x, region.max_x - w),
            sample(&mut rng, region.min_y, region.max_y - h),
        );
        let mut ids = Vec::with_capacity(k);
        for (i, pos) in positions.iter().enumerate() {
            let id = points.len() as u64;
            points.push(Point {
                id,
                x: offset.x + (pos.x - shape.min_x) * scale,
                y: offset.y + (pos.y - shape.min_y) * scale,
                attrs: pattern.element(i).attrs.clone(),
            });
            ids.push(id);
        }
        truth.push(PlantedInstance { ids, scale, offset });
    }

    while points.len() < n {
        let template = rng.gen_range(0..k);
        points.push(Point {
            id: points.len() as u64,
            x: sample(&mut rng, region.min_x, region.max_x),
            y: sample(&mut rng, region.min_y, region.max_y),
            attrs: pattern.element(template).attrs.clone(),
        });
    }

    let catalog = Catalog::new(points, attr_labels(pattern.attr_len()))?;
    Ok((catalog, truth))
}

/// Exact scaled distance check for a planted instance, before any noise.
pub fn planted_distances_hold(catalog: &Catalog, pattern: &QueryPattern, inst: &PlantedInstance, tol: f64) -> bool {
    let pos: Vec<Vec2> = inst.ids.iter().map(|&id| catalog.points()[id as usize].pos()).collect();
    (0..pos.len()).all(|i| {
        ((i + 1)..pos.len()).all(|j| {
            let expect = inst.scale * pattern.distance(i, j);
            (euclidean_distance(pos[i], pos[j]) - expect).abs() <= tol * expect.max(1.0)
        })
    })
}

fn sample<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn attr_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}
