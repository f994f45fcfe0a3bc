//! File formats: pattern JSON, solutions CSV, stats JSON.
//!
//! Pattern files look like
//!
//! ```json
//! {"elements": [{"x": 0.0, "y": 0.0, "attrs": [17.1]}, ...],
//!  "epsilon": 1e-6, "theta": 0.0, "anchor": 0}
//! ```
//!
//! `attrs`, `theta` and `anchor` are optional. Solutions CSV has one row per
//! solution with columns `id_0..id_{k-1}`, plus `scale_min,scale_max` for
//! general queries.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::composition::Solution;
use crate::error::{Error, Result};
use crate::general::ScaleInterval;
use crate::geometry::{QueryPattern, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attrs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternFile {
    pub elements: Vec<ElementSpec>,
    pub epsilon: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
}

impl PatternFile {
    pub fn from_pattern(q: &QueryPattern) -> Self {
        Self {
            elements: q
                .elements()
                .iter()
                .map(|e| ElementSpec {
                    x: e.position.x,
                    y: e.position.y,
                    attrs: e.attrs.clone(),
                })
                .collect(),
            epsilon: q.epsilon(),
            theta: q.theta(),
            anchor: Some(q.anchor_index()),
        }
    }

    pub fn to_pattern(&self) -> Result<QueryPattern> {
        let pos: Vec<Vec2> = self.elements.iter().map(|e| Vec2::new(e.x, e.y)).collect();
        let attrs: Vec<Vec<f64>> = if self.elements.iter().all(|e| e.attrs.is_empty()) {
            Vec::new()
        } else {
            self.elements.iter().map(|e| e.attrs.clone()).collect()
        };
        let q = QueryPattern::build(&pos, &attrs, self.epsilon, self.theta)?;
        match self.anchor {
            Some(a) => q.with_anchor(a),
            None => Ok(q),
        }
    }
}

pub fn read_pattern<R: Read>(reader: R) -> Result<QueryPattern> {
    let file: PatternFile = serde_json::from_reader(reader)?;
    file.to_pattern()
}

pub fn load_pattern(path: impl AsRef<Path>) -> Result<QueryPattern> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pattern(BufReader::new(f))
}

pub fn save_pattern(q: &QueryPattern, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &PatternFile::from_pattern(q))?;
    Ok(())
}

/// Writes solutions as CSV. Scale columns appear when any solution has a
/// scale window.
pub fn write_solutions<W: Write>(out: W, k: usize, solutions: &[Solution]) -> Result<()> {
    let general = solutions.iter().any(|s| s.scale.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..k).map(|i| format!("id_{i}")).collect();
    if general {
        header.push("scale_min".into());
        header.push("scale_max".into());
    }
    w.write_record(&header)?;
    for s in solutions {
        let mut row: Vec<String> = s.ids.iter().map(u64::to_string).collect();
        if general {
            let iv = s
                .scale
                .ok_or_else(|| Error::Contract("mixed pure and general solutions".into()))?;
            row.push(format!("{:?}", iv.max_min));
            row.push(format!("{:?}", iv.min_max));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<solutions>", e))?;
    Ok(())
}

pub fn save_solutions(path: impl AsRef<Path>, k: usize, solutions: &[Solution]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_solutions(BufWriter::new(f), k, solutions)
}

pub fn read_solutions<R: Read>(reader: R) -> Result<Vec<Solution>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let k = header.iter().filter(|h| h.starts_with("id_")).count();
    let general = header.iter().any(|h| h == "scale_min");
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64> {
            rec[c].trim().parse().map_err(|_| Error::Parse {
                row: row + 2,
                column: header[c].to_string(),
                value: rec[c].to_string(),
            })
        };
        let ids = (0..k)
            .map(|c| {
                rec[c].trim().parse::<u64>().map_err(|_| Error::Parse {
                    row: row + 2,
                    column: header[c].to_string(),
                    value: rec[c].to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = if general {
            Some(ScaleInterval {
                max_min: parse(k)?,
                min_max: parse(k + 1)?,
            })
        } else {
            None
        };
        out.push(Solution { ids, scale });
    }
    Ok(out)
}

pub fn load_solutions(path: impl AsRef<Path>) -> Result<Vec<Solution>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_solutions(BufReader::new(f))
}

pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}
