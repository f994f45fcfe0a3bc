//! Constellation queries over 2-D point catalogs.
//!
//! A constellation query asks for every ordered k-subset of a catalog whose
//! pairwise distances match those of a query pattern. Pure queries match the
//! pattern distances within an additive tolerance `epsilon`; general queries
//! additionally allow an unknown multiplicative scale factor.
//!
//! The pipeline is:
//!
//! 1. [`quadtree::Quadtree`] indexes the catalog down to the entry level where
//!    node diameters drop below `epsilon`.
//! 2. [`filtering::Filter`] pairs each entry-level anchor node with its
//!    neighbours and descends the tree to fill one bucket of candidate stars
//!    per non-anchor query element.
//! 3. [`composition`] joins the buckets, optionally pruning them first with
//!    boolean matrix products (`MM_NL`, `MMM_NL`).
//! 4. [`engine::execute_query`] drives the whole thing in parallel and merges
//!    the results deterministically.
//!
//! [`general`] layers scale-invariant search on top and [`oracle`] holds the
//! brute-force reference implementations used to validate everything else.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bitmatrix;
pub mod catalog;
pub mod composition;
pub mod engine;
mod error;
pub mod filtering;
pub mod general;
pub mod geometry;
pub mod io;
pub mod oracle;
pub mod patterns;
pub mod quadtree;

pub use catalog::{Catalog, Point, Rect};
pub use composition::{Algorithm, Assignment, Solution};
pub use engine::{execute_query, QueryConfig, QueryMode, QueryOutcome, QueryStats};
pub use error::{Error, Result};
pub use general::{EpsilonMode, ScaleInterval};
pub use geometry::{QueryPattern, Vec2};
pub use quadtree::Quadtree;
