//! Delaunay refinement laboratory.
//!
//! Exact geometric predicates, planar straight-line graphs, a constrained
//! Delaunay triangulation, Ruppert and Chew refinement engines, generators for
//! configurations that drive refinement into endless cascades, and tools for
//! classifying runs and locating angle thresholds.

// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cdt;
pub mod generators;
pub mod geom;
pub mod pslg;
pub mod refine;

pub use cdt::{Triangulation, VertexTag};
pub use generators::ExampleConfig;
pub use geom::Point;
pub use pslg::{Pslg, Segment};
pub use refine::{Algorithm, RefinementConfig, RefinementOutcome, RunStatus};
