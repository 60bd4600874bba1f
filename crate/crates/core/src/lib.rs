//! Randomized nibble algorithms for large rainbow matchings in properly
//! edge-colored graphs, together with the exact machinery needed to audit
//! them: explicit extremal constructions, a branch-and-bound oracle,
//! completion subroutines, and differential-equation trajectory analytics.
//!
//! The three solvers share a common scheme: repeatedly select a small random
//! batch of edges, keep the conflict-free ones, then apply carefully
//! calibrated residual deletions so that every survivor statistic tracks a
//! deterministic trajectory. They differ in what is equalized and what the
//! run promises:
//!
//! * [`nibble::uniform`] — activates whole color classes and equalizes
//!   vertex survival; aims to use *every* color.
//! * [`nibble::saturating`] — bipartite; draws edges with replacement and
//!   saturates one entire side.
//! * [`nibble::color_target`] — draws edges with replacement from an
//!   instance with many colors and stops at a fixed matching size.

pub mod completion;
pub mod constructions;
pub mod graph;
pub mod io;
pub mod nibble;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod trajectory;

pub use graph::{ColorId, EdgeColoredGraph, EdgeId, GraphError, RainbowMatching, VertexId};
pub use report::{Diagnostics, Outcome, RunReport, TrajectoryRecord};
