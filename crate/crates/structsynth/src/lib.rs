//! Minimum-cost ramp synthesis for height-field terrain.
//!
//! A ground robot can climb small steps and moderate slopes, but a raw
//! height field usually decomposes into mutually unreachable traversable
//! regions separated by cliffs and steep bands.  This crate synthesizes
//! ramp structures — columns of cube blocks capped by wedges — that bridge
//! those cliffs, and then selects a minimum-cost subset of ramps that makes
//! the whole environment one connected space.
//!
//! The pipeline, mirrored by the [`pipeline`] module:
//!
//! ```text
//!   height field ──► region map ──► build points ──► ramp synthesis
//!        │               │  (cliff edges)  (one candidate per cliff edge)
//!        │               │
//!        ▼               ▼
//!   preprocessing   region graph ◄── conflict analysis
//!   (median filter,      │
//!    quantization)       ▼
//!                 branch-and-bound MST ──► validated solution
//! ```
//!
//! * [`heightfield`] — the terrain model: grids of heights in centimetres,
//!   cliff and steepness fields, median filtering and level quantization.
//! * [`terrain`] — traversability analysis: regions, cliff edges, pruning.
//! * [`structure`] — the ramp model: cells, block types, validity, cost.
//! * [`buildpoints`] — candidate placement sites along cliff edges.
//! * [`waterfall`] — the three-pass synthesizer that drops a ramp downhill
//!   from a build point.
//! * [`conflict`] — structure/structure overlap tests and region occupancy
//!   conflicts; the region multigraph.
//! * [`bbmst`] — conflict-aware branch-and-bound search for a minimum-cost
//!   spanning tree of the region graph, plus solution validation.
//! * [`oracle`] — small exhaustive reference solvers used by the test
//!   suites to cross-check the fast algorithms.
//! * [`pipeline`], [`render`], [`bench`] — the end-to-end solver, PPM
//!   rendering, and the randomized benchmark harness.

pub mod bbmst;
pub mod bench;
pub mod buildpoints;
pub mod conflict;
pub mod error;
pub mod geom;
pub mod heightfield;
pub mod jsonfmt;
pub mod oracle;
pub mod pipeline;
pub mod render;
pub mod structure;
pub mod terrain;
pub mod waterfall;

pub use bbmst::{bbmst, validate_solution, SearchStats, SolutionTree};
pub use buildpoints::{extract_build_points, BuildCandidate};
pub use conflict::{build_conflict_index, build_region_graph, ConflictIndex, RegionGraph};
pub use error::Error;
pub use heightfield::{HeightField, SolverParams};
pub use pipeline::{solve, PipelineConfig, SolveOutcome};
pub use structure::{BlockType, Cell, Structure};
pub use terrain::{build_region_map, prune_small_regions, RegionId, RegionMap};
pub use waterfall::waterfall;
