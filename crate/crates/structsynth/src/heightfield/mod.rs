//! The terrain model: a rectangular grid of heights in centimetres.
//!
//! A [`HeightField`] stores one height per grid node in row-major order
//! (row 0 is the top row of a loaded document).  Node `(x, y)` represents
//! a `cell_size × cell_size` patch of ground centred at planar position
//! `(x * cell_size, y * cell_size)`.
//!
//! Submodules:
//!
//! * [`io`] — the comma-separated text grid format and PGM images.
//! * [`filter`] — median filtering and k-means level quantization.
//! * [`fields`] — gradient magnitude, cliff field, and steepness field.

pub mod fields;
pub mod filter;
pub mod io;

pub use fields::{cliff_field, gradient_magnitude, steep_field};
pub use filter::{median_filter, quantize_levels};
pub use io::{load_height_field, save_text};

use std::time::Duration;

use crate::error::Error;
use crate::geom::Vec2;

/// A rectangular grid of terrain heights (cm), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField {
    width: usize,
    height: usize,
    cell_size: f64,
    z: Vec<f64>,
}

impl HeightField {
    /// Builds a field from row-major heights, validating the invariants:
    /// at least one node, positive cell size, all heights finite and ≥ 0.
    pub fn new(width: usize, height: usize, cell_size: f64, z: Vec<f64>) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::Format("height field must have at least one node".into()));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::Parameter(format!("cell_size must be positive, got {cell_size}")));
        }
        if z.len() != width * height {
            return Err(Error::Format(format!(
                "expected {} heights for a {width}x{height} grid, got {}",
                width * height,
                z.len()
            )));
        }
        if let Some(bad) = z.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Format(format!("heights must be finite and >= 0, got {bad}")));
        }
        Ok(HeightField { width, height, cell_size, z })
    }

    /// A constant-height field.
    pub fn filled(width: usize, height: usize, cell_size: f64, z0: f64) -> Result<Self, Error> {
        HeightField::new(width, height, cell_size, vec![z0; width * height])
    }

    /// Builds a field by evaluating `f(x, y)` at every node.
    pub fn from_fn(
        width: usize,
        height: usize,
        cell_size: f64,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, Error> {
        let mut z = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                z.push(f(x, y));
            }
        }
        HeightField::new(width, height, cell_size, z)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one node
    }

    /// Row-major node index.
    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    /// Inverse of [`idx`](Self::idx): `(x, y)` of a node index.
    pub fn xy(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Height at a node (cm).
    pub fn z(&self, x: usize, y: usize) -> f64 {
        self.z[self.idx(x, y)]
    }

    pub fn z_at(&self, idx: usize) -> f64 {
        self.z[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    /// Planar position of a node centre (cm).
    pub fn node_center(&self, x: usize, y: usize) -> Vec2 {
        Vec2::new(x as f64 * self.cell_size, y as f64 * self.cell_size)
    }

    /// Replaces the height data, keeping dimensions (used by the filters).
    pub(crate) fn with_values(&self, z: Vec<f64>) -> Result<Self, Error> {
        HeightField::new(self.width, self.height, self.cell_size, z)
    }
}

/// A derived per-node scalar quantity (gradient magnitude, steepness, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[self.idx(x, y)]
    }
}

/// Robot and solver limits, all in centimetres unless noted.
///
/// The defaults describe a palm-sized robot that steps up at most 4 cm,
/// builds from 8 cm cube blocks, and treats sustained gradients above
/// 1 cm/cm as untraversable.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Side length of one build block and of one structure cell (cm).
    pub block_side: f64,
    /// Maximum height difference the robot can step over (cm).  Edges with
    /// a larger difference are cliffs.
    pub cliff_threshold: f64,
    /// Maximum average gradient (cm per cm) the robot can climb.
    pub steep_threshold: f64,
    /// Side of the square window (cm) used to average gradients for the
    /// steepness field.
    pub steep_window: f64,
    /// Fraction of `block_side`: terrain under a structure cell may poke at
    /// most `flatness_ratio * block_side` above the cell's ground level.
    pub flatness_ratio: f64,
    /// Reject a build point when more than this fraction of nearby nodes
    /// disagrees with the fitted cliff-line separator.
    pub normal_reject_rate: f64,
    /// Regions that cannot contain an axis-aligned square of this side (cm)
    /// are pruned from the connectivity goal.
    pub min_region_side: f64,
    /// Hard cap on cells per synthesized structure.
    pub max_structure_cells: usize,
    /// Wall-clock budget for the spanning-tree search.
    pub timeout: Duration,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            block_side: 8.0,
            cliff_threshold: 4.0,
            steep_threshold: 1.0,
            steep_window: 8.0,
            flatness_ratio: 0.4,
            normal_reject_rate: 0.10,
            min_region_side: 8.0,
            max_structure_cells: 256,
            timeout: Duration::from_secs(600),
        }
    }
}

impl SolverParams {
    /// Checks the documented parameter ranges.
    pub fn validate(&self) -> Result<(), Error> {
        fn positive(name: &str, v: f64) -> Result<(), Error> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        }
        positive("block_side", self.block_side)?;
        positive("cliff_threshold", self.cliff_threshold)?;
        positive("steep_threshold", self.steep_threshold)?;
        positive("steep_window", self.steep_window)?;
        positive("min_region_side", self.min_region_side)?;
        if self.cliff_threshold > self.block_side {
            return Err(Error::Parameter(format!(
                "cliff_threshold ({}) must not exceed block_side ({})",
                self.cliff_threshold, self.block_side
            )));
        }
        if !(self.flatness_ratio > 0.0 && self.flatness_ratio < 1.0) {
            return Err(Error::Parameter(format!(
                "flatness_ratio must lie in (0, 1), got {}",
                self.flatness_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.normal_reject_rate) {
            return Err(Error::Parameter(format!(
                "normal_reject_rate must lie in [0, 1], got {}",
                self.normal_reject_rate
            )));
        }
        if self.max_structure_cells < 2 {
            return Err(Error::Parameter(
                "max_structure_cells must allow at least two cells".into(),
            ));
        }
        Ok(())
    }

    /// Window side in nodes for the steepness average: `steep_window`
    /// converted to cells, rounded, and forced odd (minimum 1).
    pub fn steep_window_nodes(&self, cell_size: f64) -> usize {
        let mut s = (self.steep_window / cell_size).round() as i64;
        if s < 1 {
            s = 1;
        }
        if s % 2 == 0 {
            s += 1;
        }
        s as usize
    }

    /// Minimum region side in nodes (rounded, minimum 1).
    pub fn min_region_side_nodes(&self, cell_size: f64) -> usize {
        ((self.min_region_side / cell_size).round() as i64).max(1) as usize
    }
}
