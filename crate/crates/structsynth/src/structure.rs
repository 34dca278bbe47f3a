//! The ramp-structure model.
//!
//! A structure is a chain of square cells laid out along a direction `u`
//! from a build point `b` at a cliff edge.  Cell 0 sits uphill of `b` on
//! the cliff top; cells 1, 2, … march downhill.  Each cell carries a
//! column of `h` stacked cube blocks topped by a surface block:
//!
//! ```text
//!   side view, u ──►            block      wedge_f      wedge_b
//!   top ╔══╗                   ┌────┐       ╱│         │╲
//!       ║  ║ ▒▒                │    │      ╱ │         │ ╲
//!       ╚══╩═▒▒═══ ground      └────┘     ╱──┘         └──╲
//! ```
//!
//! The surface profile `s(x)` over a cell of side `L` is `L` for a full
//! block, `x` for a forward wedge (rising along `u`), and `L - x` for a
//! backward wedge (falling along `u`).  End cells carry no blocks at all —
//! the robot enters and leaves at ground level.
//!
//! A chain is traversable when every hand-over between consecutive cells
//! stays within the robot's step limit, interior cells sit on acceptably
//! flat ground, and both ends are bare.

use serde::Serialize;

use crate::error::Error;
use crate::geom::Vec2;
use crate::heightfield::filter::lower_median;
use crate::heightfield::{HeightField, SolverParams};
use crate::terrain::RegionId;

/// Surface block of one structure cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockType {
    /// Flat-topped cube: `s(x) = L`.
    Block,
    /// Wedge rising along `u`: `s(x) = x`.
    WedgeF,
    /// Wedge falling along `u`: `s(x) = L - x`.
    WedgeB,
    /// No surface block; only end cells use this.
    None,
}

impl BlockType {
    /// Surface height above the block column at the cell entry (`x = 0`).
    pub fn surface_at_entry(self, block_side: f64) -> f64 {
        match self {
            BlockType::Block | BlockType::WedgeB => block_side,
            BlockType::WedgeF => 0.0,
            BlockType::None => 0.0,
        }
    }

    /// Surface height above the block column at the cell exit (`x = L`).
    pub fn surface_at_exit(self, block_side: f64) -> f64 {
        match self {
            BlockType::Block | BlockType::WedgeF => block_side,
            BlockType::WedgeB => 0.0,
            BlockType::None => 0.0,
        }
    }
}

/// One cell of a structure.
#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    /// Position in the chain (0 = uphill end cell).
    pub index: usize,
    /// Footprint corners (cm), counter-clockwise from the entry-left
    /// corner; see [`cell_footprint`].
    pub corners: [Vec2; 4],
    /// Stacked cube blocks under the surface block.
    pub height: u32,
    /// Surface block type.
    pub block: BlockType,
    /// Ground level under the cell: lower median of covered node heights (cm).
    pub ground: f64,
    /// Grid nodes covered by the footprint (row-major indices).
    #[serde(skip)]
    pub covered: Vec<usize>,
}

impl Cell {
    /// Terrain-surface height where the robot enters the cell (`x = 0`
    /// side).  End cells expose bare ground.
    pub fn entry_height(&self, block_side: f64) -> f64 {
        match self.block {
            BlockType::None => self.ground,
            t => self.ground + self.height as f64 * block_side + t.surface_at_entry(block_side),
        }
    }

    /// Surface height where the robot leaves the cell (`x = L` side).
    pub fn exit_height(&self, block_side: f64) -> f64 {
        match self.block {
            BlockType::None => self.ground,
            t => self.ground + self.height as f64 * block_side + t.surface_at_exit(block_side),
        }
    }
}

/// A synthesized ramp structure.
#[derive(Clone, Debug, Serialize)]
pub struct Structure {
    pub id: usize,
    /// Cliff-edge midpoint the structure grew from (cm).
    pub build_point: Vec2,
    /// Unit direction from the cliff top into lower terrain.
    pub orientation: Vec2,
    /// Cells 0..n, uphill to downhill.
    pub cells: Vec<Cell>,
    /// Region of the cliff top (cell 0's side).
    pub region_a: RegionId,
    /// Region the structure lands in.
    pub region_b: RegionId,
    /// Physical blocks: stacked cubes plus one per surface block.
    pub cost_blocks: u64,
    /// Stacked cubes only.
    pub cost_paper: u64,
}

/// Corners of cell `index` for a chain growing from `b` along unit `u`.
///
/// Along `u`, cell `i ≥ 1` spans `[b + (i-1)·L·u, b + i·L·u]` and cell 0
/// spans `[b - L·u, b]` (the uphill side).  Laterally the square is
/// centred on the axis.  Corners are listed entry-left, exit-left,
/// exit-right, entry-right, which is counter-clockwise in x-right/y-up
/// orientation.
pub fn cell_footprint(b: Vec2, u: Vec2, index: usize, block_side: f64) -> Result<[Vec2; 4], Error> {
    if !(block_side > 0.0) {
        return Err(Error::Parameter(format!("block_side must be positive, got {block_side}")));
    }
    let u = u
        .normalized()
        .ok_or_else(|| Error::Parameter("orientation must be a nonzero vector".into()))?;
    let (start, end) = if index == 0 {
        (b - u * block_side, b)
    } else {
        (b + u * (block_side * (index - 1) as f64), b + u * (block_side * index as f64))
    };
    let half = u.perp() * (block_side / 2.0);
    Ok([start - half, end - half, end + half, start + half])
}

/// Tolerance for boundary inclusion in [`covered_nodes`]: nodes within
/// this distance (cm) of the footprint edge count as covered.
const COVER_EPS: f64 = 1e-9;

/// Grid nodes whose centres lie inside the convex footprint or on its
/// boundary (within [`COVER_EPS`]).  Off-map positions are excluded.
pub fn covered_nodes(corners: &[Vec2; 4], field: &HeightField) -> Vec<usize> {
    let cs = field.cell_size();
    let min_x = corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
    let max_x = corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min);
    let max_y = corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max);

    let x0 = ((min_x - COVER_EPS) / cs).ceil() as i64;
    let x1 = ((max_x + COVER_EPS) / cs).floor() as i64;
    let y0 = ((min_y - COVER_EPS) / cs).ceil() as i64;
    let y1 = ((max_y + COVER_EPS) / cs).floor() as i64;

    let mut nodes = Vec::new();
    for iy in y0.max(0)..=y1.min(field.height() as i64 - 1) {
        for ix in x0.max(0)..=x1.min(field.width() as i64 - 1) {
            let p = Vec2::new(ix as f64 * cs, iy as f64 * cs);
            if point_in_convex(corners, p, COVER_EPS) {
                nodes.push(iy as usize * field.width() + ix as usize);
            }
        }
    }
    nodes
}

/// Signed-distance test against each edge of a counter-clockwise convex
/// polygon; `eps` is an absolute distance tolerance.
fn point_in_convex(corners: &[Vec2; 4], p: Vec2, eps: f64) -> bool {
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let edge = b - a;
        let len = edge.norm();
        if len <= 1e-12 {
            continue;
        }
        // distance of p left of edge; negative = outside
        if edge.cross(p - a) / len < -eps {
            return false;
        }
    }
    true
}

/// Ground level of a cell: the lower median of the heights of its covered
/// nodes.  Errors when the footprint covers no nodes.
pub fn cell_ground(covered: &[usize], field: &HeightField) -> Result<f64, Error> {
    if covered.is_empty() {
        return Err(Error::UndefinedGround);
    }
    let mut heights: Vec<f64> = covered.iter().map(|&n| field.z_at(n)).collect();
    Ok(lower_median(&mut heights))
}

/// Whether terrain under the cell is flat enough to build on: every
/// covered node must poke less than `flatness_ratio * block_side` above
/// the cell's ground level (strict).
pub fn is_buildable(covered: &[usize], ground: f64, field: &HeightField, params: &SolverParams) -> bool {
    let limit = params.flatness_ratio * params.block_side;
    covered.iter().all(|&n| field.z_at(n) - ground < limit)
}

/// Both cost measures of a cell chain: `(cost_blocks, cost_paper)` where
/// `cost_paper` counts stacked cubes and `cost_blocks` additionally counts
/// one block per non-empty surface.
pub fn structure_cost(cells: &[Cell]) -> (u64, u64) {
    let stacked: u64 = cells.iter().map(|c| c.height as u64).sum();
    let surfaces = cells.iter().filter(|c| c.block != BlockType::None).count() as u64;
    (stacked + surfaces, stacked)
}

/// Full validity check of a cell chain:
///
/// * at least two cells;
/// * every consecutive hand-over satisfies
///   `|entry(c_{i+1}) - exit(c_i)| <= cliff_threshold`;
/// * every interior cell is buildable (end cells are exempt);
/// * both end cells are bare ground (`height == 0`, no surface block).
pub fn is_valid_structure(s: &Structure, field: &HeightField, params: &SolverParams) -> bool {
    let cells = &s.cells;
    if cells.len() < 2 {
        return false;
    }
    let lb = params.block_side;
    for pair in cells.windows(2) {
        if (pair[1].entry_height(lb) - pair[0].exit_height(lb)).abs() > params.cliff_threshold {
            return false;
        }
    }
    for cell in &cells[1..cells.len() - 1] {
        // Interior cells are the built walkway: each needs a surface
        // block and ground flat enough to stack on.
        if cell.block == BlockType::None {
            return false;
        }
        if !is_buildable(&cell.covered, cell.ground, field, params) {
            return false;
        }
    }
    let first = &cells[0];
    let last = &cells[cells.len() - 1];
    first.height == 0
        && first.block == BlockType::None
        && last.height == 0
        && last.block == BlockType::None
}
