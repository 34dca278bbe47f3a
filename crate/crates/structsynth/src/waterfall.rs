//! The waterfall synthesizer: drop a ramp downhill from a build point.
//!
//! Starting at a cliff edge, cells march downhill along the candidate
//! direction.  For each new cell an interval `[hn, hx]` of feasible block
//! counts is propagated: `hx` is the tallest column the robot could still
//! step onto from the previous cell, `hn` the shortest column it could
//! step down to.  The march ends at the first cell whose interval dips
//! below zero — the ramp has reached the ground.  A backward pass then
//! tightens the minimum heights so every downhill hand-over stays within
//! the step limit, and a final pass picks each cell's surface block from
//! the height difference of its neighbours.
//!
//! The interval recurrences assume the step limit is exactly half a block
//! side (the shipped robot/block combination); other ratios are rejected
//! rather than silently producing wrong ramps.

use crate::buildpoints::BuildCandidate;
use crate::error::Error;
use crate::heightfield::{HeightField, SolverParams};
use crate::structure::{
    cell_footprint, cell_ground, covered_nodes, is_buildable, is_valid_structure, structure_cost,
    BlockType, Cell, Structure,
};
use crate::terrain::{RegionId, RegionMap};

/// Feasible block-count interval for one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeightBounds {
    /// Maximum feasible stacked-block count.
    pub hx: i32,
    /// Minimum feasible stacked-block count.
    pub hn: i32,
}

/// Why synthesis stopped without a structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// A cell's footprint covers no grid nodes.
    OffMap,
    /// An interior cell's ground is not flat enough to build on.
    Unbuildable,
    /// The maximum feasible height fell below zero (terrain rises too
    /// fast to follow).
    NoFeasibleHeight,
    /// The march hit `max_structure_cells` without touching down.
    MarchCapped,
    /// The landing cell has no majority region distinct from the cliff
    /// top (flat ground, a pruned sliver, or a straddled landing).
    NoLandingRegion,
    /// The assembled chain failed the final validity check.
    InvalidChain,
}

/// Synthesis result with the stop reason preserved for diagnostics.
#[derive(Clone, Debug)]
pub enum Synthesis {
    Built(Structure),
    Stopped(StopReason),
}

impl Synthesis {
    pub fn into_option(self) -> Option<Structure> {
        match self {
            Synthesis::Built(s) => Some(s),
            Synthesis::Stopped(_) => None,
        }
    }
}

fn ensure_supported(params: &SolverParams) -> Result<(), Error> {
    if (params.cliff_threshold - params.block_side / 2.0).abs() > 1e-9 {
        return Err(Error::Unsupported(format!(
            "height-bound recurrences require cliff_threshold == block_side / 2 \
             (got {} and {})",
            params.cliff_threshold, params.block_side
        )));
    }
    Ok(())
}

/// Propagates the feasible height interval from cell `j` to the next cell
/// `i`, where `delta_e = ground(j) - ground(i)` in cm:
///
/// ```text
/// hx_i = floor(hx_j + delta_e / L + 3/2)
/// hn_i = ceil (hn_j + delta_e / L - 3/2)
/// ```
///
/// Valid only for `cliff_threshold == block_side / 2`.
pub fn bound_step(prev: HeightBounds, delta_e: f64, params: &SolverParams) -> Result<HeightBounds, Error> {
    ensure_supported(params)?;
    let l = params.block_side;
    Ok(HeightBounds {
        hx: (prev.hx as f64 + delta_e / l + 1.5).floor() as i32,
        hn: (prev.hn as f64 + delta_e / l - 1.5).ceil() as i32,
    })
}

/// Runs the full synthesizer for one candidate.  `Ok(Stopped(..))` is the
/// expected outcome for candidates where no ramp fits.
pub fn synthesize(
    cand: &BuildCandidate,
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> Result<Synthesis, Error> {
    ensure_supported(params)?;

    // Pass 1: march downhill propagating [hn, hx] until touch-down.
    let mut cells: Vec<Cell> = Vec::new();
    let mut bounds: Vec<HeightBounds> = Vec::new();

    let corners = cell_footprint(cand.b, cand.u, 0, params.block_side)?;
    let covered = covered_nodes(&corners, field);
    if covered.is_empty() {
        return Ok(Synthesis::Stopped(StopReason::OffMap));
    }
    let ground = cell_ground(&covered, field)?;
    cells.push(Cell { index: 0, corners, height: 0, block: BlockType::None, ground, covered });
    bounds.push(HeightBounds { hx: 0, hn: 0 });

    let end = loop {
        let i = cells.len();
        if i >= params.max_structure_cells {
            return Ok(Synthesis::Stopped(StopReason::MarchCapped));
        }
        let corners = cell_footprint(cand.b, cand.u, i, params.block_side)?;
        let covered = covered_nodes(&corners, field);
        if covered.is_empty() {
            return Ok(Synthesis::Stopped(StopReason::OffMap));
        }
        let ground = cell_ground(&covered, field)?;
        let b = bound_step(bounds[i - 1], cells[i - 1].ground - ground, params)?;
        if b.hx < 0 {
            return Ok(Synthesis::Stopped(StopReason::NoFeasibleHeight));
        }
        let touched_down = b.hn < 0;
        let cell = Cell { index: i, corners, height: 0, block: BlockType::None, ground, covered };
        if touched_down {
            // This is the end cell: bare ground, exempt from buildability.
            cells.push(cell);
            bounds.push(HeightBounds { hx: 0, hn: 0 });
            break i;
        }
        if !is_buildable(&cell.covered, cell.ground, field, params) {
            return Ok(Synthesis::Stopped(StopReason::Unbuildable));
        }
        cells.push(cell);
        bounds.push(b);
    };

    // Pass 2: tighten minimum heights backwards from the touch-down cell
    // so every downhill hand-over stays within the step limit, then commit
    // heights at the minimum.
    let l = params.block_side;
    for i in (1..end).rev() {
        let back =
            (bounds[i + 1].hn as f64 + (cells[i + 1].ground - cells[i].ground) / l - 1.5).ceil() as i32;
        bounds[i].hn = bounds[i].hn.max(back);
        debug_assert!(
            bounds[i].hn <= bounds[i].hx,
            "backward pass exceeded forward maximum at cell {i}"
        );
        cells[i].height = bounds[i].hn.max(0) as u32;
    }

    // Pass 3: surface blocks for interior cells.  The height drop across
    // each cell's neighbours suggests a surface (flat within half a block,
    // otherwise a wedge matching the slope sign), but a surface couples the
    // cell's entry and exit sides, so the suggestion is only kept when the
    // whole chain still admits a hand-over-feasible completion: a forward
    // reachability sweep over the three surface choices, then a backward
    // commit that prefers the suggested surface.
    if !assign_surfaces(&mut cells, end, params) {
        return Ok(Synthesis::Stopped(StopReason::InvalidChain));
    }

    // Landing region: strict majority of the end cell's covered nodes in
    // one non-pruned region distinct from the cliff top.
    let Some(region_b) = landing_region(&cells[end], map, cand.top_region) else {
        return Ok(Synthesis::Stopped(StopReason::NoLandingRegion));
    };

    let (cost_blocks, cost_paper) = structure_cost(&cells);
    let structure = Structure {
        id: 0,
        build_point: cand.b,
        orientation: cand.u,
        cells,
        region_a: cand.top_region,
        region_b,
        cost_blocks,
        cost_paper,
    };
    if !is_valid_structure(&structure, field, params) {
        return Ok(Synthesis::Stopped(StopReason::InvalidChain));
    }
    Ok(Synthesis::Built(structure))
}

/// Chooses surface blocks for the interior cells `1..end` so that every
/// hand-over (including the bare cells at both ends) stays within the step
/// limit.  Forward sweep: which of the three surfaces are reachable at each
/// cell given some feasible prefix.  Backward sweep: commit one surface per
/// cell, preferring the neighbour-height-drop suggestion when it is
/// consistent with the committed successor.  Returns false when no
/// assignment exists (the chain is then discarded).
fn assign_surfaces(cells: &mut [Cell], end: usize, params: &SolverParams) -> bool {
    const CHOICES: [BlockType; 3] = [BlockType::Block, BlockType::WedgeF, BlockType::WedgeB];
    if end <= 1 {
        return true; // no interior cells; end-to-end hand-over checked later
    }
    let l = params.block_side;
    let entry = |c: &Cell, t: BlockType| c.ground + c.height as f64 * l + t.surface_at_entry(l);
    let exit = |c: &Cell, t: BlockType| c.ground + c.height as f64 * l + t.surface_at_exit(l);
    let ok = |a: f64, b: f64| (b - a).abs() <= params.cliff_threshold;

    // Surface suggested by the height drop across the cell's neighbours.
    let suggest = |cells: &[Cell], i: usize| {
        let dz = (cells[i - 1].ground - cells[i + 1].ground)
            + l * (cells[i - 1].height as f64 - cells[i + 1].height as f64);
        if dz.abs() <= 0.5 * l {
            BlockType::Block
        } else if dz < 0.0 {
            BlockType::WedgeF
        } else {
            BlockType::WedgeB
        }
    };

    let mut feasible = vec![[false; 3]; end];
    for (k, &t) in CHOICES.iter().enumerate() {
        feasible[1][k] = ok(cells[0].ground, entry(&cells[1], t));
    }
    for i in 2..end {
        for (k, &t) in CHOICES.iter().enumerate() {
            feasible[i][k] = CHOICES
                .iter()
                .enumerate()
                .any(|(j, &p)| feasible[i - 1][j] && ok(exit(&cells[i - 1], p), entry(&cells[i], t)));
        }
    }

    // Commit from the end backwards; the last interior must also hand over
    // onto the bare end cell.
    let pick = |i: usize, allowed: &dyn Fn(BlockType) -> bool, cells: &[Cell]| {
        let s = suggest(cells, i);
        std::iter::once(s)
            .chain([BlockType::Block, BlockType::WedgeB, BlockType::WedgeF])
            .find(|&t| {
                let k = CHOICES.iter().position(|&c| c == t).unwrap();
                feasible[i][k] && allowed(t)
            })
    };
    let last = {
        let ground = cells[end].ground;
        let cs = &*cells;
        match pick(end - 1, &|t| ok(exit(&cs[end - 1], t), ground), cs) {
            Some(t) => t,
            None => return false,
        }
    };
    cells[end - 1].block = last;
    for i in (1..end - 1).rev() {
        let succ_entry = entry(&cells[i + 1], cells[i + 1].block);
        let cs = &*cells;
        let Some(t) = pick(i, &|t| ok(exit(&cs[i], t), succ_entry), cs) else {
            return false;
        };
        cells[i].block = t;
    }
    ok(cells[0].ground, entry(&cells[1], cells[1].block))
}

/// Majority vote of the end cell's covered nodes.
fn landing_region(end_cell: &Cell, map: &RegionMap, top_region: RegionId) -> Option<RegionId> {
    let mut counts: std::collections::BTreeMap<RegionId, usize> = std::collections::BTreeMap::new();
    for &node in &end_cell.covered {
        if let Some(id) = map.region_of(node) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let total = end_cell.covered.len();
    counts
        .into_iter()
        .find(|&(id, count)| id != top_region && count * 2 > total)
        .map(|(id, _)| id)
}

/// [`synthesize`] reduced to the plain success/failure contract.
pub fn waterfall(
    cand: &BuildCandidate,
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> Result<Option<Structure>, Error> {
    Ok(synthesize(cand, field, map, params)?.into_option())
}
