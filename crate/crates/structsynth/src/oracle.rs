//! Exhaustive reference searches, used by tests to certify the fast
//! solvers.
//!
//! [`brute_force_structure`] re-derives the cheapest valid ramp for a
//! candidate by direct enumeration: every end index, every interior
//! height vector, with a small dynamic program over surface-block choices
//! to discard prefixes no block assignment can stitch together.  It
//! shares only the geometry primitives (footprints, coverage, ground)
//! with the production synthesizer — the search itself is independent.
//!
//! [`brute_force_spanning`] enumerates structure subsets by bitmask and
//! keeps the cheapest one the physical validator accepts.

use crate::bbmst::validate_solution;
use crate::buildpoints::BuildCandidate;
use crate::error::Error;
use crate::heightfield::{HeightField, SolverParams};
use crate::structure::{
    cell_footprint, cell_ground, covered_nodes, is_buildable, BlockType, Structure,
};
use crate::terrain::{RegionId, RegionMap};

/// A cheapest chain found by enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainPlan {
    /// Stacked-block count per cell (ends are zero).
    pub heights: Vec<u32>,
    /// Surface block per cell (ends are bare).
    pub blocks: Vec<BlockType>,
    pub cost_blocks: u64,
    pub cost_paper: u64,
}

/// Per-index march data shared by all chains of one candidate.
struct MarchProfile {
    ground: Vec<f64>,
    buildable: Vec<bool>,
    landing: Vec<Option<RegionId>>,
}

fn march_profile(
    cand: &BuildCandidate,
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> Result<MarchProfile, Error> {
    let mut p = MarchProfile { ground: Vec::new(), buildable: Vec::new(), landing: Vec::new() };
    for i in 0..params.max_structure_cells {
        let corners = cell_footprint(cand.b, cand.u, i, params.block_side)?;
        let covered = covered_nodes(&corners, field);
        if covered.is_empty() {
            break;
        }
        let ground = cell_ground(&covered, field)?;
        p.ground.push(ground);
        p.buildable.push(is_buildable(&covered, ground, field, params));
        // Strict-majority landing region for a chain ending here.
        let mut votes: std::collections::BTreeMap<RegionId, usize> = Default::default();
        for &n in &covered {
            if let Some(id) = map.region_of(n) {
                *votes.entry(id).or_insert(0) += 1;
            }
        }
        p.landing.push(
            votes
                .into_iter()
                .find(|&(id, c)| id != cand.top_region && c * 2 > covered.len())
                .map(|(id, _)| id),
        );
    }
    Ok(p)
}

const SURFACES: [BlockType; 3] = [BlockType::Block, BlockType::WedgeF, BlockType::WedgeB];

fn entry(g: f64, h: i32, t: BlockType, l: f64) -> f64 {
    match t {
        BlockType::None => g,
        BlockType::Block | BlockType::WedgeB => g + h as f64 * l + l,
        BlockType::WedgeF => g + h as f64 * l,
    }
}

fn exit(g: f64, h: i32, t: BlockType, l: f64) -> f64 {
    match t {
        BlockType::None => g,
        BlockType::Block | BlockType::WedgeF => g + h as f64 * l + l,
        BlockType::WedgeB => g + h as f64 * l,
    }
}

/// Cheapest valid chain for the candidate, or `None` when no chain lands
/// in a different region.  Ties prefer fewer cells, then the
/// lexicographically smallest height vector.
pub fn brute_force_structure(
    cand: &BuildCandidate,
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> Result<Option<ChainPlan>, Error> {
    let prof = march_profile(cand, field, map, params)?;
    if prof.ground.len() < 2 {
        return Ok(None);
    }
    let l = params.block_side;
    let dz = params.cliff_threshold;
    let (gmin, gmax) = prof
        .ground
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)));
    let hmax = ((gmax - gmin) / l).ceil() as i32 + 3;

    // Chains must stop before the first unbuildable interior; that index
    // may still serve as the (exempt) end cell.
    let e_cap = (1..prof.ground.len())
        .find(|&i| !prof.buildable[i])
        .unwrap_or(prof.ground.len() - 1);

    let mut best: Option<(u64, usize, Vec<i32>)> = None;

    for e in 1..=e_cap {
        if prof.landing[e].is_none() {
            continue;
        }
        let interiors = e - 1;
        // DFS over interior heights with a feasible-surface-set mask.
        // State per depth: (height, mask of surfaces with a consistent
        // block assignment for the prefix).
        struct Dfs<'a> {
            prof: &'a MarchProfile,
            l: f64,
            dz: f64,
            hmax: i32,
            e: usize,
            best: &'a mut Option<(u64, usize, Vec<i32>)>,
            heights: Vec<i32>,
        }
        impl Dfs<'_> {
            fn run(&mut self, depth: usize, prev_h: i32, prev_mask: u8, sum: u64) {
                let i = depth + 1; // cell index being assigned
                if let Some((c, ..)) = self.best {
                    // Every interior still to place costs at least its
                    // surface block.
                    if sum + self.e as u64 - 1 >= *c {
                        return;
                    }
                }
                if depth == self.e - 1 {
                    // Close with the bare end cell.
                    let ge = self.prof.ground[self.e];
                    let ok = if self.e == 1 {
                        (ge - self.prof.ground[0]).abs() <= self.dz
                    } else {
                        (0..3).any(|k| {
                            prev_mask & (1 << k) != 0
                                && (ge
                                    - exit(
                                        self.prof.ground[self.e - 1],
                                        prev_h,
                                        SURFACES[k],
                                        self.l,
                                    ))
                                .abs()
                                    <= self.dz
                        })
                    };
                    if ok {
                        let cost = sum + self.e as u64 - 1;
                        if self.best.as_ref().map_or(true, |(c, ..)| cost < *c) {
                            *self.best = Some((cost, self.e, self.heights.clone()));
                        }
                    }
                    return;
                }
                for h in 0..=self.hmax {
                    let mut mask = 0u8;
                    for (k, &t) in SURFACES.iter().enumerate() {
                        let en = entry(self.prof.ground[i], h, t, self.l);
                        let reachable = if i == 1 {
                            (en - self.prof.ground[0]).abs() <= self.dz
                        } else {
                            (0..3).any(|kp| {
                                prev_mask & (1 << kp) != 0
                                    && (en
                                        - exit(
                                            self.prof.ground[i - 1],
                                            prev_h,
                                            SURFACES[kp],
                                            self.l,
                                        ))
                                    .abs()
                                        <= self.dz
                            })
                        };
                        if reachable {
                            mask |= 1 << k;
                        }
                    }
                    if mask == 0 {
                        continue;
                    }
                    self.heights.push(h);
                    self.run(depth + 1, h, mask, sum + h as u64);
                    self.heights.pop();
                }
            }
        }
        let mut dfs =
            Dfs { prof: &prof, l, dz, hmax, e, best: &mut best, heights: Vec::with_capacity(interiors) };
        dfs.run(0, 0, 0, 0);
    }

    let Some((cost, e, heights)) = best else { return Ok(None) };

    // Reconstruct one consistent surface assignment: recompute the masks
    // forward, then pick blocks backwards, smallest variant first.
    let mut masks: Vec<u8> = Vec::with_capacity(e);
    for (d, &h) in heights.iter().enumerate() {
        let i = d + 1;
        let mut mask = 0u8;
        for (k, &t) in SURFACES.iter().enumerate() {
            let en = entry(prof.ground[i], h, t, l);
            let reachable = if i == 1 {
                (en - prof.ground[0]).abs() <= dz
            } else {
                let (ph, pm) = (heights[d - 1], masks[d - 1]);
                (0..3).any(|kp| {
                    pm & (1 << kp) != 0
                        && (en - exit(prof.ground[i - 1], ph, SURFACES[kp], l)).abs() <= dz
                })
            };
            if reachable {
                mask |= 1 << k;
            }
        }
        masks.push(mask);
    }
    let mut blocks = vec![BlockType::None; e + 1];
    let mut full_heights = vec![0u32; e + 1];
    for (d, &h) in heights.iter().enumerate() {
        full_heights[d + 1] = h as u32;
    }
    let mut need_exit_to: Option<f64> = Some(prof.ground[e]);
    for d in (0..heights.len()).rev() {
        let i = d + 1;
        let target = need_exit_to.expect("chain closure exists");
        let k = (0..3)
            .find(|&k| {
                masks[d] & (1 << k) != 0
                    && (target - exit(prof.ground[i], heights[d], SURFACES[k], l)).abs() <= dz
            })
            .expect("mask admits the recorded closure");
        blocks[i] = SURFACES[k];
        need_exit_to = Some(entry(prof.ground[i], heights[d], SURFACES[k], l));
    }

    let cost_paper: u64 = heights.iter().map(|&h| h as u64).sum();
    debug_assert_eq!(cost, cost_paper + e as u64 - 1);
    Ok(Some(ChainPlan { heights: full_heights, blocks, cost_blocks: cost, cost_paper }))
}

/// Cheapest structure subset accepted by [`validate_solution`], found by
/// exhaustive bitmask enumeration.  Panics if given more than 20
/// structures.  Ties prefer the lexicographically smallest index set.
pub fn brute_force_spanning(
    structures: &[Structure],
    field: &HeightField,
    map: &RegionMap,
) -> Option<(u64, Vec<usize>)> {
    let n = structures.len();
    assert!(n <= 20, "exhaustive subset search is capped at 20 structures");
    let mut best: Option<(u64, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let cost: u64 = chosen.iter().map(|&i| structures[i].cost_blocks).sum();
        if best.as_ref().is_some_and(|(c, sel)| (cost, &chosen) >= (*c, sel)) {
            continue;
        }
        if validate_solution(structures, &chosen, field, map) {
            best = Some((cost, chosen));
        }
    }
    best
}
