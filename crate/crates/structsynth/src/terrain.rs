//! Traversability analysis: regions, cliff edges, and pruning.
//!
//! The terrain graph has one node per grid cell and 4-neighbor edges.
//! A node is traversable when its steepness is within the robot's limit;
//! an edge survives when the robot can step across it, i.e. the height
//! difference is at most the cliff threshold.  Regions are the connected
//! components of that graph.  The removed edges between two traversable
//! nodes are the cliff edges — exactly the places where a ramp structure
//! could reconnect the world.
//!
//! Regions too small to matter (no room for a robot-sized square) are
//! pruned: their nodes stay traversable but no longer count toward the
//! connectivity goal.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::heightfield::fields::steep_field;
use crate::heightfield::{HeightField, SolverParams};

pub type RegionId = u32;

/// Why a node does or does not participate in the terrain graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    Traversable,
    SteepBlocked,
}

/// One connected component of the traversability graph.
#[derive(Clone, Debug)]
pub struct RegionInfo {
    pub id: RegionId,
    /// Node indices (row-major), in discovery order starting from the
    /// lowest-index node.
    pub nodes: Vec<usize>,
    /// Lowest node index of the region, used as a stable representative.
    pub representative: usize,
}

/// Neighbor-direction bits for the kept-edge adjacency mask.
const EAST: u8 = 1;
const WEST: u8 = 2;
const SOUTH: u8 = 4;
const NORTH: u8 = 8;

/// The complete traversability analysis of a height field.
#[derive(Clone, Debug)]
pub struct RegionMap {
    width: usize,
    height: usize,
    state: Vec<NodeState>,
    region_id: Vec<Option<RegionId>>,
    pruned: Vec<bool>,
    /// Kept regions, ascending by id.
    pub regions: Vec<RegionInfo>,
    /// Regions dropped by [`prune_small_regions`], ascending by id.
    pub pruned_regions: Vec<RegionInfo>,
    /// Removed edges whose endpoints are both traversable, as node-index
    /// pairs `(a, b)` with `a < b`, in row-major scan order.
    pub cliff_edges: Vec<(usize, usize)>,
    /// Per-node bitmask of surviving (steppable) edges.
    kept: Vec<u8>,
}

impl RegionMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn xy(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn state(&self, node: usize) -> NodeState {
        self.state[node]
    }

    pub fn is_traversable(&self, node: usize) -> bool {
        self.state[node] == NodeState::Traversable
    }

    /// Region of a node; `None` for steep-blocked nodes and for nodes of
    /// pruned regions.
    pub fn region_of(&self, node: usize) -> Option<RegionId> {
        self.region_id[node]
    }

    /// Whether the node belonged to a region that was pruned away.
    pub fn is_pruned(&self, node: usize) -> bool {
        self.pruned[node]
    }

    pub fn region(&self, id: RegionId) -> Option<&RegionInfo> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// Neighbors reachable by stepping (kept edges), in E, W, S, N order.
    pub fn kept_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.kept[node];
        let w = self.width;
        [
            (EAST, node + 1),
            (WEST, node.wrapping_sub(1)),
            (SOUTH, node + w),
            (NORTH, node.wrapping_sub(w)),
        ]
        .into_iter()
        .filter_map(move |(bit, n)| (mask & bit != 0).then_some(n))
    }

    /// Integer label grid: region id for kept regions, `-1` for
    /// steep-blocked nodes, `-2` for nodes of pruned regions.
    pub fn to_label_text(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if x > 0 {
                    out.push(',');
                }
                let node = self.idx(x, y);
                let label: i64 = match (self.state[node], self.region_id[node]) {
                    (NodeState::SteepBlocked, _) => -1,
                    (NodeState::Traversable, Some(id)) => id as i64,
                    (NodeState::Traversable, None) => -2,
                };
                let _ = write!(out, "{label}");
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the region map of a field: node states from the steepness field,
/// kept/cliff edges from per-edge height differences, regions by flood
/// fill over kept edges.  Region ids are assigned in row-major discovery
/// order, so the labeling is deterministic.
pub fn build_region_map(field: &HeightField, params: &SolverParams) -> RegionMap {
    let (w, h) = (field.width(), field.height());
    let n = w * h;
    let steep = steep_field(field, params);
    let state: Vec<NodeState> = steep
        .values
        .iter()
        .map(|&s| if s <= params.steep_threshold { NodeState::Traversable } else { NodeState::SteepBlocked })
        .collect();

    let mut kept = vec![0u8; n];
    let mut cliff_edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let a = y * w + x;
            // East edge, then south edge: row-major scan order.
            for (dx, dy, bit_a, bit_b) in [(1usize, 0usize, EAST, WEST), (0, 1, SOUTH, NORTH)] {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= w || ny >= h {
                    continue;
                }
                let b = ny * w + nx;
                if state[a] != NodeState::Traversable || state[b] != NodeState::Traversable {
                    continue;
                }
                if (field.z_at(a) - field.z_at(b)).abs() <= params.cliff_threshold {
                    kept[a] |= bit_a;
                    kept[b] |= bit_b;
                } else {
                    cliff_edges.push((a, b));
                }
            }
        }
    }

    let mut region_id = vec![None; n];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if state[start] != NodeState::Traversable || region_id[start].is_some() {
            continue;
        }
        let id = regions.len() as RegionId;
        let mut nodes = Vec::new();
        region_id[start] = Some(id);
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            nodes.push(node);
            let (x, y) = (node % w, node / w);
            let mask = kept[node];
            for (bit, nx, ny) in [
                (EAST, x.wrapping_add(1), y),
                (WEST, x.wrapping_sub(1), y),
                (SOUTH, x, y.wrapping_add(1)),
                (NORTH, x, y.wrapping_sub(1)),
            ] {
                if mask & bit == 0 {
                    continue;
                }
                let next = ny * w + nx;
                if region_id[next].is_none() {
                    region_id[next] = Some(id);
                    queue.push_back(next);
                }
            }
        }
        regions.push(RegionInfo { id, nodes, representative: start });
    }

    RegionMap {
        width: w,
        height: h,
        state,
        region_id,
        pruned: vec![false; n],
        regions,
        pruned_regions: Vec::new(),
        cliff_edges,
        kept,
    }
}

/// Drops regions that cannot contain an axis-aligned
/// `min_region_side × min_region_side` square of nodes anywhere.  Pruned
/// nodes stay traversable but lose their region id; a region of exactly
/// the minimum side survives.
pub fn prune_small_regions(mut map: RegionMap, field: &HeightField, params: &SolverParams) -> RegionMap {
    let k = params.min_region_side_nodes(field.cell_size());
    let (w, h) = (map.width, map.height);

    let mut kept_regions = Vec::new();
    let mut pruned_regions = std::mem::take(&mut map.pruned_regions);
    for region in std::mem::take(&mut map.regions) {
        if fits_square(&region.nodes, w, h, k) {
            kept_regions.push(region);
        } else {
            for &node in &region.nodes {
                map.region_id[node] = None;
                map.pruned[node] = true;
            }
            pruned_regions.push(region);
        }
    }
    map.regions = kept_regions;
    map.pruned_regions = pruned_regions;
    map
}

/// Whether the node set contains a full k×k block: binary erosion via a
/// summed-area table over the region mask, restricted to its bounding box.
fn fits_square(nodes: &[usize], w: usize, _h: usize, k: usize) -> bool {
    if nodes.is_empty() {
        return false;
    }
    let mut x0 = usize::MAX;
    let mut y0 = usize::MAX;
    let mut x1 = 0usize;
    let mut y1 = 0usize;
    for &node in nodes {
        let (x, y) = (node % w, node / w);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let bw = x1 - x0 + 1;
    let bh = y1 - y0 + 1;
    if bw < k || bh < k {
        return false;
    }
    let mut mask = vec![0u32; bw * bh];
    for &node in nodes {
        let (x, y) = (node % w, node / w);
        mask[(y - y0) * bw + (x - x0)] = 1;
    }
    // sat with zero padding
    let mut sat = vec![0u32; (bw + 1) * (bh + 1)];
    for y in 0..bh {
        for x in 0..bw {
            sat[(y + 1) * (bw + 1) + (x + 1)] =
                mask[y * bw + x] + sat[y * (bw + 1) + (x + 1)] + sat[(y + 1) * (bw + 1) + x]
                    - sat[y * (bw + 1) + x];
        }
    }
    let target = (k * k) as u32;
    for y in 0..=(bh - k) {
        for x in 0..=(bw - k) {
            // Additions first: the running value stays non-negative in u32.
            let sum = (sat[(y + k) * (bw + 1) + (x + k)] + sat[y * (bw + 1) + x])
                - sat[y * (bw + 1) + (x + k)]
                - sat[(y + k) * (bw + 1) + x];
            if sum == target {
                return true;
            }
        }
    }
    false
}
