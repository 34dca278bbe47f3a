//! Conflict detection between structures and against regions.
//!
//! Two structures conflict when any of their cells overlap with positive
//! area; mere edge/corner contact is allowed so ramps may share seams.
//! A structure set conflicts with a region when the nodes it consumes
//! disconnect that region into several pieces — walking across the region
//! would then require crossing a ramp footprint.

use std::collections::{BTreeMap, BTreeSet};

use crate::structure::{Cell, Structure};
use crate::terrain::{RegionId, RegionMap};

/// Positive-area overlap tolerance: penetrations up to this depth count
/// as contact, not conflict.
const CONTACT_EPS: f64 = 1e-9;

/// Separating-axis test for two convex quadrilateral cells.
/// Returns `true` only for positive-area overlap.
pub fn cells_intersect(a: &Cell, b: &Cell) -> bool {
    let axes = |c: &Cell| {
        let e0 = c.corners[1] - c.corners[0];
        let e1 = c.corners[3] - c.corners[0];
        [e0.normalized(), e1.normalized()]
    };
    for axis in axes(a).into_iter().chain(axes(b)) {
        let Some(axis) = axis else { continue };
        let project = |c: &Cell| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in &c.corners {
                let t = axis.dot(*p);
                lo = lo.min(t);
                hi = hi.max(t);
            }
            (lo, hi)
        };
        let (alo, ahi) = project(a);
        let (blo, bhi) = project(b);
        if ahi.min(bhi) - alo.max(blo) <= CONTACT_EPS {
            return false;
        }
    }
    true
}

/// Whether any cell of `a` overlaps any cell of `b`.
pub fn structures_conflict(a: &Structure, b: &Structure) -> bool {
    a.cells
        .iter()
        .any(|ca| b.cells.iter().any(|cb| cells_intersect(ca, cb)))
}

/// All pairwise structure conflicts, plus the conflict-pair fraction
/// (pairs found over pairs possible) used as a difficulty metric.
#[derive(Clone, Debug)]
pub struct ConflictIndex {
    /// Conflicting pairs `(i, j)` with `i < j`, indices into the slice
    /// passed to [`build_conflict_index`].
    pub pairs: BTreeSet<(usize, usize)>,
    /// `pairs.len() / C(n, 2)`, or zero for fewer than two structures.
    pub cpf: f64,
}

impl ConflictIndex {
    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pairs.contains(&key)
    }
}

/// Builds the pairwise index.  A uniform-grid prefilter over cell
/// bounding boxes keeps this near-linear for spread-out structures; the
/// exact separating-axis test runs only on co-located candidates, so the
/// result is identical to checking all pairs.
pub fn build_conflict_index(structures: &[Structure]) -> ConflictIndex {
    let n = structures.len();
    if n < 2 {
        return ConflictIndex { pairs: BTreeSet::new(), cpf: 0.0 };
    }

    // Bucket size: the largest cell edge length in play.
    let mut bucket = 0.0f64;
    for s in structures {
        for c in &s.cells {
            bucket = bucket.max((c.corners[1] - c.corners[0]).norm());
            bucket = bucket.max((c.corners[3] - c.corners[0]).norm());
        }
    }
    if bucket <= 0.0 {
        bucket = 1.0;
    }

    let mut grid: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, s) in structures.iter().enumerate() {
        for c in &s.cells {
            let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
            let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in &c.corners {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let bx0 = ((x0 - CONTACT_EPS) / bucket).floor() as i64;
            let bx1 = ((x1 + CONTACT_EPS) / bucket).floor() as i64;
            let by0 = ((y0 - CONTACT_EPS) / bucket).floor() as i64;
            let by1 = ((y1 + CONTACT_EPS) / bucket).floor() as i64;
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    let slot = grid.entry((bx, by)).or_default();
                    if slot.last() != Some(&i) {
                        slot.push(i);
                    }
                }
            }
        }
    }

    let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
    for slot in grid.values() {
        for (k, &i) in slot.iter().enumerate() {
            for &j in &slot[k + 1..] {
                if i != j {
                    candidates.insert((i.min(j), i.max(j)));
                }
            }
        }
    }

    let mut pairs = BTreeSet::new();
    for (i, j) in candidates {
        if structures_conflict(&structures[i], &structures[j]) {
            pairs.insert((i, j));
        }
    }
    let possible = (n * (n - 1) / 2) as f64;
    let cpf = pairs.len() as f64 / possible;
    ConflictIndex { pairs, cpf }
}

/// Connected components of `nodes` after deleting `removed`, following
/// the map's kept edges.  Components are sorted internally and ordered by
/// their smallest node, so the result is deterministic.
pub fn split_components(
    nodes: &[usize],
    removed: &BTreeSet<usize>,
    map: &RegionMap,
) -> Vec<Vec<usize>> {
    // Dense membership flags: the search calls this in its hot path.
    let mut member = vec![false; map.width() * map.height()];
    for &n in nodes {
        member[n] = !removed.contains(&n);
    }
    let mut ordered: Vec<usize> = nodes.iter().copied().filter(|&n| member[n]).collect();
    ordered.sort_unstable();
    let mut components = Vec::new();
    for &start in &ordered {
        if !member[start] {
            continue; // already swept into an earlier component
        }
        let mut comp = vec![start];
        member[start] = false;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            for nb in map.kept_neighbors(node) {
                if member[nb] {
                    member[nb] = false;
                    comp.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// A region torn apart by structure footprints.
#[derive(Clone, Debug)]
pub struct RegionSplit {
    /// Surviving connected pieces (possibly empty if the region was fully
    /// consumed), each sorted, ordered by smallest node.
    pub components: Vec<Vec<usize>>,
    /// Tags of the structures whose footprints caused the split, in the
    /// order they were supplied.
    pub culprits: Vec<usize>,
}

/// Checks whether the tagged structures jointly disconnect a region.
///
/// Every structure whose footprint covers at least one region node
/// participates: all their footprints are removed at once and the
/// remainder flood-filled.  Anything other than exactly one surviving
/// piece — several fragments, or none at all — is a conflict, reported
/// with every participating structure as a culprit.  Removal is joint
/// because it has to be: two structures can each leave a region connected
/// on their own (say, opposite half-width bites) yet sever it together.
pub fn check_region_split(
    nodes: &[usize],
    structures: &[(usize, &Structure)],
    map: &RegionMap,
) -> Option<RegionSplit> {
    let mut inside = vec![false; map.width() * map.height()];
    for &n in nodes {
        inside[n] = true;
    }

    let mut culprits = Vec::new();
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    for &(tag, s) in structures {
        let touches = s.cells.iter().any(|c| c.covered.iter().any(|&n| inside[n]));
        if touches {
            culprits.push(tag);
            for c in &s.cells {
                removed.extend(c.covered.iter().copied());
            }
        }
    }
    if culprits.is_empty() {
        return None;
    }
    let components = split_components(nodes, &removed, map);
    if components.len() == 1 {
        return None;
    }
    Some(RegionSplit { components, culprits })
}

/// The multigraph the spanning search runs on: regions are vertices and
/// every structure is a candidate edge between its two endpoint regions.
#[derive(Clone, Debug)]
pub struct RegionGraph {
    /// Non-pruned region ids, ascending.
    pub regions: Vec<RegionId>,
    /// `(region_a, region_b, cost_blocks, structure index)` per structure.
    pub edges: Vec<(RegionId, RegionId, u64, usize)>,
}

pub fn build_region_graph(structures: &[Structure], map: &RegionMap) -> RegionGraph {
    let regions = map.regions.iter().map(|r| r.id).collect();
    let edges = structures
        .iter()
        .enumerate()
        .map(|(i, s)| (s.region_a, s.region_b, s.cost_blocks, i))
        .collect();
    RegionGraph { regions, edges }
}
