//! Branch-and-bound search for a cheapest conflict-free spanning tree.
//!
//! Regions are vertices, synthesized structures are candidate edges
//! weighted by block count.  A plain minimum spanning tree ignores two
//! couplings: structures may overlap each other, and the combined
//! footprints of the tree's structures may slice a region into
//! disconnected pieces.  The search therefore runs Kruskal at every node
//! of a branching tree: the MST cost is a lower bound (restricting edges
//! or splitting vertices can only raise it), conflict-free MSTs become
//! incumbents, and conflicting MSTs branch.  An overlap between two tree
//! edges splits the solution space in two: one child bans the first edge,
//! the sibling keeps it for good — which outlaws every edge it overlaps,
//! a strong propagation step on dense conflict graphs.  A region torn
//! apart by the tree edges touching it branches one ban child per
//! touching edge, plus one child that pins them all, applies the split,
//! and re-solves on the finer region set; edges that pointed at the torn
//! region are re-aimed at whichever piece holds the nearest surviving
//! node to their end cell — the same snap [`validate_solution`] uses.
//!
//! The region graph is still an abstraction: endpoint snaps computed at a
//! split can drift once later edges consume more nodes.  Every candidate
//! incumbent therefore runs the full physical validator first; a tree
//! that fails re-branches over its own edges instead of being accepted.
//!
//! Everything is deterministic: edges tie-break by index, regions are
//! visited in id order, and fresh piece ids come from a monotone counter.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::conflict::{check_region_split, ConflictIndex, RegionSplit};
use crate::geom::Vec2;
use crate::heightfield::{HeightField, SolverParams};
use crate::structure::{Cell, Structure};
use crate::terrain::{RegionId, RegionMap};

/// Disjoint-set forest with union by size and path halving.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n], components: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.components -= 1;
        true
    }
}

/// One region split applied on the winning branch.
#[derive(Clone, Debug)]
pub struct SplitRecord {
    pub original: RegionId,
    pub pieces: Vec<RegionId>,
    pub culprit_edges: Vec<usize>,
}

/// Search outcome.  `total_cost` is `u64::MAX` when no tree was found.
#[derive(Clone, Debug)]
pub struct SolutionTree {
    /// Chosen structure indices, ascending.
    pub chosen: Vec<usize>,
    pub total_cost: u64,
    /// Whether a conflict-free spanning tree was found.
    pub feasible: bool,
    /// Result of [`validate_solution`] on the chosen set.
    pub spanning: bool,
    pub region_splits: Vec<SplitRecord>,
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub branches_explored: u64,
    pub kruskal_calls: u64,
    pub incumbent_updates: u64,
    /// Times a node's bound fell below an ancestor's (must stay zero; the
    /// bound is monotone along any branch).
    pub bound_violations: u64,
    /// Edges banned during a split because not a single node survived the
    /// pinned footprints to host their endpoint.
    pub dropped_endpoints: u64,
    /// Model-clean trees the physical validator rejected; each one
    /// re-branches over its own edges instead of becoming an incumbent.
    pub fallback_branches: u64,
    pub timed_out: bool,
    pub wall_time: Duration,
}

/// A region's surviving nodes plus their membership bitmask over all map
/// nodes.  The connectivity check floods the whole region, so it runs
/// only when a tree edge's footprint mask intersects this one.
struct RegionSet {
    nodes: Vec<usize>,
    mask: Vec<u64>,
}

fn node_mask_words(map: &RegionMap) -> usize {
    (map.width() * map.height()).div_ceil(64)
}

fn region_set(nodes: Vec<usize>, map: &RegionMap) -> RegionSet {
    let mut mask = vec![0u64; node_mask_words(map)];
    for &n in &nodes {
        mask[n / 64] |= 1 << (n % 64);
    }
    RegionSet { nodes, mask }
}

fn masks_intersect(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

/// Mutable per-branch search state.  Region node-sets are shared via
/// `Rc`: a split clones the map of pointers, not the node lists.
#[derive(Clone)]
struct Node {
    banned: Vec<bool>,
    /// Edges every tree below this node must contain.
    forced: Vec<bool>,
    regions: BTreeMap<RegionId, Rc<RegionSet>>,
    endpoints: Vec<(RegionId, RegionId)>,
    splits: Vec<SplitRecord>,
}

enum Task {
    Enter(Box<Node>),
    Leave,
}

fn kruskal(
    node: &Node,
    order: &[usize],
    structures: &[Structure],
    stats: &mut SearchStats,
) -> Option<(u64, Vec<usize>)> {
    stats.kruskal_calls += 1;
    let ids: Vec<RegionId> = node.regions.keys().copied().collect();
    if ids.len() <= 1 {
        debug_assert!(!node.forced.iter().any(|&f| f), "forced edge on a trivial graph");
        return Some((0, Vec::new()));
    }
    let index: BTreeMap<RegionId, usize> =
        ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    let mut cost = 0u64;
    let mut chosen = Vec::new();
    let join = |uf: &mut UnionFind, e: usize| -> Option<bool> {
        let (a, b) = node.endpoints[e];
        debug_assert_ne!(a, b, "self-loop edge {e}");
        let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
            debug_assert!(false, "edge {e} references a vanished region");
            return None;
        };
        Some(uf.union(ia, ib))
    };
    // Forced edges join first; a banned or cyclic forced edge means the
    // node's constraint set admits no spanning tree at all.
    for e in 0..node.forced.len() {
        if !node.forced[e] {
            continue;
        }
        if node.banned[e] || join(&mut uf, e) != Some(true) {
            return None;
        }
        cost += structures[e].cost_blocks;
        chosen.push(e);
    }
    for &e in order {
        if uf.components == 1 {
            break;
        }
        if node.banned[e] || node.forced[e] {
            continue;
        }
        if join(&mut uf, e) == Some(true) {
            cost += structures[e].cost_blocks;
            chosen.push(e);
        }
    }
    if uf.components == 1 {
        chosen.sort_unstable();
        Some((cost, chosen))
    } else {
        None
    }
}

/// Lowest-ordered conflicting pair among the chosen edges.
fn first_ss_conflict(pairs: &[(usize, usize)], in_tree: &[bool]) -> Option<(usize, usize)> {
    pairs.iter().copied().find(|&(i, j)| in_tree[i] && in_tree[j])
}

/// Memoization for the region-split machinery.  A region id names one
/// immutable node set for the search's whole lifetime (splits mint fresh
/// ids), so verdicts keyed on it never go stale.
#[derive(Default)]
struct SplitCache {
    /// Split verdict per (region, touching edge set).
    verdict: HashMap<(RegionId, Vec<usize>), Option<Rc<RegionSplit>>>,
}

/// Lowest-id region torn apart by the chosen edges acting together.
///
/// Every chosen edge whose footprint intersects the region participates:
/// two structures can each leave a region connected on their own yet
/// sever it jointly, so the verdict is over their union.  The full
/// connectivity check floods the whole region, so it runs behind a mask
/// intersection prefilter and a verdict cache — the search revisits the
/// same (region, touchers) combinations constantly.
fn first_rs_conflict(
    node: &Node,
    chosen: &[usize],
    structures: &[Structure],
    map: &RegionMap,
    struct_masks: &[Vec<u64>],
    cache: &mut SplitCache,
) -> Option<(RegionId, Rc<RegionSplit>)> {
    for (&rid, set) in &node.regions {
        let touching: Vec<usize> = chosen
            .iter()
            .copied()
            .filter(|&e| masks_intersect(&struct_masks[e], &set.mask))
            .collect();
        if touching.is_empty() {
            continue;
        }
        // Only touching edges shape the verdict: others lose no nodes.
        let entry = cache.verdict.entry((rid, touching)).or_insert_with_key(|(_, cs)| {
            let tagged: Vec<(usize, &Structure)> =
                cs.iter().map(|&e| (e, &structures[e])).collect();
            check_region_split(&set.nodes, &tagged, map).map(Rc::new)
        });
        if let Some(split) = entry {
            return Some((rid, Rc::clone(split)));
        }
    }
    None
}

fn ban_child(node: &Node, edge: usize) -> Node {
    let mut child = node.clone();
    child.banned[edge] = true;
    child
}

/// Pins `edge` into the node's every future tree and bans each edge it
/// overlaps.  `false` when an overlapping edge is itself pinned: the
/// combination admits no conflict-free tree.
fn pin_edge(node: &mut Node, edge: usize, partners: &[Vec<usize>]) -> bool {
    node.forced[edge] = true;
    for &partner in &partners[edge] {
        if node.forced[partner] {
            return false;
        }
        node.banned[partner] = true;
    }
    true
}

/// Same as [`pin_edge`], on a fresh child.  `None` for a stillborn child.
fn force_child(node: &Node, edge: usize, partners: &[Vec<usize>]) -> Option<Node> {
    let mut child = node.clone();
    pin_edge(&mut child, edge, partners).then_some(child)
}

/// Closes the constraint set under two rules, to fixpoint:
///
/// * the available graph must stay connected, else the node is dead;
/// * an edge that is the sole surviving link between two regions sits in
///   every spanning tree below this node, so it is pinned and its
///   overlap partners are banned outright.
///
/// Returns `false` when propagation proves the node infeasible — the
/// graph fell apart, or a pinned edge's partner was already pinned.
fn propagate(node: &mut Node, partners: &[Vec<usize>]) -> bool {
    loop {
        let ids: Vec<RegionId> = node.regions.keys().copied().collect();
        if ids.len() <= 1 {
            return true;
        }
        let index: BTreeMap<RegionId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let vertex = |id: RegionId| *index.get(&id).expect("live endpoint");

        // Multiplicity per unordered region pair, and the sole edge where
        // it is exactly one.
        let mut multiplicity: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        let mut uf = UnionFind::new(ids.len());
        for e in 0..node.banned.len() {
            if node.banned[e] {
                continue;
            }
            let (a, b) = (vertex(node.endpoints[e].0), vertex(node.endpoints[e].1));
            let key = (a.min(b), a.max(b));
            let entry = multiplicity.entry(key).or_insert((0, e));
            entry.0 += 1;
            uf.union(a, b);
        }
        if uf.components != 1 {
            return false;
        }

        let mut changed = false;
        for (&(a, b), &(count, e)) in &multiplicity {
            if count != 1 || node.forced[e] {
                continue;
            }
            // Is the pair's sole edge a bridge?  Rebuild connectivity
            // without it; the graphs involved are tiny.
            let mut probe = UnionFind::new(ids.len());
            for f in 0..node.banned.len() {
                if node.banned[f] || f == e {
                    continue;
                }
                let (fa, fb) = (vertex(node.endpoints[f].0), vertex(node.endpoints[f].1));
                probe.union(fa, fb);
            }
            if probe.find(a) == probe.find(b) {
                continue;
            }
            if !pin_edge(node, e, partners) {
                return false;
            }
            changed = true;
        }
        if !changed {
            return true;
        }
    }
}

fn cell_centroid(cell: &Cell) -> Vec2 {
    (cell.corners[0] + cell.corners[1] + cell.corners[2] + cell.corners[3]) * 0.25
}

/// Nearest surviving node to `point`; ties go to the smaller node index
/// (row-major).  Shared by the physical validator and the search's
/// endpoint re-aiming so both snap identically.
fn nearest_alive(point: Vec2, alive: &[bool], field: &HeightField, map: &RegionMap) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (n, &live) in alive.iter().enumerate() {
        if !live {
            continue;
        }
        let (x, y) = map.xy(n);
        let d = point.dist(field.node_center(x, y));
        if best.map_or(true, |(bd, bn)| d < bd - 1e-12 || (d < bd + 1e-12 && n < bn)) {
            best = Some((d, n));
        }
    }
    best.map(|(_, n)| n)
}

/// Applies a region split: the original vertex is replaced by one fresh
/// vertex per surviving piece (none at all when the region was consumed
/// outright), and every live edge endpoint that pointed at it is re-aimed
/// at the region holding the nearest node that survives the footprints
/// pinned so far — the same snap the physical validator will use on the
/// finished tree.  An endpoint with no survivor anywhere bans its edge:
/// a tree containing it consumes every node of the map, which the
/// validator rejects.
fn split_child(
    node: &Node,
    rid: RegionId,
    split: &RegionSplit,
    structures: &[Structure],
    field: &HeightField,
    map: &RegionMap,
    next_id: &mut RegionId,
    stats: &mut SearchStats,
) -> Node {
    let mut child = node.clone();
    child.regions.remove(&rid);

    // Snapping universe: the split region's own survivors.  A re-aimed
    // endpoint moves to the nearest surviving node of the region it was
    // pointing at, so the refinement never re-wires an edge into a
    // different region and a child's relaxed cost can only rise.
    let total = map.width() * map.height();
    let mut piece_of: Vec<Option<RegionId>> = vec![None; total];
    let mut pieces = Vec::new();
    for comp in &split.components {
        let id = *next_id;
        *next_id += 1;
        for &n in comp {
            piece_of[n] = Some(id);
        }
        pieces.push(id);
        child.regions.insert(id, Rc::new(region_set(comp.clone(), map)));
    }
    let alive: Vec<bool> = piece_of.iter().map(|p| p.is_some()).collect();

    for e in 0..child.endpoints.len() {
        if child.banned[e] {
            continue;
        }
        for side in 0..2 {
            let end = if side == 0 { child.endpoints[e].0 } else { child.endpoints[e].1 };
            if end != rid {
                continue;
            }
            let cell = if side == 0 {
                &structures[e].cells[0]
            } else {
                structures[e].cells.last().expect("structures have cells")
            };
            match nearest_alive(cell_centroid(cell), &alive, field, map) {
                Some(n) => {
                    let winner = piece_of[n].expect("snap target lies in a piece");
                    if side == 0 {
                        child.endpoints[e].0 = winner;
                    } else {
                        child.endpoints[e].1 = winner;
                    }
                }
                None => {
                    // Not a single node of the region survived the pinned
                    // footprints; the edge has nothing left to stand on.
                    child.banned[e] = true;
                    stats.dropped_endpoints += 1;
                }
            }
        }
    }

    child.splits.push(SplitRecord {
        original: rid,
        pieces,
        culprit_edges: split.culprits.clone(),
    });
    child
}

/// Runs the search.  `conflicts` must be the pairwise index over exactly
/// the `structures` slice passed here.
pub fn bbmst(
    structures: &[Structure],
    conflicts: &ConflictIndex,
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> (SolutionTree, SearchStats) {
    let start = Instant::now();
    let timeout = params.timeout;
    let mut stats = SearchStats::default();

    let n = structures.len();
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by_key(|&i| (structures[i].cost_blocks, i));
        idx
    };

    let words = node_mask_words(map);
    let struct_masks: Vec<Vec<u64>> = structures
        .iter()
        .map(|s| {
            let mut m = vec![0u64; words];
            for cell in &s.cells {
                for &n in &cell.covered {
                    m[n / 64] |= 1 << (n % 64);
                }
            }
            m
        })
        .collect();
    let pairs: Vec<(usize, usize)> = conflicts.pairs.iter().copied().collect();
    let partners: Vec<Vec<usize>> = {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &pairs {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    };

    let root = Node {
        banned: vec![false; n],
        forced: vec![false; n],
        regions: map
            .regions
            .iter()
            .map(|r| (r.id, Rc::new(region_set(r.nodes.clone(), map))))
            .collect(),
        endpoints: structures.iter().map(|s| (s.region_a, s.region_b)).collect(),
        splits: Vec::new(),
    };
    let mut next_id: RegionId =
        map.regions.iter().map(|r| r.id + 1).max().unwrap_or(0).max(
            map.pruned_regions.iter().map(|r| r.id + 1).max().unwrap_or(0),
        );

    let mut incumbent: Option<(u64, Vec<usize>, Vec<SplitRecord>)> = None;
    let mut tasks: Vec<Task> = vec![Task::Enter(Box::new(root))];
    let mut path_bounds: Vec<u64> = Vec::new();
    let mut cache = SplitCache::default();

    'search: while let Some(task) = tasks.pop() {
        let mut node = match task {
            Task::Leave => {
                path_bounds.pop();
                continue;
            }
            Task::Enter(node) => node,
        };
        stats.branches_explored += 1;
        if start.elapsed() > timeout {
            stats.timed_out = true;
            break;
        }

        // Each pass either settles the node or bans one more edge, so
        // this terminates within `n` rounds.
        loop {
            if !propagate(&mut node, &partners) {
                continue 'search; // no conflict-free tree below here
            }
            let Some((cost, chosen)) = kruskal(&node, &order, structures, &mut stats)
            else {
                continue 'search; // disconnected: nothing below here can span
            };
            if let Some(&parent) = path_bounds.last() {
                if cost < parent {
                    stats.bound_violations += 1;
                }
            }
            if incumbent.as_ref().is_some_and(|(best, ..)| cost >= *best) {
                continue 'search; // bound prune
            }

            let mut in_tree = vec![false; n];
            for &e in &chosen {
                in_tree[e] = true;
            }

            if let Some((i, j)) = first_ss_conflict(&pairs, &in_tree) {
                // A pinned side settles the pair without branching.
                if node.forced[i] {
                    node.banned[j] = true;
                    continue;
                }
                if node.forced[j] {
                    node.banned[i] = true;
                    continue;
                }
                tasks.push(Task::Leave);
                path_bounds.push(cost);
                // Trees without `i`, or trees with `i` (sans every edge it
                // overlaps, `j` included) — disjoint, so no subproblem is
                // ever met twice.  The keep child is explored first: it
                // stays close to the current MST and reaches incumbents
                // fast.
                tasks.push(Task::Enter(Box::new(ban_child(&node, i))));
                if let Some(keep) = force_child(&node, i, &partners) {
                    tasks.push(Task::Enter(Box::new(keep)));
                }
                continue 'search;
            }
            if let Some((rid, split)) =
                first_rs_conflict(&node, &chosen, structures, map, &struct_masks, &mut cache)
            {
                tasks.push(Task::Leave);
                path_bounds.push(cost);
                // Same partition discipline as above: the m-th ban child
                // keeps culprits 1..m−1 and drops the m-th, and the split
                // child — reachable only by trees that keep every culprit,
                // since anything else falls in a ban child — pins them
                // all before re-solving on the refined regions.  Pushed
                // in reverse so the first ban child is explored first.
                let mut children: Vec<Node> = Vec::new();
                let mut base = (*node).clone();
                let mut all_kept = true;
                for &c in &split.culprits {
                    if base.forced[c] {
                        continue; // already pinned higher up: no ban child
                    }
                    children.push(ban_child(&base, c));
                    match force_child(&base, c, &partners) {
                        Some(kept) => base = kept,
                        None => {
                            all_kept = false;
                            break;
                        }
                    }
                }
                if all_kept {
                    children.push(split_child(
                        &base, rid, &split, structures, field, map, &mut next_id, &mut stats,
                    ));
                }
                for child in children.into_iter().rev() {
                    tasks.push(Task::Enter(Box::new(child)));
                }
                continue 'search;
            }

            // Model-clean tree: run the physical check before accepting.
            // The region graph under-approximates the deletion semantics
            // in one spot — endpoint snaps fixed at a split can drift as
            // later edges consume more nodes — so a rejected tree
            // re-branches over its own free edges: the m-th child keeps
            // edges 1..m−1 and bans the m-th.  The all-kept subspace is
            // exactly this tree again, so it gets no child.
            if !validate_solution(structures, &chosen, field, map) {
                stats.fallback_branches += 1;
                tasks.push(Task::Leave);
                path_bounds.push(cost);
                let mut children: Vec<Node> = Vec::new();
                let mut base = (*node).clone();
                for &e in &chosen {
                    if base.forced[e] {
                        continue;
                    }
                    children.push(ban_child(&base, e));
                    base = force_child(&base, e, &partners)
                        .expect("tree edges are pairwise conflict-free");
                }
                for child in children.into_iter().rev() {
                    tasks.push(Task::Enter(Box::new(child)));
                }
                continue 'search;
            }

            // Validated spanning tree: new incumbent (the bound prune
            // above already ensured it is strictly better).
            let path_max = path_bounds.iter().copied().max().unwrap_or(0);
            if cost < path_max {
                stats.bound_violations += 1;
            }
            incumbent = Some((cost, chosen, node.splits.clone()));
            stats.incumbent_updates += 1;
            continue 'search;
        }
    }

    stats.wall_time = start.elapsed();
    let tree = match incumbent {
        Some((cost, chosen, splits)) => {
            let spanning = validate_solution(structures, &chosen, field, map);
            SolutionTree {
                chosen,
                total_cost: cost,
                feasible: true,
                spanning,
                region_splits: splits,
            }
        }
        None => SolutionTree {
            chosen: Vec::new(),
            total_cost: u64::MAX,
            feasible: false,
            spanning: false,
            region_splits: Vec::new(),
        },
    };
    (tree, stats)
}

/// Physical check of a chosen structure set, independent of the region
/// graph the search used:
///
/// 1. no two chosen structures overlap;
/// 2. after deleting every covered node, the surviving region nodes —
///    stitched together by one artificial edge per structure joining the
///    nearest survivors to its two end cells — form one component.
pub fn validate_solution(
    structures: &[Structure],
    chosen: &[usize],
    field: &HeightField,
    map: &RegionMap,
) -> bool {
    use crate::conflict::structures_conflict;

    for (k, &i) in chosen.iter().enumerate() {
        for &j in &chosen[k + 1..] {
            if structures_conflict(&structures[i], &structures[j]) {
                return false;
            }
        }
    }

    let total = map.width() * map.height();
    let mut alive: Vec<bool> = (0..total).map(|n| map.region_of(n).is_some()).collect();
    for &e in chosen {
        for cell in &structures[e].cells {
            for &n in &cell.covered {
                alive[n] = false;
            }
        }
    }

    let mut uf = UnionFind::new(total);
    let mut alive_count = 0usize;
    for n in 0..total {
        if !alive[n] {
            continue;
        }
        alive_count += 1;
        for nb in map.kept_neighbors(n) {
            if nb > n && alive[nb] {
                uf.union(n, nb);
            }
        }
    }
    if alive_count == 0 {
        return chosen.is_empty();
    }

    for &e in chosen {
        let s = &structures[e];
        let snap = |cell: &Cell| nearest_alive(cell_centroid(cell), &alive, field, map);
        let (Some(a), Some(b)) = (snap(&s.cells[0]), snap(s.cells.last().unwrap())) else {
            return false;
        };
        uf.union(a, b);
    }

    let mut root = None;
    for n in 0..total {
        if alive[n] {
            let r = uf.find(n);
            match root {
                None => root = Some(r),
                Some(r0) if r0 != r => return false,
                _ => {}
            }
        }
    }
    true
}
