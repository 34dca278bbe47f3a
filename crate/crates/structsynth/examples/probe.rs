//! Scratch probe for search-vs-oracle disagreements on seeded instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use structsynth::buildpoints::extract_build_points;
use structsynth::oracle::brute_force_spanning;
use structsynth::terrain::build_region_map;
use structsynth::waterfall::{synthesize, Synthesis};
use structsynth::{bbmst, build_conflict_index, validate_solution, HeightField, SolverParams, Structure};

fn pick_subset(all: Vec<Structure>) -> Vec<Structure> {
    let mut take: Vec<usize> = Vec::new();
    if all.len() <= 8 {
        take.extend(0..all.len());
    } else {
        let mut seen = BTreeSet::new();
        for (i, s) in all.iter().enumerate() {
            let key = (s.region_a.min(s.region_b), s.region_a.max(s.region_b));
            if seen.insert(key) {
                take.push(i);
                if take.len() == 8 {
                    break;
                }
            }
        }
        if take.len() < 8 {
            let left: Vec<usize> = (0..all.len()).filter(|i| !take.contains(i)).collect();
            let need = 8 - take.len();
            for k in 0..need.min(left.len()) {
                take.push(left[k * left.len() / need]);
            }
        }
        take.sort_unstable();
        take.dedup();
    }
    let mut out = Vec::with_capacity(take.len());
    for (new_id, i) in take.iter().enumerate() {
        let mut s = all[*i].clone();
        s.id = new_id;
        out.push(s);
    }
    out
}

fn main() {
    let p = SolverParams::default();
    for seed in [30u64, 43, 79, 80, 86, 91] {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC2_0000 + seed);
        let stripes = rng.gen_range(2..=5usize);
        let stripe_w = [16usize, 20][rng.gen_range(0..2usize)];
        let mut level = vec![rng.gen_range(0..=3i32)];
        for _ in 1..stripes {
            let prev = *level.last().unwrap();
            let step = rng.gen_range(1..=2i32);
            let dir = if prev + step > 3 {
                -1
            } else if prev - step < 0 {
                1
            } else if rng.gen_bool(0.5) {
                1
            } else {
                -1
            };
            level.push(prev + dir * step);
        }
        let f = HeightField::from_fn(stripes * stripe_w, 24, 1.0, |x, _| {
            8.0 * level[x / stripe_w] as f64
        })
        .unwrap();
        let m = build_region_map(&f, &p);
        let (cands, _) = extract_build_points(&f, &m, &p);
        let mut all = Vec::new();
        for c in &cands {
            if let Synthesis::Built(s) = synthesize(c, &f, &m, &p).unwrap() {
                all.push(s);
            }
        }
        let structures = pick_subset(all);
        let index = build_conflict_index(&structures);

        println!("=== seed {seed}: {stripes} stripes x{stripe_w}, levels {level:?}, {} structures", structures.len());
        for s in &structures {
            let c0 = &s.cells[0];
            let cl = s.cells.last().unwrap();
            let cen = |c: &structsynth::structure::Cell| {
                (c.corners[0] + c.corners[1] + c.corners[2] + c.corners[3]) * 0.25
            };
            let (a, b) = (cen(c0), cen(cl));
            println!(
                "  s{}: ({},{}) cost {} cells {} start ({:.1},{:.1}) end ({:.1},{:.1})",
                s.id, s.region_a, s.region_b, s.cost_blocks, s.cells.len(), a.x, a.y, b.x, b.y
            );
        }
        println!("  conflict pairs: {:?}", index.pairs);

        let oracle = brute_force_spanning(&structures, &f, &m);
        match &oracle {
            None => println!("  oracle: infeasible"),
            Some((cost, set)) => {
                println!("  oracle: cost {cost} set {set:?}");
                // Alive components and per-edge snaps under this set.
                let total = m.width() * m.height();
                let mut alive: Vec<bool> =
                    (0..total).map(|n| m.region_of(n).is_some()).collect();
                for &e in set {
                    for cell in &structures[e].cells {
                        for &n in &cell.covered {
                            alive[n] = false;
                        }
                    }
                }
                let snap = |pt: structsynth::geom::Vec2| -> Option<usize> {
                    let mut best: Option<(f64, usize)> = None;
                    for n in 0..total {
                        if !alive[n] {
                            continue;
                        }
                        let (x, y) = m.xy(n);
                        let d = pt.dist(f.node_center(x, y));
                        if best.map_or(true, |(bd, bn)| {
                            d < bd - 1e-12 || (d < bd + 1e-12 && n < bn)
                        }) {
                            best = Some((d, n));
                        }
                    }
                    best.map(|(_, n)| n)
                };
                for &e in set {
                    let s = &structures[e];
                    let cen = |c: &structsynth::structure::Cell| {
                        (c.corners[0] + c.corners[1] + c.corners[2] + c.corners[3]) * 0.25
                    };
                    let sa = snap(cen(&s.cells[0]));
                    let sb = snap(cen(s.cells.last().unwrap()));
                    let reg = |n: Option<usize>| n.and_then(|n| m.region_of(n));
                    println!(
                        "    s{e} model ({},{}) -> validator snap regions ({:?},{:?})",
                        s.region_a,
                        s.region_b,
                        reg(sa),
                        reg(sb)
                    );
                }
                println!("    validate: {}", validate_solution(&structures, set, &f, &m));
            }
        }

        let (tree, stats) = bbmst(&structures, &index, &f, &m, &p);
        println!(
            "  search: feasible {} cost {} chosen {:?} branches {} fallbacks {} dropped {}",
            tree.feasible,
            if tree.feasible { tree.total_cost as i64 } else { -1 },
            tree.chosen,
            stats.branches_explored,
            stats.fallback_branches,
            stats.dropped_endpoints
        );
    }
}
