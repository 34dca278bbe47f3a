//! PPM rendering of a solve: terrain shading, region tints, structure
//! footprints, and build points.
//!
//! Output is binary P6 — trivially written, viewable everywhere, and
//! byte-deterministic.  Blue is reserved for structure footprints and
//! red for build points, so the region palette avoids both.

use std::io::Write;
use std::path::Path;

use crate::error::Error;
use crate::heightfield::HeightField;
use crate::structure::Structure;
use crate::terrain::RegionMap;

/// Region tint palette (RGB), cycled by region id.  No entries near pure
/// blue or pure red.
const PALETTE: [[f64; 3]; 8] = [
    [0.55, 0.95, 0.55], // green
    [0.95, 0.90, 0.45], // yellow
    [0.55, 0.90, 0.90], // cyan
    [0.90, 0.65, 0.95], // violet
    [0.95, 0.75, 0.45], // orange
    [0.60, 0.95, 0.75], // mint
    [0.85, 0.85, 0.60], // olive
    [0.70, 0.80, 0.95], // periwinkle (still far from structure blue)
];

const STRUCTURE_BLUE: [u8; 3] = [40, 80, 235];
const STRUCTURE_BARE_BLUE: [u8; 3] = [120, 150, 235];
const POINT_RED: [u8; 3] = [235, 40, 40];

/// Renders one pixel per grid node, scaled up by `scale`.
pub fn render(
    field: &HeightField,
    map: &RegionMap,
    structures: &[Structure],
    points: &[crate::geom::Vec2],
    scale: usize,
) -> Vec<u8> {
    let scale = scale.max(1);
    let (w, h) = (field.width(), field.height());
    let (lo, hi) = field
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| (lo.min(z), hi.max(z)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    // Per-node colour.
    let mut nodes: Vec<[u8; 3]> = Vec::with_capacity(w * h);
    for n in 0..w * h {
        let (x, y) = map.xy(n);
        let shade = 0.25 + 0.65 * (field.z(x, y) - lo) / span;
        let rgb = match map.region_of(n) {
            Some(id) => {
                let t = PALETTE[id as usize % PALETTE.len()];
                [t[0] * shade, t[1] * shade, t[2] * shade]
            }
            None if map.is_pruned(n) => [shade * 0.55, shade * 0.45, shade * 0.45],
            None => [shade * 0.5, shade * 0.5, shade * 0.5],
        };
        nodes.push(rgb.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8));
    }

    // Structure footprints on top.
    for s in structures {
        for cell in &s.cells {
            let paint = if cell.height == 0 && cell.block == crate::structure::BlockType::None {
                STRUCTURE_BARE_BLUE
            } else {
                STRUCTURE_BLUE
            };
            for &n in &cell.covered {
                nodes[n] = paint;
            }
        }
    }

    // Build points last: a small cross in grid space.
    for p in points {
        let cx = (p.x / field.cell_size()).round() as i64;
        let cy = (p.y / field.cell_size()).round() as i64;
        for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (x, y) = (cx + dx, cy + dy);
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                nodes[y as usize * w + x as usize] = POINT_RED;
            }
        }
    }

    // Assemble the P6 image.
    let (iw, ih) = (w * scale, h * scale);
    let mut out = Vec::with_capacity(32 + iw * ih * 3);
    out.extend_from_slice(format!("P6\n{iw} {ih}\n255\n").as_bytes());
    for y in 0..ih {
        for x in 0..iw {
            out.extend_from_slice(&nodes[(y / scale) * w + x / scale]);
        }
    }
    out
}

/// Renders and writes a `.ppm` file.
pub fn save_render(
    path: &Path,
    field: &HeightField,
    map: &RegionMap,
    structures: &[Structure],
    points: &[crate::geom::Vec2],
    scale: usize,
) -> Result<(), Error> {
    let bytes = render(field, map, structures, points, scale);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::heightfield::SolverParams;
    use crate::pipeline::{solve, PipelineConfig};
    use crate::terrain::build_region_map;

    #[test]
    fn header_and_size() {
        let f = HeightField::filled(4, 3, 1.0, 0.0).unwrap();
        let m = build_region_map(&f, &SolverParams::default());
        let img = render(&f, &m, &[], &[], 2);
        assert!(img.starts_with(b"P6\n8 6\n255\n"));
        assert_eq!(img.len(), b"P6\n8 6\n255\n".len() + 8 * 6 * 3);
    }

    #[test]
    fn structures_paint_blue_and_points_red() {
        let f = HeightField::from_fn(48, 16, 1.0, |x, _| if x < 16 { 8.0 } else { 0.0 }).unwrap();
        let out = solve(&f, &PipelineConfig::default()).unwrap();
        assert!(out.tree.feasible);
        let chosen: Vec<_> = out.chosen_structures().into_iter().cloned().collect();
        let points: Vec<Vec2> = chosen.iter().map(|s| s.build_point).collect();
        let img = render(&out.field, &out.map, &chosen, &points, 1);
        let header = b"P6\n48 16\n255\n".len();
        let px = |x: usize, y: usize| {
            let i = header + (y * 48 + x) * 3;
            [img[i], img[i + 1], img[i + 2]]
        };
        // The ramp's wedge cell sits around x = 16..24 in its lateral band.
        let s = &chosen[0];
        let mid = s.cells[1].covered[s.cells[1].covered.len() / 2];
        let (mx, my) = out.map.xy(mid);
        assert_eq!(px(mx, my), STRUCTURE_BLUE);
        // The build point pixel is red.
        let bx = (s.build_point.x).round() as usize;
        let by = (s.build_point.y).round() as usize;
        assert_eq!(px(bx, by), POINT_RED);
        // Determinism.
        assert_eq!(img, render(&out.field, &out.map, &chosen, &points, 1));
    }
}
