//! Build-point extraction: where could a ramp structure start?
//!
//! Every cliff edge whose upper endpoint lies in a (non-pruned) region
//! yields one candidate: the build point `b` is the edge midpoint, and the
//! marching direction `u` points from the cliff top into lower terrain,
//! perpendicular to the local cliff line.
//!
//! The direction comes from a small linear discriminant: nodes within one
//! block side of `b` are labeled *top region* versus *everything else*,
//! and the separator direction is the difference of the class centroids.
//! For a straight cliff that separator is exact; the fraction of
//! misclassified nodes (`flatness_error`) measures how un-straight the
//! cliff is locally, and candidates above the reject rate are discarded —
//! a ramp dropped along an unreliable normal would not sit flush with the
//! cliff.

use crate::geom::Vec2;
use crate::heightfield::{HeightField, SolverParams};
use crate::terrain::{RegionId, RegionMap};

/// A candidate placement site for the synthesizer.
#[derive(Clone, Debug)]
pub struct BuildCandidate {
    /// Cliff-edge midpoint (cm).
    pub b: Vec2,
    /// Unit direction from the cliff top into lower terrain.
    pub u: Vec2,
    /// Region uphill of the cliff edge.
    pub top_region: RegionId,
    /// Fraction of nearby nodes the fitted separator misclassifies.
    pub flatness_error: f64,
}

/// Outcome of [`estimate_normal`].
#[derive(Clone, Debug)]
pub enum NormalEstimate {
    Accepted { u: Vec2, flatness_error: f64 },
    /// Fewer than two samples in one class, a degenerate centroid pair, or
    /// a flatness error above the reject rate.
    Rejected { flatness_error: Option<f64> },
}

/// Fits the downhill normal at `b` by a centroid-difference discriminant
/// over all grid nodes within `block_side` of `b`.
///
/// Nodes of `top_region` form one class, every other node (other regions,
/// steep-blocked, pruned) the other.  The separator direction is the unit
/// vector from the top-class centroid to the rest-class centroid; the
/// threshold sits midway between the projected class means.
pub fn estimate_normal(
    b: Vec2,
    top_region: RegionId,
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> NormalEstimate {
    let cs = field.cell_size();
    let r = params.block_side;
    let x0 = (((b.x - r) / cs).ceil() as i64).max(0);
    let x1 = (((b.x + r) / cs).floor() as i64).min(field.width() as i64 - 1);
    let y0 = (((b.y - r) / cs).ceil() as i64).max(0);
    let y1 = (((b.y + r) / cs).floor() as i64).min(field.height() as i64 - 1);

    let mut top = Vec::new();
    let mut rest = Vec::new();
    for iy in y0..=y1 {
        for ix in x0..=x1 {
            let p = Vec2::new(ix as f64 * cs, iy as f64 * cs);
            if p.dist(b) > r + 1e-9 {
                continue;
            }
            let node = iy as usize * field.width() + ix as usize;
            if map.region_of(node) == Some(top_region) {
                top.push(p);
            } else {
                rest.push(p);
            }
        }
    }
    if top.len() < 2 || rest.len() < 2 {
        return NormalEstimate::Rejected { flatness_error: None };
    }

    let centroid = |pts: &[Vec2]| {
        let mut acc = Vec2::ZERO;
        for p in pts {
            acc = acc + *p;
        }
        acc * (1.0 / pts.len() as f64)
    };
    let c_top = centroid(&top);
    let c_rest = centroid(&rest);
    let Some(u) = (c_rest - c_top).normalized() else {
        return NormalEstimate::Rejected { flatness_error: None };
    };

    // Threshold midway between the projected class means; nodes projecting
    // past it are predicted "rest".
    let threshold = (u.dot(c_top) + u.dot(c_rest)) / 2.0;
    let misclassified = top.iter().filter(|p| u.dot(**p) > threshold).count()
        + rest.iter().filter(|p| u.dot(**p) <= threshold).count();
    let flatness_error = misclassified as f64 / (top.len() + rest.len()) as f64;

    if flatness_error > params.normal_reject_rate {
        NormalEstimate::Rejected { flatness_error: Some(flatness_error) }
    } else {
        NormalEstimate::Accepted { u, flatness_error }
    }
}

/// Extracts one accepted candidate per cliff edge whose upper endpoint has
/// a region, in cliff-edge scan order.  Duplicate build points (within
/// 1e-6 cm) are deduplicated; rejected normals are counted, not returned.
pub fn extract_build_points(
    field: &HeightField,
    map: &RegionMap,
    params: &SolverParams,
) -> (Vec<BuildCandidate>, usize) {
    let mut out: Vec<BuildCandidate> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut rejected = 0usize;
    for &(a, bn) in &map.cliff_edges {
        let (upper, _lower) = if field.z_at(a) >= field.z_at(bn) { (a, bn) } else { (bn, a) };
        let Some(top_region) = map.region_of(upper) else { continue };

        let (ax, ay) = map.xy(a);
        let (bx, by) = map.xy(bn);
        let pa = field.node_center(ax, ay);
        let pb = field.node_center(bx, by);
        let b = (pa + pb) * 0.5;

        let key = ((b.x * 1e6).round() as i64, (b.y * 1e6).round() as i64);
        if !seen.insert(key) {
            continue;
        }
        match estimate_normal(b, top_region, field, map, params) {
            NormalEstimate::Accepted { u, flatness_error } => {
                out.push(BuildCandidate { b, u, top_region, flatness_error });
            }
            NormalEstimate::Rejected { .. } => rejected += 1,
        }
    }
    (out, rejected)
}
