//! Derived terrain fields: gradient magnitude, cliffs, and steepness.
//!
//! The robot fails on terrain for two distinct reasons, and the analysis
//! keeps them separate:
//!
//! * a **cliff** is a sharp drop — locally enormous gradient — that the
//!   robot cannot step over but that a ramp structure can bridge;
//! * **steep** ground has a large gradient sustained over a window about
//!   the size of the robot, which no structure fixes.
//!
//! The cliff field isolates the sharp-drop response so the steepness
//! average sees only the sustained component; otherwise every cliff would
//! also poison the ground next to it as "steep".

use crate::heightfield::{HeightField, ScalarField, SolverParams};

/// Gradient magnitude at every node, in cm height per cm of ground.
///
/// Central differences over `2 * cell_size` in the interior, one-sided
/// differences at the borders, Euclidean norm over the two axes.
pub fn gradient_magnitude(field: &HeightField) -> ScalarField {
    let (w, h) = (field.width(), field.height());
    let cs = field.cell_size();
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = if w == 1 {
                0.0
            } else if x == 0 {
                (field.z(1, y) - field.z(0, y)) / cs
            } else if x == w - 1 {
                (field.z(w - 1, y) - field.z(w - 2, y)) / cs
            } else {
                (field.z(x + 1, y) - field.z(x - 1, y)) / (2.0 * cs)
            };
            let gy = if h == 1 {
                0.0
            } else if y == 0 {
                (field.z(x, 1) - field.z(x, 0)) / cs
            } else if y == h - 1 {
                (field.z(x, h - 1) - field.z(x, h - 2)) / cs
            } else {
                (field.z(x, y + 1) - field.z(x, y - 1)) / (2.0 * cs)
            };
            values.push(gx.hypot(gy));
        }
    }
    ScalarField { width: w, height: h, values }
}

/// Cliff response: the gradient magnitude wherever it reaches the cliff
/// threshold (`cliff_threshold / cell_size`, in cm/cm), zero elsewhere.
///
/// The comparison is inclusive: a bare step of exactly `2 * cliff_threshold`
/// between flat shelves produces a central-difference response of exactly
/// the threshold, and that canonical cliff must register here (and be
/// subtracted from the steepness average below).
pub fn cliff_field(field: &HeightField, params: &SolverParams) -> ScalarField {
    let mut grad = gradient_magnitude(field);
    let limit = params.cliff_threshold / field.cell_size();
    for v in &mut grad.values {
        if *v < limit {
            *v = 0.0;
        }
    }
    grad
}

/// Steepness: the cliff-free gradient magnitude averaged over a square
/// window (side [`SolverParams::steep_window_nodes`]) clipped at borders.
pub fn steep_field(field: &HeightField, params: &SolverParams) -> ScalarField {
    let grad = gradient_magnitude(field);
    let cliffs = cliff_field(field, params);
    let residual: Vec<f64> =
        grad.values.iter().zip(&cliffs.values).map(|(g, c)| g - c).collect();
    box_average(
        &ScalarField { width: grad.width, height: grad.height, values: residual },
        params.steep_window_nodes(field.cell_size()),
    )
}

/// Moving average over an odd square window, clipped at the borders
/// (each output is the mean of the window samples actually inside).
fn box_average(input: &ScalarField, window: usize) -> ScalarField {
    debug_assert!(window % 2 == 1);
    let (w, h) = (input.width, input.height);
    let half = (window / 2) as i64;

    // Summed-area table with one row/column of zero padding.
    let mut sat = vec![0.0f64; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            sat[(y + 1) * (w + 1) + (x + 1)] = input.values[y * w + x]
                + sat[y * (w + 1) + (x + 1)]
                + sat[(y + 1) * (w + 1) + x]
                - sat[y * (w + 1) + x];
        }
    }

    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let x0 = (x - half).max(0) as usize;
            let y0 = (y - half).max(0) as usize;
            let x1 = ((x + half).min(w as i64 - 1) + 1) as usize;
            let y1 = ((y + half).min(h as i64 - 1) + 1) as usize;
            let sum = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0]
                + sat[y0 * (w + 1) + x0];
            values.push(sum / ((x1 - x0) * (y1 - y0)) as f64);
        }
    }
    ScalarField { width: w, height: h, values }
}
