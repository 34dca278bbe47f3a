//! Preprocessing filters: median smoothing and level quantization.
//!
//! Real scans carry sensor noise and near-flat drift that fragment the
//! region analysis.  A small median filter knocks out speckle, and 1-D
//! k-means quantization snaps heights to a few levels so that nearly-flat
//! ground really is flat.

use crate::error::Error;
use crate::heightfield::HeightField;

/// Lower median: for an even number of samples the smaller of the two
/// middle values is returned, keeping results in the input value set.
pub(crate) fn lower_median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[(values.len() - 1) / 2]
}

/// Median filter with an odd square window, clipped at the borders: each
/// node becomes the (lower) median of the window values actually inside
/// the grid.
pub fn median_filter(field: &HeightField, window: usize) -> Result<HeightField, Error> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::Parameter(format!("median window must be odd, got {window}")));
    }
    let (w, h) = (field.width(), field.height());
    let half = (window / 2) as i64;
    let mut out = Vec::with_capacity(w * h);
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            buf.clear();
            for ny in (y - half).max(0)..=(y + half).min(h as i64 - 1) {
                for nx in (x - half).max(0)..=(x + half).min(w as i64 - 1) {
                    buf.push(field.z(nx as usize, ny as usize));
                }
            }
            out.push(lower_median(&mut buf));
        }
    }
    field.with_values(out)
}

/// Quantizes heights to `k` levels with one-dimensional k-means.
///
/// Deterministic throughout: centroids start on evenly spaced quantiles of
/// the distinct sorted values, assignment ties go to the lower centroid,
/// and Lloyd iterations stop at an assignment fixpoint (or 100 rounds).
/// If the field has at most `k` distinct values it is returned unchanged —
/// every value is already its own level.
pub fn quantize_levels(field: &HeightField, k: usize) -> Result<HeightField, Error> {
    if k == 0 {
        return Err(Error::Parameter("quantization needs at least one level".into()));
    }

    let mut distinct: Vec<f64> = field.values().to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() <= k {
        return Ok(field.clone());
    }

    // Initial centroids: quantiles (j + 1/2)/k of the distinct values.
    let m = distinct.len();
    let mut centroids: Vec<f64> = (0..k)
        .map(|j| distinct[((j as f64 + 0.5) / k as f64 * m as f64) as usize])
        .collect();

    let values = field.values();
    let mut assign = vec![0usize; values.len()];
    for _round in 0..100 {
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, &cv) in centroids.iter().enumerate() {
                let d = (v - cv).abs();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed && _round > 0 {
            break;
        }
        let mut sum = vec![0.0f64; k];
        let mut count = vec![0usize; k];
        for (i, &v) in values.iter().enumerate() {
            sum[assign[i]] += v;
            count[assign[i]] += 1;
        }
        for c in 0..k {
            if count[c] > 0 {
                centroids[c] = sum[c] / count[c] as f64;
            }
        }
    }

    field.with_values(values.iter().zip(&assign).map(|(_, &a)| centroids[a]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct per-node median evaluation, kept deliberately naive.
    fn median_oracle(field: &HeightField, window: usize) -> Vec<f64> {
        let half = window as i64 / 2;
        let (w, h) = (field.width() as i64, field.height() as i64);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut vals = Vec::new();
                for dy in -half..=half {
                    for dx in -half..=half {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0 && ny >= 0 && nx < w && ny < h {
                            vals.push(field.z(nx as usize, ny as usize));
                        }
                    }
                }
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.push(vals[(vals.len() - 1) / 2]);
            }
        }
        out
    }

    #[test]
    fn constant_field_is_unchanged() {
        let f = HeightField::filled(6, 4, 1.0, 7.0).unwrap();
        assert_eq!(median_filter(&f, 3).unwrap(), f);
    }

    #[test]
    fn single_spike_is_removed() {
        let mut f = HeightField::filled(5, 5, 1.0, 2.0).unwrap();
        let spiked = {
            let mut z = f.values().to_vec();
            z[f.idx(2, 2)] = 50.0;
            f.with_values(z).unwrap()
        };
        f = median_filter(&spiked, 3).unwrap();
        assert_eq!(f, HeightField::filled(5, 5, 1.0, 2.0).unwrap());
    }

    #[test]
    fn corner_uses_clipped_window() {
        // Two-level field split down the middle; the corner window holds
        // only the 4 in-grid values.  Frozen from the hand oracle below.
        let f = HeightField::from_fn(4, 4, 1.0, |x, _| if x < 2 { 0.0 } else { 8.0 }).unwrap();
        let filtered = median_filter(&f, 3).unwrap();
        let oracle = median_oracle(&f, 3);
        assert_eq!(filtered.values(), &oracle[..]);
        // Corner (0,0): window values {0,0,0,0} -> 0.
        assert_eq!(filtered.z(0, 0), 0.0);
        // Corner (3,0): window values {8,8,8,8} -> 8.
        assert_eq!(filtered.z(3, 0), 8.0);
        // Column 1 sees {0,0,8} per row -> stays 0 (lower median).
        assert_eq!(filtered.z(1, 1), 0.0);
    }

    #[test]
    fn matches_hand_oracle_on_random_fields() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w = rng.gen_range(1..10);
            let h = rng.gen_range(1..10);
            let z: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0..30) as f64).collect();
            let f = HeightField::new(w, h, 1.0, z).unwrap();
            for window in [1usize, 3, 5] {
                let got = median_filter(&f, window).unwrap();
                assert_eq!(got.values(), &median_oracle(&f, window)[..]);
            }
        }
    }

    #[test]
    fn window_must_be_odd() {
        let f = HeightField::filled(3, 3, 1.0, 0.0).unwrap();
        assert!(median_filter(&f, 0).is_err());
        assert!(median_filter(&f, 4).is_err());
    }

    /// Exhaustive 1-D k-means oracle: tries every split of the sorted
    /// distinct values into k contiguous groups and keeps the one with the
    /// least squared error.  Contiguity is optimal in one dimension.
    fn kmeans_oracle(values: &[f64], k: usize) -> Vec<f64> {
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let mut best: Option<(f64, Vec<(f64, f64)>)> = None; // (sse, [(lo,hi,centroid)…])
        // Enumerate split positions via bitmask over n-1 gaps with k-1 bits.
        fn splits(n: usize, k: usize) -> Vec<Vec<usize>> {
            // returns lists of group-end indices (exclusive), last always n
            let mut out = Vec::new();
            let mut cur = Vec::new();
            fn rec(start: usize, n: usize, groups: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if groups == 1 {
                    let mut full = cur.clone();
                    full.push(n);
                    out.push(full);
                    return;
                }
                for end in start + 1..=n - (groups - 1) {
                    cur.push(end);
                    rec(end, n, groups - 1, cur, out);
                    cur.pop();
                }
            }
            rec(0, n, k, &mut cur, &mut out);
            out
        }
        for ends in splits(n, k) {
            let mut sse = 0.0;
            let mut ranges = Vec::new();
            let mut start = 0;
            for &end in &ends {
                let group = &sorted[start..end];
                let c = group.iter().sum::<f64>() / group.len() as f64;
                sse += group.iter().map(|v| (v - c) * (v - c)).sum::<f64>();
                ranges.push((sorted[start], c));
                start = end;
            }
            if best.as_ref().map_or(true, |(b, _)| sse < *b - 1e-12) {
                best = Some((sse, ranges));
            }
        }
        let (_, ranges) = best.unwrap();
        values
            .iter()
            .map(|v| {
                // group of v = last range whose lower bound <= v
                let mut c = ranges[0].1;
                for &(lo, cent) in &ranges {
                    if *v >= lo - 1e-12 {
                        c = cent;
                    }
                }
                c
            })
            .collect()
    }

    #[test]
    fn two_clusters_split_the_gap() {
        // Frozen from the exhaustive-partition oracle: {0,1} and {99,100}.
        let f = HeightField::new(2, 2, 1.0, vec![0.0, 1.0, 99.0, 100.0]).unwrap();
        let q = quantize_levels(&f, 2).unwrap();
        assert_eq!(q.values(), &[0.5, 0.5, 99.5, 99.5]);
        assert_eq!(q.values(), &kmeans_oracle(f.values(), 2)[..]);
    }

    #[test]
    fn k_one_collapses_to_mean() {
        let f = HeightField::new(3, 1, 1.0, vec![0.0, 3.0, 9.0]).unwrap();
        let q = quantize_levels(&f, 1).unwrap();
        assert_eq!(q.values(), &[4.0, 4.0, 4.0]);
    }

    #[test]
    fn k_at_least_distinct_count_is_identity() {
        let f = HeightField::new(2, 2, 1.0, vec![0.0, 4.0, 4.0, 9.0]).unwrap();
        assert_eq!(quantize_levels(&f, 3).unwrap(), f);
        assert_eq!(quantize_levels(&f, 10).unwrap(), f);
    }

    /// Lloyd iteration only promises a local fixpoint, so random fields are
    /// checked against the defining fixpoint conditions rather than the
    /// globally optimal partition: every output level is the mean of the
    /// inputs mapped to it, and every input maps to its nearest level.
    #[test]
    fn quantize_reaches_a_fixpoint_on_random_fields() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for trial in 0..40 {
            let n = rng.gen_range(4..12);
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0..40) as f64).collect();
            let f = HeightField::new(n, 1, 1.0, z).unwrap();
            let k = rng.gen_range(2..4);
            let got = quantize_levels(&f, k).unwrap();

            let mut levels: Vec<f64> = got.values().to_vec();
            levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
            levels.dedup();
            assert!(levels.len() <= k, "trial {trial}: more levels than k");

            // Each level is the mean of the original values assigned to it.
            for &lv in &levels {
                let members: Vec<f64> = f
                    .values()
                    .iter()
                    .zip(got.values())
                    .filter(|&(_, &g)| g == lv)
                    .map(|(&v, _)| v)
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                assert!((mean - lv).abs() < 1e-9, "trial {trial}: level {lv} vs mean {mean}");
            }

            // Each value went to the nearest level.
            for (&v, &g) in f.values().iter().zip(got.values()) {
                let nearest = levels
                    .iter()
                    .copied()
                    .min_by(|a, b| (v - a).abs().partial_cmp(&(v - b).abs()).unwrap())
                    .unwrap();
                assert!(
                    (v - g).abs() <= (v - nearest).abs() + 1e-9,
                    "trial {trial}: {v} assigned {g}, nearer level {nearest}"
                );
            }
        }
    }

    #[test]
    fn quantize_is_idempotent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z: Vec<f64> = (0..60).map(|_| rng.gen_range(0..100) as f64).collect();
            let f = HeightField::new(10, 6, 1.0, z).unwrap();
            let once = quantize_levels(&f, 4).unwrap();
            let twice = quantize_levels(&once, 4).unwrap();
            assert_eq!(once, twice);
        }
    }
}
