//! Randomized benchmark harness: seeded checkerboard terrains solved in
//! bulk, with outcome counts and a log-scaled runtime histogram.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::heightfield::HeightField;
use crate::pipeline::{solve, PipelineConfig};

/// Parameters of one checkerboard terrain family.
#[derive(Clone, Copy, Debug)]
pub struct CheckerboardSpec {
    /// Board is `n x n` squares.
    pub n: usize,
    /// Square side length in nodes.
    pub square_side: usize,
    /// Each square's height is `increment` times a level drawn uniformly
    /// from `0..=levels`.
    pub levels: u32,
    /// Height step between levels, in cm.
    pub increment: f64,
    pub seed: u64,
}

impl Default for CheckerboardSpec {
    /// 3×3 board of 6-block-side squares (48 nodes at 1 cm cells) with
    /// heights 0..24 cm in 1 cm steps.
    fn default() -> Self {
        CheckerboardSpec { n: 3, square_side: 48, levels: 24, increment: 1.0, seed: 0 }
    }
}

/// Deterministic checkerboard terrain for a spec.
pub fn checkerboard_field(spec: &CheckerboardSpec) -> Result<HeightField, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let heights: Vec<f64> =
        (0..spec.n * spec.n).map(|_| rng.gen_range(0..=spec.levels) as f64 * spec.increment).collect();
    let side = spec.n * spec.square_side;
    HeightField::from_fn(side, side, 1.0, |x, y| {
        heights[(y / spec.square_side) * spec.n + x / spec.square_side]
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Solved { cost: u64 },
    Infeasible,
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub seed: u64,
    pub outcome: Outcome,
    pub millis: f64,
}

#[derive(Clone, Debug)]
pub struct HistogramBin {
    pub label: String,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct BenchSummary {
    pub trials: Vec<TrialResult>,
    pub solved: usize,
    pub infeasible: usize,
    pub timed_out: usize,
    pub mean_ms: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Runs `trials` independent solves; trial `i` uses seed `spec.seed + i`.
pub fn run_bench(
    spec: &CheckerboardSpec,
    trials: usize,
    config: &PipelineConfig,
) -> Result<BenchSummary, Error> {
    let mut results = Vec::with_capacity(trials);
    for i in 0..trials {
        let seed = spec.seed.wrapping_add(i as u64);
        let field = checkerboard_field(&CheckerboardSpec { seed, ..*spec })?;
        let out = solve(&field, &PipelineConfig { seed, ..config.clone() })?;
        let outcome = if out.stats.timed_out {
            Outcome::TimedOut
        } else if out.tree.feasible {
            Outcome::Solved { cost: out.tree.total_cost }
        } else {
            Outcome::Infeasible
        };
        results.push(TrialResult { seed, outcome, millis: out.metrics.total_time_ms });
    }

    let solved = results.iter().filter(|t| matches!(t.outcome, Outcome::Solved { .. })).count();
    let infeasible = results.iter().filter(|t| t.outcome == Outcome::Infeasible).count();
    let timed_out = results.iter().filter(|t| t.outcome == Outcome::TimedOut).count();
    let mean_ms = if results.is_empty() {
        0.0
    } else {
        results.iter().map(|t| t.millis).sum::<f64>() / results.len() as f64
    };

    // Power-of-two runtime bins: <=1 ms, 1-2 ms, 2-4 ms, ...
    let bin_of = |ms: f64| -> usize {
        if ms <= 1.0 {
            0
        } else {
            (ms.log2().ceil() as usize).max(1)
        }
    };
    let max_bin = results.iter().map(|t| bin_of(t.millis)).max().unwrap_or(0);
    let mut histogram = Vec::with_capacity(max_bin + 1);
    for k in 0..=max_bin {
        let label = if k == 0 {
            "<=1ms".to_string()
        } else {
            format!("{}-{}ms", 1u64 << (k - 1), 1u64 << k)
        };
        let count = results.iter().filter(|t| bin_of(t.millis) == k).count();
        histogram.push(HistogramBin { label, count });
    }

    Ok(BenchSummary { trials: results, solved, infeasible, timed_out, mean_ms, histogram })
}

/// Human-readable report for terminal output.
pub fn format_summary(s: &BenchSummary) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let n = s.trials.len();
    writeln!(out, "trials: {n}").unwrap();
    writeln!(out, "solved: {}  infeasible: {}  timed-out: {}", s.solved, s.infeasible, s.timed_out)
        .unwrap();
    writeln!(out, "mean solve time: {:.2} ms", s.mean_ms).unwrap();
    let costs: Vec<u64> = s
        .trials
        .iter()
        .filter_map(|t| match t.outcome {
            Outcome::Solved { cost } => Some(cost),
            _ => None,
        })
        .collect();
    if !costs.is_empty() {
        let total: u64 = costs.iter().sum();
        writeln!(out, "mean cost over solved: {:.2} blocks", total as f64 / costs.len() as f64)
            .unwrap();
    }
    writeln!(out, "runtime histogram:").unwrap();
    let widest = s.histogram.iter().map(|b| b.label.len()).max().unwrap_or(0);
    for bin in &s.histogram {
        writeln!(out, "  {:>widest$}  {}", bin.label, "#".repeat(bin.count)).unwrap();
    }
    out
}
