//! Command-line front end: solve one terrain map, or run the randomized
//! checkerboard benchmark.
//!
//! Exit codes for `solve`: 0 solved, 2 infeasible, 3 timed out with an
//! incumbent solution, 4 timed out empty-handed, 1 input or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use structsynth::bench::{format_summary, run_bench, BenchSummary, CheckerboardSpec, Outcome};
use structsynth::heightfield::load_height_field;
use structsynth::pipeline::{solve, PipelineConfig, SolveOutcome};
use structsynth::render::save_render;
use structsynth::SolverParams;

#[derive(Parser)]
#[command(name = "structsynth", version, about = "Ramp-structure synthesis for height-field terrain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one map: synthesize ramps and pick a minimum-cost spanning set.
    Solve(SolveArgs),
    /// Solve batches of seeded random checkerboard terrains and summarize.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Terrain map: text grid (rows of numbers) or binary PGM.
    #[arg(long)]
    map: PathBuf,
    /// Grid spacing in cm per node.
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
    /// Multiply raw map values by this factor to get cm.
    #[arg(long, default_value_t = 1.0)]
    z_scale: f64,
    /// Building-block side length in cm.
    #[arg(long, default_value_t = 8.0)]
    lb: f64,
    /// Maximum step height in cm; larger jumps are cliffs.
    #[arg(long, default_value_t = 4.0)]
    dz_cliff: f64,
    /// Maximum windowed average gradient (cm per cm).
    #[arg(long, default_value_t = 1.0)]
    k_steep: f64,
    /// Gradient averaging window in cm.
    #[arg(long, default_value_t = 8.0)]
    window: f64,
    /// Buildability flatness fraction of the block side.
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    /// Minimum inscribed-square side (cm) for a region to count.
    #[arg(long, default_value_t = 8.0)]
    min_region_side: f64,
    /// Cap on cells per synthesized structure.
    #[arg(long, default_value_t = 256)]
    max_cells: usize,
    /// Total time budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Median-filter the map first; optional value is the window size.
    #[arg(long, num_args = 0..=1, default_missing_value = "3")]
    median_filter: Option<usize>,
    /// Quantize map heights to at most this many levels first.
    #[arg(long, value_name = "K")]
    quantize: Option<usize>,
    /// Write the solution document (JSON) here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a top-down PPM rendering here.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Write the metrics report (JSON) here.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Recorded in the metrics document.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for synthesis (0 = auto); STRUCTSYNTH_THREADS works too.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of independently seeded boards to solve.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Board is n x n squares.
    #[arg(long, default_value_t = 3)]
    board_n: usize,
    /// Square side length in nodes.
    #[arg(long, default_value_t = 48)]
    square_side: usize,
    /// Heights are drawn from 0..=height-max cm.
    #[arg(long, default_value_t = 24.0)]
    height_max: f64,
    /// Height step between levels in cm.
    #[arg(long, default_value_t = 1.0)]
    increment: f64,
    /// Base seed; trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-trial time budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Worker threads for synthesis (0 = auto); STRUCTSYNTH_THREADS works too.
    #[arg(long)]
    threads: Option<usize>,
    /// Write a machine-readable per-trial document (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Bench(args) => run_bench_command(&args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

/// Threads: explicit flag wins, then STRUCTSYNTH_THREADS, then serial.
fn resolve_threads(flag: Option<usize>) -> Result<usize, String> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("STRUCTSYNTH_THREADS") {
        Ok(v) => v.parse().map_err(|_| format!("STRUCTSYNTH_THREADS is not a number: {v}")),
        Err(_) => Ok(1),
    }
}

fn run_solve(args: &SolveArgs) -> Result<u8, String> {
    if !args.timeout.is_finite() || args.timeout < 0.0 {
        return Err(format!("timeout must be a non-negative number of seconds, got {}", args.timeout));
    }
    let params = SolverParams {
        block_side: args.lb,
        cliff_threshold: args.dz_cliff,
        steep_threshold: args.k_steep,
        steep_window: args.window,
        flatness_ratio: args.alpha,
        min_region_side: args.min_region_side,
        max_structure_cells: args.max_cells,
        timeout: Duration::from_secs_f64(args.timeout),
        ..SolverParams::default()
    };
    let config = PipelineConfig {
        params,
        median_filter: args.median_filter,
        quantize: args.quantize,
        threads: resolve_threads(args.threads)?,
        seed: args.seed,
    };

    let field = load_height_field(&args.map, args.cell_size, args.z_scale)
        .map_err(|e| format!("{}: {e}", args.map.display()))?;
    let outcome = solve(&field, &config).map_err(|e| e.to_string())?;

    let solution = outcome.solution_json();
    match &args.out {
        Some(path) => std::fs::write(path, &solution)
            .map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{solution}"),
    }
    if let Some(path) = &args.metrics {
        std::fs::write(path, outcome.metrics_json())
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.render {
        let chosen: Vec<_> = outcome.chosen_structures().into_iter().cloned().collect();
        let points: Vec<_> = chosen.iter().map(|s| s.build_point).collect();
        save_render(path, &outcome.field, &outcome.map, &chosen, &points, 1)
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }

    Ok(exit_code(&outcome))
}

fn exit_code(outcome: &SolveOutcome) -> u8 {
    match (outcome.stats.timed_out, outcome.tree.feasible) {
        (false, true) => 0,
        (false, false) => 2,
        (true, true) => 3,
        (true, false) => 4,
    }
}

fn run_bench_command(args: &BenchArgs) -> Result<u8, String> {
    if args.trials == 0 {
        return Err("bench needs at least one trial".into());
    }
    if args.board_n < 2 {
        return Err("board must be at least 2x2".into());
    }
    if !(args.increment > 0.0) {
        return Err("increment must be positive".into());
    }
    if args.height_max < 0.0 {
        return Err("height-max must be non-negative".into());
    }
    let spec = CheckerboardSpec {
        n: args.board_n,
        square_side: args.square_side,
        levels: (args.height_max / args.increment).floor() as u32,
        increment: args.increment,
        seed: args.seed,
    };
    let config = PipelineConfig {
        params: SolverParams {
            timeout: Duration::from_secs_f64(args.timeout),
            ..SolverParams::default()
        },
        threads: resolve_threads(args.threads)?,
        seed: args.seed,
        ..PipelineConfig::default()
    };
    let summary = run_bench(&spec, args.trials, &config).map_err(|e| e.to_string())?;
    print!("{}", format_summary(&summary));
    if let Some(path) = &args.out {
        std::fs::write(path, trials_document(&summary))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(0)
}

/// Per-trial document with only run-to-run stable fields (no wall times),
/// so a fixed seed yields byte-identical output.
fn trials_document(summary: &BenchSummary) -> String {
    use std::fmt::Write;
    let mut out = String::from("{\n  \"trials\": [\n");
    for (i, t) in summary.trials.iter().enumerate() {
        let (outcome, cost) = match t.outcome {
            Outcome::Solved { cost } => ("solved", Some(cost)),
            Outcome::Infeasible => ("infeasible", None),
            Outcome::TimedOut => ("timeout", None),
        };
        let comma = if i + 1 == summary.trials.len() { "" } else { "," };
        match cost {
            Some(c) => writeln!(
                out,
                "    {{\"seed\": {}, \"outcome\": \"{outcome}\", \"cost_blocks\": {c}}}{comma}",
                t.seed
            )
            .unwrap(),
            None => writeln!(out, "    {{\"seed\": {}, \"outcome\": \"{outcome}\"}}{comma}", t.seed)
                .unwrap(),
        }
    }
    writeln!(out, "  ],").unwrap();
    writeln!(out, "  \"solved\": {},", summary.solved).unwrap();
    writeln!(out, "  \"infeasible\": {},", summary.infeasible).unwrap();
    writeln!(out, "  \"timed_out\": {}", summary.timed_out).unwrap();
    out.push_str("}\n");
    out
}
