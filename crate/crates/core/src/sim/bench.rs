//! Multi-seed benchmark suites and their aggregate table.

use std::io::Write;

use serde::Serialize;

use super::{run, RunMetrics, SimConfig, SimError};
use crate::world::{generate, CommRange, EnvKind};

/// One run of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub env: EnvKind,
    pub comm_range: CommRange,
    pub seed: u64,
    pub metrics: RunMetrics,
}

/// One table row. Means are over successful trials (`NaN` when none).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub env: String,
    pub comm_range: String,
    pub trials: usize,
    pub success_rate_pct: f64,
    pub flight_time_s: f64,
    pub flight_dist_m: f64,
    pub compute_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub trials: Vec<TrialResult>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Row for one (environment, range) cell.
pub fn aggregate(env: EnvKind, range: CommRange, trials: &[TrialResult]) -> BenchRow {
    let ok: Vec<&RunMetrics> = trials.iter().map(|t| &t.metrics).filter(|m| m.success).collect();
    BenchRow {
        env: env.to_string(),
        comm_range: range.to_string(),
        trials: trials.len(),
        success_rate_pct: if trials.is_empty() { f64::NAN } else { 100.0 * ok.len() as f64 / trials.len() as f64 },
        flight_time_s: mean(ok.iter().filter_map(|m| m.flight_time_s)),
        flight_dist_m: mean(ok.iter().map(|m| m.flight_distance_m)),
        compute_ms: mean(ok.iter().map(|m| m.compute_ms)),
    }
}

/// Runs seeds `base_seed .. base_seed + trials` for every range. The seed
/// drives both the generator and the simulator. With zero trials the table
/// is empty.
pub fn benchmark(
    env: EnvKind,
    ranges: &[CommRange],
    trials: usize,
    base_seed: u64,
    config: &SimConfig,
    mut progress: impl FnMut(&TrialResult),
) -> Result<BenchReport, SimError> {
    let mut report = BenchReport::default();
    if trials == 0 {
        return Ok(report);
    }
    for &range in ranges {
        let start = report.trials.len();
        for t in 0..trials as u64 {
            let seed = base_seed + t;
            let scenario = generate(env, seed, range)?;
            let metrics = run(&scenario, &config.with_seed(seed), None)?;
            let trial = TrialResult { env, comm_range: range, seed, metrics };
            progress(&trial);
            report.trials.push(trial);
        }
        report.rows.push(aggregate(env, range, &report.trials[start..]));
    }
    Ok(report)
}

/// CSV with a header row, even when `rows` is empty.
pub fn write_csv(out: impl Write, rows: &[BenchRow]) -> Result<(), SimError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "env",
        "comm_range",
        "trials",
        "success_rate_pct",
        "flight_time_s",
        "flight_dist_m",
        "compute_ms",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
