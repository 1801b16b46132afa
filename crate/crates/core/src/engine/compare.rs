use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};
use statrs::statistics::{Data, Distribution, Median};

use crate::assigner::Strategy;

use super::{run, EngineError, RunOutput, ScenarioConfig, Termination};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub completed: bool,
    pub termination: Termination,
    pub duration: f64,
    pub distance: f64,
}

impl RunSummary {
    fn of(out: &RunOutput) -> Self {
        let m = &out.metrics;
        Self { completed: m.completed, termination: m.termination, duration: m.exploration_duration, distance: m.total_distance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedRow {
    pub seed: u64,
    pub tm: RunSummary,
    pub baseline: RunSummary,
}

/// Sample statistics; `stddev` uses the n - 1 denominator and is 0 for n < 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { n: 0, mean: f64::NAN, median: f64::NAN, stddev: f64::NAN };
        }
        let data = Data::new(values.to_vec());
        Self {
            n: values.len(),
            mean: data.mean().unwrap_or(f64::NAN),
            median: data.median(),
            stddev: if values.len() < 2 { 0.0 } else { data.std_dev().unwrap_or(0.0) },
        }
    }
}

/// Means are over completed runs; incomplete runs are counted as excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyAggregate {
    pub attempted: usize,
    pub completed: usize,
    pub excluded: usize,
    pub duration: Stats,
    pub distance: Stats,
}

impl StrategyAggregate {
    fn of<'a>(runs: impl Iterator<Item = &'a RunSummary>) -> Self {
        let runs: Vec<&RunSummary> = runs.collect();
        let done: Vec<&&RunSummary> = runs.iter().filter(|r| r.completed).collect();
        let durations: Vec<f64> = done.iter().map(|r| r.duration).collect();
        let distances: Vec<f64> = done.iter().map(|r| r.distance).collect();
        Self {
            attempted: runs.len(),
            completed: done.len(),
            excluded: runs.len() - done.len(),
            duration: Stats::of(&durations),
            distance: Stats::of(&distances),
        }
    }
}

/// One-sided exact sign test of "TM-RRT is lower than the baseline".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub p_value: f64,
}

/// Pair outcomes: both complete compares the values; if only one completes,
/// that run wins; if neither does, the pair is a tie and dropped.
pub fn sign_test(rows: &[PairedRow], value: impl Fn(&RunSummary) -> f64) -> SignTest {
    let (mut wins, mut losses, mut ties) = (0u64, 0u64, 0u64);
    for r in rows {
        match (r.tm.completed, r.baseline.completed) {
            (true, true) => {
                let (a, b) = (value(&r.tm), value(&r.baseline));
                if a < b {
                    wins += 1;
                } else if a > b {
                    losses += 1;
                } else {
                    ties += 1;
                }
            }
            (true, false) => wins += 1,
            (false, true) => losses += 1,
            (false, false) => ties += 1,
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 || wins == 0 {
        1.0
    } else {
        Binomial::new(0.5, n).expect("valid binomial").sf(wins - 1)
    };
    SignTest { wins, losses, ties, p_value }
}

/// `"33.46% (184.88sec vs 138.52sec)"`: relative excess of the baseline over
/// TM-RRT, baseline value first.
pub fn format_delta(baseline: f64, tm: f64, unit: &str) -> String {
    if !baseline.is_finite() || !tm.is_finite() {
        return "n/a (no completed runs to compare)".to_string();
    }
    let pct = (baseline - tm) / tm * 100.0;
    format!("{pct:.2}% ({baseline:.2}{unit} vs {tm:.2}{unit})")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    pub rows: Vec<PairedRow>,
    pub tm: StrategyAggregate,
    pub baseline: StrategyAggregate,
    pub duration_sign: SignTest,
    pub distance_sign: SignTest,
}

impl Comparison {
    pub fn duration_delta(&self) -> String {
        format_delta(self.baseline.duration.mean, self.tm.duration.mean, "sec")
    }

    pub fn distance_delta(&self) -> String {
        format_delta(self.baseline.distance.mean, self.tm.distance.mean, "m")
    }

    /// Per-seed table.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "seed,tm_completed,tm_termination,tm_duration,tm_distance,baseline_completed,baseline_termination,baseline_duration,baseline_distance\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{},{},{:.6},{:.6}",
                r.seed,
                r.tm.completed,
                r.tm.termination.as_str(),
                r.tm.duration,
                r.tm.distance,
                r.baseline.completed,
                r.baseline.termination.as_str(),
                r.baseline.duration,
                r.baseline.distance
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {}: {} paired seeds", self.scenario, self.rows.len());
        let _ = writeln!(s, "{:<14} {:>9} {:>9} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "strategy", "attempted", "completed", "dur_mean", "dur_median", "dur_sd", "dist_mean", "dist_med", "dist_sd");
        for (name, a) in [("tm_rrt", &self.tm), ("baseline_rrt", &self.baseline)] {
            let _ = writeln!(
                s,
                "{:<14} {:>9} {:>9} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
                name, a.attempted, a.completed, a.duration.mean, a.duration.median, a.duration.stddev, a.distance.mean, a.distance.median, a.distance.stddev
            );
        }
        let _ = writeln!(s, "excluded (incomplete): tm_rrt {}, baseline_rrt {}", self.tm.excluded, self.baseline.excluded);
        let _ = writeln!(s, "duration improvement: {}", self.duration_delta());
        let _ = writeln!(s, "distance improvement: {}", self.distance_delta());
        for (name, t) in [("duration", &self.duration_sign), ("distance", &self.distance_sign)] {
            let _ = writeln!(s, "sign test ({name}): {} wins, {} losses, {} ties, p = {:.3e}", t.wins, t.losses, t.ties, t.p_value);
        }
        s
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, EngineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EngineError::Parallel(e.to_string()))
}

/// Runs every configuration on `jobs` threads; results keep input order.
fn run_all(configs: &[ScenarioConfig], jobs: usize) -> Result<Vec<RunOutput>, EngineError> {
    pool(jobs)?.install(|| configs.par_iter().map(run).collect())
}

/// Paired comparison that also returns every run, ordered by (seed, strategy)
/// with TM-RRT first.
pub fn compare_runs(cfg: &ScenarioConfig, seeds: &[u64], jobs: usize) -> Result<(Comparison, Vec<RunOutput>), EngineError> {
    let mut configs = Vec::with_capacity(seeds.len() * 2);
    for &seed in seeds {
        for strategy in [Strategy::TmRrt, Strategy::BaselineRrt] {
            configs.push(ScenarioConfig { seed, strategy, ..cfg.clone() });
        }
    }
    let outputs = run_all(&configs, jobs)?;
    let rows: Vec<PairedRow> = seeds
        .iter()
        .zip(outputs.chunks(2))
        .map(|(&seed, pair)| PairedRow { seed, tm: RunSummary::of(&pair[0]), baseline: RunSummary::of(&pair[1]) })
        .collect();
    let comparison = Comparison {
        scenario: cfg.name.clone(),
        tm: StrategyAggregate::of(rows.iter().map(|r| &r.tm)),
        baseline: StrategyAggregate::of(rows.iter().map(|r| &r.baseline)),
        duration_sign: sign_test(&rows, |r| r.duration),
        distance_sign: sign_test(&rows, |r| r.distance),
        rows,
    };
    Ok((comparison, outputs))
}

/// Runs both strategies for every seed with matched detector randomness.
pub fn compare(cfg: &ScenarioConfig, seeds: &[u64], jobs: usize) -> Result<Comparison, EngineError> {
    compare_runs(cfg, seeds, jobs).map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub runs: usize,
    pub completed: usize,
    pub duration: Stats,
    pub distance: Stats,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "param,value,runs,completed,mean_duration,median_duration,mean_distance,median_distance\n"
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            self.param, self.value, self.runs, self.completed, self.duration.mean, self.duration.median, self.distance.mean, self.distance.median
        )
    }
}

/// Resolves a bare field name such as `rp_dist` to its dotted path.
fn resolve_param(cfg: &ScenarioConfig, param: &str) -> Result<String, EngineError> {
    if param.contains('.') {
        return Ok(param.to_string());
    }
    let tree = serde_json::to_value(cfg).map_err(|e| super::ConfigError::Schema(e.to_string()))?;
    let obj = tree.as_object().expect("config serializes to an object");
    if obj.contains_key(param) {
        return Ok(param.to_string());
    }
    let hits: Vec<String> = obj
        .iter()
        .filter(|(_, v)| v.as_object().is_some_and(|g| g.contains_key(param)))
        .map(|(k, _)| format!("{k}.{param}"))
        .collect();
    match hits.as_slice() {
        [one] => Ok(one.clone()),
        [] => Err(super::ConfigError::Override(format!("unknown parameter {param:?}")).into()),
        _ => Err(super::ConfigError::Override(format!("{param:?} is ambiguous: {}", hits.join(", "))).into()),
    }
}

/// One row per value: statistics over the seeds (means over completed runs).
pub fn sweep(cfg: &ScenarioConfig, param: &str, values: &[f64], seeds: &[u64], jobs: usize) -> Result<Vec<SweepRow>, EngineError> {
    if values.is_empty() {
        return Err(super::ConfigError::Invalid("sweep needs at least one value".into()).into());
    }
    let path = resolve_param(cfg, param)?;
    let mut configs = Vec::with_capacity(values.len() * seeds.len());
    for &v in values {
        let base = cfg.with_overrides(&[format!("{path}={v}")])?;
        for &seed in seeds {
            configs.push(ScenarioConfig { seed, ..base.clone() });
        }
    }
    let outputs = run_all(&configs, jobs)?;
    Ok(values
        .iter()
        .zip(outputs.chunks(seeds.len().max(1)))
        .map(|(&value, runs)| {
            let summaries: Vec<RunSummary> = runs.iter().map(RunSummary::of).collect();
            let agg = StrategyAggregate::of(summaries.iter());
            SweepRow { param: path.clone(), value, runs: agg.attempted, completed: agg.completed, duration: agg.duration, distance: agg.distance }
        })
        .collect())
}
