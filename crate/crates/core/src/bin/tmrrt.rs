use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ColorChoice, Parser, Subcommand};

use tmrrt::assigner::Strategy;
use tmrrt::engine::{self, ScenarioConfig, SweepRow};
use tmrrt::geometry::Point2;
use tmrrt::gridmap::{load_pgm, PgmThresholds};
use tmrrt::render::{parse_trajectories, render_svg};

#[derive(Parser)]
#[command(name = "tmrrt", version, about = "Multi-robot frontier exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Preset name (mapA, mapB, arena) or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Override a scenario field, e.g. `--set assigner.rp_dist=13`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let cfg = ScenarioConfig::load(&self.scenario).with_context(|| format!("loading scenario {:?}", self.scenario))?;
        Ok(cfg.with_overrides(&self.overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its logs.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// tm_rrt or baseline_rrt
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<Strategy>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Paired-seed comparison of TM-RRT against the baseline.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `1..25` (inclusive) or a comma-separated list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Parallel runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write every run's logs under <out>/runs/.
        #[arg(long)]
        keep_runs: bool,
    },
    /// Mean duration and distance for each value of one parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dotted key, or a bare field name such as rp_dist.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. `9,13,17`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// `1..5` (inclusive) or a comma-separated list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Parallel runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Draw trajectories over a map as SVG.
    Render {
        /// Run directory holding final_map.pgm, trajectories.csv and metrics.csv.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        trajectories: Option<PathBuf>,
        /// m per cell; read from metrics.csv when rendering a run directory.
        #[arg(long)]
        resolution: Option<f64>,
        /// Pixels per cell.
        #[arg(long, default_value_t = 4.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s {
        "tm_rrt" | "tm-rrt" => Ok(Strategy::TmRrt),
        "baseline_rrt" | "baseline-rrt" | "baseline" => Ok(Strategy::BaselineRrt),
        _ => Err(format!("unknown strategy {s:?}; use tm_rrt or baseline_rrt")),
    }
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

/// `a..b` is inclusive; lists may mix ranges and single seeds.
fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|_| format!("bad seed range {part:?}"))?;
            let b: u64 = b.trim_start_matches('=').parse().map_err(|_| format!("bad seed range {part:?}"))?;
            if b < a {
                return Err(format!("empty seed range {part:?}"));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?);
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(Seeds(seeds))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write(path: PathBuf, body: &str) -> Result<PathBuf> {
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn metrics_value(metrics: &str, key: &str) -> Option<f64> {
    metrics.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(',')?.parse().ok())
}

fn render(run: Option<PathBuf>, map: Option<PathBuf>, trajectories: Option<PathBuf>, resolution: Option<f64>, scale: f64, out: Option<PathBuf>) -> Result<()> {
    let (map, trajectories, metrics) = match (&run, map, trajectories) {
        (Some(dir), None, None) => (dir.join("final_map.pgm"), dir.join("trajectories.csv"), Some(dir.join("metrics.csv"))),
        (None, Some(m), Some(t)) => {
            let metrics = t.parent().map(|d| d.join("metrics.csv")).filter(|p| p.exists());
            (m, t, metrics)
        }
        _ => bail!("render needs either --run DIR or both --map and --trajectories"),
    };
    let metrics = match metrics {
        Some(p) if p.exists() => std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
        _ => String::new(),
    };
    let resolution = resolution
        .or_else(|| metrics_value(&metrics, "map_resolution"))
        .context("map resolution unknown; pass --resolution")?;
    let origin = Point2::new(
        metrics_value(&metrics, "map_origin_x").unwrap_or(0.0),
        metrics_value(&metrics, "map_origin_y").unwrap_or(0.0),
    );
    let grid = load_pgm(&map, resolution, origin, PgmThresholds::default()).with_context(|| format!("reading {}", map.display()))?;
    let csv = std::fs::read_to_string(&trajectories).with_context(|| format!("reading {}", trajectories.display()))?;
    let paths = parse_trajectories(&csv)?;
    let svg = render_svg(&grid, &paths, scale);
    let out = out.unwrap_or_else(|| trajectories.with_file_name("paths.svg"));
    print_paths(&[write(out, &svg)?]);
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, seed, strategy, out } => {
            let mut cfg = scenario.load()?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = strategy {
                cfg.strategy = s;
            }
            let result = engine::run(&cfg)?;
            println!("{}", engine::summarize(&result.metrics));
            let written = result.logs.write_to(&out).with_context(|| format!("writing to {}", out.display()))?;
            print_paths(&written);
        }
        Command::Compare { scenario, seeds, out, jobs, keep_runs } => {
            let seeds = seeds.0;
            if seeds.len() < 2 {
                bail!("compare needs at least two seeds");
            }
            let cfg = scenario.load()?;
            let (cmp, runs) = engine::compare_runs(&cfg, &seeds, jobs)?;
            let summary = cmp.summary();
            print!("{summary}");
            ensure_dir(&out)?;
            let mut written = vec![write(out.join("comparison.csv"), &cmp.to_csv())?, write(out.join("summary.txt"), &summary)?];
            if keep_runs {
                for r in &runs {
                    let dir = out.join("runs").join(format!("{}_seed{}", r.metrics.strategy.as_str(), r.metrics.seed));
                    r.logs.write_to(&dir).with_context(|| format!("writing to {}", dir.display()))?;
                    written.push(dir);
                }
            }
            print_paths(&written);
        }
        Command::Sweep { scenario, param, values, seeds, out, jobs } => {
            let seeds = seeds.0;
            let cfg = scenario.load()?;
            let rows = engine::sweep(&cfg, &param, &values, &seeds, jobs)?;
            let mut csv = String::from(SweepRow::csv_header());
            for r in &rows {
                csv.push_str(&r.csv_line());
            }
            print!("{csv}");
            ensure_dir(&out)?;
            print_paths(&[write(out.join("sweep.csv"), &csv)?]);
        }
        Command::Render { run, map, trajectories, resolution, scale, out } => render(run, map, trajectories, resolution, scale, out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let color = if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) { ColorChoice::Never } else { ColorChoice::Auto };
    let matches = <Cli as clap::CommandFactory>::command().color(color).get_matches();
    let cli = match <Cli as clap::FromArgMatches>::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
