//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls the library routine it is checking.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tmrrt::assigner::{AssignerConfig, AssignmentMemory, GoalRecord, RobotSnapshot, RobotState};
use tmrrt::frontier_filter::FilteredFrontier;
use tmrrt::geometry::{Point2, Pose};
use tmrrt::RobotId;
use tmrrt::gridmap::{CellState, OccupancyGrid};

pub fn random_grid(rng: &mut ChaCha8Rng, max_side: usize) -> OccupancyGrid {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let p_free = rng.random_range(0.3..0.95);
    let p_occ = rng.random_range(0.0..0.2);
    let cells = (0..w * h)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p_free {
                CellState::Free
            } else if u < p_free + p_occ {
                CellState::Occupied
            } else {
                CellState::Unknown
            }
        })
        .collect();
    OccupancyGrid::from_cells(w, h, 0.1, Point2::default(), cells).unwrap()
}

fn free_at(g: &OccupancyGrid, x: i64, y: i64) -> bool {
    g.get_signed(x, y) == Some(CellState::Free)
}

/// One erosion pass per iteration, cell by cell: a Free cell survives only if
/// every kernel neighbour is an in-grid Free cell.
pub fn brute_erode(g: &OccupancyGrid, kernel: &[(i64, i64)], iterations: usize) -> OccupancyGrid {
    let mut cur = g.clone();
    for _ in 0..iterations {
        let mut next = cur.clone();
        for y in 0..g.height() as i64 {
            for x in 0..g.width() as i64 {
                if !free_at(&cur, x, y) {
                    continue;
                }
                if !kernel.iter().all(|(dx, dy)| free_at(&cur, x + dx, y + dy)) {
                    next.set_index((y * g.width() as i64 + x) as usize, CellState::Unknown);
                }
            }
        }
        cur = next;
    }
    cur
}

/// A non-Occupied cell becomes Free if some kernel offset lands it on a Free
/// cell of the previous pass.
pub fn brute_dilate(g: &OccupancyGrid, kernel: &[(i64, i64)], iterations: usize) -> OccupancyGrid {
    let mut cur = g.clone();
    for _ in 0..iterations {
        let mut next = cur.clone();
        for y in 0..g.height() as i64 {
            for x in 0..g.width() as i64 {
                if cur.get_signed(x, y) != Some(CellState::Unknown) {
                    continue;
                }
                if kernel.iter().any(|(dx, dy)| free_at(&cur, x - dx, y - dy)) {
                    next.set_index((y * g.width() as i64 + x) as usize, CellState::Free);
                }
            }
        }
        cur = next;
    }
    cur
}

pub const PLUS: [(i64, i64); 5] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];

/// 60x60 map: a walled 40x40 room seen as Free, with one-cell-wide Free
/// streaks leaking out into the Unknown surroundings and a few isolated
/// speckles, the way misaligned scans leave rays behind in a merged map.
/// Returns the grid plus a mask of the cells that belong to the room.
pub fn noisy_map() -> (OccupancyGrid, Vec<bool>) {
    let (w, h) = (60usize, 60usize);
    let mut g = OccupancyGrid::new(w, h, 0.05, Point2::default(), CellState::Unknown).unwrap();
    let mut room = vec![false; w * h];
    for y in 10..50 {
        for x in 10..50 {
            let wall = x == 10 || x == 49 || y == 10 || y == 49;
            g.set_index(y * w + x, if wall { CellState::Occupied } else { CellState::Free });
            room[y * w + x] = !wall;
        }
    }
    // horizontal and vertical leaks through gaps in the wall
    for x in 50..59 {
        g.set_index(20 * w + x, CellState::Free);
    }
    for y in 1..10 {
        g.set_index(y * w + 30, CellState::Free);
    }
    // the wall gaps themselves count as part of the room
    for i in [20 * w + 49, 10 * w + 30] {
        g.set_index(i, CellState::Free);
        room[i] = true;
    }
    // a diagonal leak
    for i in 0..8 {
        g.set_index((9 - i) * w + (9 - i), CellState::Free);
    }
    for (x, y) in [(3, 40), (55, 55), (5, 55), (56, 3)] {
        g.set_index(y * w + x, CellState::Free);
    }
    (g, room)
}

/// Points drawn uniformly in two discs of radius `spread` centered far apart.
pub fn two_blobs(rng: &mut ChaCha8Rng, bandwidth: f64) -> (Vec<Point2>, [Point2; 2]) {
    let a = Point2::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let sep = bandwidth * rng.random_range(5.5..9.0);
    let b = Point2::new(a.x + sep * angle.cos(), a.y + sep * angle.sin());
    let spread = bandwidth * 0.4;
    let mut points = Vec::new();
    let mut sums = [(0.0, 0.0, 0usize); 2];
    for (k, c) in [a, b].iter().enumerate() {
        let n = rng.random_range(8..40);
        for _ in 0..n {
            let r = spread * rng.random::<f64>().sqrt();
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let p = Point2::new(c.x + r * t.cos(), c.y + r * t.sin());
            sums[k].0 += p.x;
            sums[k].1 += p.y;
            sums[k].2 += 1;
            points.push(p);
        }
    }
    points.shuffle(rng);
    let mean = |s: (f64, f64, usize)| Point2::new(s.0 / s.2 as f64, s.1 / s.2 as f64);
    (points, [mean(sums[0]), mean(sums[1])])
}

pub struct OracleParams {
    pub lambda: f64,
    pub h_rad: f64,
    pub h_gain: f64,
    pub rp_dist: f64,
    pub t_pm: f64,
    pub z: f64,
    pub eps: f64,
    pub near: f64,
    pub far: f64,
    pub invalid_radius: f64,
}

fn dist(a: Point2, b: Point2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Step-by-step transcription of the temporal-memory assigner. Returns
/// (robot index, goal, t_ge) in visiting order.
#[allow(clippy::too_many_arguments)]
pub fn oracle_assign(
    robots: &[RobotSnapshot],
    frontiers: &[FilteredFrontier],
    memory: &AssignmentMemory,
    invalid: &[Point2],
    now: f64,
    rng: &mut ChaCha8Rng,
    p: &OracleParams,
) -> Vec<(usize, Point2, f64)> {
    let mut namelist: Vec<usize> = (0..robots.len()).collect();
    namelist.shuffle(rng);
    let mut goals: Vec<Option<Point2>> = robots.iter().map(|r| r.current_goal).collect();
    let mut out = Vec::new();

    for &agv in &namelist {
        let r = &robots[agv];
        let xr = Point2::new(r.pose.x, r.pose.y);
        let mut skip_assign = false;
        if r.state == RobotState::Busy {
            if let Some(g) = goals[agv] {
                let d = dist(xr, g);
                if d > p.near * p.h_rad && d <= p.far * p.rp_dist {
                    skip_assign = true;
                }
            }
        }
        if skip_assign {
            continue;
        }

        let mut revenue_list = Vec::new();
        for f in frontiers {
            let d = dist(xr, f.position);
            let h = if d <= p.h_rad { p.h_gain } else { 1.0 };
            let mut nearest = f64::INFINITY;
            for (j, g) in goals.iter().enumerate() {
                if j != agv {
                    if let Some(g) = g {
                        nearest = nearest.min(dist(*g, f.position));
                    }
                }
            }
            let rel = if nearest.is_infinite() { 1.0 } else { (nearest / p.rp_dist).max(0.01).min(1.0) };
            revenue_list.push(p.lambda * h * f.info_gain * rel - d);
        }

        let mut used = vec![false; frontiers.len()];
        let mut attempt_count = 0;
        while attempt_count < frontiers.len() {
            // highest remaining revenue, lowest index on ties
            let mut best: Option<usize> = None;
            for k in 0..frontiers.len() {
                if used[k] {
                    continue;
                }
                match best {
                    Some(b) if revenue_list[k] <= revenue_list[b] => {}
                    _ => best = Some(k),
                }
            }
            let k = best.unwrap();
            used[k] = true;
            let goal = frontiers[k].position;
            let flag1 = invalid.iter().all(|q| dist(*q, goal) > p.invalid_radius);
            let flag2 = memory.history(r.id).iter().all(|g| dist(g.position, goal) > p.eps);
            let flag3 = goals
                .iter()
                .enumerate()
                .all(|(j, g)| j == agv || g.is_none_or(|g| dist(g, goal) > p.eps));
            if flag1 && flag2 && flag3 {
                let d = dist(xr, goal);
                let k_dur = if d < p.h_rad {
                    p.t_pm
                } else if d <= p.z {
                    p.t_pm * d
                } else {
                    p.t_pm * p.z
                };
                goals[agv] = Some(goal);
                out.push((agv, goal, now + k_dur));
                break;
            }
            attempt_count += 1;
        }
    }
    out
}

pub struct Instance {
    pub robots: Vec<RobotSnapshot>,
    pub frontiers: Vec<FilteredFrontier>,
    pub memory: AssignmentMemory,
    pub invalid: Vec<Point2>,
    pub now: f64,
}

fn point(rng: &mut ChaCha8Rng) -> Point2 {
    Point2::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0))
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n_robots = rng.random_range(1..=4);
    let n_frontiers = rng.random_range(1..=8);
    let now = rng.random_range(0.0..500.0);
    let frontiers: Vec<FilteredFrontier> = (0..n_frontiers)
        .map(|_| FilteredFrontier {
            position: point(rng),
            // integer gains make exact revenue ties possible
            info_gain: if rng.random_bool(0.3) { rng.random_range(0..4) as f64 } else { rng.random_range(0.0..30.0) },
            detected_at: now,
        })
        .collect();
    let mut memory = AssignmentMemory::new();
    let mut robots = Vec::new();
    for i in 0..n_robots {
        let id = RobotId(i);
        for _ in 0..rng.random_range(0..3) {
            // old goals, sometimes right on top of a frontier
            let p = if rng.random_bool(0.4) { frontiers[rng.random_range(0..n_frontiers)].position } else { point(rng) };
            memory.record(GoalRecord { position: p, t_gs: 0.0, t_ge: 10.0, robot: id });
        }
        let busy = rng.random_bool(0.5);
        let pose = Pose::new(rng.random_range(0.0..12.0), rng.random_range(0.0..12.0), 0.0);
        let current_goal = if busy {
            let g = if rng.random_bool(0.3) { frontiers[rng.random_range(0..n_frontiers)].position } else { point(rng) };
            memory.record(GoalRecord { position: g, t_gs: 0.0, t_ge: 1e9, robot: id });
            Some(g)
        } else {
            memory.clear_current(id);
            None
        };
        let state = if busy { RobotState::Busy } else { RobotState::Idle };
        robots.push(RobotSnapshot { id, pose, state, current_goal });
    }
    let invalid = (0..rng.random_range(0..3)).map(|_| point(rng)).collect();
    Instance { robots, frontiers, memory, invalid, now }
}

pub fn oracle_params(cfg: &AssignerConfig, invalid_radius: f64) -> OracleParams {
    OracleParams {
        lambda: cfg.lambda_weight,
        h_rad: cfg.h_rad,
        h_gain: cfg.h_gain,
        rp_dist: cfg.rp_dist,
        t_pm: cfg.t_pm,
        z: cfg.z,
        eps: cfg.memory_epsilon,
        near: cfg.interrupt_near,
        far: cfg.interrupt_far,
        invalid_radius,
    }
}

/// Minimal CSV reader: header names plus rows of string fields.
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
        let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect();
        Csv { header, rows }
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    pub fn f64(&self, row: usize, name: &str) -> f64 {
        let v = &self.rows[row][self.col(name)];
        if v == "inf" {
            f64::INFINITY
        } else {
            v.parse().unwrap_or(f64::NAN)
        }
    }

    pub fn str(&self, row: usize, name: &str) -> &str {
        &self.rows[row][self.col(name)]
    }
}

fn near(a: (f64, f64), b: (f64, f64), r: f64) -> bool {
    (a.0 - b.0).hypot(a.1 - b.1) <= r
}

/// Replays a run's CSV logs and checks the watchdog and bookkeeping rules:
/// expired goals close within one tick, no goal is handed out on top of an
/// earlier invalid entry, every assigned goal is closed exactly once, coverage
/// never drops, and (when `separation` is given) no two robots ever hold goals
/// within that distance of each other.
pub fn check_run_logs(
    trace: &str,
    invalid: &str,
    coverage: &str,
    tick: f64,
    match_radius: f64,
    separation: Option<f64>,
) -> Result<usize, String> {
    let trace = Csv::parse(trace);
    let invalid = Csv::parse(invalid);
    let coverage = Csv::parse(coverage);
    let invalid_pts: Vec<(f64, (f64, f64))> =
        (0..invalid.rows.len()).map(|i| (invalid.f64(i, "time"), (invalid.f64(i, "x"), invalid.f64(i, "y")))).collect();

    let mut held: std::collections::BTreeMap<String, ((f64, f64), f64)> = Default::default();
    let mut checked = 0;
    for i in 0..trace.rows.len() {
        let t = trace.f64(i, "time");
        let robot = trace.str(i, "robot").to_string();
        let event = trace.str(i, "event");
        let pos = (trace.f64(i, "x"), trace.f64(i, "y"));
        match event {
            "assigned" => {
                if let Some(prev) = held.get(&robot) {
                    return Err(format!("t={t}: robot {robot} assigned while still holding {prev:?}"));
                }
                if let Some((ti, p)) = invalid_pts.iter().find(|(ti, p)| *ti <= t && near(*p, pos, match_radius)) {
                    return Err(format!("t={t}: robot {robot} assigned {pos:?}, invalid since {ti} at {p:?}"));
                }
                if let Some(eps) = separation {
                    if let Some((other, (g, _))) = held.iter().find(|(_, (g, _))| near(*g, pos, eps)) {
                        return Err(format!("t={t}: robot {robot} goal {pos:?} within {eps} of robot {other}'s {g:?}"));
                    }
                }
                held.insert(robot, (pos, trace.f64(i, "t_ge")));
                checked += 1;
            }
            "succeeded" | "preempted" | "deadline_expired" | "move_base_error" | "in_obstacle" | "run_ended" => {
                let Some((g, t_ge)) = held.remove(&robot) else {
                    return Err(format!("t={t}: {event} for robot {robot} without a held goal"));
                };
                if g != pos {
                    return Err(format!("t={t}: {event} names {pos:?} but robot {robot} held {g:?}"));
                }
                if t_ge.is_finite() && t >= t_ge + tick - 1e-6 {
                    return Err(format!("t={t}: goal {g:?} of robot {robot} outlived its deadline {t_ge}"));
                }
                if event == "deadline_expired" && t < t_ge - 1e-6 {
                    return Err(format!("t={t}: goal {g:?} cancelled before its deadline {t_ge}"));
                }
            }
            "skipped_busy" | "exhausted" => {}
            other => return Err(format!("unknown trace event {other:?}")),
        }
    }
    if let Some((robot, (g, _))) = held.iter().next() {
        return Err(format!("robot {robot} still holds {g:?} after the run"));
    }
    let mut last = 0.0;
    for i in 0..coverage.rows.len() {
        let c = coverage.f64(i, "coverage");
        if c < last {
            return Err(format!("coverage dropped from {last} to {c}"));
        }
        last = c;
    }
    Ok(checked)
}
