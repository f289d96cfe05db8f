//! Support code for the workspace acceptance suite in `tests/acceptance.rs`:
//! running scenario files to CSV and checking tracking windows.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use swarmsim::csv::{read_shape_csv, ShapeRow};
use swarmsim::CsvSink;
use swarmsim_core::shape::idx;
use swarmsim_core::{run_scenario, RobotId, ScenarioConfig};

pub const COMPONENTS: [&str; 5] = ["mux", "muy", "theta", "s2", "s1"];

/// Componentwise bound on |a − ζ|: 0.5 m, 0.5 m, 0.1 rad, 10 % of ζ_s2, 10 % of ζ_s1.
pub fn tolerance(zeta: &[f64; 5]) -> [f64; 5] {
    [0.5, 0.5, 0.1, 0.1 * zeta[idx::S2], 0.1 * zeta[idx::S1]]
}

/// Tracking errors of a run over one closed time window.
#[derive(Debug, Clone)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
    /// The logged rows span the whole window.
    pub covered: bool,
    pub max_error: [f64; 5],
    /// Largest error-to-tolerance ratio per component.
    pub max_ratio: [f64; 5],
    pub first_violation: Option<(f64, usize)>,
}

impl Window {
    pub fn check(rows: &[ShapeRow], t0: f64, t1: f64) -> Window {
        let eps = 1e-9;
        let inside: Vec<&ShapeRow> = rows.iter().filter(|r| r.time >= t0 - eps && r.time <= t1 + eps).collect();
        let covered =
            inside.first().is_some_and(|r| r.time <= t0 + eps) && inside.last().is_some_and(|r| r.time >= t1 - eps);
        let mut w = Window { t0, t1, covered, max_error: [0.0; 5], max_ratio: [0.0; 5], first_violation: None };
        for r in inside {
            let tol = tolerance(&r.zeta);
            for k in 0..5 {
                w.max_error[k] = w.max_error[k].max(r.error[k]);
                w.max_ratio[k] = w.max_ratio[k].max(r.error[k] / tol[k]);
                if r.error[k] > tol[k] && w.first_violation.is_none() {
                    w.first_violation = Some((r.time, k));
                }
            }
        }
        w
    }

    pub fn pass(&self) -> bool {
        self.covered && self.first_violation.is_none()
    }

    pub fn describe(&self) -> String {
        let ratios: Vec<String> = (0..5).map(|k| format!("{}={:.2}", COMPONENTS[k], self.max_ratio[k])).collect();
        let mut s = format!("[{}, {}] error/tol {}", self.t0, self.t1, ratios.join(" "));
        if !self.covered {
            s.push_str(" (run ended before window)");
        } else if let Some((t, k)) = self.first_violation {
            s.push_str(&format!(" (first violation t={t} {})", COMPONENTS[k]));
        }
        s
    }
}

/// A scenario run logged to CSV.
#[derive(Debug)]
pub struct LoggedRun {
    pub dir: PathBuf,
    pub wall: Duration,
    /// Why the run stopped early, if it did.
    pub error: Option<String>,
    pub rows: Vec<ShapeRow>,
}

impl LoggedRun {
    pub fn status(&self) -> String {
        match &self.error {
            None => format!("completed in {:.1} s", self.wall.as_secs_f64()),
            Some(e) => format!("aborted after {:.1} s wall ({e})", self.wall.as_secs_f64()),
        }
    }

    pub fn completed(&self) -> bool {
        self.error.is_none()
    }
}

/// Runs `cfg`, writing `robots.csv` and `shape.csv` into `dir`, and reads the
/// shape log back.
pub fn run_logged(cfg: &ScenarioConfig, dir: &Path) -> LoggedRun {
    std::fs::create_dir_all(dir).expect("output directory");
    let start = Instant::now();
    let mut sink = CsvSink::create(dir).expect("CSV files");
    let outcome = run_scenario(cfg, &mut [&mut sink]);
    sink.finish().expect("flushing CSV files");
    let wall = start.elapsed();
    let rows = read_shape_csv(&dir.join(swarmsim::csv::SHAPE_FILE)).expect("shape log");
    LoggedRun { dir: dir.to_path_buf(), wall, error: outcome.err().map(|e| e.to_string()), rows }
}

/// The shipped nine-robot scenario file.
pub fn reference_scenario_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/winding_road_9.cfg")
}

/// Breadth-first connectivity over an explicit edge list.
pub fn bfs_connected(vertices: &BTreeSet<RobotId>, edges: &[(RobotId, RobotId)]) -> bool {
    let Some(&start) = vertices.iter().next() else { return true };
    let mut adj: BTreeMap<RobotId, Vec<RobotId>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen == *vertices
}
