//! Scenario files: TOML documents deserialized into [`ScenarioConfig`].
//!
//! The schema is documented in the repository README.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use swarmsim_core::consensus::EstimatorParams;
use swarmsim_core::control::Gains;
use swarmsim_core::graph::{EventKind, GraphEvent, RobotId};
use swarmsim_core::kinematics::{RobotParams, RobotState};
use swarmsim_core::shape::{ShapeConfig, DEFAULT_ISOTROPY_TOLERANCE};
use swarmsim_core::trajectory::{ReferenceTrajectory, WaypointTable, WindingRoad};
use swarmsim_core::{Error as CoreError, ScenarioConfig};

/// A scenario that failed to load, with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileScenario {
    simulation: FileSimulation,
    robot: FileRobot,
    gains: FileGains,
    estimator: FileEstimator,
    #[serde(default)]
    shape: FileShape,
    robots: Vec<FileRobotState>,
    graph: FileGraph,
    #[serde(default)]
    events: Vec<FileEvent>,
    trajectory: FileTrajectory,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSimulation {
    control_dt: f64,
    estimator_substeps: usize,
    duration: f64,
    #[serde(default)]
    oracle_estimates: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRobot {
    wheelbase: f64,
    lookahead: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGains {
    swarm: [f64; 5],
    tracking: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEstimator {
    rho: f64,
    c: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileShape {
    coverage_factor: Option<f64>,
    coverage: Option<f64>,
    exponent_m: Option<f64>,
    exponent_n: Option<f64>,
    isotropy_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRobotState {
    id: RobotId,
    x: f64,
    y: f64,
    #[serde(default)]
    heading: f64,
    #[serde(default)]
    steering: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGraph {
    edges: Vec<[RobotId; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileEvent {
    RemoveRobot { time: f64, robot: RobotId },
    RemoveLink { time: f64, link: [RobotId; 2] },
    AddRobot {
        time: f64,
        robot: RobotId,
        x: f64,
        y: f64,
        #[serde(default)]
        heading: f64,
        #[serde(default)]
        steering: f64,
    },
    AddLink { time: f64, link: [RobotId; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileTrajectory {
    WindingRoad {
        x_offset: Option<f64>,
        speed: Option<f64>,
        amplitude: Option<f64>,
        frequency: Option<f64>,
        heading_gain: Option<f64>,
        s2: Option<f64>,
        s1: Option<f64>,
    },
    Constant {
        value: [f64; 5],
        #[serde(default)]
        rate: [f64; 5],
    },
    Waypoints {
        times: Vec<f64>,
        values: Vec<[f64; 5]>,
        rates: Vec<[f64; 5]>,
    },
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let file: FileScenario = toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end()))?;
    let cfg = convert(file)?;
    cfg.validate().map_err(|e| ConfigError::new(field_of(&e, &cfg), e))?;
    Ok(cfg)
}

fn convert(f: FileScenario) -> Result<ScenarioConfig, ConfigError> {
    let robot_params = RobotParams::new(f.robot.wheelbase, f.robot.lookahead).map_err(|e| in_section("robot", e))?;
    let gains = Gains::new(f.gains.swarm, f.gains.tracking).map_err(|e| in_section("gains", e))?;
    let estimator = EstimatorParams::new(f.estimator.rho, f.estimator.c).map_err(|e| in_section("estimator", e))?;

    let mut shape = match (f.shape.coverage_factor, f.shape.coverage) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::new("shape", "set either coverage_factor or coverage, not both"));
        }
        (Some(c), None) => ShapeConfig { coverage_factor: c, ..ShapeConfig::default() },
        (None, Some(p)) => ShapeConfig::from_coverage(p).map_err(|e| ConfigError::new("shape.coverage", e))?,
        (None, None) => ShapeConfig::default(),
    };
    shape.exponent_m = f.shape.exponent_m.unwrap_or(shape.exponent_m);
    shape.exponent_n = f.shape.exponent_n.unwrap_or(shape.exponent_n);
    shape.isotropy_tolerance = f.shape.isotropy_tolerance.unwrap_or(DEFAULT_ISOTROPY_TOLERANCE);
    shape.validate().map_err(|e| in_section("shape", e))?;

    let robots = f.robots.iter().map(|r| (r.id, RobotState::new(r.x, r.y, r.heading, r.steering))).collect();
    let edges = f.graph.edges.iter().map(|e| (e[0], e[1])).collect();

    let mut events = Vec::with_capacity(f.events.len());
    for ev in f.events {
        events.push(match ev {
            FileEvent::RemoveRobot { time, robot } => GraphEvent::new(time, EventKind::RemoveRobot(robot)),
            FileEvent::RemoveLink { time, link } => GraphEvent::new(time, EventKind::RemoveLink(link[0], link[1])),
            FileEvent::AddRobot { time, robot, x, y, heading, steering } => GraphEvent::new(
                time,
                EventKind::AddRobot { id: robot, state: RobotState::new(x, y, heading, steering) },
            ),
            FileEvent::AddLink { time, link } => GraphEvent::new(time, EventKind::AddLink(link[0], link[1])),
        });
    }

    let trajectory = match f.trajectory {
        FileTrajectory::WindingRoad { x_offset, speed, amplitude, frequency, heading_gain, s2, s1 } => {
            let d = WindingRoad::default();
            ReferenceTrajectory::WindingRoad(WindingRoad {
                x_offset: x_offset.unwrap_or(d.x_offset),
                speed: speed.unwrap_or(d.speed),
                amplitude: amplitude.unwrap_or(d.amplitude),
                frequency: frequency.unwrap_or(d.frequency),
                heading_gain: heading_gain.unwrap_or(d.heading_gain),
                s2: s2.unwrap_or(d.s2),
                s1: s1.unwrap_or(d.s1),
            })
        }
        FileTrajectory::Constant { value, rate } => ReferenceTrajectory::Constant { value, rate },
        FileTrajectory::Waypoints { times, values, rates } => ReferenceTrajectory::Waypoints(
            WaypointTable::new(times, values, rates).map_err(|e| ConfigError::new("trajectory", e))?,
        ),
    };

    Ok(ScenarioConfig {
        robots,
        robot_params,
        gains,
        estimator,
        shape,
        edges,
        events,
        trajectory,
        control_dt: f.simulation.control_dt,
        estimator_substeps: f.simulation.estimator_substeps,
        duration: f.simulation.duration,
        oracle_estimates: f.simulation.oracle_estimates,
    })
}

fn in_section(section: &str, e: CoreError) -> ConfigError {
    match &e {
        CoreError::InvalidParameter { name, .. } if *name != section && !name.contains(' ') => {
            ConfigError::new(format!("{section}.{name}"), e)
        }
        _ => ConfigError::new(section, e),
    }
}

/// Best-effort field path for a validation error.
fn field_of(e: &CoreError, cfg: &ScenarioConfig) -> String {
    match e {
        CoreError::TooFewRobots { .. } => "robots".into(),
        CoreError::DuplicateRobot(id) => match cfg.robots.iter().rposition(|r| r.0 == *id) {
            Some(i) => format!("robots[{i}].id"),
            None => "robots".into(),
        },
        CoreError::SelfLoop(a) | CoreError::UnknownEdge(a, _) | CoreError::DuplicateEdge(a, _) => {
            let b = match e {
                CoreError::UnknownEdge(_, b) | CoreError::DuplicateEdge(_, b) => *b,
                _ => *a,
            };
            match cfg.edges.iter().rposition(|&(x, y)| (x, y) == (*a, b) || (y, x) == (*a, b)) {
                Some(i) => format!("graph.edges[{i}]"),
                None => "graph.edges".into(),
            }
        }
        CoreError::UnknownRobot(id) => match cfg.edges.iter().position(|&(a, b)| a == *id || b == *id) {
            Some(i) => format!("graph.edges[{i}]"),
            None => "robots".into(),
        },
        CoreError::SteeringSingularity { steering } => {
            match cfg.robots.iter().position(|r| r.1.steering == *steering) {
                Some(i) => format!("robots[{i}].steering"),
                None => "robots".into(),
            }
        }
        CoreError::InvalidParameter { name, .. } => match *name {
            "control_dt" | "duration" | "estimator_substeps" => format!("simulation.{name}"),
            "coverage_factor" | "isotropy_tolerance" => format!("shape.{name}"),
            "superellipse exponent" => "shape".into(),
            other => other.to_string(),
        },
        CoreError::InvalidEvent { index, .. } => format!("events[{index}]"),
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[simulation]
control_dt = 0.001
estimator_substeps = 1
duration = 1.0

[robot]
wheelbase = 0.1
lookahead = 0.05

[gains]
swarm = [2.5, 2.5, 3.0, 0.06, 0.08]
tracking = [0.0008, 0.0008]

[estimator]
rho = 79.0
c = 2.0

[[robots]]
id = 1
x = 0.0
y = 0.0

[[robots]]
id = 2
x = 1.0
y = 0.0

[[robots]]
id = 3
x = 0.0
y = 1.0

[graph]
edges = [[1, 2], [2, 3]]

[trajectory]
kind = "constant"
value = [0.3, 0.3, 0.0, 1.0, 2.0]
"#;

    #[test]
    fn minimal_document_loads() {
        let cfg = parse_scenario(MINIMAL).unwrap();
        assert_eq!(cfg.robots.len(), 3);
        assert_eq!(cfg.edges, vec![(1, 2), (2, 3)]);
        assert_eq!(cfg.shape, ShapeConfig::default());
        assert!(cfg.events.is_empty());
    }

    #[test]
    fn two_robots_are_rejected_with_path() {
        let text = MINIMAL.replace("[[robots]]\nid = 3\nx = 0.0\ny = 1.0\n", "").replace("[[1, 2], [2, 3]]", "[[1, 2]]");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.path, "robots");
        assert!(err.message.contains("at least 3"), "{err}");
    }

    #[test]
    fn inconsistent_rate_is_rejected() {
        let text = MINIMAL.replace(
            "value = [0.3, 0.3, 0.0, 1.0, 2.0]",
            "value = [0.3, 0.3, 0.0, 1.0, 2.0]\nrate = [1.0, 0.0, 0.0, 0.0, 0.0]",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.path, "trajectory");
    }

    #[test]
    fn unknown_fields_and_bad_edges_are_named() {
        let err = parse_scenario(&MINIMAL.replace("rho = 79.0", "rho = 79.0\nrhoo = 1.0")).unwrap_err();
        assert!(err.message.contains("rhoo"), "{err}");
        let err = parse_scenario(&MINIMAL.replace("[[1, 2], [2, 3]]", "[[1, 2], [2, 2]]")).unwrap_err();
        assert_eq!(err.path, "graph.edges[1]");
        let err = parse_scenario(&MINIMAL.replace("duration = 1.0", "duration = -1.0")).unwrap_err();
        assert_eq!(err.path, "simulation.duration");
    }
}
