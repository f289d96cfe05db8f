//! Fixed-step scenario runner: events, truth, estimation, control, recording
//! and integration, in that order, once per control tick.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::consensus::{Channels, EstimatorParams};
use crate::control::{Gains, PipelineParams, RobotAgent};
use crate::error::{Error, Result};
use crate::graph::{apply_events, CommGraph, GraphEvent, RobotId};
use crate::kinematics::{step_rk4, ControlInput, OutputPoint, RobotParams, RobotState};
use crate::math::{wrap_half_pi, Vec2};
use crate::shape::{abstraction_map_with_hint, idx, ShapeConfig, ShapeParams, SHAPE_DIM};
use crate::trajectory::{ReferenceTrajectory, ShapeVector};

/// Default start of the window over which [`RunSummary::max_error_after_settle`] is taken.
pub const DEFAULT_SETTLE_TIME: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub robots: Vec<(RobotId, RobotState)>,
    pub robot_params: RobotParams,
    pub gains: Gains,
    pub estimator: EstimatorParams,
    pub shape: ShapeConfig,
    pub edges: Vec<(RobotId, RobotId)>,
    /// Sorted by time.
    pub events: Vec<GraphEvent>,
    pub trajectory: ReferenceTrajectory,
    pub control_dt: f64,
    pub estimator_substeps: usize,
    pub duration: f64,
    /// Feed the true abstract shape to the controllers instead of the
    /// estimates. The estimator still runs and is recorded.
    pub oracle_estimates: bool,
}

impl ScenarioConfig {
    pub fn initial_graph(&self) -> Result<CommGraph> {
        CommGraph::from_parts(self.robots.iter().map(|r| r.0), self.edges.iter().copied())
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        PipelineParams { robot: self.robot_params, gains: self.gains, estimator: self.estimator, shape: self.shape }
    }

    pub fn tick_count(&self) -> usize {
        libm::round(self.duration / self.control_dt) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.robots.len() < 3 {
            return Err(Error::TooFewRobots { required: 3, found: self.robots.len() });
        }
        self.initial_graph()?;
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return bad("control_dt", format!("must be positive, got {}", self.control_dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration", format!("must be positive, got {}", self.duration));
        }
        if self.estimator_substeps == 0 {
            return bad("estimator_substeps", "must be at least 1".into());
        }
        if self.events.windows(2).any(|w| w[1].time < w[0].time) {
            return bad("events", "must be sorted by time".into());
        }
        if let Some(ev) = self.events.iter().find(|e| !e.time.is_finite()) {
            return bad("events", format!("non-finite event time {}", ev.time));
        }
        for (_, s) in &self.robots {
            if s.steering.abs() >= core::f64::consts::FRAC_PI_2 {
                return Err(Error::SteeringSingularity { steering: s.steering });
            }
        }
        Gains::new(self.gains.swarm, self.gains.tracking)?;
        EstimatorParams::new(self.estimator.rho, self.estimator.c)?;
        RobotParams::new(self.robot_params.wheelbase, self.robot_params.lookahead)?;
        self.shape.validate()?;
        self.trajectory.check_derivative(0.0, self.duration, 100)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotRecord {
    pub id: RobotId,
    pub active: bool,
    pub state: RobotState,
    pub output: OutputPoint,
    pub q_id: Vec2,
    pub input: ControlInput,
    pub gamma: Channels,
    pub estimate: ShapeParams,
}

/// Snapshot at the start of a control tick, before integration.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: usize,
    pub time: f64,
    /// Every robot that has ever been part of the swarm, by id.
    pub robots: Vec<RobotRecord>,
    pub truth: ShapeParams,
    pub zeta: ShapeVector,
    pub zeta_dot: ShapeVector,
    pub active_count: usize,
    pub connected: bool,
}

impl TickRecord {
    pub fn shape_error(&self) -> ShapeVector {
        shape_error(&self.truth, &self.zeta)
    }
}

/// `|ζ − a|` per component, with the orientation error taken modulo π.
pub fn shape_error(truth: &ShapeParams, zeta: &ShapeVector) -> ShapeVector {
    let a = truth.to_array();
    core::array::from_fn(|k| {
        let e = zeta[k] - a[k];
        if k == idx::THETA {
            wrap_half_pi(e).abs()
        } else {
            e.abs()
        }
    })
}

pub trait RecordSink {
    fn consume(&mut self, record: &TickRecord) -> Result<()>;
}

impl RecordSink for Vec<TickRecord> {
    fn consume(&mut self, record: &TickRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub ticks: usize,
    pub final_time: f64,
    pub final_error: ShapeVector,
    pub settle_time: f64,
    pub max_error_after_settle: ShapeVector,
    pub disconnected_ticks: usize,
    pub first_disconnect: Option<f64>,
    pub final_active: usize,
}

/// Folds tick-level errors into a [`RunSummary`].
#[derive(Debug, Clone)]
pub struct SummaryBuilder {
    summary: RunSummary,
}

impl SummaryBuilder {
    pub fn new(settle_time: f64) -> Self {
        SummaryBuilder {
            summary: RunSummary {
                ticks: 0,
                final_time: 0.0,
                final_error: [0.0; SHAPE_DIM],
                settle_time,
                max_error_after_settle: [0.0; SHAPE_DIM],
                disconnected_ticks: 0,
                first_disconnect: None,
                final_active: 0,
            },
        }
    }

    pub fn push(&mut self, time: f64, error: &ShapeVector, active_count: usize, connected: bool) {
        let s = &mut self.summary;
        s.ticks += 1;
        s.final_time = time;
        s.final_error = *error;
        s.final_active = active_count;
        if time >= s.settle_time - 1e-9 {
            for k in 0..SHAPE_DIM {
                s.max_error_after_settle[k] = s.max_error_after_settle[k].max(error[k]);
            }
        }
        if !connected {
            s.disconnected_ticks += 1;
            s.first_disconnect.get_or_insert(time);
        }
    }

    pub fn finish(self) -> RunSummary {
        self.summary
    }
}

/// Stepwise simulation state. [`run_scenario`] drives it to the end.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: ScenarioConfig,
    params: PipelineParams,
    graph: CommGraph,
    agents: BTreeMap<RobotId, RobotAgent>,
    tick: usize,
    held_orientation: f64,
    connected: bool,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.pipeline_params();
        let graph = cfg.initial_graph()?;
        let connected = graph.is_connected()?;
        if !connected {
            log::warn!("initial communication graph is disconnected");
        }
        let agents = cfg.robots.iter().map(|&(id, s)| (id, RobotAgent::new(id, s, &params.robot))).collect();
        Ok(Simulation { cfg, params, graph, agents, tick: 0, held_orientation: 0.0, connected })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn agents(&self) -> &BTreeMap<RobotId, RobotAgent> {
        &self.agents
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.cfg.control_dt
    }

    pub fn finished(&self) -> bool {
        self.tick > self.cfg.tick_count()
    }

    /// Runs one control tick and returns its record. The state is advanced
    /// past the recorded instant, except on the last tick.
    pub fn step(&mut self) -> Result<TickRecord> {
        let t = self.time();
        self.tick_inner(t).map_err(|e| match e {
            e @ Error::AtTick { .. } => e,
            e => Error::AtTick { time: t, robot: None, source: Box::new(e) },
        })
    }

    fn tick_inner(&mut self, t: f64) -> Result<TickRecord> {
        let dt = self.cfg.control_dt;
        let eps = dt * 1e-6;
        let t_prev = if self.tick == 0 { f64::NEG_INFINITY } else { t - dt + eps };
        let outcome = apply_events(&self.graph, &self.cfg.events, t_prev, t + eps)?;
        if outcome.applied > 0 {
            self.graph = outcome.graph;
            self.connected = outcome.connected;
            for id in outcome.removed {
                if let Some(a) = self.agents.get_mut(&id) {
                    a.active = false;
                    a.last_input = ControlInput::default();
                }
            }
            for (id, s) in outcome.added {
                if self.agents.get(&id).is_some() {
                    return Err(Error::DuplicateRobot(id));
                }
                self.agents.insert(id, RobotAgent::new(id, s, &self.params.robot));
            }
        }

        let active: Vec<RobotId> = self.agents.values().filter(|a| a.active).map(|a| a.id).collect();
        let n = active.len();
        if n < 3 {
            return Err(Error::TooFewRobots { required: 3, found: n });
        }
        let points: Vec<OutputPoint> = active.iter().map(|id| self.agents[id].output(&self.params.robot)).collect();
        let truth = abstraction_map_with_hint(&points, &self.params.shape, self.held_orientation)?;
        self.held_orientation = truth.orientation;
        let (zeta, zeta_dot) = self.cfg.trajectory.eval(t);

        let sub_dt = dt / self.cfg.estimator_substeps as f64;
        for _ in 0..self.cfg.estimator_substeps {
            let published: BTreeMap<RobotId, Channels> =
                active.iter().map(|id| (*id, *self.agents[id].gamma())).collect();
            for id in &active {
                let neighbors = self.graph.neighbors(*id)?;
                let agent = self.agents.get_mut(id).expect("active agent");
                agent
                    .estimator_substep(&neighbors, &published, &self.params, sub_dt)
                    .map_err(|e| at(t, *id, e))?;
            }
        }

        for id in &active {
            let agent = self.agents.get_mut(id).expect("active agent");
            let estimate = agent.refresh_estimate(&self.params, n);
            let a_bar = if self.cfg.oracle_estimates { truth } else { estimate };
            agent.command(&a_bar, &zeta, &zeta_dot, n, &self.params, dt).map_err(|e| at(t, *id, e))?;
        }

        let robots = self
            .agents
            .values()
            .map(|a| RobotRecord {
                id: a.id,
                active: a.active,
                state: a.state,
                output: a.output(&self.params.robot),
                q_id: a.reference.q_id,
                input: if a.active { a.last_input } else { ControlInput::default() },
                gamma: *a.gamma(),
                estimate: a.estimate,
            })
            .collect();
        let record = TickRecord {
            tick: self.tick,
            time: t,
            robots,
            truth,
            zeta,
            zeta_dot,
            active_count: n,
            connected: self.connected,
        };

        if self.tick < self.cfg.tick_count() {
            for id in &active {
                let agent = self.agents.get_mut(id).expect("active agent");
                agent.state =
                    step_rk4(&agent.state, &agent.last_input, &self.params.robot, dt).map_err(|e| at(t, *id, e))?;
            }
        }
        self.tick += 1;
        Ok(record)
    }
}

fn at(time: f64, robot: RobotId, e: Error) -> Error {
    Error::AtTick { time, robot: Some(robot), source: Box::new(e) }
}

/// Runs the scenario to completion, streaming every tick to `sinks`.
pub fn run_scenario(cfg: &ScenarioConfig, sinks: &mut [&mut dyn RecordSink]) -> Result<RunSummary> {
    let mut sim = Simulation::new(cfg.clone())?;
    let mut summary = SummaryBuilder::new(DEFAULT_SETTLE_TIME);
    while !sim.finished() {
        let rec = sim.step()?;
        summary.push(rec.time, &rec.shape_error(), rec.active_count, rec.connected);
        for sink in sinks.iter_mut() {
            sink.consume(&rec)?;
        }
    }
    Ok(summary.finish())
}

/// The nine-robot winding-road scenario: a 3×3 grid with 2 m spacing, the
/// reference communication graph, and robot 2 failing at `t = 20 s`.
pub fn reference_scenario() -> ScenarioConfig {
    let mut robots = Vec::new();
    let mut id = 1;
    for x in [0.0, 2.0, 4.0] {
        for y in [0.0, 2.0, 4.0] {
            robots.push((id, RobotState::new(x, y, 0.0, 0.0)));
            id += 1;
        }
    }
    ScenarioConfig {
        robots,
        robot_params: RobotParams { wheelbase: 0.1, lookahead: 0.05 },
        gains: Gains { swarm: [2.5, 2.5, 3.0, 0.06, 0.08], tracking: [0.0008, 0.0008] },
        estimator: EstimatorParams { rho: 79.0, c: 2.0 },
        shape: ShapeConfig::default(),
        edges: crate::graph::reference_grid_graph().edges().collect(),
        events: alloc::vec![GraphEvent::new(20.0, crate::graph::EventKind::RemoveRobot(2))],
        trajectory: ReferenceTrajectory::WindingRoad(Default::default()),
        control_dt: 0.001,
        estimator_substeps: 1,
        duration: 60.0,
        oracle_estimates: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EventKind;
    use alloc::vec;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            robots: vec![
                (1, RobotState::new(0.0, 0.0, 0.0, 0.0)),
                (2, RobotState::new(0.0, 2.0, 0.0, 0.0)),
                (3, RobotState::new(2.0, 0.0, 0.0, 0.0)),
                (4, RobotState::new(2.0, 2.0, 0.0, 0.0)),
            ],
            robot_params: RobotParams::new(0.1, 0.05).unwrap(),
            gains: Gains::new([2.5, 2.5, 3.0, 0.06, 0.08], [0.0008, 0.0008]).unwrap(),
            estimator: EstimatorParams::new(79.0, 2.0).unwrap(),
            shape: ShapeConfig::default(),
            edges: vec![(1, 2), (2, 4), (4, 3), (3, 1)],
            events: vec![],
            trajectory: ReferenceTrajectory::Constant { value: [1.2, 1.0, 0.1, 1.4, 1.5], rate: [0.0; 5] },
            control_dt: 0.001,
            estimator_substeps: 1,
            duration: 0.05,
            oracle_estimates: true,
        }
    }

    #[test]
    fn records_every_tick() {
        let cfg = small_config();
        let mut recs: Vec<TickRecord> = Vec::new();
        let s = run_scenario(&cfg, &mut [&mut recs]).unwrap();
        assert_eq!(recs.len(), 51);
        assert_eq!(s.ticks, 51);
        assert!((s.final_time - 0.05).abs() < 1e-12);
        assert_eq!(recs[0].active_count, 4);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small_config();
        c.robots.truncate(2);
        c.edges = vec![(1, 2)];
        assert!(matches!(c.validate(), Err(Error::TooFewRobots { .. })));
        let mut c = small_config();
        c.control_dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.trajectory = ReferenceTrajectory::Constant { value: [0.0; 5], rate: [1.0, 0.0, 0.0, 0.0, 0.0] };
        assert!(c.validate().is_err());
    }

    #[test]
    fn removal_freezes_robot() {
        let mut c = small_config();
        c.robots.push((5, RobotState::new(1.0, 1.0, 0.0, 0.0)));
        c.edges.push((5, 1));
        c.events = vec![GraphEvent::new(0.02, EventKind::RemoveRobot(5))];
        let mut recs: Vec<TickRecord> = Vec::new();
        run_scenario(&c, &mut [&mut recs]).unwrap();
        let at_removal = recs.iter().position(|r| r.active_count == 4).unwrap();
        assert_eq!(at_removal, 20);
        let frozen = recs[at_removal].robots[4].state;
        assert!(recs[at_removal..].iter().all(|r| r.robots[4].state == frozen && !r.robots[4].active));
    }

    #[test]
    fn failing_event_reports_time() {
        let mut c = small_config();
        c.events = vec![GraphEvent::new(0.01, EventKind::RemoveLink(1, 4))];
        let err = run_scenario(&c, &mut []).unwrap_err();
        match err {
            Error::AtTick { time, source, .. } => {
                assert!((time - 0.01).abs() < 1e-9);
                assert!(matches!(*source, Error::InvalidEvent { index: 0, .. }));
            }
            other => panic!("{other:?}"),
        }
    }
}
