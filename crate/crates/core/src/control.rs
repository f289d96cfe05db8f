//! Swarm-level shape control, per-robot reference generation and the
//! low-level output tracking law, composed into one per-robot pipeline.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;

use crate::consensus::{
    assemble_estimate, local_signal, orientation_from_channels, unbias_spread, Channels, EstimatorParams,
    EstimatorState, LocalSignal,
};
use crate::error::{Error, Result};
use crate::graph::{CommGraph, RobotId};
use crate::kinematics::{apply_linearizing_feedback, output_point, ControlInput, OutputPoint, RobotParams, RobotState};
use crate::math::{wrap_half_pi, Vec2};
use crate::shape::{idx, pseudoinverse_block, ShapeConfig, ShapeParams, SHAPE_DIM};
use crate::trajectory::ShapeVector;

/// Diagonal gains of the swarm law (`K̄`) and of the tracking law (`Ǩ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub swarm: [f64; SHAPE_DIM],
    pub tracking: [f64; 2],
}

impl Gains {
    pub fn new(swarm: [f64; SHAPE_DIM], tracking: [f64; 2]) -> Result<Self> {
        if swarm.iter().chain(tracking.iter()).any(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gains",
                reason: format!("all gains must be positive, got {swarm:?} / {tracking:?}"),
            });
        }
        Ok(Gains { swarm, tracking })
    }
}

/// `w = K̄ (ζ − ā) + ζ̇`, with the orientation error taken modulo π.
pub fn swarm_control(zeta: &ShapeVector, zeta_dot: &ShapeVector, a_bar: &ShapeParams, gains: &Gains) -> ShapeVector {
    let a = a_bar.to_array();
    core::array::from_fn(|k| {
        let mut err = zeta[k] - a[k];
        if k == idx::THETA {
            err = wrap_half_pi(err);
        }
        gains.swarm[k] * err + zeta_dot[k]
    })
}

/// Desired velocity of robot `i`'s virtual point: `βi · w`.
pub fn reference_rate(
    q_i: OutputPoint,
    a_bar: &ShapeParams,
    swarm_size: usize,
    w: &ShapeVector,
    cfg: &ShapeConfig,
) -> Result<Vec2> {
    let beta = pseudoinverse_block(q_i, a_bar, swarm_size, cfg)?;
    let dot = |row: &[f64; SHAPE_DIM]| row.iter().zip(w).map(|(b, w)| b * w).sum::<f64>();
    Ok(Vec2::new(dot(&beta[0]), dot(&beta[1])))
}

/// Integrated desired position of a robot's virtual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotReference {
    pub q_id: Vec2,
}

impl RobotReference {
    /// Starts at the robot's planar (rear-axle) position.
    pub fn from_state(s: &RobotState) -> Self {
        RobotReference { q_id: s.position() }
    }
}

pub fn integrate_reference(r: &RobotReference, rate: Vec2, dt: f64) -> RobotReference {
    RobotReference { q_id: r.q_id + rate * dt }
}

/// `v̄ = q̇_id + Ǩ (q_id − q)`.
pub fn tracking_control(q_i: OutputPoint, r: &RobotReference, ref_rate: Vec2, gains: &Gains) -> Vec2 {
    let e = r.q_id - q_i;
    ref_rate + Vec2::new(gains.tracking[0] * e.x, gains.tracking[1] * e.y)
}

/// Everything a robot needs to know besides its own state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub robot: RobotParams,
    pub gains: Gains,
    pub estimator: EstimatorParams,
    pub shape: ShapeConfig,
}

/// One robot's local state bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotAgent {
    pub id: RobotId,
    pub state: RobotState,
    pub reference: RobotReference,
    pub estimator: EstimatorState,
    /// Latest assembled (and bias-corrected) shape estimate.
    pub estimate: ShapeParams,
    pub last_input: ControlInput,
    pub active: bool,
    held_orientation: f64,
}

impl RobotAgent {
    pub fn new(id: RobotId, state: RobotState, params: &RobotParams) -> Self {
        let q = output_point(&state, params);
        let z = local_signal(q, q, 0.0);
        RobotAgent {
            id,
            state,
            reference: RobotReference::from_state(&state),
            estimator: EstimatorState::new(&z),
            estimate: ShapeParams { mu_x: q.x, mu_y: q.y, ..Default::default() },
            last_input: ControlInput::default(),
            active: true,
            held_orientation: 0.0,
        }
    }

    pub fn output(&self, params: &RobotParams) -> OutputPoint {
        output_point(&self.state, params)
    }

    pub fn gamma(&self) -> &Channels {
        self.estimator.gamma()
    }

    /// Local signal built from this robot's own mean and orientation estimates.
    pub fn local_signal(&self, params: &PipelineParams) -> LocalSignal {
        let g = self.estimator.gamma();
        let (theta, _) = orientation_from_channels(g, self.held_orientation, params.shape.isotropy_tolerance);
        local_signal(self.output(&params.robot), Vec2::new(g[0], g[1]), theta)
    }

    /// One estimator step against the neighbors' previously published estimates.
    pub fn estimator_substep(
        &mut self,
        neighbors: &BTreeSet<RobotId>,
        published: &BTreeMap<RobotId, Channels>,
        params: &PipelineParams,
        dt: f64,
    ) -> Result<()> {
        let z = self.local_signal(params);
        self.estimator.step(self.id, neighbors, published, &z, &params.estimator, dt)
    }

    /// Reads the shape estimate out of the current channel estimates.
    pub fn refresh_estimate(&mut self, params: &PipelineParams, swarm_size: usize) -> ShapeParams {
        let g = *self.estimator.gamma();
        let (theta, isotropic) = orientation_from_channels(&g, self.held_orientation, params.shape.isotropy_tolerance);
        if !isotropic {
            self.held_orientation = theta;
        }
        let assembled = assemble_estimate(&g, &params.shape, self.held_orientation);
        self.estimate = unbias_spread(assembled.shape, swarm_size);
        self.estimate
    }

    /// Swarm law → reference rate → tracking law → linearizing feedback,
    /// using `a_bar` as the shape feedback. Advances the reference by `dt`.
    pub fn command(
        &mut self,
        a_bar: &ShapeParams,
        zeta: &ShapeVector,
        zeta_dot: &ShapeVector,
        swarm_size: usize,
        params: &PipelineParams,
        dt: f64,
    ) -> Result<ControlInput> {
        let q = self.output(&params.robot);
        let w = swarm_control(zeta, zeta_dot, a_bar, &params.gains);
        let rate = match reference_rate(q, a_bar, swarm_size, &w, &params.shape) {
            Err(Error::DegenerateGram { index, value }) => {
                log::debug!("robot {}: degenerate shape estimate (entry {index} = {value}), holding reference", self.id);
                Vec2::ZERO
            }
            r => r?,
        };
        let vbar = tracking_control(q, &self.reference, rate, &params.gains);
        let u = apply_linearizing_feedback(&self.state, &params.robot, vbar)?;
        self.reference = integrate_reference(&self.reference, rate, dt);
        self.last_input = u;
        Ok(u)
    }
}

/// Full per-robot tick with a single estimator step of length `dt`:
/// estimate → swarm law → reference → tracking → actuator command.
#[allow(clippy::too_many_arguments)]
pub fn robot_pipeline_tick(
    agent: &mut RobotAgent,
    graph: &CommGraph,
    published: &BTreeMap<RobotId, Channels>,
    zeta: &ShapeVector,
    zeta_dot: &ShapeVector,
    swarm_size: usize,
    params: &PipelineParams,
    dt: f64,
) -> Result<ControlInput> {
    let neighbors = graph.neighbors(agent.id)?;
    agent.estimator_substep(&neighbors, published, params, dt)?;
    let a_bar = agent.refresh_estimate(params, swarm_size);
    agent.command(&a_bar, zeta, zeta_dot, swarm_size, params, dt)
}
