//! Edge-based dynamic average consensus on six signal channels.
//!
//! Each robot tracks the swarm average of its local signal `z_i` using only
//! its neighbors' published estimates. Internal states live on edges:
//!
//! ```text
//! η̇⁺_ij = −ρ tanh(c (γ_i − γ_j))
//! η̇⁻_ij = −ρ tanh(c (γ_j − γ_i))
//! γ_i   = Σ_j η⁺_ij − Σ_j η⁻_ij + z_i
//! ```
//!
//! The channels form a cascade: mean (1, 2), orientation (3, 4) computed
//! about the robot's own mean estimate, and axis variances (5, 6) computed in
//! the robot's own estimated body frame.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;

use crate::error::{Error, Result};
use crate::graph::{CommGraph, RobotId};
use crate::kinematics::OutputPoint;
use crate::math::{wrap_half_pi, Vec2};
use crate::shape::{ShapeConfig, ShapeParams};

pub const CHANNELS: usize = 6;

pub type Channels = [f64; CHANNELS];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    pub rho: f64,
    pub c: f64,
}

impl EstimatorParams {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter { name: "rho", reason: format!("must be positive, got {rho}") });
        }
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::InvalidParameter { name: "c", reason: format!("must be at least 1, got {c}") });
        }
        Ok(EstimatorParams { rho, c })
    }
}

/// Local signal `z_i`: `[qx, qy, 2 dx dy, dx² − dy², p_x², p_y²]` with
/// `d = q − μ̄` and `p = R(θ̄)ᵀ d`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalSignal(pub Channels);

pub fn local_signal(q: OutputPoint, mu_est: Vec2, theta_est: f64) -> LocalSignal {
    let d = q - mu_est;
    let p = d.rotate_into(theta_est);
    LocalSignal([q.x, q.y, 2.0 * d.x * d.y, d.x * d.x - d.y * d.y, p.x * p.x, p.y * p.y])
}

/// Internal states a robot keeps for one incident edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdgeState {
    pub plus: Channels,
    pub minus: Channels,
}

/// One robot's estimator: its edge states and its published estimate `γ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    edges: BTreeMap<RobotId, EdgeState>,
    gamma: Channels,
}

impl EstimatorState {
    /// Zero internal state, so the estimate starts at the local signal.
    pub fn new(z: &LocalSignal) -> Self {
        EstimatorState { edges: BTreeMap::new(), gamma: z.0 }
    }

    pub fn gamma(&self) -> &Channels {
        &self.gamma
    }

    pub fn edges(&self) -> &BTreeMap<RobotId, EdgeState> {
        &self.edges
    }

    /// Drops states of edges that disappeared and opens zeroed states for new
    /// ones. The estimate is re-evaluated at the next step.
    pub fn sync_neighbors(&mut self, neighbors: &BTreeSet<RobotId>) {
        self.edges.retain(|j, _| neighbors.contains(j));
        for &j in neighbors {
            self.edges.entry(j).or_default();
        }
    }

    /// Advances the edge states by one explicit Euler step against the
    /// neighbors' previous estimates, then re-evaluates `γ_i` with `z`.
    pub fn step(
        &mut self,
        id: RobotId,
        neighbors: &BTreeSet<RobotId>,
        published: &BTreeMap<RobotId, Channels>,
        z: &LocalSignal,
        params: &EstimatorParams,
        dt: f64,
    ) -> Result<()> {
        self.sync_neighbors(neighbors);
        let own = self.gamma;
        for (&j, edge) in self.edges.iter_mut() {
            let other = published
                .get(&j)
                .ok_or(Error::MissingNeighborEstimate { robot: id, neighbor: j })?;
            for k in 0..CHANNELS {
                edge.plus[k] -= dt * params.rho * libm::tanh(params.c * (own[k] - other[k]));
                edge.minus[k] -= dt * params.rho * libm::tanh(params.c * (other[k] - own[k]));
            }
        }
        let mut gamma = z.0;
        for edge in self.edges.values() {
            for k in 0..CHANNELS {
                gamma[k] += edge.plus[k] - edge.minus[k];
            }
        }
        self.gamma = gamma;
        Ok(())
    }
}

/// One synchronous estimator step for every robot in `states`: all robots read
/// the estimates published before the step.
pub fn estimator_step(
    states: &mut BTreeMap<RobotId, EstimatorState>,
    graph: &CommGraph,
    signals: &BTreeMap<RobotId, LocalSignal>,
    params: &EstimatorParams,
    dt: f64,
) -> Result<()> {
    let published: BTreeMap<RobotId, Channels> = states.iter().map(|(&id, s)| (id, s.gamma)).collect();
    for (&id, state) in states.iter_mut() {
        let neighbors = graph.neighbors(id)?;
        let z = signals.get(&id).ok_or(Error::UnknownRobot(id))?;
        state.step(id, &neighbors, &published, z, params, dt)?;
    }
    Ok(())
}

/// Orientation implied by channels 3 and 4; `held` when their magnitude is
/// below `isotropy_tolerance`. Returns `(θ̄, isotropic)`.
pub fn orientation_from_channels(gamma: &Channels, held: f64, isotropy_tolerance: f64) -> (f64, bool) {
    if libm::hypot(gamma[2], gamma[3]) < isotropy_tolerance {
        (wrap_half_pi(held), true)
    } else {
        (wrap_half_pi(0.5 * libm::atan2(gamma[2], gamma[3])), false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assembled {
    pub shape: ShapeParams,
    /// A variance channel was negative and has been clamped to zero.
    pub clamped: bool,
    /// The orientation channels carried no usable direction.
    pub isotropic: bool,
}

/// Reads a shape estimate out of the channel estimates. Variances are the raw
/// channel means (`1/N` divisor); see [`unbias_spread`].
pub fn assemble_estimate(gamma: &Channels, cfg: &ShapeConfig, held_orientation: f64) -> Assembled {
    let (mut theta, isotropic) = orientation_from_channels(gamma, held_orientation, cfg.isotropy_tolerance);
    let clamped = gamma[4] < 0.0 || gamma[5] < 0.0;
    if clamped {
        log::debug!("negative variance estimate clamped (s1 = {}, s2 = {})", gamma[4], gamma[5]);
    }
    let mut s1 = gamma[4].max(0.0);
    let mut s2 = gamma[5].max(0.0);
    if s2 > s1 && !isotropic {
        core::mem::swap(&mut s1, &mut s2);
        theta = wrap_half_pi(theta + core::f64::consts::FRAC_PI_2);
    }
    Assembled {
        shape: ShapeParams { mu_x: gamma[0], mu_y: gamma[1], orientation: theta, s2, s1 },
        clamped,
        isotropic,
    }
}

/// Rescales channel-mean variances to the `1/(N-1)` sample-variance convention.
pub fn unbias_spread(a: ShapeParams, swarm_size: usize) -> ShapeParams {
    if swarm_size < 2 {
        return a;
    }
    let k = swarm_size as f64 / (swarm_size - 1) as f64;
    ShapeParams { s1: a.s1 * k, s2: a.s2 * k, ..a }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::FRAC_PI_4;

    #[test]
    fn local_signal_examples() {
        let z = local_signal(Vec2::new(2.0, 2.0), Vec2::new(2.0, 2.0), 0.9);
        assert_eq!(z.0, [2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let z = local_signal(Vec2::new(3.0, 2.0), Vec2::new(2.0, 2.0), 0.0);
        assert_eq!(z.0, [3.0, 2.0, 0.0, 1.0, 1.0, 0.0]);
        let z = local_signal(Vec2::new(3.0, 3.0), Vec2::new(2.0, 2.0), 0.0);
        assert_eq!(z.0, [3.0, 3.0, 2.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn params_validation() {
        assert!(EstimatorParams::new(79.0, 2.0).is_ok());
        assert!(EstimatorParams::new(79.0, 0.5).is_err());
        assert!(EstimatorParams::new(0.0, 2.0).is_err());
    }

    #[test]
    fn zero_state_outputs_signal() {
        let z = LocalSignal([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let st = EstimatorState::new(&z);
        assert_eq!(st.gamma(), &z.0);

        // isolated robot: step leaves γ = z
        let mut st = EstimatorState::new(&z);
        st.step(1, &BTreeSet::new(), &BTreeMap::new(), &z, &EstimatorParams::new(79.0, 2.0).unwrap(), 0.001)
            .unwrap();
        assert_eq!(st.gamma(), &z.0);
    }

    #[test]
    fn agreement_is_a_fixed_point() {
        let g = CommGraph::from_parts([1, 2, 3], [(1, 2), (2, 3)]).unwrap();
        let z = LocalSignal([0.5; CHANNELS]);
        let mut states: BTreeMap<_, _> = (1..=3).map(|i| (i, EstimatorState::new(&z))).collect();
        let signals: BTreeMap<_, _> = (1..=3).map(|i| (i, z)).collect();
        let before = states.clone();
        estimator_step(&mut states, &g, &signals, &EstimatorParams::new(79.0, 2.0).unwrap(), 0.001).unwrap();
        for i in 1..=3 {
            assert_eq!(states[&i].gamma(), before[&i].gamma());
            assert!(states[&i].edges().values().all(|e| e.plus == [0.0; CHANNELS] && e.minus == [0.0; CHANNELS]));
        }
    }

    #[test]
    fn two_robot_average() {
        let g = CommGraph::from_parts([1, 2], [(1, 2)]).unwrap();
        let mut z2 = [0.0; CHANNELS];
        z2[0] = 2.0;
        let signals: BTreeMap<_, _> = [(1, LocalSignal([0.0; CHANNELS])), (2, LocalSignal(z2))].into_iter().collect();
        let mut states: BTreeMap<_, _> = signals.iter().map(|(&i, z)| (i, EstimatorState::new(z))).collect();
        let params = EstimatorParams::new(79.0, 2.0).unwrap();
        for _ in 0..1000 {
            estimator_step(&mut states, &g, &signals, &params, 0.001).unwrap();
        }
        for st in states.values() {
            assert!((st.gamma()[0] - 1.0).abs() < 0.01, "{:?}", st.gamma());
        }
    }

    #[test]
    fn missing_neighbor_estimate_is_an_error() {
        let z = LocalSignal::default();
        let mut st = EstimatorState::new(&z);
        let nbrs: BTreeSet<_> = [7].into_iter().collect();
        let err = st.step(1, &nbrs, &BTreeMap::new(), &z, &EstimatorParams::new(1.0, 1.0).unwrap(), 0.01);
        assert_eq!(err, Err(Error::MissingNeighborEstimate { robot: 1, neighbor: 7 }));
    }

    #[test]
    fn dropped_edge_states_disappear() {
        let z = LocalSignal::default();
        let mut st = EstimatorState::new(&z);
        st.sync_neighbors(&[2, 3].into_iter().collect());
        assert_eq!(st.edges().keys().copied().collect::<Vec<_>>(), [2, 3]);
        st.sync_neighbors(&[3, 4].into_iter().collect());
        assert_eq!(st.edges().keys().copied().collect::<Vec<_>>(), [3, 4]);
        assert_eq!(st.edges()[&4], EdgeState::default());
    }

    #[test]
    fn assemble_examples() {
        let cfg = ShapeConfig::default();
        let a = assemble_estimate(&[2.0, 2.0, 0.0, 0.0, 3.0, 3.0], &cfg, 0.25);
        assert!(a.isotropic);
        assert_eq!(a.shape, ShapeParams { mu_x: 2.0, mu_y: 2.0, orientation: 0.25, s2: 3.0, s1: 3.0 });

        let a = assemble_estimate(&[0.0, 0.0, 0.0, 1.0, 2.0, 1.0], &cfg, 0.0);
        assert_eq!(a.shape.orientation, 0.0);
        let a = assemble_estimate(&[0.0, 0.0, 1.0, 0.0, 2.0, 1.0], &cfg, 0.0);
        assert!((a.shape.orientation - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn assemble_clamps_and_orders_axes() {
        let cfg = ShapeConfig::default();
        let a = assemble_estimate(&[0.0, 0.0, 0.0, 1.0, -0.5, 1.0], &cfg, 0.0);
        assert!(a.clamped);
        assert_eq!((a.shape.s1, a.shape.s2), (1.0, 0.0));
        assert!((a.shape.orientation - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn spread_correction() {
        let a = ShapeParams { s1: 8.0 / 3.0, s2: 8.0 / 3.0, ..Default::default() };
        let b = unbias_spread(a, 9);
        assert!((b.s1 - 3.0).abs() < 1e-15 && (b.s2 - 3.0).abs() < 1e-15);
    }
}
