use std::collections::BTreeMap;

use proptest::prelude::*;
use swarmsim_core::consensus::*;
use swarmsim_core::graph::{reference_grid_graph, CommGraph, RobotId};
use swarmsim_core::math::Vec2;
use swarmsim_core::shape::{abstraction_map, ShapeConfig};

fn params() -> EstimatorParams {
    EstimatorParams::new(79.0, 2.0).unwrap()
}

fn grid_points() -> BTreeMap<RobotId, Vec2> {
    let mut m = BTreeMap::new();
    let mut id = 1;
    for x in [0.0, 2.0, 4.0] {
        for y in [0.0, 2.0, 4.0] {
            m.insert(id, Vec2::new(x, y));
            id += 1;
        }
    }
    m
}

fn init(signals: &BTreeMap<RobotId, LocalSignal>) -> BTreeMap<RobotId, EstimatorState> {
    signals.iter().map(|(&id, z)| (id, EstimatorState::new(z))).collect()
}

fn residual_sum(states: &BTreeMap<RobotId, EstimatorState>, signals: &BTreeMap<RobotId, LocalSignal>) -> [f64; CHANNELS] {
    let mut sum = [0.0; CHANNELS];
    for (id, s) in states {
        for k in 0..CHANNELS {
            sum[k] += s.gamma()[k] - signals[id].0[k];
        }
    }
    sum
}

#[test]
fn static_signals_converge_to_their_mean() {
    let g = reference_grid_graph();
    let pts = grid_points();
    let signals: BTreeMap<_, _> = pts.iter().map(|(&id, &q)| (id, local_signal(q, Vec2::new(2.0, 2.0), 0.0))).collect();
    let mut mean = [0.0; CHANNELS];
    for z in signals.values() {
        for k in 0..CHANNELS {
            mean[k] += z.0[k] / 9.0;
        }
    }
    let mut states = init(&signals);
    for _ in 0..5000 {
        estimator_step(&mut states, &g, &signals, &params(), 1e-3).unwrap();
    }
    for k in 0..CHANNELS {
        let (lo, hi) = signals.values().fold((f64::MAX, f64::MIN), |(l, h), z| (l.min(z.0[k]), h.max(z.0[k])));
        for s in states.values() {
            assert!((s.gamma()[k] - mean[k]).abs() <= 0.02 * (hi - lo) + 1e-12, "channel {k}");
        }
    }
}

#[test]
fn exact_channel_means_reproduce_the_abstraction_map() {
    let pts: Vec<Vec2> = [(0.0, 0.0), (3.0, 1.0), (5.0, 4.0), (1.0, 2.5), (4.0, 0.5), (2.0, 3.0)]
        .iter()
        .map(|&(x, y)| Vec2::new(x, y))
        .collect();
    let cfg = ShapeConfig::default();
    let a = abstraction_map(&pts, &cfg).unwrap();
    let mut mean = [0.0; CHANNELS];
    for q in &pts {
        let z = local_signal(*q, a.mu(), a.orientation);
        for k in 0..CHANNELS {
            mean[k] += z.0[k] / pts.len() as f64;
        }
    }
    let est = unbias_spread(assemble_estimate(&mean, &cfg, 0.0).shape, pts.len());
    for (x, y) in est.to_array().iter().zip(a.to_array()) {
        assert!((x - y).abs() < 1e-9, "{est:?} vs {a:?}");
    }
}

#[test]
fn removing_a_robot_keeps_residual_sums_balanced() {
    let mut g = reference_grid_graph();
    let pts = grid_points();
    let mut signals: BTreeMap<_, _> = pts.iter().map(|(&id, &q)| (id, local_signal(q, q, 0.0))).collect();
    let mut states = init(&signals);
    for _ in 0..200 {
        estimator_step(&mut states, &g, &signals, &params(), 1e-3).unwrap();
    }
    g.remove_vertex(2).unwrap();
    states.remove(&2);
    signals.remove(&2);
    for _ in 0..200 {
        estimator_step(&mut states, &g, &signals, &params(), 1e-3).unwrap();
        let sum = residual_sum(&states, &signals);
        assert!(sum.iter().all(|v| v.abs() < 1e-9), "{sum:?}");
    }
}

fn ring(n: u32, chords: &[(u32, u32)]) -> CommGraph {
    let mut edges: Vec<(u32, u32)> = (1..=n).map(|i| (i, i % n + 1)).collect();
    edges.extend_from_slice(chords);
    CommGraph::from_parts(1..=n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conservation_under_time_varying_signals(
        base in prop::collection::vec(prop::array::uniform6(-5.0..5.0f64), 6),
        rate in prop::collection::vec(prop::array::uniform6(-1.0..1.0f64), 6),
    ) {
        let g = ring(6, &[(1, 4), (2, 5)]);
        let signal = |t: f64| -> BTreeMap<RobotId, LocalSignal> {
            (0..6).map(|i| {
                let z = std::array::from_fn(|k| base[i][k] + rate[i][k] * (3.0 * t).sin());
                (i as RobotId + 1, LocalSignal(z))
            }).collect()
        };
        let mut z = signal(0.0);
        let mut states = init(&z);
        for step in 1..=500 {
            z = signal(step as f64 * 1e-3);
            estimator_step(&mut states, &g, &z, &params(), 1e-3).unwrap();
            let sum = residual_sum(&states, &z);
            prop_assert!(sum.iter().all(|v| v.abs() < 1e-9), "{:?}", sum);
        }
    }

    #[test]
    fn agreement_is_an_equilibrium(v in prop::array::uniform6(-10.0..10.0f64)) {
        // Robots that already agree on γ only re-read their local signal.
        let g = ring(4, &[]);
        let signals: BTreeMap<RobotId, LocalSignal> = (1..=4).map(|i| (i, LocalSignal(v))).collect();
        let mut states = init(&signals);
        estimator_step(&mut states, &g, &signals, &params(), 1e-3).unwrap();
        for s in states.values() {
            prop_assert_eq!(*s.gamma(), v);
            prop_assert!(s.edges().values().all(|e| e.plus == [0.0; CHANNELS] && e.minus == [0.0; CHANNELS]));
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tracking_stays_bounded(amp in 0.1..1.0f64, freq in 0.1..1.0f64) {
        let g = reference_grid_graph();
        let pts = grid_points();
        let mut states: Option<BTreeMap<RobotId, EstimatorState>> = None;
        let mut worst: f64 = 0.0;
        for step in 0..3000 {
            let t = step as f64 * 1e-3;
            let z: BTreeMap<RobotId, LocalSignal> = pts.iter().map(|(&id, q)| {
                let phase = id as f64;
                (id, LocalSignal([q.x + amp * (freq * t + phase).sin(), q.y, 0.0, 0.0, 0.0, 0.0]))
            }).collect();
            let st = states.get_or_insert_with(|| init(&z));
            estimator_step(st, &g, &z, &params(), 1e-3).unwrap();
            let mean = z.values().map(|s| s.0[0]).sum::<f64>() / 9.0;
            if t > 1.0 {
                worst = st.values().map(|s| (s.gamma()[0] - mean).abs()).fold(worst, f64::max);
            }
        }
        prop_assert!(worst < 0.05, "tracking error {}", worst);
    }
}
