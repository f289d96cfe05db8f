//! Desired abstract-shape trajectories `ζ(t)` with their time derivatives.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::shape::SHAPE_DIM;

pub type ShapeVector = [f64; SHAPE_DIM];

/// Sinusoidal road: the centroid advances along x while weaving in y, the
/// orientation follows the path tangent, and the variances stay fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingRoad {
    pub x_offset: f64,
    pub speed: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub heading_gain: f64,
    pub s2: f64,
    pub s1: f64,
}

impl Default for WindingRoad {
    fn default() -> Self {
        WindingRoad {
            x_offset: 4.0,
            speed: 1.0,
            amplitude: 10.0,
            frequency: 0.2,
            heading_gain: 2.0,
            s2: 10.513,
            s1: 13.57,
        }
    }
}

impl WindingRoad {
    pub fn eval(&self, t: f64) -> (ShapeVector, ShapeVector) {
        let (s, c) = libm::sincos(self.frequency * t);
        let g = self.heading_gain;
        let zeta = [self.x_offset + self.speed * t, self.amplitude * s, libm::atan(g * c), self.s2, self.s1];
        let zeta_dot = [
            self.speed,
            self.amplitude * self.frequency * c,
            -g * self.frequency * s / (g * g * c * c + 1.0),
            0.0,
            0.0,
        ];
        (zeta, zeta_dot)
    }
}

/// `ζ(t)` and `ζ̇(t)` of the default winding road.
pub fn winding_road(t: f64) -> (ShapeVector, ShapeVector) {
    WindingRoad::default().eval(t)
}

/// Cubic Hermite interpolation through knots with prescribed rates; linear
/// extrapolation with the end rates outside the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointTable {
    times: Vec<f64>,
    values: Vec<ShapeVector>,
    rates: Vec<ShapeVector>,
}

impl WaypointTable {
    pub fn new(times: Vec<f64>, values: Vec<ShapeVector>, rates: Vec<ShapeVector>) -> Result<Self> {
        let bad = |reason: alloc::string::String| Err(Error::InvalidParameter { name: "waypoints", reason });
        if times.is_empty() {
            return bad("at least one waypoint is required".into());
        }
        if values.len() != times.len() || rates.len() != times.len() {
            return bad(format!(
                "{} times, {} values and {} rates must have equal length",
                times.len(),
                values.len(),
                rates.len()
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("times must be strictly increasing".into());
        }
        Ok(WaypointTable { times, values, rates })
    }

    pub fn eval(&self, t: f64) -> (ShapeVector, ShapeVector) {
        let n = self.times.len();
        if t <= self.times[0] || n == 1 {
            let (t0, v, r) = (self.times[0], self.values[0], self.rates[0]);
            let t = if n == 1 { t } else { t.min(t0) };
            return (core::array::from_fn(|k| v[k] + r[k] * (t - t0)), r);
        }
        if t >= self.times[n - 1] {
            let (t1, v, r) = (self.times[n - 1], self.values[n - 1], self.rates[n - 1]);
            return (core::array::from_fn(|k| v[k] + r[k] * (t - t1)), r);
        }
        let i = self.times.partition_point(|&ti| ti <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
        let (p0, p1, m0, m1) = (&self.values[i], &self.values[i + 1], &self.rates[i], &self.rates[i + 1]);
        let val = core::array::from_fn(|k| h00 * p0[k] + h10 * h * m0[k] + h01 * p1[k] + h11 * h * m1[k]);
        let der = core::array::from_fn(|k| (d00 * p0[k] + d01 * p1[k]) / h + d10 * m0[k] + d11 * m1[k]);
        (val, der)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceTrajectory {
    WindingRoad(WindingRoad),
    /// Constant `value`; `rate` is the derivative announced to the robots and
    /// must be zero to pass [`ReferenceTrajectory::check_derivative`].
    Constant { value: ShapeVector, rate: ShapeVector },
    Waypoints(WaypointTable),
}

impl ReferenceTrajectory {
    pub fn eval(&self, t: f64) -> (ShapeVector, ShapeVector) {
        match self {
            ReferenceTrajectory::WindingRoad(w) => w.eval(t),
            ReferenceTrajectory::Constant { value, rate } => (*value, *rate),
            ReferenceTrajectory::Waypoints(w) => w.eval(t),
        }
    }

    /// Compares `ζ̇` with central differences of `ζ` at `samples` evenly
    /// spaced times in `[t0, t1]`. Waypoint tables are exact by construction
    /// and are not sampled.
    pub fn check_derivative(&self, t0: f64, t1: f64, samples: usize) -> Result<()> {
        if matches!(self, ReferenceTrajectory::Waypoints(_)) {
            return Ok(());
        }
        const STEP: f64 = 1e-6;
        const REL_TOL: f64 = 1e-6;
        let samples = samples.max(2);
        for i in 0..samples {
            let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
            let (_, rate) = self.eval(t);
            let (hi, _) = self.eval(t + STEP);
            let (lo, _) = self.eval(t - STEP);
            for k in 0..SHAPE_DIM {
                let fd = (hi[k] - lo[k]) / (2.0 * STEP);
                if (fd - rate[k]).abs() > REL_TOL * rate[k].abs().max(1.0) {
                    return Err(Error::InvalidParameter {
                        name: "trajectory",
                        reason: format!(
                            "derivative of component {k} at t={t} is {} but finite differences give {fd}",
                            rate[k]
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn winding_road_at_start() {
        let (z, zd) = winding_road(0.0);
        assert_eq!(z[0], 4.0);
        assert_eq!(z[1], 0.0);
        assert!((z[2] - 1.10715).abs() < 1e-5);
        assert_eq!((z[3], z[4]), (10.513, 13.57));
        assert_eq!(zd, [1.0, 2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn winding_road_half_period() {
        let (z, _) = winding_road(5.0 * PI);
        assert!(z[1].abs() < 1e-12);
        assert!((z[2] + 1.10715).abs() < 1e-5);
    }

    #[test]
    fn winding_road_derivative_matches_differences() {
        ReferenceTrajectory::WindingRoad(WindingRoad::default()).check_derivative(0.0, 60.0, 100).unwrap();
    }

    #[test]
    fn constant_with_nonzero_rate_is_rejected() {
        let ok = ReferenceTrajectory::Constant { value: [1.0; 5], rate: [0.0; 5] };
        ok.check_derivative(0.0, 10.0, 100).unwrap();
        let bad = ReferenceTrajectory::Constant { value: [1.0; 5], rate: [0.0, 0.5, 0.0, 0.0, 0.0] };
        assert!(bad.check_derivative(0.0, 10.0, 100).is_err());
    }

    #[test]
    fn hermite_hits_knots_and_rates() {
        let w = WaypointTable::new(
            vec![0.0, 2.0, 5.0],
            vec![[0.0; 5], [1.0, 2.0, 0.1, 3.0, 4.0], [2.0, 0.0, 0.0, 3.0, 5.0]],
            vec![[0.5; 5], [0.0; 5], [1.0, 0.0, 0.0, 0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(w.eval(2.0).0, [1.0, 2.0, 0.1, 3.0, 4.0]);
        assert_eq!(w.eval(2.0).1, [0.0; 5]);
        let (v, r) = w.eval(7.0);
        assert_eq!(v[0], 4.0);
        assert_eq!(r[0], 1.0);
        // interior derivative against central differences
        for t in [0.3, 1.7, 3.1, 4.9] {
            let h = 1e-6;
            let fd: [f64; 5] = core::array::from_fn(|k| (w.eval(t + h).0[k] - w.eval(t - h).0[k]) / (2.0 * h));
            for k in 0..5 {
                assert!((fd[k] - w.eval(t).1[k]).abs() < 1e-6);
            }
        }
        assert!(WaypointTable::new(vec![1.0, 1.0], vec![[0.0; 5]; 2], vec![[0.0; 5]; 2]).is_err());
    }
}
