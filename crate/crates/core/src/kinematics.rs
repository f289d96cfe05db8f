//! Rear-wheel-drive car-like robot: kinematics, look-ahead output and the
//! decoupling matrix of its input-output linearization.

use core::f64::consts::FRAC_PI_2;

use libm::{cos, sin, tan};

use crate::error::{Error, Result};
use crate::math::{det2, mul2, wrap_pi, Mat2, Vec2};

/// Virtual (look-ahead) point position.
pub type OutputPoint = Vec2;

/// Pose and steering angle of one robot. Position is the rear-axle midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub steering: f64,
}

impl RobotState {
    pub const fn new(x: f64, y: f64, heading: f64, steering: f64) -> Self {
        RobotState { x, y, heading, steering }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.heading, self.steering]
    }

    fn from_array(a: [f64; 4]) -> Self {
        RobotState::new(a[0], a[1], a[2], a[3])
    }

    fn check_steering(&self) -> Result<()> {
        if self.steering.abs() < FRAC_PI_2 {
            Ok(())
        } else {
            Err(Error::SteeringSingularity { steering: self.steering })
        }
    }
}

/// Geometric parameters: wheelbase `L` and signed look-ahead distance `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    pub wheelbase: f64,
    pub lookahead: f64,
}

impl RobotParams {
    pub fn new(wheelbase: f64, lookahead: f64) -> Result<Self> {
        if !(wheelbase > 0.0) || !wheelbase.is_finite() {
            return Err(Error::InvalidParameter {
                name: "wheelbase",
                reason: alloc::format!("must be positive, got {wheelbase}"),
            });
        }
        if lookahead == 0.0 || !lookahead.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lookahead",
                reason: alloc::format!("must be nonzero and finite, got {lookahead}"),
            });
        }
        Ok(RobotParams { wheelbase, lookahead })
    }
}

/// `u = [v, ω]`: rear-wheel linear velocity and steering rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub linear_velocity: f64,
    pub steering_rate: f64,
}

impl ControlInput {
    pub const fn new(linear_velocity: f64, steering_rate: f64) -> Self {
        ControlInput { linear_velocity, steering_rate }
    }
}

/// Time derivative `[ẋ, ẏ, θ̇, φ̇]` of the robot state.
pub fn state_derivative(s: &RobotState, u: &ControlInput, p: &RobotParams) -> Result<[f64; 4]> {
    s.check_steering()?;
    let v = u.linear_velocity;
    Ok([
        v * cos(s.heading),
        v * sin(s.heading),
        v / p.wheelbase * tan(s.steering),
        u.steering_rate,
    ])
}

/// Position of the look-ahead point `D` beyond the front axle along the
/// steered wheel direction.
pub fn output_point(s: &RobotState, p: &RobotParams) -> OutputPoint {
    let th = s.heading;
    let psi = s.heading + s.steering;
    Vec2::new(
        s.x + p.wheelbase * cos(th) + p.lookahead * cos(psi),
        s.y + p.wheelbase * sin(th) + p.lookahead * sin(psi),
    )
}

/// Lie-derivative matrix mapping `u` to the output velocity. Its determinant
/// is `D / cos φ`.
pub fn decoupling_matrix(s: &RobotState, p: &RobotParams) -> Result<Mat2> {
    s.check_steering()?;
    let (l, d) = (p.wheelbase, p.lookahead);
    let th = s.heading;
    let psi = th + s.steering;
    let k = tan(s.steering) / l;
    let m = [
        [cos(th) - k * (l * sin(th) + d * sin(psi)), -d * sin(psi)],
        [sin(th) + k * (l * cos(th) + d * cos(psi)), d * cos(psi)],
    ];
    let det = det2(&m);
    if !(det.abs() > 1e-12) {
        return Err(Error::SingularDecoupling { det });
    }
    Ok(m)
}

/// `u = Δ⁻¹ · v̄`: the drift-free kinematics need no feedforward term.
pub fn apply_linearizing_feedback(s: &RobotState, p: &RobotParams, vbar: Vec2) -> Result<ControlInput> {
    let m = decoupling_matrix(s, p)?;
    let det = det2(&m);
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let u = mul2(&inv, vbar);
    Ok(ControlInput::new(u.x, u.y))
}

/// One classical Runge-Kutta step with `u` held over the interval. Heading
/// and steering are wrapped to `(-π, π]` afterwards.
pub fn step_rk4(s: &RobotState, u: &ControlInput, p: &RobotParams, dt: f64) -> Result<RobotState> {
    let x0 = s.as_array();
    let at = |k: &[f64; 4], h: f64| {
        let mut out = x0;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += h * ki;
        }
        RobotState::from_array(out)
    };
    let k1 = state_derivative(s, u, p)?;
    let k2 = state_derivative(&at(&k1, dt / 2.0), u, p)?;
    let k3 = state_derivative(&at(&k2, dt / 2.0), u, p)?;
    let k4 = state_derivative(&at(&k3, dt), u, p)?;
    let mut next = x0;
    for i in 0..4 {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut out = RobotState::from_array(next);
    out.check_steering()?;
    out.heading = wrap_pi(out.heading);
    out.steering = wrap_pi(out.steering);
    Ok(out)
}
