//! Abstract-shape description of a swarm.
//!
//! The swarm is summarized by `a = [μx, μy, θ, s2, s1]`: the centroid of the
//! virtual points, the orientation of the body frame, and the sample variances
//! along the body y (minor) and body x (major) axes. The body frame is the
//! principal frame of the sample covariance, so `s1 >= s2` always holds.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::kinematics::OutputPoint;
use crate::math::{wrap_half_pi, Vec2};

/// Default coverage factor: a 4 m × 4 m nine-robot grid (`s1 = s2 = 3`) is
/// circumscribed by a circle of radius 3.6091 m.
pub const DEFAULT_COVERAGE_FACTOR: f64 = 3.6091 * 3.6091 / 3.0;

/// Default eigenvalue gap (m²) below which the swarm counts as isotropic.
pub const DEFAULT_ISOTROPY_TOLERANCE: f64 = 1e-6;

/// Smallest admissible Gram-matrix diagonal entry.
pub const GRAM_TOLERANCE: f64 = 1e-12;

pub const SHAPE_DIM: usize = 5;

/// Index of each component in the shape vector.
pub mod idx {
    pub const MU_X: usize = 0;
    pub const MU_Y: usize = 1;
    pub const THETA: usize = 2;
    pub const S2: usize = 3;
    pub const S1: usize = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShapeParams {
    pub mu_x: f64,
    pub mu_y: f64,
    /// Major-axis orientation in `(-π/2, π/2]`.
    pub orientation: f64,
    /// Variance along the body y-axis (m²).
    pub s2: f64,
    /// Variance along the body x-axis (m²).
    pub s1: f64,
}

impl ShapeParams {
    pub fn from_array(a: [f64; SHAPE_DIM]) -> Self {
        ShapeParams { mu_x: a[0], mu_y: a[1], orientation: a[2], s2: a[3], s1: a[4] }
    }

    pub fn to_array(&self) -> [f64; SHAPE_DIM] {
        [self.mu_x, self.mu_y, self.orientation, self.s2, self.s1]
    }

    pub fn mu(&self) -> Vec2 {
        Vec2::new(self.mu_x, self.mu_y)
    }

    /// Unit vector along the body x (major) axis.
    pub fn major_axis(&self) -> Vec2 {
        Vec2::from_angle(self.orientation)
    }

    /// Unit vector along the body y (minor) axis.
    pub fn minor_axis(&self) -> Vec2 {
        Vec2::from_angle(self.orientation + FRAC_PI_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeConfig {
    /// `c_p = -2 ln(1 - p)` for coverage fraction `p`.
    pub coverage_factor: f64,
    pub exponent_m: f64,
    pub exponent_n: f64,
    pub isotropy_tolerance: f64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            coverage_factor: DEFAULT_COVERAGE_FACTOR,
            exponent_m: 2.0,
            exponent_n: 2.0,
            isotropy_tolerance: DEFAULT_ISOTROPY_TOLERANCE,
        }
    }
}

impl ShapeConfig {
    pub fn from_coverage(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter {
                name: "coverage",
                reason: alloc::format!("must lie in (0, 1), got {p}"),
            });
        }
        Ok(ShapeConfig { coverage_factor: -2.0 * libm::log(1.0 - p), ..Default::default() })
    }

    /// Coverage fraction implied by the coverage factor.
    pub fn coverage(&self) -> f64 {
        1.0 - libm::exp(-self.coverage_factor / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if !(self.coverage_factor > 0.0) || !self.coverage_factor.is_finite() {
            return bad("coverage_factor", "must be positive");
        }
        if !(self.exponent_m >= 2.0) || !(self.exponent_n >= 2.0) {
            return bad("superellipse exponent", "must be at least 2");
        }
        if !(self.isotropy_tolerance >= 0.0) {
            return bad("isotropy_tolerance", "must be non-negative");
        }
        Ok(())
    }
}

/// Entries of a symmetric 2×2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Covariance2 {
    pub sxx: f64,
    pub sxy: f64,
    pub syy: f64,
}

impl Covariance2 {
    /// Difference between the two eigenvalues.
    pub fn eigen_gap(&self) -> f64 {
        libm::hypot(self.sxx - self.syy, 2.0 * self.sxy)
    }

    /// Angle of the major eigenvector in `(-π/2, π/2]`.
    pub fn principal_angle(&self) -> f64 {
        wrap_half_pi(0.5 * libm::atan2(2.0 * self.sxy, self.sxx - self.syy))
    }

    /// `R(θ)ᵀ Σ R(θ)` as `(s1, s12, s2)`.
    pub fn rotated(&self, theta: f64) -> (f64, f64, f64) {
        let (s, c) = libm::sincos(theta);
        let s1 = c * c * self.sxx + 2.0 * c * s * self.sxy + s * s * self.syy;
        let s2 = s * s * self.sxx - 2.0 * c * s * self.sxy + c * c * self.syy;
        let s12 = (self.syy - self.sxx) * c * s + self.sxy * (c * c - s * s);
        (s1, s12, s2)
    }

    pub fn is_psd(&self) -> bool {
        self.sxx >= 0.0 && self.syy >= 0.0 && self.sxx * self.syy - self.sxy * self.sxy >= -1e-12
    }
}

fn sorted(points: &[OutputPoint]) -> Vec<OutputPoint> {
    let mut v = points.to_vec();
    v.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v
}

fn mean_of_sorted(points: &[OutputPoint]) -> Vec2 {
    let mut sum = Vec2::ZERO;
    for p in points {
        sum += *p;
    }
    sum * (1.0 / points.len() as f64)
}

/// Arithmetic mean of the points. Summation runs in a canonical order, so the
/// result does not depend on the order of `points`.
pub fn centroid(points: &[OutputPoint]) -> Result<Vec2> {
    if points.is_empty() {
        return Err(Error::TooFewRobots { required: 1, found: 0 });
    }
    Ok(mean_of_sorted(&sorted(points)))
}

/// Sample covariance about `mu` with the `1/(N-1)` normalization.
pub fn covariance(points: &[OutputPoint], mu: Vec2) -> Result<Covariance2> {
    if points.len() < 2 {
        return Err(Error::TooFewRobots { required: 2, found: points.len() });
    }
    let mut cov = Covariance2::default();
    for p in sorted(points) {
        let d = p - mu;
        cov.sxx += d.x * d.x;
        cov.sxy += d.x * d.y;
        cov.syy += d.y * d.y;
    }
    let k = 1.0 / (points.len() - 1) as f64;
    Ok(Covariance2 { sxx: cov.sxx * k, sxy: cov.sxy * k, syy: cov.syy * k })
}

/// `R(θ)ᵀ (q − μ)`: position of a point in the shape's body frame.
pub fn body_coords(point: OutputPoint, a: &ShapeParams) -> Vec2 {
    (point - a.mu()).rotate_into(a.orientation)
}

/// The abstraction map `Φ(q)`. For an isotropic swarm the orientation is
/// undefined and 0 is used; see [`abstraction_map_with_hint`].
pub fn abstraction_map(points: &[OutputPoint], cfg: &ShapeConfig) -> Result<ShapeParams> {
    abstraction_map_with_hint(points, cfg, 0.0)
}

/// The abstraction map, holding the orientation at `held_orientation` when the
/// covariance eigenvalue gap is below the isotropy tolerance.
pub fn abstraction_map_with_hint(
    points: &[OutputPoint],
    cfg: &ShapeConfig,
    held_orientation: f64,
) -> Result<ShapeParams> {
    if points.len() < 3 {
        return Err(Error::TooFewRobots { required: 3, found: points.len() });
    }
    let pts = sorted(points);
    let mu = mean_of_sorted(&pts);
    let cov = covariance(&pts, mu)?;
    let theta = if cov.eigen_gap() < cfg.isotropy_tolerance {
        wrap_half_pi(held_orientation)
    } else {
        cov.principal_angle()
    };
    let (s1, _, s2) = cov.rotated(theta);
    Ok(ShapeParams { mu_x: mu.x, mu_y: mu.y, orientation: theta, s2: s2.max(0.0), s1: s1.max(0.0) })
}

/// Minor and major semi-axis lengths `(s_w, s_l) = (√(c_p s2), √(c_p s1))`.
pub fn axes_lengths(a: &ShapeParams, cfg: &ShapeConfig) -> (f64, f64) {
    let c = cfg.coverage_factor;
    (libm::sqrt(c * a.s2.max(0.0)), libm::sqrt(c * a.s1.max(0.0)))
}

/// Superellipse level set in body coordinates: the body x-axis pairs with the
/// major length `s_l`, the body y-axis with `s_w`.
pub fn superellipse_value(point: OutputPoint, a: &ShapeParams, cfg: &ShapeConfig) -> Result<f64> {
    let (sw, sl) = axes_lengths(a, cfg);
    if !(sw > 0.0 && sl > 0.0) {
        return Err(Error::ZeroAxisLength);
    }
    let p = body_coords(point, a);
    Ok(libm::pow((p.x / sl).abs(), cfg.exponent_m) + libm::pow((p.y / sw).abs(), cfg.exponent_n))
}

pub fn superellipse_contains(point: OutputPoint, a: &ShapeParams, cfg: &ShapeConfig) -> Result<bool> {
    Ok(superellipse_value(point, a, cfg)? <= 1.0 + 1e-12)
}

pub fn is_isotropic(a: &ShapeParams, cfg: &ShapeConfig) -> bool {
    (a.s1 - a.s2).abs() < cfg.isotropy_tolerance
}

/// Column block of `Δs = ∂Φ/∂q` belonging to one robot: row `k` is the
/// gradient of shape component `k` with respect to that robot's point.
pub type JacobianBlock = [[f64; 2]; SHAPE_DIM];

fn check_count(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::TooFewRobots { required: 3, found: n });
    }
    Ok(n as f64)
}

/// Jacobian block of robot `q_i` evaluated at shape `a` for a swarm of `n`.
///
/// With `p = R(θ)ᵀ(q_i − μ)`, `r` the major axis and `r⊥` the minor axis:
/// - μ rows: `I₂ / N`
/// - θ row: `(p_x r⊥ + p_y r)ᵀ / ((s1 − s2)(N − 1))`, zero when isotropic
/// - s2 row: `2 p_y r⊥ᵀ / (N − 1)`
/// - s1 row: `2 p_x rᵀ / (N − 1)`
pub fn jacobian_block(q_i: OutputPoint, a: &ShapeParams, n: usize, cfg: &ShapeConfig) -> Result<JacobianBlock> {
    let nf = check_count(n)?;
    let p = body_coords(q_i, a);
    let r = a.major_axis();
    let rp = a.minor_axis();
    let m = nf - 1.0;
    let theta_row = if is_isotropic(a, cfg) {
        Vec2::ZERO
    } else {
        (p.x * rp + p.y * r) * (1.0 / ((a.s1 - a.s2) * m))
    };
    let s2_row = rp * (2.0 * p.y / m);
    let s1_row = r * (2.0 * p.x / m);
    Ok([
        [1.0 / nf, 0.0],
        [0.0, 1.0 / nf],
        [theta_row.x, theta_row.y],
        [s2_row.x, s2_row.y],
        [s1_row.x, s1_row.y],
    ])
}

/// Diagonal of `Δs Δsᵀ`. Off-diagonal entries vanish because the body frame
/// diagonalizes the covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gram {
    pub diag: [f64; SHAPE_DIM],
    /// `false` when the swarm is isotropic; the θ entry is then excluded.
    pub theta_active: bool,
}

impl Gram {
    pub fn to_matrix(&self) -> [[f64; SHAPE_DIM]; SHAPE_DIM] {
        let mut m = [[0.0; SHAPE_DIM]; SHAPE_DIM];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = self.diag[k];
        }
        m
    }
}

pub fn gram_matrix(a: &ShapeParams, n: usize, cfg: &ShapeConfig) -> Result<Gram> {
    let nf = check_count(n)?;
    let m = nf - 1.0;
    let theta_active = !is_isotropic(a, cfg);
    let gap = a.s1 - a.s2;
    let diag = [
        1.0 / nf,
        1.0 / nf,
        if theta_active { (a.s1 + a.s2) / (gap * gap * m) } else { 0.0 },
        4.0 * a.s2 / m,
        4.0 * a.s1 / m,
    ];
    for (index, &value) in diag.iter().enumerate() {
        if index == idx::THETA && !theta_active {
            continue;
        }
        if !(value > GRAM_TOLERANCE) || !value.is_finite() {
            return Err(Error::DegenerateGram { index, value });
        }
    }
    Ok(Gram { diag, theta_active })
}

/// Robot `i`'s 2×5 block `βi = Δs,iᵀ G⁻¹` of the right pseudoinverse of `Δs`.
/// Needs only the robot's own point, the shape estimate and the swarm size.
pub fn pseudoinverse_block(
    q_i: OutputPoint,
    a: &ShapeParams,
    n: usize,
    cfg: &ShapeConfig,
) -> Result<[[f64; SHAPE_DIM]; 2]> {
    let jac = jacobian_block(q_i, a, n, cfg)?;
    let gram = gram_matrix(a, n, cfg)?;
    let mut beta = [[0.0; SHAPE_DIM]; 2];
    for k in 0..SHAPE_DIM {
        if k == idx::THETA && !gram.theta_active {
            continue;
        }
        beta[0][k] = jac[k][0] / gram.diag[k];
        beta[1][k] = jac[k][1] / gram.diag[k];
    }
    Ok(beta)
}
