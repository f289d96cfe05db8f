use proptest::prelude::*;
use swarmsim_core::math::{wrap_half_pi, Vec2};
use swarmsim_core::shape::*;

fn cfg() -> ShapeConfig {
    ShapeConfig::default()
}

fn points(n: usize) -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64).prop_map(|(x, y)| Vec2::new(x, y)), n)
}

fn anisotropy(a: &ShapeParams) -> f64 {
    (a.s1 - a.s2) / (a.s1 + a.s2)
}

/// Central differences of `Φ` with respect to point `i`.
fn fd_block(pts: &[Vec2], i: usize, h: f64) -> JacobianBlock {
    let mut out = [[0.0; 2]; SHAPE_DIM];
    for axis in 0..2 {
        let shifted = |sign: f64| {
            let mut p = pts.to_vec();
            if axis == 0 {
                p[i].x += sign * h;
            } else {
                p[i].y += sign * h;
            }
            abstraction_map(&p, &cfg()).unwrap().to_array()
        };
        let (hi, lo) = (shifted(1.0), shifted(-1.0));
        for k in 0..SHAPE_DIM {
            let mut d = hi[k] - lo[k];
            if k == idx::THETA {
                d = wrap_half_pi(d);
            }
            out[k][axis] = d / (2.0 * h);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn permutation_invariance((pts, shuffled) in points(9).prop_flat_map(|p| (Just(p.clone()), Just(p).prop_shuffle()))) {
        prop_assert_eq!(abstraction_map(&pts, &cfg()).unwrap(), abstraction_map(&shuffled, &cfg()).unwrap());
    }

    #[test]
    fn translation_equivariance(pts in points(9), tx in -10.0..10.0f64, ty in -10.0..10.0f64) {
        let a = abstraction_map(&pts, &cfg()).unwrap();
        prop_assume!(anisotropy(&a) > 1e-3);
        let t = Vec2::new(tx, ty);
        let moved: Vec<Vec2> = pts.iter().map(|p| *p + t).collect();
        let b = abstraction_map(&moved, &cfg()).unwrap();
        prop_assert!((b.mu_x - a.mu_x - tx).abs() < 1e-12);
        prop_assert!((b.mu_y - a.mu_y - ty).abs() < 1e-12);
        prop_assert!(wrap_half_pi(b.orientation - a.orientation).abs() < 1e-9);
        prop_assert!((b.s1 - a.s1).abs() < 1e-12 * a.s1.max(1.0) * 10.0);
        prop_assert!((b.s2 - a.s2).abs() < 1e-12 * a.s1.max(1.0) * 10.0);
    }

    #[test]
    fn rotation_equivariance(pts in points(9), alpha in -3.2..3.2f64) {
        let a = abstraction_map(&pts, &cfg()).unwrap();
        prop_assume!(anisotropy(&a) > 1e-3);
        let rotated: Vec<Vec2> = pts.iter().map(|p| p.rotate_by(alpha)).collect();
        let b = abstraction_map(&rotated, &cfg()).unwrap();
        prop_assert!((b.s1 - a.s1).abs() < 1e-9);
        prop_assert!((b.s2 - a.s2).abs() < 1e-9);
        prop_assert!(wrap_half_pi(b.orientation - a.orientation - alpha).abs() < 1e-9);

        let mu = centroid(&pts).unwrap();
        let c = covariance(&pts, mu).unwrap();
        let c2 = covariance(&rotated, centroid(&rotated).unwrap()).unwrap();
        let (u, v) = (2.0 * c.sxy, c.sxx - c.syy);
        let (s, co) = (2.0 * alpha).sin_cos();
        prop_assert!((2.0 * c2.sxy - (co * u + s * v)).abs() < 1e-9);
        prop_assert!((c2.sxx - c2.syy - (co * v - s * u)).abs() < 1e-9);
    }

    #[test]
    fn body_frame_diagonalizes_covariance(pts in points(9)) {
        let a = abstraction_map(&pts, &cfg()).unwrap();
        let m = (pts.len() - 1) as f64;
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for p in &pts {
            let b = body_coords(*p, &a);
            xx += b.x * b.x / m;
            xy += b.x * b.y / m;
            yy += b.y * b.y / m;
        }
        prop_assert!(xy.abs() < 1e-9);
        prop_assert!((xx - a.s1).abs() < 1e-9);
        prop_assert!((yy - a.s2).abs() < 1e-9);
        prop_assert!(a.s1 >= a.s2);
    }

    #[test]
    fn superellipse_scales_with_points(pts in points(9)) {
        let a = abstraction_map(&pts, &cfg()).unwrap();
        prop_assume!(a.s2 > 1e-3);
        let (sw, sl) = axes_lengths(&a, &cfg());
        let on_major = a.mu() + a.major_axis() * sl;
        let on_minor = a.mu() + a.minor_axis() * sw;
        prop_assert!((superellipse_value(on_major, &a, &cfg()).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((superellipse_value(on_minor, &a, &cfg()).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!(superellipse_contains(a.mu(), &a, &cfg()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jacobian_matches_finite_differences(pts in points(9)) {
        // Relative error per row of the full 5×2N matrix Δs.
        let a = abstraction_map(&pts, &cfg()).unwrap();
        prop_assume!(anisotropy(&a) > 0.05);
        let mut err = [0.0; SHAPE_DIM];
        let mut norm = [0.0; SHAPE_DIM];
        for i in 0..pts.len() {
            let j = jacobian_block(pts[i], &a, pts.len(), &cfg()).unwrap();
            let fd = fd_block(&pts, i, 1e-6);
            for k in 0..SHAPE_DIM {
                for axis in 0..2 {
                    err[k] += (j[k][axis] - fd[k][axis]).powi(2);
                    norm[k] += j[k][axis].powi(2);
                }
            }
        }
        for k in 0..SHAPE_DIM {
            prop_assert!((err[k] / norm[k]).sqrt() < 1e-5, "row {}: relative error {}", k, (err[k] / norm[k]).sqrt());
        }
    }

    #[test]
    fn gram_is_diagonal_and_matches_closed_form(pts in points(9)) {
        let a = abstraction_map(&pts, &cfg()).unwrap();
        prop_assume!(anisotropy(&a) > 0.05);
        let n = pts.len();
        let blocks: Vec<JacobianBlock> = pts.iter().map(|q| jacobian_block(*q, &a, n, &cfg()).unwrap()).collect();
        let g = gram_matrix(&a, n, &cfg()).unwrap();
        for r in 0..SHAPE_DIM {
            for c in 0..SHAPE_DIM {
                let v: f64 = blocks.iter().map(|b| b[r][0] * b[c][0] + b[r][1] * b[c][1]).sum();
                if r == c {
                    prop_assert!((v - g.diag[r]).abs() < 1e-9 * g.diag[r].max(1.0), "G[{}] {} vs {}", r, v, g.diag[r]);
                } else {
                    prop_assert!(v.abs() < 1e-10, "G[{}][{}] = {}", r, c, v);
                }
            }
        }
    }

    #[test]
    fn distributed_pseudoinverse_is_right_inverse(pts in points(9), w in prop::array::uniform5(-2.0..2.0f64)) {
        let a = abstraction_map(&pts, &cfg()).unwrap();
        prop_assume!(anisotropy(&a) > 0.05);
        let n = pts.len();
        // Δs · (β w) = w: the stacked local blocks form a right inverse.
        let mut back = [0.0; SHAPE_DIM];
        for q in &pts {
            let j = jacobian_block(*q, &a, n, &cfg()).unwrap();
            let b = pseudoinverse_block(*q, &a, n, &cfg()).unwrap();
            let v = [
                (0..SHAPE_DIM).map(|k| b[0][k] * w[k]).sum::<f64>(),
                (0..SHAPE_DIM).map(|k| b[1][k] * w[k]).sum::<f64>(),
            ];
            for k in 0..SHAPE_DIM {
                back[k] += j[k][0] * v[0] + j[k][1] * v[1];
            }
        }
        for k in 0..SHAPE_DIM {
            prop_assert!((back[k] - w[k]).abs() < 1e-9, "{:?} vs {:?}", back, w);
        }
    }
}

#[test]
fn initial_grid_statistics() {
    let mut grid = Vec::new();
    for x in [0.0, 2.0, 4.0] {
        for y in [0.0, 2.0, 4.0] {
            grid.push(Vec2::new(x, y));
        }
    }
    let a = abstraction_map(&grid, &cfg()).unwrap();
    assert_eq!((a.mu_x, a.mu_y), (2.0, 2.0));
    assert!((a.s1 - 3.0).abs() < 1e-12 && (a.s2 - 3.0).abs() < 1e-12);
    assert_eq!(a.orientation, 0.0);
    let (sw, sl) = axes_lengths(&a, &cfg());
    assert!((sw - 3.6091).abs() < 1e-3 && (sl - 3.6091).abs() < 1e-3);
}
