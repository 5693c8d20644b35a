//! Three-point rigidity: the point `v = (z, t)` whose second Korányi
//! component against each of `v_1, v_2, v_3` vanishes.
//!
//! `t - τ_i - 2 z ∧ ζ_i = 0` is linear in `(x, y, t)` with rows
//! `(-2 y_i, 2 x_i, 1)`, and `|det| = 4 |ζ₁∧ζ₂ + ζ₂∧ζ₃ + ζ₃∧ζ₁|`, four times
//! twice the area of the planar triangle. Collinear `ζ_i` leave a line of
//! solutions or none.

use crate::group::{second_component, wedge, HPoint};

/// Relative determinant threshold, against the cube of the coordinate
/// scale.
pub const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TripleSolution {
    Unique { point: HPoint, det: f64 },
    Degenerate { det: f64 },
}

impl TripleSolution {
    pub fn point(&self) -> Option<HPoint> {
        match self {
            TripleSolution::Unique { point, .. } => Some(*point),
            TripleSolution::Degenerate { .. } => None,
        }
    }
}

/// `max(1, largest absolute coordinate)`.
pub fn coordinate_scale(vs: &[HPoint]) -> f64 {
    vs.iter()
        .flat_map(|v| [v.x.abs(), v.y.abs(), v.t.abs()])
        .fold(1.0, f64::max)
}

/// `4 (ζ₁∧ζ₂ + ζ₂∧ζ₃ + ζ₃∧ζ₁)`, the determinant of the system.
pub fn triple_det(v1: &HPoint, v2: &HPoint, v3: &HPoint) -> f64 {
    4.0 * (wedge(v1.z(), v2.z()) + wedge(v2.z(), v3.z()) + wedge(v3.z(), v1.z()))
}

/// Solves the three second-component equations by Gaussian elimination
/// with partial pivoting.
pub fn triple_point_solve(v1: &HPoint, v2: &HPoint, v3: &HPoint) -> TripleSolution {
    let det = triple_det(v1, v2, v3);
    let scale = coordinate_scale(&[*v1, *v2, *v3]);
    if !(det.abs() >= DEGENERATE_TOL * scale.powi(3)) {
        return TripleSolution::Degenerate { det };
    }
    let mut m = [[0.0f64; 4]; 3];
    for (row, v) in m.iter_mut().zip([v1, v2, v3]) {
        *row = [-2.0 * v.y, 2.0 * v.x, 1.0, v.t];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let pivot = m[col];
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / pivot[col];
            for (x, p) in row.iter_mut().zip(pivot).skip(col) {
                *x -= f * p;
            }
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = m[row][3];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    TripleSolution::Unique {
        point: HPoint::new(x[0], x[1], x[2]),
        det,
    }
}

/// Largest `|second_component(v, v_i)|` over the three points.
pub fn triple_residual(v: &HPoint, vs: [&HPoint; 3]) -> f64 {
    vs.iter()
        .map(|w| second_component(v, w).abs())
        .fold(0.0, f64::max)
}

/// The scale residuals are measured against: coordinates of the inputs and
/// of the solution, since the products `x y_i` enter each equation.
pub fn residual_scale(v: &HPoint, vs: [&HPoint; 3]) -> f64 {
    let s_in = coordinate_scale(&[*vs[0], *vs[1], *vs[2]]);
    let s_out = coordinate_scale(&[*v]);
    s_in * s_out
}
