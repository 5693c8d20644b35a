//! Group law, Korányi metric and the horizontal/vertical projections of the
//! first Heisenberg group, identified with `C x R = R^3`.
//!
//! Conventions:
//!
//! * group law `(z,t) * (ζ,τ) = (z+ζ, t+τ-2 z∧ζ)` with `(x1,y1)∧(x2,y2) = x1 y2 - x2 y1`
//! * Korányi norm `‖(z,t)‖ = (|z|^4 + t^2)^{1/4}` and the left-invariant
//!   distance `d(v,w) = ‖w^{-1} * v‖`
//! * `V_θ = span(e^{iθ})` (horizontal line), `V_θ^⊥ = span(i e^{iθ})`, and the
//!   vertical subgroup `{(λ1 i e^{iθ}, λ2)}`.
//!
//! Fourth roots are taken as `sqrt(sqrt(x))` so results do not depend on the
//! platform `powf`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use crate::error::{HeisError, Result};

/// A planar vector `(x, y)`.
pub type Planar = [f64; 2];

/// Membership tolerance for the vertical chart, relative to `1 + |z|`.
pub const CHART_TOLERANCE: f64 = 1e-8;

/// Standard wedge product `u ∧ v = u_x v_y - v_x u_y`.
#[inline]
pub fn wedge(u: Planar, v: Planar) -> f64 {
    u[0] * v[1] - v[0] * u[1]
}

#[inline]
fn dot(u: Planar, v: Planar) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

#[inline]
pub(crate) fn fourth_root(x: f64) -> f64 {
    x.sqrt().sqrt()
}

/// A point `(z, t)` of the Heisenberg group with `z = (x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl HPoint {
    pub const IDENTITY: HPoint = HPoint {
        x: 0.0,
        y: 0.0,
        t: 0.0,
    };

    /// Builds a point without validation. Use [`HPoint::try_new`] for
    /// untrusted input.
    #[inline]
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        HPoint { x, y, t }
    }

    /// Builds a point, rejecting NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64, t: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && t.is_finite() {
            Ok(HPoint { x, y, t })
        } else {
            Err(HeisError::NonFinite("HPoint"))
        }
    }

    #[inline]
    pub fn from_parts(z: Planar, t: f64) -> Self {
        HPoint {
            x: z[0],
            y: z[1],
            t,
        }
    }

    #[inline]
    pub fn z(&self) -> Planar {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    /// Group inverse `(-z, -t)`.
    #[inline]
    pub fn inverse(&self) -> HPoint {
        HPoint::new(-self.x, -self.y, -self.t)
    }

    #[inline]
    pub fn koranyi_norm(&self) -> f64 {
        let r2 = self.x * self.x + self.y * self.y;
        fourth_root(r2 * r2 + self.t * self.t)
    }

    /// Korányi distance to `other`.
    #[inline]
    pub fn dist(&self, other: &HPoint) -> f64 {
        koranyi_dist(self, other)
    }

    /// Euclidean norm of `(x, y, t)` in `R^3`.
    pub fn euclidean_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.t * self.t).sqrt()
    }

    pub fn euclidean_dist(&self, other: &HPoint) -> f64 {
        let (dx, dy, dt) = (self.x - other.x, self.y - other.y, self.t - other.t);
        (dx * dx + dy * dy + dt * dt).sqrt()
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(({}, {}), {})", self.x, self.y, self.t)
    }
}

impl Mul for HPoint {
    type Output = HPoint;

    #[inline]
    fn mul(self, rhs: HPoint) -> HPoint {
        group_mul(&self, &rhs)
    }
}

/// `(z,t) * (ζ,τ) = (z+ζ, t+τ-2 z∧ζ)`.
#[inline]
pub fn group_mul(v: &HPoint, w: &HPoint) -> HPoint {
    HPoint::new(v.x + w.x, v.y + w.y, v.t + w.t - 2.0 * wedge(v.z(), w.z()))
}

#[inline]
pub fn group_inv(v: &HPoint) -> HPoint {
    v.inverse()
}

#[inline]
pub fn koranyi_norm(v: &HPoint) -> f64 {
    v.koranyi_norm()
}

/// The "second component" `t - τ - 2 z∧ζ` of the Korányi distance.
///
/// It does not depend on any projection angle.
#[inline]
pub fn second_component(v: &HPoint, w: &HPoint) -> f64 {
    v.t - w.t - 2.0 * wedge(v.z(), w.z())
}

/// `d(v,w) = (|z-ζ|^4 + |t-τ-2 z∧ζ|^2)^{1/4}`.
#[inline]
pub fn koranyi_dist(v: &HPoint, w: &HPoint) -> f64 {
    let dx = v.x - w.x;
    let dy = v.y - w.y;
    let r2 = dx * dx + dy * dy;
    let s = second_component(v, w);
    fourth_root(r2 * r2 + s * s)
}

/// Fourth power of the Korányi distance; avoids the roots in hot loops.
#[inline]
pub fn koranyi_dist4(v: &HPoint, w: &HPoint) -> f64 {
    let dx = v.x - w.x;
    let dy = v.y - w.y;
    let r2 = dx * dx + dy * dy;
    let s = second_component(v, w);
    r2 * r2 + s * s
}

/// Anisotropic dilation `(z,t) -> (r z, r^2 t)`.
pub fn dilate(r: f64, v: &HPoint) -> Result<HPoint> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(HeisError::InvalidParameter(format!(
            "dilation factor must be positive, got {r}"
        )));
    }
    Ok(HPoint::new(r * v.x, r * v.y, r * r * v.t))
}

/// Rotation `(z,t) -> (e^{iφ} z, t)`; an isometry of the Korányi metric.
pub fn rotate(phi: f64, v: &HPoint) -> HPoint {
    let (s, c) = phi.sin_cos();
    HPoint::new(c * v.x - s * v.y, s * v.x + c * v.y, v.t)
}

/// A projection direction reduced to `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle {
    theta: f64,
    cos: f64,
    sin: f64,
}

impl Angle {
    /// Reduces any finite real modulo π.
    pub fn new(theta: f64) -> Self {
        let mut r = theta.rem_euclid(PI);
        if r >= PI {
            r = 0.0;
        }
        let (sin, cos) = r.sin_cos();
        Angle { theta: r, cos, sin }
    }

    /// The `k`-th angle of the uniform grid of `n` angles on `[0, π)`.
    pub fn grid(k: usize, n: usize) -> Self {
        Angle::new(PI * k as f64 / n as f64)
    }

    #[inline]
    pub fn radians(&self) -> f64 {
        self.theta
    }

    /// `e^{iθ}`, spanning `V_θ`.
    #[inline]
    pub fn direction(&self) -> Planar {
        [self.cos, self.sin]
    }

    /// `i e^{iθ}`, spanning `V_θ^⊥`.
    #[inline]
    pub fn normal(&self) -> Planar {
        [-self.sin, self.cos]
    }

    /// Distance between two angles on the circle `R / πZ`.
    pub fn circle_dist(&self, other: &Angle) -> f64 {
        let d = (self.theta - other.theta).abs();
        d.min(PI - d)
    }
}

/// Orthogonal projection of `z` onto `V_θ`: `⟨z, e^{iθ}⟩ e^{iθ}`.
#[inline]
pub fn proj_line(theta: &Angle, z: Planar) -> Planar {
    let e = theta.direction();
    let c = dot(z, e);
    [c * e[0], c * e[1]]
}

/// Orthogonal projection of `z` onto `V_θ^⊥`.
#[inline]
pub fn proj_perp(theta: &Angle, z: Planar) -> Planar {
    let n = theta.normal();
    let c = dot(z, n);
    [c * n[0], c * n[1]]
}

/// `P_{V_θ^⊥}(z,t) = (π_{V_θ^⊥}(z), t - 2 π_{V_θ}(z) ∧ π_{V_θ^⊥}(z))`.
#[inline]
pub fn vertical_projection(theta: &Angle, v: &HPoint) -> HPoint {
    let along = proj_line(theta, v.z());
    let across = proj_perp(theta, v.z());
    HPoint::from_parts(across, v.t - 2.0 * wedge(along, across))
}

/// `P_{V_θ}(z,t) = (π_{V_θ}(z), 0)`.
#[inline]
pub fn horizontal_projection(theta: &Angle, v: &HPoint) -> HPoint {
    HPoint::from_parts(proj_line(theta, v.z()), 0.0)
}

/// Coordinates `(λ1, λ2)` of a point `(λ1 i e^{iθ}, λ2)` of `V_θ^⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerticalChartPoint {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl VerticalChartPoint {
    pub const fn new(lambda1: f64, lambda2: f64) -> Self {
        VerticalChartPoint { lambda1, lambda2 }
    }

    /// Parabolic distance `(|Δλ1|^4 + |Δλ2|^2)^{1/4}`, which is the Korányi
    /// distance between the embedded points.
    #[inline]
    pub fn dist(&self, other: &VerticalChartPoint) -> f64 {
        let a = self.lambda1 - other.lambda1;
        let b = self.lambda2 - other.lambda2;
        let a2 = a * a;
        fourth_root(a2 * a2 + b * b)
    }
}

/// Chart coordinates of a point already lying in `V_θ^⊥`.
pub fn vertical_chart(theta: &Angle, p: &HPoint) -> Result<VerticalChartPoint> {
    let off = dot(p.z(), theta.direction());
    let norm = (p.x * p.x + p.y * p.y).sqrt();
    let tol = CHART_TOLERANCE * (1.0 + norm);
    if !p.is_finite() {
        return Err(HeisError::NonFinite("vertical_chart"));
    }
    if off.abs() >= tol {
        return Err(HeisError::NotInVerticalSubgroup {
            offset: off.abs(),
            tolerance: tol,
        });
    }
    Ok(VerticalChartPoint::new(dot(p.z(), theta.normal()), p.t))
}

/// Inverse of [`vertical_chart`].
pub fn vertical_embed(theta: &Angle, c: &VerticalChartPoint) -> HPoint {
    let n = theta.normal();
    HPoint::new(c.lambda1 * n[0], c.lambda1 * n[1], c.lambda2)
}

/// Chart coordinates of `P_{V_θ^⊥}(v)` computed directly from `v`.
///
/// Uses `π_{V_θ}(z) ∧ π_{V_θ^⊥}(z) = ⟨z,e^{iθ}⟩⟨z,ie^{iθ}⟩`, which skips the
/// membership check of [`vertical_chart`].
#[inline]
pub fn project_to_chart(theta: &Angle, v: &HPoint) -> VerticalChartPoint {
    let z = v.z();
    let a = dot(z, theta.direction());
    let b = dot(z, theta.normal());
    VerticalChartPoint::new(b, v.t - 2.0 * a * b)
}

/// Whether `r <= d(center, w) <= outer`.
pub fn annulus_contains(center: &HPoint, r: f64, outer: f64, w: &HPoint) -> Result<bool> {
    if r < 0.0 || r > outer || r.is_nan() || outer.is_nan() {
        return Err(HeisError::AnnulusOrder { inner: r, outer });
    }
    let d = koranyi_dist(center, w);
    Ok(r <= d && d <= outer)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    fn close_pt(a: &HPoint, b: &HPoint) -> bool {
        close(a.x, b.x) && close(a.y, b.y) && close(a.t, b.t)
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge([1.0, 0.0], [0.0, 1.0]), 1.0);
        assert_eq!(wedge([0.0, 1.0], [1.0, 0.0]), -1.0);
        // 2*5 - 4*3
        assert_eq!(wedge([2.0, 3.0], [4.0, 5.0]), -2.0);
    }

    #[test]
    fn group_law_examples() {
        let w = HPoint::new(0.3, -1.2, 2.5);
        assert_eq!(HPoint::IDENTITY * w, w);
        let p = HPoint::new(1.0, 0.0, 0.0) * HPoint::new(0.0, 1.0, 0.0);
        assert_eq!(p, HPoint::new(1.0, 1.0, -2.0));
        let v = HPoint::new(1.0, 2.0, 3.0);
        assert_eq!(v.inverse(), HPoint::new(-1.0, -2.0, -3.0));
        assert_eq!(v * v.inverse(), HPoint::IDENTITY);
        assert_eq!(v.inverse().inverse(), v);
        assert_eq!(HPoint::IDENTITY.inverse(), HPoint::IDENTITY);
    }

    #[test]
    fn norm_and_distance_examples() {
        assert_eq!(HPoint::new(1.0, 0.0, 0.0).koranyi_norm(), 1.0);
        assert_eq!(HPoint::new(0.0, 0.0, 1.0).koranyi_norm(), 1.0);
        let eight_root = 8f64.sqrt().sqrt();
        assert!((HPoint::new(1.0, 1.0, 2.0).koranyi_norm() - 1.681793).abs() < 1e-6);
        assert!(close(HPoint::new(1.0, 1.0, 2.0).koranyi_norm(), eight_root));

        let v = HPoint::new(0.4, -0.7, 1.1);
        assert_eq!(koranyi_dist(&v, &v), 0.0);
        assert!(close(koranyi_dist(&HPoint::IDENTITY, &v), v.koranyi_norm()));
        let d = koranyi_dist(&HPoint::new(1.0, 0.0, 0.0), &HPoint::new(0.0, 1.0, 0.0));
        assert!(close(d, eight_root));
    }

    #[test]
    fn distance_is_norm_of_quotient() {
        let v = HPoint::new(0.4, -0.7, 1.1);
        let w = HPoint::new(-1.3, 0.2, 0.5);
        let q = w.inverse() * v;
        assert!(close(koranyi_dist(&v, &w), q.koranyi_norm()));
        assert!(close(koranyi_dist(&v, &w), koranyi_dist(&w, &v)));
    }

    #[test]
    fn try_new_rejects_non_finite() {
        assert!(HPoint::try_new(f64::NAN, 0.0, 0.0).is_err());
        assert!(HPoint::try_new(0.0, f64::INFINITY, 0.0).is_err());
        assert!(HPoint::try_new(0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn dilation_examples() {
        let v = HPoint::new(0.3, 0.1, -0.4);
        assert_eq!(dilate(1.0, &v).unwrap(), v);
        assert_eq!(
            dilate(2.0, &HPoint::new(1.0, 0.0, 1.0)).unwrap(),
            HPoint::new(2.0, 0.0, 4.0)
        );
        let n3 = dilate(3.0, &v).unwrap().koranyi_norm();
        assert!(close(n3, 3.0 * v.koranyi_norm()));
        assert!(dilate(0.0, &v).is_err());
        assert!(dilate(-1.0, &v).is_err());
    }

    #[test]
    fn angle_reduction() {
        assert_eq!(Angle::new(0.0).radians(), 0.0);
        assert!((Angle::new(PI + 0.25).radians() - 0.25).abs() < 1e-15);
        assert!((Angle::new(-0.25).radians() - (PI - 0.25)).abs() < 1e-15);
        assert_eq!(Angle::new(PI).radians(), 0.0);
        for k in -20..20 {
            let a = Angle::new(k as f64 * 0.77);
            assert!(a.radians() >= 0.0 && a.radians() < PI);
        }
        assert!((Angle::new(0.1).circle_dist(&Angle::new(PI - 0.1)) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn line_projection_examples() {
        let t0 = Angle::new(0.0);
        let t90 = Angle::new(PI / 2.0);
        let t45 = Angle::new(PI / 4.0);
        assert_eq!(proj_line(&t0, [3.0, 4.0]), [3.0, 0.0]);
        let p = proj_line(&t90, [3.0, 4.0]);
        assert!(p[0].abs() < EPS && close(p[1], 4.0));
        let p = proj_line(&t45, [1.0, 0.0]);
        assert!(close(p[0], 0.5) && close(p[1], 0.5));

        let q = proj_perp(&t0, [3.0, 4.0]);
        assert!(q[0].abs() < EPS && close(q[1], 4.0));
        let q = proj_perp(&t90, [3.0, 4.0]);
        assert!(close(q[0], 3.0) && q[1].abs() < EPS);

        let z = [0.37, -1.9];
        let a = proj_line(&t45, z);
        let b = proj_perp(&t45, z);
        assert!(close(a[0] + b[0], z[0]) && close(a[1] + b[1], z[1]));
        let aa = proj_line(&t45, a);
        assert!(close(aa[0], a[0]) && close(aa[1], a[1]));
    }

    #[test]
    fn vertical_projection_examples() {
        let t0 = Angle::new(0.0);
        assert_eq!(
            vertical_projection(&t0, &HPoint::new(1.0, 1.0, 0.0)),
            HPoint::new(0.0, 1.0, -2.0)
        );
        let p = vertical_projection(&t0, &HPoint::new(2.5, 0.0, 0.7));
        assert_eq!(p, HPoint::new(0.0, 0.0, 0.7));

        let th = Angle::new(1.1);
        let inside = vertical_embed(&th, &VerticalChartPoint::new(0.8, -0.3));
        assert!(close_pt(&vertical_projection(&th, &inside), &inside));

        assert_eq!(
            horizontal_projection(&t0, &HPoint::new(1.0, 1.0, 5.0)),
            HPoint::new(1.0, 0.0, 0.0)
        );
        let h = HPoint::from_parts([0.6 * th.direction()[0], 0.6 * th.direction()[1]], 0.0);
        assert!(close_pt(&horizontal_projection(&th, &h), &h));
        assert_eq!(
            horizontal_projection(&th, &HPoint::IDENTITY),
            HPoint::IDENTITY
        );
    }

    #[test]
    fn decomposition_identity() {
        let th = Angle::new(0.83);
        let v = HPoint::new(-0.4, 1.3, 0.25);
        let prod = vertical_projection(&th, &v) * horizontal_projection(&th, &v);
        assert!(close_pt(&prod, &v));
    }

    #[test]
    fn chart_examples() {
        let t0 = Angle::new(0.0);
        let c = vertical_chart(&t0, &HPoint::new(0.0, 1.0, 3.0)).unwrap();
        assert_eq!(c, VerticalChartPoint::new(1.0, 3.0));
        let th = Angle::new(2.2);
        let p = vertical_embed(&th, &VerticalChartPoint::new(-0.6, 0.9));
        let back = vertical_embed(&th, &vertical_chart(&th, &p).unwrap());
        assert!(close_pt(&back, &p));

        let a = VerticalChartPoint::new(0.0, 0.0);
        let b = VerticalChartPoint::new(0.0, 1.0);
        assert_eq!(a.dist(&b), 1.0);
        let d = koranyi_dist(&vertical_embed(&th, &a), &vertical_embed(&th, &b));
        assert!(close(d, 1.0));

        assert!(matches!(
            vertical_chart(&t0, &HPoint::new(0.5, 1.0, 0.0)),
            Err(HeisError::NotInVerticalSubgroup { .. })
        ));
    }

    #[test]
    fn project_to_chart_matches_projection() {
        let th = Angle::new(0.41);
        let v = HPoint::new(0.7, -0.2, 0.9);
        let direct = project_to_chart(&th, &v);
        let via = vertical_chart(&th, &vertical_projection(&th, &v)).unwrap();
        assert!(close(direct.lambda1, via.lambda1) && close(direct.lambda2, via.lambda2));
    }

    #[test]
    fn annulus_examples() {
        let o = HPoint::IDENTITY;
        assert!(annulus_contains(&o, 0.0, 1.0, &HPoint::new(1.0, 0.0, 0.0)).unwrap());
        assert!(!annulus_contains(&o, 2.0, 3.0, &HPoint::new(1.0, 0.0, 0.0)).unwrap());
        // norm of ((0,0),2) is sqrt 2
        assert!(annulus_contains(&o, 1.0, 2.0, &HPoint::new(0.0, 0.0, 2.0)).unwrap());
        assert!(annulus_contains(&o, 2.0, 1.0, &HPoint::IDENTITY).is_err());
    }

    #[test]
    fn rotation_preserves_distance() {
        let v = HPoint::new(0.2, 0.9, -0.4);
        let w = HPoint::new(-0.5, 0.3, 0.8);
        let d = koranyi_dist(&v, &w);
        let dr = koranyi_dist(&rotate(1.3, &v), &rotate(1.3, &w));
        assert!(close(d, dr));
    }
}
