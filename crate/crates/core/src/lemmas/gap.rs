//! Projected closeness controls the second Korányi component.
//!
//! Writing `v = a * b`, `w = a' * b'` with `a, a'` vertical and `b, b'`
//! horizontal along `e^{iθ}`, one finds
//! `t - τ - 2 z∧ζ = -(Δ + 2 (β + β') λ)` where `(λ ie^{iθ}, Δ) = a⁻¹ a'` and
//! `b = (β e^{iθ}, 0)`, `b' = (β' e^{iθ}, 0)`. So `d(a, a') <= δ` gives a
//! gap of at most `δ² + 2δ(|z| + |ζ|)`, which is `<= 64δ` for points of
//! moderate size, with no dependence on `θ` in the gap itself.

use crate::group::{koranyi_dist, second_component, vertical_projection, Angle, HPoint};

/// Constant of the gap check, generous over the derivation's constants.
pub const GAP_CONSTANT: f64 = 64.0;

/// `|t - τ - 2 z∧ζ|`, and whether the implication "projections within `δ`
/// ⇒ gap `<= 64δ`" holds for this `(v, w, θ, δ)`.
pub fn second_component_gap(v: &HPoint, w: &HPoint, theta: Angle, delta: f64) -> (f64, bool) {
    let gap = second_component(v, w).abs();
    let close = koranyi_dist(
        &vertical_projection(&theta, v),
        &vertical_projection(&theta, w),
    ) <= delta;
    (gap, !close || gap <= GAP_CONSTANT * delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{vertical_embed, VerticalChartPoint};
    use crate::rng;
    use rand::Rng;

    #[test]
    fn self_gap_is_zero() {
        let v = HPoint::new(0.3, -0.7, 2.0);
        assert_eq!(
            second_component_gap(&v, &v, Angle::new(1.0), 0.1),
            (0.0, true)
        );
    }

    #[test]
    fn gap_does_not_depend_on_theta() {
        let v = HPoint::new(0.3, -0.7, 2.0);
        let w = HPoint::new(-0.1, 0.2, 0.4);
        let g0 = second_component_gap(&v, &w, Angle::new(0.0), 0.1).0;
        for k in 1..50 {
            assert_eq!(
                second_component_gap(&v, &w, Angle::new(k as f64 * 0.06), 0.1).0,
                g0
            );
        }
    }

    #[test]
    fn close_projections_have_small_gaps() {
        let mut r = rng::stream(6, 0);
        let mut checked = 0;
        for _ in 0..20_000 {
            let th = Angle::new(r.gen_range(0.0..std::f64::consts::PI));
            let delta: f64 = 10f64.powf(r.gen_range(-4.0..-0.5));
            let v = HPoint::new(
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            );
            // w = (P v * u) * h with u vertical of size <= δ, h horizontal
            let u_size = 0.99 * delta * r.gen::<f64>();
            let phi: f64 = r.gen_range(0.0..std::f64::consts::TAU);
            let u = vertical_embed(
                &th,
                &VerticalChartPoint::new(
                    u_size * phi.cos().signum() * phi.cos().abs().sqrt(),
                    u_size * u_size * phi.sin(),
                ),
            );
            let e = th.direction();
            let beta: f64 = r.gen_range(-1.0..1.0);
            let h = HPoint::new(beta * e[0], beta * e[1], 0.0);
            let w = (vertical_projection(&th, &v) * u) * h;
            let pv = vertical_projection(&th, &v);
            let pw = vertical_projection(&th, &w);
            assert!(koranyi_dist(&pv, &pw) <= delta);
            let (gap, ok) = second_component_gap(&v, &w, th, delta);
            assert!(ok, "gap {gap} at delta {delta}");
            checked += 1;
        }
        assert_eq!(checked, 20_000);
    }
}
