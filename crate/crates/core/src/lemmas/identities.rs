//! Randomized checks of the metric axioms and of the algebraic identities
//! the estimates rest on. Each check draws its own counter-based stream, so
//! results do not depend on scheduling.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::group::{
    dilate, horizontal_projection, koranyi_dist, proj_line, proj_perp, rotate, vertical_chart,
    vertical_projection, wedge, Angle, HPoint,
};
use crate::lemmas::gap::second_component_gap;
use crate::lemmas::transversality::{transversality_f, TransversalityFrame};
use crate::lemmas::triple::{
    coordinate_scale, residual_scale, triple_det, triple_point_solve, triple_residual,
    TripleSolution,
};
use crate::rng::{self, purpose, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed error relative to the allowed error (so `<= 1`
    /// means pass).
    pub worst_ratio: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn point(r: &mut StreamRng, half: f64) -> HPoint {
    HPoint::new(
        r.gen_range(-half..half),
        r.gen_range(-half..half),
        r.gen_range(-half..half),
    )
}

/// Runs `trials` evaluations of `f`, which returns `(error, allowed)`.
fn run<F>(name: &'static str, id: u64, trials: usize, seed: u64, f: F) -> IdentityCheck
where
    F: Fn(&mut StreamRng) -> (f64, f64) + Sync,
{
    const CHUNK: usize = 2048;
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<(usize, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, purpose::IDENTITIES + (id << 20) + c as u64);
            let m = CHUNK.min(trials - c * CHUNK);
            let mut fails = 0;
            let mut worst = 0.0f64;
            for _ in 0..m {
                let (err, allowed) = f(&mut r);
                let ratio = if allowed > 0.0 {
                    err / allowed
                } else if err == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                if !(ratio <= 1.0) {
                    fails += 1;
                }
                worst = worst.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
            }
            (fails, worst)
        })
        .collect();
    IdentityCheck {
        name,
        trials,
        failures: parts.iter().map(|p| p.0).sum(),
        worst_ratio: parts.iter().map(|p| p.1).fold(0.0, f64::max),
    }
}

/// Triangle inequality, left invariance, dilation homogeneity and rotation
/// invariance of the Korányi distance.
pub fn metric_suite(trials: usize, seed: u64) -> Vec<IdentityCheck> {
    vec![
        run("triangle_inequality", 1, trials, seed, |r| {
            let (u, v, w) = (point(r, 10.0), point(r, 10.0), point(r, 10.0));
            let (a, b, c) = (
                koranyi_dist(&u, &w),
                koranyi_dist(&u, &v),
                koranyi_dist(&v, &w),
            );
            ((a - b - c).max(0.0), 1e-12 * (b + c).max(1.0))
        }),
        run("left_invariance", 2, trials, seed, |r| {
            let (g, v, w) = (point(r, 10.0), point(r, 10.0), point(r, 10.0));
            let d = koranyi_dist(&v, &w);
            (
                (koranyi_dist(&(g * v), &(g * w)) - d).abs(),
                1e-9 * d + 1e-12,
            )
        }),
        run("dilation_homogeneity", 3, trials, seed, |r| {
            let (v, w) = (point(r, 10.0), point(r, 10.0));
            let s: f64 = 10f64.powf(r.gen_range(-3.0..3.0));
            let d = s * koranyi_dist(&v, &w);
            let dd = koranyi_dist(&dilate(s, &v).unwrap(), &dilate(s, &w).unwrap());
            ((dd - d).abs(), 1e-9 * d)
        }),
        run("rotation_invariance", 4, trials, seed, |r| {
            let (v, w) = (point(r, 10.0), point(r, 10.0));
            let phi = r.gen_range(0.0..2.0 * PI);
            let d = koranyi_dist(&v, &w);
            (
                (koranyi_dist(&rotate(phi, &v), &rotate(phi, &w)) - d).abs(),
                1e-9 * d,
            )
        }),
    ]
}

/// Projection, wedge, oscillation and determinant identities.
pub fn identity_suite(trials: usize, seed: u64) -> Vec<IdentityCheck> {
    vec![
        run("decomposition", 10, trials, seed, |r| {
            let v = point(r, 1.0);
            let th = Angle::new(r.gen_range(0.0..PI));
            let back = vertical_projection(&th, &v) * horizontal_projection(&th, &v);
            let err = (back.x - v.x)
                .abs()
                .max((back.y - v.y).abs())
                .max((back.t - v.t).abs());
            (err, 1e-12)
        }),
        run("wedge_splitting", 11, trials, seed, |r| {
            let (z, w) = (point(r, 1.0).z(), point(r, 1.0).z());
            let th = Angle::new(r.gen_range(0.0..PI));
            let rhs = wedge(proj_line(&th, z), proj_perp(&th, w))
                - wedge(proj_line(&th, w), proj_perp(&th, z));
            ((wedge(z, w) - rhs).abs(), 1e-10)
        }),
        run("perp_wedge_line", 12, trials, seed, |r| {
            let (x, y) = (point(r, 1.0).z(), point(r, 1.0).z());
            let th = Angle::new(r.gen_range(0.0..PI));
            let py = proj_line(&th, y);
            ((wedge(proj_perp(&th, x), py) - wedge(x, py)).abs(), 1e-10)
        }),
        run("projection_in_vertical_subgroup", 13, trials, seed, |r| {
            let v = point(r, 1.0);
            let th = Angle::new(r.gen_range(0.0..PI));
            let p = vertical_projection(&th, &v);
            if vertical_chart(&th, &p).is_err() {
                return (1.0, 0.0);
            }
            let pp = vertical_projection(&th, &p);
            let err = (pp.x - p.x)
                .abs()
                .max((pp.y - p.y).abs())
                .max((pp.t - p.t).abs());
            (err, 1e-12)
        }),
        run("oscillation_identity", 14, trials, seed, |r| {
            let f = TransversalityFrame::random(r);
            let (_, d1, d2) = transversality_f(&f, Angle::new(r.gen_range(0.0..PI)));
            (((d1 / 2.0).powi(2) + (d2 / 4.0).powi(2) - 1.0).abs(), 1e-9)
        }),
        run("derivative_4_lipschitz", 15, trials, seed, |r| {
            let f = TransversalityFrame::random(r);
            let a: f64 = r.gen_range(0.0..PI);
            let b = a + r.gen_range(-1.0..1.0f64) * 10f64.powf(r.gen_range(-6.0..0.0));
            let (_, fa, _) = transversality_f(&f, Angle::new(a));
            let (_, fb, _) = transversality_f(&f, Angle::new(b));
            (((fa - fb).abs() - 4.0 * (a - b).abs()).max(0.0), 1e-9)
        }),
        run("derivative_finite_difference", 16, trials, seed, |r| {
            let f = TransversalityFrame::random(r);
            let th: f64 = r.gen_range(0.0..PI);
            let h = 1e-5;
            let fd = (transversality_f(&f, Angle::new(th + h)).0
                - transversality_f(&f, Angle::new(th - h)).0)
                / (2.0 * h);
            ((transversality_f(&f, Angle::new(th)).1 - fd).abs(), 1e-6)
        }),
        run("triple_determinant", 17, trials, seed, |r| {
            let p = [point(r, 1.0), point(r, 1.0), point(r, 1.0)];
            let rows: Vec<[f64; 3]> = p.iter().map(|v| [-2.0 * v.y, 2.0 * v.x, 1.0]).collect();
            let cof = rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
                - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
                + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
            let scale = coordinate_scale(&p);
            (
                (cof.abs() - triple_det(&p[0], &p[1], &p[2]).abs()).abs(),
                1e-9 * scale.powi(3),
            )
        }),
        run("second_component_gap", 18, trials, seed, |r| {
            let th = Angle::new(r.gen_range(0.0..PI));
            let delta = 10f64.powf(r.gen_range(-4.0..-0.5));
            let v = point(r, 1.0);
            let u = crate::group::vertical_embed(
                &th,
                &crate::group::VerticalChartPoint::new(
                    r.gen_range(-0.7..0.7) * delta,
                    r.gen_range(-0.7..0.7) * delta * delta,
                ),
            );
            let beta = r.gen_range(-1.0..1.0);
            let e = th.direction();
            let w = (vertical_projection(&th, &v) * u) * HPoint::new(beta * e[0], beta * e[1], 0.0);
            let (_, ok) = second_component_gap(&v, &w, th, delta);
            (if ok { 0.0 } else { 1.0 }, 0.0)
        }),
    ]
}

/// Non-degenerate random triples are solved to residual `<= 1e-9 · scale`,
/// and collinear ones are flagged. Returns the residual check and the
/// degeneracy check.
pub fn triple_suite(trials: usize, seed: u64) -> Vec<IdentityCheck> {
    vec![
        run("triple_residual", 20, trials, seed, |r| loop {
            let p = [point(r, 1.0), point(r, 1.0), point(r, 1.0)];
            if let TripleSolution::Unique { point: v, .. } = triple_point_solve(&p[0], &p[1], &p[2])
            {
                let vs = [&p[0], &p[1], &p[2]];
                return (triple_residual(&v, vs), 1e-9 * residual_scale(&v, vs));
            }
        }),
        run("collinear_flagged", 21, trials, seed, |r| {
            let base = point(r, 1.0).z();
            let dir = point(r, 1.0).z();
            let p: Vec<HPoint> = (0..3)
                .map(|_| {
                    let l = r.gen_range(-2.0..2.0);
                    HPoint::new(
                        base[0] + l * dir[0],
                        base[1] + l * dir[1],
                        r.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let flagged = matches!(
                triple_point_solve(&p[0], &p[1], &p[2]),
                TripleSolution::Degenerate { .. }
            );
            (if flagged { 0.0 } else { 1.0 }, 0.0)
        }),
    ]
}

/// Empirical comparison constants between the Korányi and Euclidean
/// distances on the unit ball: `d_H >= c_lo |v - w|` and
/// `d_H <= c_hi |v - w|^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderConstants {
    pub c_lo: f64,
    pub c_hi: f64,
    pub trials: usize,
}

pub fn holder_constants(trials: usize, seed: u64) -> HolderConstants {
    let mut r = rng::stream(seed, purpose::IDENTITIES + (30 << 20));
    let unit = |r: &mut StreamRng| loop {
        let p = point(r, 1.0);
        if p.euclidean_norm() <= 1.0 {
            return p;
        }
    };
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..trials {
        let (v, w) = (unit(&mut r), unit(&mut r));
        let e = v.euclidean_dist(&w);
        if e == 0.0 {
            continue;
        }
        let d = koranyi_dist(&v, &w);
        lo = lo.min(d / e);
        hi = hi.max(d / e.sqrt());
    }
    HolderConstants {
        c_lo: lo,
        c_hi: hi,
        trials,
    }
}
