//! Covering a Euclidean ball of radius `r` by `O(1/r)` Korányi balls of
//! radius `r`.
//!
//! Centres sit on columns over a square grid of spacing `r/2` around `z_v`.
//! Inside one column the Korányi condition for a centre `c = (z_c, t_c)`
//! reads `|t_w - 2 (z_w - z_c) ∧ z_c - t_c| <= sqrt(r⁴ - |z_w - z_c|⁴)`, so
//! the centres of a column are spaced `r²/2` along the sheared coordinate
//! `u = t_w - 2 (z_w - z_c) ∧ z_c` over the range that the ball reaches.
//! The column count is `O(1)` and each column needs `O(1/r)` centres.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::dimension::fit_log_log;
use crate::error::{HeisError, Result};
use crate::group::{koranyi_dist4, wedge, HPoint};
use crate::rng::{self, purpose};

pub const DEFAULT_COVER_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Column {
    /// Offset of the first centre in `centers`.
    first: usize,
    len: usize,
    z: [f64; 2],
    u0: f64,
}

/// A finite family of Korányi balls of a common radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub v: HPoint,
    pub r: f64,
    pub centers: Vec<HPoint>,
    columns: HashMap<(i64, i64), Column>,
}

impl Cover {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    fn column_of(&self, w: &HPoint) -> (i64, i64) {
        let h = self.r / 2.0;
        (
            ((w.x - self.v.x) / h).round() as i64,
            ((w.y - self.v.y) / h).round() as i64,
        )
    }

    /// Whether some ball of the cover contains `w`.
    ///
    /// Tries the centres nearest to `w` in its own column first and falls
    /// back to every centre.
    pub fn covers(&self, w: &HPoint) -> bool {
        let r4 = self.r.powi(4);
        let (i, j) = self.column_of(w);
        if let Some(col) = self.columns.get(&(i, j)) {
            let u = w.t - 2.0 * wedge([w.x - col.z[0], w.y - col.z[1]], col.z);
            let k = ((u - col.u0) / (self.r * self.r / 2.0)).round() as i64;
            for kk in k - 1..=k + 1 {
                if kk >= 0 && (kk as usize) < col.len {
                    let c = &self.centers[col.first + kk as usize];
                    if koranyi_dist4(c, w) <= r4 {
                        return true;
                    }
                }
            }
        }
        self.centers.iter().any(|c| koranyi_dist4(c, w) <= r4)
    }
}

fn check_inputs(v: &HPoint, r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(HeisError::InvalidParameter(format!(
            "cover radius must lie in (0,1), got {r}"
        )));
    }
    if !v.is_finite() || v.euclidean_norm() > 1.0 {
        return Err(HeisError::InvalidParameter(format!(
            "ball centre must satisfy |v| <= 1, got {v}"
        )));
    }
    Ok(())
}

/// Builds the column cover of the closed Euclidean ball `B_E(v, r)`.
pub fn cover_euclidean_ball(v: &HPoint, r: f64) -> Result<Cover> {
    check_inputs(v, r)?;
    let h = r / 2.0;
    let dt = r * r / 2.0;
    let reach = (r / h).ceil() as i64 + 1;
    let mut centers = Vec::new();
    let mut columns = HashMap::new();
    for i in -reach..=reach {
        for j in -reach..=reach {
            let z = [v.x + i as f64 * h, v.y + j as f64 * h];
            // distance from z_v to the column's square cell
            let gap = |k: i64| ((k.abs() as f64 - 0.5) * h).max(0.0);
            let dmin = gap(i).hypot(gap(j));
            if dmin > r {
                continue;
            }
            // t-extent of the ball above this cell, widened by the shear
            // over the cell (|z_w - z_c| <= h/√2)
            let t_half = (r * r - dmin * dmin).sqrt();
            let shear = 2.0 * (h / 2f64.sqrt()) * z[0].hypot(z[1]);
            let u_lo = v.t - t_half - shear;
            let u_hi = v.t + t_half + shear;
            let n = ((u_hi - u_lo) / dt).ceil() as usize + 1;
            let u0 = 0.5 * (u_lo + u_hi) - (n - 1) as f64 * dt / 2.0;
            let first = centers.len();
            centers.extend((0..n).map(|k| HPoint::new(z[0], z[1], u0 + k as f64 * dt)));
            columns.insert(
                (i, j),
                Column {
                    first,
                    len: n,
                    z,
                    u0,
                },
            );
        }
    }
    Ok(Cover {
        v: *v,
        r,
        centers,
        columns,
    })
}

/// Draws `samples` uniform points of `B_E(v, r)` and fails on the first
/// one no ball covers.
pub fn verify_cover(cover: &Cover, samples: usize, seed: u64) -> Result<()> {
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let failures: Vec<Option<HPoint>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, purpose::COVER + c as u64);
            let m = CHUNK.min(samples - c * CHUNK);
            for _ in 0..m {
                let w = loop {
                    let d = [
                        r.gen_range(-1.0..=1.0),
                        r.gen_range(-1.0..=1.0),
                        r.gen_range(-1.0..=1.0f64),
                    ];
                    if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= 1.0 {
                        break HPoint::new(
                            cover.v.x + cover.r * d[0],
                            cover.v.y + cover.r * d[1],
                            cover.v.t + cover.r * d[2],
                        );
                    }
                };
                if !cover.covers(&w) {
                    return Some(w);
                }
            }
            None
        })
        .collect();
    match failures.into_iter().flatten().next() {
        Some(w) => Err(HeisError::Uncovered {
            point: [w.x, w.y, w.t],
            radius: cover.r,
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverRow {
    pub r: f64,
    pub count: usize,
    pub count_times_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub v: HPoint,
    pub rows: Vec<CoverRow>,
    /// `max count · r`: the single constant with `count <= ⌈N/r⌉` at every
    /// radius.
    pub n_emp: f64,
    /// Slope of `log count` against `log(1/r)`.
    pub slope: f64,
    pub samples_per_ball: usize,
}

/// Builds and verifies covers over a sweep of radii.
pub fn cover_sweep(v: &HPoint, radii: &[f64], samples: usize, seed: u64) -> Result<CoverReport> {
    let mut rows = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let cover = cover_euclidean_ball(v, r)?;
        verify_cover(&cover, samples, seed.wrapping_add(k as u64))?;
        rows.push(CoverRow {
            r,
            count: cover.count(),
            count_times_r: cover.count() as f64 * r,
        });
    }
    let n_emp = rows.iter().map(|x| x.count_times_r).fold(0.0, f64::max);
    let xs: Vec<f64> = rows.iter().map(|x| x.r).collect();
    let ys: Vec<f64> = rows.iter().map(|x| x.count as f64).collect();
    let slope = fit_log_log(&xs, &ys, true)?.slope;
    Ok(CoverReport {
        v: *v,
        rows,
        n_emp,
        slope,
        samples_per_ball: samples,
    })
}
