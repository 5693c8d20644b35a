//! Near-collision angle sets of projected pairs, and the oscillation
//! function behind their structure.
//!
//! For `v ≠ w` the set `{θ : d(P_θ v, P_θ w) <= δ}` is a union of at most
//! 40 arcs, each of length `<= C δ / d(v, w)`. The set is found by a dense
//! scan of `g(θ) = d(P_θ v, P_θ w) - δ` followed by bisection of every sign
//! change.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::dimension::fit_log_log;
use crate::error::{HeisError, Result};
use crate::group::{koranyi_dist, project_to_chart, wedge, Angle, HPoint, Planar};
use crate::rng::{self, purpose};

/// The interval-count bound being checked.
pub const MAX_INTERVALS: usize = 40;

pub const DEFAULT_SCAN: usize = 1 << 16;

pub const DEFAULT_REFINE_TOL: f64 = 1e-10;

/// Closed arcs of `[0, π)` taken mod π, sorted by start. An arc may run
/// past π, in which case it wraps around through 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleIntervalSet {
    /// `(start, end)` with `0 <= start < π` and `start <= end < start + π`.
    pub intervals: Vec<(f64, f64)>,
    /// The set is all of `[0, π)`.
    pub whole_circle: bool,
    /// `v = w`: the distance is identically zero.
    pub coincident: bool,
}

impl AngleIntervalSet {
    fn whole(coincident: bool) -> Self {
        AngleIntervalSet {
            intervals: vec![(0.0, PI)],
            whole_circle: true,
            coincident,
        }
    }

    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn max_length(&self) -> f64 {
        self.intervals
            .iter()
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, theta: f64) -> bool {
        let th = theta.rem_euclid(PI);
        self.intervals
            .iter()
            .any(|&(a, b)| (a <= th && th <= b) || (b >= PI && th <= b - PI))
    }
}

/// Projected distance as a function of the angle, for one pair.
struct PairProfile {
    v: HPoint,
    w: HPoint,
}

impl PairProfile {
    #[inline]
    fn dist(&self, theta: f64) -> f64 {
        let th = Angle::new(theta);
        project_to_chart(&th, &self.v).dist(&project_to_chart(&th, &self.w))
    }

    fn scan(&self, samples: usize) -> Vec<f64> {
        (0..samples)
            .map(|k| self.dist(k as f64 * PI / samples as f64))
            .collect()
    }

    /// Boundary between `lo` (inside iff `inside_lo`) and `hi`, to `tol`.
    fn bisect(&self, mut lo: f64, mut hi: f64, delta: f64, inside_lo: bool, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if (self.dist(mid) <= delta) == inside_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn intervals(&self, scan: &[f64], delta: f64, tol: f64) -> AngleIntervalSet {
        let n = scan.len();
        let step = PI / n as f64;
        let inside: Vec<bool> = scan.iter().map(|&d| d <= delta).collect();
        if inside.iter().all(|&b| b) {
            return AngleIntervalSet::whole(false);
        }
        if !inside.iter().any(|&b| b) {
            return AngleIntervalSet {
                intervals: Vec::new(),
                whole_circle: false,
                coincident: false,
            };
        }
        // start from an outside sample so no run is split by the wrap
        let first_out = inside.iter().position(|&b| !b).unwrap();
        let mut arcs = Vec::new();
        let mut start: Option<f64> = None;
        for m in 1..=n {
            let k = first_out + m;
            let (prev, cur) = (inside[(k - 1) % n], inside[k % n]);
            let (a, b) = ((k - 1) as f64 * step, k as f64 * step);
            if !prev && cur {
                start = Some(self.bisect_rising(a, b, delta, tol));
            } else if prev && !cur {
                let end = self.bisect(a, b, delta, true, tol);
                arcs.push((start.take().unwrap(), end));
            }
        }
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in arcs {
            match merged.last_mut() {
                Some(last) if a - last.1 <= 2.0 * tol => last.1 = b,
                _ => merged.push((a, b)),
            }
        }
        if merged.len() > 1 {
            let (a0, _) = merged[0];
            let (_, bl) = *merged.last().unwrap();
            if a0 + PI - bl <= 2.0 * tol {
                let last = merged.pop().unwrap();
                merged[0] = (last.0, merged[0].1 + PI);
            }
        }
        let mut intervals: Vec<(f64, f64)> = merged
            .into_iter()
            .map(|(a, b)| {
                let shift = (a / PI).floor() * PI;
                (a - shift, b - shift)
            })
            .collect();
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        AngleIntervalSet {
            intervals,
            whole_circle: false,
            coincident: false,
        }
    }

    /// Boundary between an outside angle `lo` and an inside angle `hi`.
    fn bisect_rising(&self, mut lo: f64, mut hi: f64, delta: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.dist(mid) <= delta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `{θ ∈ [0, π) : d(P_θ v, P_θ w) <= δ}` with endpoints refined to
/// `refine_tol`, from a scan of [`DEFAULT_SCAN`] angles.
pub fn near_angle_set(
    v: &HPoint,
    w: &HPoint,
    delta: f64,
    refine_tol: f64,
) -> Result<AngleIntervalSet> {
    near_angle_set_scanned(v, w, delta, refine_tol, DEFAULT_SCAN)
}

pub fn near_angle_set_scanned(
    v: &HPoint,
    w: &HPoint,
    delta: f64,
    refine_tol: f64,
    samples: usize,
) -> Result<AngleIntervalSet> {
    if !(delta > 0.0) || !(refine_tol > 0.0) || samples < 8 {
        return Err(HeisError::InvalidParameter(
            "delta and refine_tol must be positive, scan at least 8 angles".into(),
        ));
    }
    if v == w {
        return Ok(AngleIntervalSet::whole(true));
    }
    let profile = PairProfile { v: *v, w: *w };
    let scan = profile.scan(samples);
    Ok(profile.intervals(&scan, delta, refine_tol))
}

/// `a` and the unit vectors `p`, `q` of `F(θ) = a + 2 p ∧ π_θ(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversalityFrame {
    pub a: f64,
    pub p: Planar,
    pub q: Planar,
}

impl TransversalityFrame {
    pub fn new(a: f64, p: Planar, q: Planar) -> Result<Self> {
        let unit = |u: Planar| ((u[0] * u[0] + u[1] * u[1]).sqrt() - 1.0).abs() <= 1e-12;
        if !unit(p) || !unit(q) || !a.is_finite() {
            return Err(HeisError::InvalidParameter(
                "frame vectors must be unit length".into(),
            ));
        }
        Ok(TransversalityFrame { a, p, q })
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let (u, v): (f64, f64) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        TransversalityFrame {
            a: rng.gen_range(-2.0..2.0),
            p: [u.cos(), u.sin()],
            q: [v.cos(), v.sin()],
        }
    }
}

/// `(F, F', F'')` at `θ`, with `∂_θ π_θ(q) = ⟨q, ie⟩ e + ⟨q, e⟩ ie`.
pub fn transversality_f(frame: &TransversalityFrame, theta: Angle) -> (f64, f64, f64) {
    let e = theta.direction();
    let ie = theta.normal();
    let qe = frame.q[0] * e[0] + frame.q[1] * e[1];
    let qie = frame.q[0] * ie[0] + frame.q[1] * ie[1];
    let proj = [qe * e[0], qe * e[1]];
    let d1 = [qie * e[0] + qe * ie[0], qie * e[1] + qe * ie[1]];
    let d2 = [qie * ie[0] - qe * e[0], qie * ie[1] - qe * e[1]];
    (
        frame.a + 2.0 * wedge(frame.p, proj),
        2.0 * wedge(frame.p, d1),
        4.0 * wedge(frame.p, d2),
    )
}

/// Which construction produced a test pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFamily {
    /// Independent uniform points of `[-1,1]^3`.
    Generic,
    /// `w = v * (Δ, 0)`: the second component of `d(v, w)` vanishes.
    Horizontal,
    /// Horizontal with `|ζ| = |z|`, the pairs that actually come close
    /// under projection for small `δ`.
    Extremal,
}

impl PairFamily {
    pub fn name(self) -> &'static str {
        match self {
            PairFamily::Generic => "generic",
            PairFamily::Horizontal => "horizontal",
            PairFamily::Extremal => "extremal",
        }
    }

    pub fn sample<R: Rng>(self, rng: &mut R) -> (HPoint, HPoint) {
        let v = HPoint::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let zeta = match self {
            PairFamily::Generic => {
                return (
                    v,
                    HPoint::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                )
            }
            PairFamily::Horizontal => [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            PairFamily::Extremal => {
                let psi: f64 = rng.gen_range(0.0..2.0 * PI);
                let (c, s) = (psi.cos(), psi.sin());
                [c * v.x - s * v.y, s * v.x + c * v.y]
            }
        };
        let tau = v.t - 2.0 * wedge(v.z(), zeta);
        (v, HPoint::from_parts(zeta, tau))
    }
}

/// One `(pair, δ)` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityRow {
    pub pair_id: usize,
    pub family: PairFamily,
    pub d_h: f64,
    pub delta: f64,
    pub n_intervals: usize,
    pub max_len: f64,
    /// `max_len · d / δ`, the constant this observation demands.
    pub c_emp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityConfig {
    pub pairs: usize,
    pub deltas: Vec<f64>,
    pub refine_tol: f64,
    pub scan: usize,
    pub seed: u64,
    /// Extremal pairs closer than this are left out of the slope fit, so
    /// that `δ/d` stays small.
    pub fit_min_distance: f64,
}

impl TransversalityConfig {
    pub fn new(pairs: usize, deltas: Vec<f64>, seed: u64) -> Self {
        TransversalityConfig {
            pairs,
            deltas,
            refine_tol: DEFAULT_REFINE_TOL,
            scan: DEFAULT_SCAN,
            seed,
            fit_min_distance: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityReport {
    pub rows: Vec<TransversalityRow>,
    pub max_count: usize,
    /// Every observation had at most [`MAX_INTERVALS`] arcs.
    pub counts_ok: bool,
    /// Largest `max_len · d / δ` over observations with `d > δ`.
    pub c_emp: f64,
    /// Slope of `log max_len` against `log(δ/d)` over nonempty extremal
    /// observations; `None` when fewer than three qualify.
    pub slope: Option<f64>,
    pub fit_points: usize,
}

/// Checks the interval count and length scaling on `pairs` random pairs
/// cycling through the [`PairFamily`] constructions.
pub fn verify_transversality(cfg: &TransversalityConfig) -> Result<TransversalityReport> {
    if cfg.pairs == 0 || cfg.deltas.is_empty() || cfg.deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(HeisError::InvalidParameter(
            "need pairs and positive deltas".into(),
        ));
    }
    let families = [
        PairFamily::Generic,
        PairFamily::Horizontal,
        PairFamily::Extremal,
    ];
    let per_pair: Vec<Vec<TransversalityRow>> = (0..cfg.pairs)
        .into_par_iter()
        .map(|id| {
            let mut r = rng::stream(cfg.seed, purpose::TRANSVERSALITY + id as u64);
            let family = families[id % families.len()];
            let (v, w) = loop {
                let (v, w) = family.sample(&mut r);
                if v != w {
                    break (v, w);
                }
            };
            let d_h = koranyi_dist(&v, &w);
            let profile = PairProfile { v, w };
            let scan = profile.scan(cfg.scan);
            cfg.deltas
                .iter()
                .map(|&delta| {
                    let set = profile.intervals(&scan, delta, cfg.refine_tol);
                    let max_len = set.max_length();
                    TransversalityRow {
                        pair_id: id,
                        family,
                        d_h,
                        delta,
                        n_intervals: set.count(),
                        max_len,
                        c_emp: max_len * d_h / delta,
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<TransversalityRow> = per_pair.into_iter().flatten().collect();
    let max_count = rows.iter().map(|r| r.n_intervals).max().unwrap_or(0);
    let c_emp = rows
        .iter()
        .filter(|r| r.d_h > r.delta)
        .map(|r| r.c_emp)
        .fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| {
            r.family == PairFamily::Extremal
                && r.max_len > 0.0
                && r.d_h >= cfg.fit_min_distance
                && r.delta < r.d_h
        })
        .map(|r| (r.delta / r.d_h, r.max_len))
        .unzip();
    let slope = fit_log_log(&xs, &ys, false).ok().map(|e| e.slope);
    Ok(TransversalityReport {
        max_count,
        counts_ok: max_count <= MAX_INTERVALS,
        c_emp,
        slope,
        fit_points: xs.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sets() {
        let v = HPoint::new(0.3, 0.1, 0.2);
        let w = HPoint::new(-0.1, 0.4, 0.0);
        let big = near_angle_set(&v, &w, 10.0, 1e-9).unwrap();
        assert!(big.whole_circle && big.count() == 1);
        let none = near_angle_set(&v, &w, 1e-6, 1e-9).unwrap();
        assert!(none.is_empty());
        let same = near_angle_set(&v, &v, 0.1, 1e-9).unwrap();
        assert!(same.coincident && same.whole_circle);
        assert!(near_angle_set(&v, &w, 0.0, 1e-9).is_err());
    }

    #[test]
    fn unit_horizontal_pair_against_dense_scan() {
        // P_θ v has chart coordinates (-sin θ, sin 2θ), so the set is a
        // short arc around θ = 0 (wrapping through π)
        let v = HPoint::new(1.0, 0.0, 0.0);
        let w = HPoint::IDENTITY;
        let delta = 0.1;
        let set = near_angle_set(&v, &w, delta, 1e-12).unwrap();
        assert_eq!(set.count(), 1);
        let n = 1_000_000;
        let mut mismatches = 0;
        for k in 0..n {
            let th = k as f64 * PI / n as f64;
            let a = Angle::new(th);
            let inside = koranyi_dist(
                &crate::group::vertical_projection(&a, &v),
                &crate::group::vertical_projection(&a, &w),
            ) <= delta;
            if inside != set.contains(th) {
                mismatches += 1;
            }
        }
        // only samples within refine_tol of an endpoint may disagree
        assert!(mismatches <= 2, "{mismatches} mismatches");
    }

    #[test]
    fn wrapping_interval_is_single_arc() {
        let v = HPoint::new(1.0, 0.0, 0.0);
        let set = near_angle_set(&v, &HPoint::IDENTITY, 0.2, 1e-10).unwrap();
        assert_eq!(set.count(), 1);
        let (a, b) = set.intervals[0];
        assert!(b > PI && a < PI);
        assert!(set.contains(0.0) && set.contains(PI - 1e-3) && set.contains(1e-3));
    }

    #[test]
    fn endpoints_stable_under_finer_scan() {
        let mut r = rng::stream(4, 0);
        for _ in 0..20 {
            let (v, w) = PairFamily::Extremal.sample(&mut r);
            let tol = 1e-9;
            let a = near_angle_set_scanned(&v, &w, 0.05, tol, 1 << 14).unwrap();
            let b = near_angle_set_scanned(&v, &w, 0.05, tol, 10 << 14).unwrap();
            assert_eq!(a.count(), b.count());
            for (x, y) in a.intervals.iter().zip(&b.intervals) {
                assert!((x.0 - y.0).abs() < tol && (x.1 - y.1).abs() < tol);
            }
        }
    }

    #[test]
    fn oscillation_identity_and_derivatives() {
        let mut r = rng::stream(9, 0);
        for _ in 0..200 {
            let f = TransversalityFrame::random(&mut r);
            for _ in 0..50 {
                let th = r.gen_range(0.0..PI);
                let (_, d1, d2) = transversality_f(&f, Angle::new(th));
                assert!(((d1 / 2.0).powi(2) + (d2 / 4.0).powi(2) - 1.0).abs() < 1e-12);
                let h = 1e-5;
                let fd = (transversality_f(&f, Angle::new(th + h)).0
                    - transversality_f(&f, Angle::new(th - h)).0)
                    / (2.0 * h);
                assert!((d1 - fd).abs() <= 1e-6);
            }
        }
        assert!(TransversalityFrame::new(0.0, [1.0, 1.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn small_verification_run() {
        let cfg = TransversalityConfig {
            scan: 1 << 12,
            ..TransversalityConfig::new(30, vec![1e-1, 1e-2], 5)
        };
        let rep = verify_transversality(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 60);
        assert!(rep.counts_ok);
        let again = verify_transversality(&cfg).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn horizontal_pairs_have_zero_second_component() {
        let mut r = rng::stream(2, 0);
        for fam in [PairFamily::Horizontal, PairFamily::Extremal] {
            for _ in 0..100 {
                let (v, w) = fam.sample(&mut r);
                assert!(crate::group::second_component(&v, &w).abs() < 1e-14);
            }
        }
    }
}
