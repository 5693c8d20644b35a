//! Counting incidence quadruples.
//!
//! A quadruple `(v, v₁, v₂, v₃)` counts when, for each `j`, `v_j` lies in
//! the annulus `A(v, t, 2t)` and some grid angle `θ_j` brings the
//! projections within `2δ`, the three witnesses `θ_j` are pairwise
//! separated by at least `δ^{4η}` mod π, and `ζ₂` stays `δ^α` away from the
//! line through `ζ₁, ζ₃` whenever `ζ₁, ζ₃` are both `t/2` away from `ζ`.
//! The count is the `ν⁴` mass of such quadruples; the expected upper bound
//! is `max{t^{2s} δ^{s/2}, t^{1+s} δ^{(1-α)(s-1) - 1000η}}`.
//!
//! For each `v` the witnessed partners `W(v)` (with their angle sets as
//! 64-bit masks) are found exactly through per-angle chart indices; triples
//! from `W(v)` are enumerated when few, sampled otherwise. `v` itself is
//! either enumerated or sampled from `ν`.

use rand::Rng;
use rayon::prelude::*;

use crate::dimension::fit_log_log;
use crate::error::{HeisError, Result};
use crate::group::{koranyi_dist4, project_to_chart, wedge, Angle, Planar};
use crate::index::ChartIndex;
use crate::measures::WeightedCloud;
use crate::rng::{self, purpose};
use crate::sweep::{alpha, eta_choice};

/// Fewer witnessed pairs than this make a count inconclusive.
pub const MIN_QUALIFYING_PAIRS: u64 = 100;

pub const MAX_THETA_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceConfig {
    pub s: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Inner annulus radius.
    pub t: f64,
    pub alpha: f64,
    pub eta: f64,
    /// Minimum pairwise separation of the witness angles, `δ^{4η}` by
    /// default.
    pub theta_separation: f64,
    /// Distance `ζ₂` must keep from `ℓ(ζ₁, ζ₃)`, `δ^α` by default.
    pub line_threshold: f64,
    /// Annulus radii, `t` and `2t` by default.
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    /// Projected closeness as a multiple of `δ`.
    pub proximity: f64,
    /// Sample this many `v` from `ν`; `None` enumerates every point.
    pub v_samples: Option<usize>,
    /// Enumerate triples of `W(v)` when `|W|³` is at most this, otherwise
    /// sample this many.
    pub triple_budget: usize,
}

impl IncidenceConfig {
    /// Derives `η`, `α`, the separation and the line threshold from
    /// `(s, κ, δ)`.
    pub fn new(s: f64, kappa: f64, delta: f64, t: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) || !(t >= 0.0 && t.is_finite()) {
            return Err(HeisError::InvalidParameter(format!(
                "need delta in (0,1) and t >= 0, got delta {delta}, t {t}"
            )));
        }
        let eta = eta_choice(s, kappa)?;
        let alpha = alpha(s, kappa, eta)?;
        Ok(IncidenceConfig {
            s,
            kappa,
            delta,
            t,
            alpha,
            eta,
            theta_separation: delta.powf(4.0 * eta),
            line_threshold: delta.powf(alpha),
            annulus_inner: t,
            annulus_outer: 2.0 * t,
            proximity: 2.0,
            v_samples: None,
            triple_budget: 4096,
        })
    }

    /// Same parameters at another `δ`, re-deriving the `δ`-dependent
    /// thresholds.
    pub fn at_delta(&self, delta: f64) -> Result<Self> {
        let mut c = IncidenceConfig::new(self.s, self.kappa, delta, self.t)?;
        c.annulus_inner = self.annulus_inner;
        c.annulus_outer = self.annulus_outer;
        c.proximity = self.proximity;
        c.v_samples = self.v_samples;
        c.triple_budget = self.triple_budget;
        Ok(c)
    }

    /// `t >= δ^{1 - 100η}`, the regime the estimate is stated for.
    pub fn in_bound_regime(&self) -> bool {
        self.t >= self.delta.powf(1.0 - 100.0 * self.eta)
    }

    /// `δ`-exponent of the count bound on the `log(1/δ)` axis at fixed
    /// `t`: the slower-decaying of the two terms wins.
    pub fn bound_exponent(&self) -> f64 {
        let e_line = (1.0 - self.alpha) * (self.s - 1.0) - 1000.0 * self.eta;
        -(self.s / 2.0).min(e_line)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceReport {
    pub delta: f64,
    /// Estimated `ν⁴` mass of qualifying quadruples.
    pub count: f64,
    pub std_error: f64,
    /// Witnessed `(v, w)` pairs found over all evaluated `v`.
    pub qualifying_pairs: u64,
    pub v_evaluated: usize,
    /// No sampling anywhere: the count is exact.
    pub exact: bool,
    pub inconclusive: bool,
}

struct Partner {
    mask: u64,
    weight: f64,
    z: Planar,
}

fn separated_witnesses(m1: u64, m2: u64, m3: u64, allowed: &[u64]) -> bool {
    let mut a = m1;
    while a != 0 {
        let k1 = a.trailing_zeros() as usize;
        a &= a - 1;
        let mut b = m2 & allowed[k1];
        while b != 0 {
            let k2 = b.trailing_zeros() as usize;
            b &= b - 1;
            if m3 & allowed[k1] & allowed[k2] != 0 {
                return true;
            }
        }
    }
    false
}

/// Euclidean distance from `p` to the line through `a` and `b` (to `a` when
/// they coincide).
pub fn dist_to_line(p: Planar, a: Planar, b: Planar) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let q = [p[0] - a[0], p[1] - a[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        q[0].hypot(q[1])
    } else {
        wedge(d, q).abs() / len
    }
}

/// The conditions on an ordered triple of partners of `v = (z, ·)`.
fn triple_counts(cfg: &IncidenceConfig, z: Planar, p: [&Partner; 3], allowed: &[u64]) -> bool {
    if !separated_witnesses(p[0].mask, p[1].mask, p[2].mask, allowed) {
        return false;
    }
    let far = |q: Planar| (q[0] - z[0]).hypot(q[1] - z[1]) >= cfg.t / 2.0;
    if far(p[0].z) && far(p[2].z) {
        dist_to_line(p[1].z, p[0].z, p[2].z) >= cfg.line_threshold
    } else {
        true
    }
}

/// Per-`v` estimate and its sampling variance.
struct VCount {
    count: f64,
    variance: f64,
    pairs: u64,
    exact: bool,
}

/// Grid angles pairwise at least `sep` apart mod π, as bit masks.
fn allowed_masks(grid: usize, sep: f64) -> Vec<u64> {
    let angles: Vec<Angle> = (0..grid).map(|k| Angle::grid(k, grid)).collect();
    angles
        .iter()
        .map(|a| {
            angles
                .iter()
                .enumerate()
                .filter(|(_, b)| a.circle_dist(b) >= sep)
                .fold(0u64, |m, (k, _)| m | (1u64 << k))
        })
        .collect()
}

/// Monte Carlo (or exact, when budgets allow) quadruple count at one `δ`.
pub fn incidence_experiment(
    cloud: &WeightedCloud,
    cfg: &IncidenceConfig,
    theta_grid: usize,
    seed: u64,
) -> Result<IncidenceReport> {
    if !(3..=MAX_THETA_GRID).contains(&theta_grid) {
        return Err(HeisError::InvalidParameter(format!(
            "incidence theta grid must have 3..=64 angles, got {theta_grid}"
        )));
    }
    if !(cfg.delta > 0.0) || cfg.triple_budget == 0 {
        return Err(HeisError::InvalidParameter(
            "delta and triple_budget must be positive".into(),
        ));
    }
    if !(cfg.annulus_inner >= 0.0 && cfg.annulus_inner <= cfg.annulus_outer) {
        return Err(HeisError::AnnulusOrder {
            inner: cfg.annulus_inner,
            outer: cfg.annulus_outer,
        });
    }
    let n = cloud.len();
    let points = cloud.points();
    let weights = cloud.weights();
    let radius = cfg.proximity * cfg.delta;
    let charts: Vec<Vec<_>> = (0..theta_grid)
        .into_par_iter()
        .map(|k| {
            let th = Angle::grid(k, theta_grid);
            points.iter().map(|p| project_to_chart(&th, p)).collect()
        })
        .collect();
    let indices: Vec<ChartIndex> = charts
        .par_iter()
        .map(|c| ChartIndex::for_radius(c, weights, radius))
        .collect();
    let allowed = allowed_masks(theta_grid, cfg.theta_separation);
    if !separated_witnesses(1, allowed[0], allowed[0], &allowed) {
        // the grid is rotation invariant, so angle 0 speaks for all
        return Err(HeisError::InvalidParameter(format!(
            "no three of {theta_grid} grid angles are pairwise {:.4} apart; use a finer grid",
            cfg.theta_separation
        )));
    }
    let inner4 = cfg.annulus_inner.powi(4);
    let outer4 = cfg.annulus_outer.powi(4);

    let (vs, exhaustive): (Vec<usize>, bool) = match cfg.v_samples {
        Some(k) => {
            let mut r = rng::stream(seed, purpose::INCIDENCE);
            (cloud.sample_indices(k, &mut r), false)
        }
        None => ((0..n).collect(), true),
    };

    let per_v: Vec<VCount> = vs
        .par_iter()
        .enumerate()
        .map_init(
            || (vec![0u64; n], vec![0u8; n], Vec::new()),
            |(mask, seen, touched), (pos, &vi)| {
                let v = &points[vi];
                for k in 0..theta_grid {
                    indices[k].for_each_within(&charts[k][vi], radius, |j, _| {
                        if seen[j] == 0 {
                            let d4 = koranyi_dist4(v, &points[j]);
                            seen[j] = if d4 >= inner4 && d4 <= outer4 { 1 } else { 2 };
                            touched.push(j);
                        }
                        if seen[j] == 1 {
                            mask[j] |= 1u64 << k;
                        }
                    });
                }
                let partners: Vec<Partner> = touched
                    .iter()
                    .filter(|&&j| mask[j] != 0)
                    .map(|&j| Partner {
                        mask: mask[j],
                        weight: weights[j],
                        z: points[j].z(),
                    })
                    .collect();
                for &j in touched.iter() {
                    mask[j] = 0;
                    seen[j] = 0;
                }
                touched.clear();
                let mut r = rng::stream(seed, purpose::INCIDENCE + 1 + pos as u64);
                count_triples(cfg, v.z(), &partners, &allowed, &mut r)
            },
        )
        .collect();

    let pairs: u64 = per_v.iter().map(|c| c.pairs).sum();
    let all_exact = per_v.iter().all(|c| c.exact);
    let (count, std_error) = if exhaustive {
        let count: f64 = vs
            .iter()
            .zip(&per_v)
            .map(|(&i, c)| weights[i] * c.count)
            .sum();
        let var: f64 = vs
            .iter()
            .zip(&per_v)
            .map(|(&i, c)| weights[i] * weights[i] * c.variance)
            .sum();
        (count, var.sqrt())
    } else {
        let k = per_v.len() as f64;
        let mean = per_v.iter().map(|c| c.count).sum::<f64>() / k;
        let var = if per_v.len() > 1 {
            per_v.iter().map(|c| (c.count - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let m = cloud.total_mass();
        (m * mean, m * (var / k).sqrt())
    };
    Ok(IncidenceReport {
        delta: cfg.delta,
        count,
        std_error,
        qualifying_pairs: pairs,
        v_evaluated: vs.len(),
        exact: exhaustive && all_exact,
        inconclusive: pairs < MIN_QUALIFYING_PAIRS,
    })
}

fn count_triples<R: Rng>(
    cfg: &IncidenceConfig,
    z: Planar,
    partners: &[Partner],
    allowed: &[u64],
    rng: &mut R,
) -> VCount {
    let m = partners.len();
    let pairs = m as u64;
    if m == 0 {
        return VCount {
            count: 0.0,
            variance: 0.0,
            pairs,
            exact: true,
        };
    }
    if (m as u128).pow(3) <= cfg.triple_budget as u128 {
        let mut count = 0.0;
        for a in partners {
            for b in partners {
                for c in partners {
                    if triple_counts(cfg, z, [a, b, c], allowed) {
                        count += a.weight * b.weight * c.weight;
                    }
                }
            }
        }
        return VCount {
            count,
            variance: 0.0,
            pairs,
            exact: true,
        };
    }
    let mut cumulative = Vec::with_capacity(m);
    let mut acc = 0.0;
    for p in partners {
        acc += p.weight;
        cumulative.push(acc);
    }
    let draw = |r: &mut R| {
        let u = r.gen::<f64>() * acc;
        &partners[cumulative.partition_point(|&c| c <= u).min(m - 1)]
    };
    let trials = cfg.triple_budget;
    let mut hits = 0usize;
    for _ in 0..trials {
        let (a, b, c) = (draw(rng), draw(rng), draw(rng));
        if triple_counts(cfg, z, [a, b, c], allowed) {
            hits += 1;
        }
    }
    let q = hits as f64 / trials as f64;
    let mass3 = acc * acc * acc;
    VCount {
        count: mass3 * q,
        variance: mass3 * mass3 * q * (1.0 - q) / trials as f64,
        pairs,
        exact: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSweep {
    pub rows: Vec<IncidenceReport>,
    /// Slope of `log count` against `log(1/δ)`; `None` when some count is
    /// zero or inconclusive.
    pub slope: Option<f64>,
    pub bound_exponent: f64,
    /// The slope does not exceed the bound exponent by more than `slack`.
    pub within_bound: Option<bool>,
}

/// Runs the experiment over several `δ`, re-deriving the `δ`-dependent
/// thresholds from `base` each time.
pub fn incidence_sweep(
    cloud: &WeightedCloud,
    base: &IncidenceConfig,
    deltas: &[f64],
    theta_grid: usize,
    seed: u64,
    slack: f64,
) -> Result<IncidenceSweep> {
    let mut rows = Vec::with_capacity(deltas.len());
    for (k, &d) in deltas.iter().enumerate() {
        let cfg = base.at_delta(d)?;
        rows.push(incidence_experiment(
            cloud,
            &cfg,
            theta_grid,
            seed.wrapping_add(k as u64),
        )?);
    }
    let usable = rows.iter().all(|r| r.count > 0.0 && !r.inconclusive);
    let slope = if usable {
        let xs: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.count).collect();
        fit_log_log(&xs, &ys, true).ok().map(|e| e.slope)
    } else {
        None
    };
    let bound_exponent = base.bound_exponent();
    Ok(IncidenceSweep {
        rows,
        slope,
        bound_exponent,
        within_bound: slope.map(|s| s <= bound_exponent + slack),
    })
}
