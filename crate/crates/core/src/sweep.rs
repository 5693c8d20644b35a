//! The projection-angle experiment: pushforward ball masses, the empirical
//! exceptional-set fractions, per-angle dimension profiles of projections,
//! and the lower-bound curves for `dim P_θ(A)` in terms of `s = dim A`.

use rayon::prelude::*;

use crate::dimension::{chart_box_dimension, DimensionEstimate};
use crate::error::{HeisError, Result};
use crate::group::{koranyi_dist, project_to_chart, vertical_projection, Angle, HPoint};
use crate::index::ChartIndex;
use crate::measures::WeightedCloud;
use crate::rng::{self, purpose};

fn require_range(s: f64, lo: f64, lo_open: bool, hi: f64, what: &str) -> Result<()> {
    let above = if lo_open { s > lo } else { s >= lo };
    if s.is_finite() && above && s <= hi {
        Ok(())
    } else {
        let open = if lo_open { "(" } else { "[" };
        Err(HeisError::InvalidParameter(format!(
            "{what}: s must lie in {open}{lo}, {hi}], got {s}"
        )))
    }
}

/// The new lower bound: `s/2` on `(2, 5/2]`, `s(s+2)/(4s-1)` on `(5/2, 4]`.
pub fn bound_theorem(s: f64) -> Result<f64> {
    require_range(s, 2.0, true, 4.0, "bound_theorem")?;
    Ok(if s <= 2.5 {
        s / 2.0
    } else {
        s * (s + 2.0) / (4.0 * s - 1.0)
    })
}

/// The earlier bound valid for all Borel sets: `s` below 1, then 1, then
/// `2s - 5` from 3 on.
pub fn bound_bdfm(s: f64) -> Result<f64> {
    require_range(s, 0.0, false, 4.0, "bound_bdfm")?;
    Ok(if s < 1.0 {
        s
    } else if s < 3.0 {
        1.0
    } else {
        2.0 * s - 5.0
    })
}

/// The earlier improvement `1 + (s-1)(s-2)/(32 s²)` for `s >= 2`.
pub fn bound_fh(s: f64) -> Result<f64> {
    require_range(s, 2.0, false, 4.0, "bound_fh")?;
    Ok(1.0 + (s - 1.0) * (s - 2.0) / (32.0 * s * s))
}

/// The two lower constraints on `κ`: `s/2` and `3(s-1)/(4 - 1/s)`.
pub fn kappa_branches(s: f64) -> (f64, f64) {
    (s / 2.0, 3.0 * (s - 1.0) / (4.0 - 1.0 / s))
}

/// The critical `κ(s)`, the larger of the two branches. The theorem's bound
/// is `s - κ(s)`.
pub fn kappa(s: f64) -> Result<f64> {
    require_range(s, 2.0, true, 4.0, "kappa")?;
    let (a, b) = kappa_branches(s);
    Ok(a.max(b))
}

/// `η = 10⁻⁴ · min{κ - s/2, κ - 3(s-1)/(4 - 1/s)}`; rejects `κ` not
/// strictly above both branches.
pub fn eta_choice(s: f64, kappa: f64) -> Result<f64> {
    require_range(s, 2.0, true, 4.0, "eta_choice")?;
    let (a, b) = kappa_branches(s);
    let eta = 1e-4 * (kappa - a).min(kappa - b);
    if eta > 0.0 && kappa.is_finite() {
        Ok(eta)
    } else {
        Err(HeisError::InvalidParameter(format!(
            "kappa {kappa} must exceed max(s/2, 3(s-1)/(4-1/s)) = {}; eta would be {eta}",
            a.max(b)
        )))
    }
}

/// `α = (s - κ + 1000η)/s`, which must land in `(0, 1)`.
pub fn alpha(s: f64, kappa: f64, eta: f64) -> Result<f64> {
    if !(kappa < s) {
        return Err(HeisError::InvalidParameter(format!(
            "kappa {kappa} must be below s {s}"
        )));
    }
    let a = (s - kappa + 1000.0 * eta) / s;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(HeisError::InvalidParameter(format!(
            "alpha = {a} is outside (0,1)"
        )))
    }
}

/// Where the new bound beats both earlier ones: `(2, (12 + √109)/7)`, the
/// right end being the root of `7s² - 24s + 5` where `s(s+2)/(4s-1) = 2s-5`.
pub fn improvement_interval() -> (f64, f64) {
    (2.0, (12.0 + 109f64.sqrt()) / 7.0)
}

/// Bound curves at one dimension; `None` outside a curve's domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValues {
    pub s: f64,
    pub theorem: Option<f64>,
    pub bdfm: Option<f64>,
    pub fh: Option<f64>,
}

impl BoundValues {
    pub fn at(s: f64) -> Self {
        BoundValues {
            s,
            theorem: bound_theorem(s).ok(),
            bdfm: bound_bdfm(s).ok(),
            fh: bound_fh(s).ok(),
        }
    }
}

/// Weight of the points whose vertical projection lies within `δ` of the
/// projection of `y`.
pub fn pushforward_ball_mass(
    cloud: &WeightedCloud,
    theta: Angle,
    y: &HPoint,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(HeisError::InvalidParameter("delta must be positive".into()));
    }
    let py = vertical_projection(&theta, y);
    Ok(cloud
        .points()
        .iter()
        .zip(cloud.weights())
        .filter(|(p, _)| koranyi_dist(&vertical_projection(&theta, p), &py) <= delta)
        .map(|(_, w)| *w)
        .sum())
}

/// The hypothesis side of the exceptional-set estimate, measured on a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct ZDeltaReport {
    pub delta: f64,
    pub s: f64,
    pub eta: f64,
    pub theta_grid: usize,
    /// Indices of the sampled points.
    pub samples: Vec<usize>,
    /// For each sample, the fraction of grid angles where the pushforward
    /// ball has mass at least `δ^s`.
    pub bad_theta_fraction: Vec<f64>,
    /// Estimated mass of points whose fraction is at least `δ^η`.
    pub bad_point_mass: f64,
    /// False when `δ^s` is below four atoms' weight, so a sample's own atom
    /// already nearly meets the threshold and the fractions say more about
    /// the sample size than about the measure.
    pub resolved: bool,
}

impl ZDeltaReport {
    pub fn mean_fraction(&self) -> f64 {
        self.bad_theta_fraction.iter().sum::<f64>() / self.bad_theta_fraction.len() as f64
    }
}

/// Samples `sample_points` points from the cloud and, on a uniform grid of
/// `theta_grid` angles, checks `π_θ#ν(B(π_θ y, δ)) >= δ^s`.
pub fn z_delta_fraction(
    cloud: &WeightedCloud,
    delta: f64,
    s: f64,
    eta: f64,
    theta_grid: usize,
    sample_points: usize,
    seed: u64,
) -> Result<ZDeltaReport> {
    if !(delta > 0.0 && delta.is_finite()) || !(s >= 0.0) || !(eta >= 0.0) {
        return Err(HeisError::InvalidParameter(
            "delta must be positive, s and eta nonnegative".into(),
        ));
    }
    if theta_grid < 64 {
        return Err(HeisError::InvalidParameter(format!(
            "theta grid must have at least 64 angles, got {theta_grid}"
        )));
    }
    if sample_points == 0 {
        return Err(HeisError::InvalidParameter(
            "need at least one sample".into(),
        ));
    }
    let threshold = delta.powf(s);
    let mut r = rng::stream(seed, purpose::ZDELTA);
    let samples = cloud.sample_indices(sample_points, &mut r);

    let hits: Vec<Vec<bool>> = (0..theta_grid)
        .into_par_iter()
        .map(|k| {
            let th = Angle::grid(k, theta_grid);
            let chart: Vec<_> = cloud
                .points()
                .iter()
                .map(|p| project_to_chart(&th, p))
                .collect();
            let index = ChartIndex::for_radius(&chart, cloud.weights(), delta);
            samples
                .iter()
                .map(|&i| index.ball_mass(&chart[i], delta) >= threshold)
                .collect()
        })
        .collect();

    let bad_theta_fraction: Vec<f64> = (0..samples.len())
        .map(|j| hits.iter().filter(|h| h[j]).count() as f64 / theta_grid as f64)
        .collect();
    let cutoff = delta.powf(eta);
    let bad = bad_theta_fraction.iter().filter(|&&f| f >= cutoff).count();
    let max_weight = cloud.weights().iter().copied().fold(0.0, f64::max);
    Ok(ZDeltaReport {
        delta,
        s,
        eta,
        theta_grid,
        samples,
        bad_theta_fraction,
        bad_point_mass: cloud.total_mass() * bad as f64 / sample_points as f64,
        resolved: threshold >= 4.0 * max_weight,
    })
}

/// Per-angle dimension profile of the projections of one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub thetas: Vec<Angle>,
    pub per_theta_dimension: Vec<Result<DimensionEstimate>>,
    /// Bound curves at the cloud's nominal dimension, when it has one.
    pub bounds: Option<BoundValues>,
}

impl SweepResult {
    /// Fraction of grid angles whose estimate reached `threshold`; failed
    /// estimates count as misses.
    pub fn fraction_at_least(&self, threshold: f64) -> f64 {
        let hits = self
            .per_theta_dimension
            .iter()
            .filter(|e| matches!(e, Ok(e) if e.slope >= threshold))
            .count();
        hits as f64 / self.thetas.len() as f64
    }
}

/// Projects the cloud to `V_θ^⊥` for every angle of a uniform grid and
/// estimates the box dimension of each projection in the chart metric.
pub fn sweep_dimension(
    cloud: &WeightedCloud,
    theta_grid: usize,
    scales: &[f64],
) -> Result<SweepResult> {
    if theta_grid < 16 {
        return Err(HeisError::InvalidParameter(format!(
            "sweep grid must have at least 16 angles, got {theta_grid}"
        )));
    }
    let thetas: Vec<Angle> = (0..theta_grid)
        .map(|k| Angle::grid(k, theta_grid))
        .collect();
    let per_theta_dimension = thetas
        .par_iter()
        .map(|th| {
            let chart: Vec<_> = cloud
                .points()
                .iter()
                .map(|p| project_to_chart(th, p))
                .collect();
            chart_box_dimension(&chart, scales)
        })
        .collect();
    Ok(SweepResult {
        thetas,
        per_theta_dimension,
        bounds: cloud.nominal_dim().map(BoundValues::at),
    })
}

/// Like [`sweep_dimension`] at explicitly chosen angles.
pub fn sweep_at(cloud: &WeightedCloud, thetas: &[Angle], scales: &[f64]) -> SweepResult {
    let per_theta_dimension = thetas
        .par_iter()
        .map(|th| {
            let chart: Vec<_> = cloud
                .points()
                .iter()
                .map(|p| project_to_chart(th, p))
                .collect();
            chart_box_dimension(&chart, scales)
        })
        .collect();
    SweepResult {
        thetas: thetas.to_vec(),
        per_theta_dimension,
        bounds: cloud.nominal_dim().map(BoundValues::at),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{sample_cube, sample_vertical_plane};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn theorem_bound_examples() {
        assert!(close(bound_theorem(2.5).unwrap(), 1.25, 1e-15));
        assert!(close(2.5 * 4.5 / 9.0, 1.25, 1e-15));
        assert!(close(bound_theorem(4.0).unwrap(), 1.6, 1e-15));
        assert!(close(bound_theorem(3.0).unwrap(), 15.0 / 11.0, 1e-15));
        assert!(bound_theorem(2.0).is_err());
        assert!(bound_theorem(4.01).is_err());
        assert!(bound_theorem(f64::NAN).is_err());
    }

    #[test]
    fn earlier_bounds() {
        assert_eq!(bound_bdfm(0.5).unwrap(), 0.5);
        assert_eq!(bound_bdfm(2.0).unwrap(), 1.0);
        assert_eq!(bound_bdfm(4.0).unwrap(), 3.0);
        assert_eq!(bound_fh(2.0).unwrap(), 1.0);
        assert!(close(bound_fh(3.0).unwrap(), 1.0 + 2.0 / 288.0, 1e-15));
        assert!(close(bound_fh(3.0).unwrap(), 1.006944, 1e-6));
        assert!(close(bound_fh(4.0).unwrap(), 1.0 + 6.0 / 512.0, 1e-15));
        assert!(close(bound_fh(4.0).unwrap(), 1.011719, 1e-6));
        assert!(bound_fh(1.5).is_err());
    }

    #[test]
    fn kappa_examples() {
        let (a, b) = kappa_branches(2.5);
        assert!(close(a, 1.25, 1e-15) && close(b, 1.25, 1e-15));
        let (a, b) = kappa_branches(4.0);
        assert_eq!(a, 2.0);
        assert!(close(b, 36.0 / 15.0, 1e-15));
        assert!(close(kappa(4.0).unwrap(), 2.4, 1e-15));
        for k in 1..=1000 {
            let s = 2.0 + 2.0 * k as f64 / 1000.0;
            assert!(close(
                bound_theorem(s).unwrap(),
                s - kappa(s).unwrap(),
                1e-12
            ));
        }
    }

    #[test]
    fn eta_and_alpha() {
        let s = 3.0;
        let k = kappa(s).unwrap();
        assert!(eta_choice(s, k).is_err());
        assert!(eta_choice(s, k - 0.1).is_err());
        let eta = eta_choice(s, k + 0.01).unwrap();
        assert!(close(eta, 1e-6, 1e-15));
        let a = alpha(s, k + 0.01, eta).unwrap();
        assert!(close(a, (s - k - 0.01 + 1e-3) / s, 1e-15));
        assert!(a > 0.0 && a < 1.0);
        assert!(alpha(s, 3.5, 0.0).is_err());
    }

    #[test]
    fn improvement_interval_endpoint() {
        let (lo, hi) = improvement_interval();
        assert_eq!(lo, 2.0);
        assert!(close(hi, 3.205755, 1e-5));
        assert!(close(7.0 * hi * hi - 24.0 * hi + 5.0, 0.0, 1e-12));
        assert!(close(bound_theorem(hi).unwrap(), 2.0 * hi - 5.0, 1e-12));
        let beats =
            |s: f64| bound_theorem(s).unwrap() > bound_bdfm(s).unwrap().max(bound_fh(s).unwrap());
        assert!(beats(3.0));
        assert!(!beats(3.5));
        assert!(close(bound_theorem(3.5).unwrap(), 3.5 * 5.5 / 13.0, 1e-15));
    }

    #[test]
    fn pushforward_examples() {
        let th = Angle::new(0.0);
        // projections (0,0,0) and (0,1,0) are at distance 1
        let a = HPoint::new(0.7, 0.0, 0.0);
        let b = HPoint::new(0.0, 1.0, 0.0);
        let pa = vertical_projection(&th, &a);
        let pb = vertical_projection(&th, &b);
        assert!(close(koranyi_dist(&pa, &pb), 1.0, 1e-15));
        let c = WeightedCloud::new(vec![a, b], vec![0.3, 0.7]).unwrap();
        assert_eq!(pushforward_ball_mass(&c, th, &a, 0.5).unwrap(), 0.3);
        assert_eq!(pushforward_ball_mass(&c, th, &a, 10.0).unwrap(), 1.0);
        let single = WeightedCloud::new(vec![a], vec![0.4]).unwrap();
        for d in [1e-6, 1e-2, 1.0] {
            assert_eq!(pushforward_ball_mass(&single, th, &a, d).unwrap(), 0.4);
        }
        assert!(pushforward_ball_mass(&c, th, &a, 0.0).is_err());
    }

    #[test]
    fn pushforward_monotone_and_order_free() {
        let c = sample_cube(500, 2).unwrap();
        let th = Angle::new(1.1);
        let y = c.points()[17];
        let mut prev = 0.0;
        for k in (0..12).rev() {
            let m = pushforward_ball_mass(&c, th, &y, 0.5f64.powi(k)).unwrap();
            assert!(m >= prev);
            prev = m;
        }
        let mut pts = c.points().to_vec();
        pts.reverse();
        let rev = WeightedCloud::uniform(pts).unwrap();
        assert!(close(
            pushforward_ball_mass(&rev, th, &y, 0.1).unwrap(),
            pushforward_ball_mass(&c, th, &y, 0.1).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn z_delta_threshold_extremes() {
        let c = sample_cube(2000, 5).unwrap();
        let tiny = z_delta_fraction(&c, 1.0 / 64.0, 20.0, 0.0, 64, 50, 1).unwrap();
        assert!(close(tiny.bad_point_mass, c.total_mass(), 1e-12));
        let none = z_delta_fraction(&c, 1.0 / 64.0, 0.0, 0.0, 64, 50, 1).unwrap();
        assert_eq!(none.bad_point_mass, 0.0);
        assert!(none.bad_theta_fraction.iter().all(|&f| f == 0.0));
        assert!(z_delta_fraction(&c, 0.1, 3.0, 0.0, 32, 10, 1).is_err());
    }

    #[test]
    fn z_delta_chart_index_matches_direct_mass() {
        let c = sample_cube(800, 6).unwrap();
        let delta = 0.1;
        let rep = z_delta_fraction(&c, delta, 2.0, 0.0, 64, 20, 3).unwrap();
        for (j, &i) in rep.samples.iter().enumerate() {
            let y = c.points()[i];
            let direct = (0..64)
                .filter(|&k| {
                    pushforward_ball_mass(&c, Angle::grid(k, 64), &y, delta).unwrap()
                        >= delta.powf(2.0)
                })
                .count();
            // distances exactly on the boundary may round differently
            let got = (rep.bad_theta_fraction[j] * 64.0).round() as i64;
            assert!((got - direct as i64).abs() <= 1);
        }
    }

    #[test]
    fn plane_swept_at_its_own_angle() {
        let th = Angle::new(0.9);
        let c = sample_vertical_plane(th, 100_000, 3).unwrap();
        let scales: Vec<f64> = (1..=5).map(|k| 0.5f64.powi(k)).collect();
        let r = sweep_at(&c, &[th], &scales);
        let e = r.per_theta_dimension[0].as_ref().unwrap();
        assert!(close(e.slope, 3.0, 0.3), "slope {}", e.slope);
        assert_eq!(r.bounds.unwrap().theorem, Some(15.0 / 11.0));
    }

    #[test]
    fn single_point_sweep_is_flat() {
        let c = WeightedCloud::uniform(vec![HPoint::new(0.5, 0.5, 0.5)]).unwrap();
        let r = sweep_dimension(&c, 16, &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        assert!(r
            .per_theta_dimension
            .iter()
            .all(|e| e.as_ref().unwrap().slope == 0.0));
        assert!(r.bounds.is_none());
        assert!(sweep_dimension(&c, 8, &[0.5]).is_err());
    }
}
