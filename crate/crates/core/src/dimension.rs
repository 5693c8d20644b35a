//! Box-counting and correlation-integral dimension estimates.
//!
//! Boxes are anisotropic `δ × δ × δ²` cells (parabolic `δ × δ²` in the
//! vertical chart), which are comparable to Korányi balls of radius `δ` and
//! respect the dilations `(z, t) -> (rz, r²t)`.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;

use crate::error::{HeisError, Result};
use crate::group::{koranyi_dist4, HPoint, VerticalChartPoint};
use crate::index::{BallIndex, ChartIndex};
use crate::measures::WeightedCloud;
use crate::rng::{self, purpose};

/// Box-counting needs at least this many scales above resolution.
pub const MIN_BOX_SCALES: usize = 4;

/// Scales finer than this multiple of the cloud resolution are discarded.
pub const RESOLUTION_FACTOR: f64 = 2.0;

/// Pair counts below this are too noisy for the correlation integral.
pub const MIN_PAIRS: u64 = 50;

/// Pair fractions above this see the support's extent.
pub const MAX_PAIR_FRACTION: f64 = 0.25;

/// Below this size the all-pairs loop beats the grid.
const ALL_PAIRS_BELOW: usize = 2000;

/// Larger clouds are subsampled before pair counting.
const MAX_PAIR_POINTS: usize = 200_000;

/// Pairs are counted from at most this many reference points, against
/// every point.
const MAX_REFERENCE_POINTS: usize = 4096;

/// One row of a per-scale table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRow {
    pub scale: f64,
    pub value: f64,
}

/// Least-squares fit of a log-log relation over a window of scales.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for an exactly flat (degenerate) fit.
    pub r_squared: f64,
    /// Smallest and largest scale entering the fit.
    pub window: (f64, f64),
    /// The scales and values that were fitted.
    pub table: Vec<ScaleRow>,
    /// Set when the measured quantity does not vary with scale, so the
    /// slope carries no information beyond "zero-dimensional at this
    /// resolution".
    pub degenerate: bool,
}

impl DimensionEstimate {
    pub(crate) fn degenerate(lo: f64, hi: f64, log_value: f64) -> Self {
        DimensionEstimate {
            slope: 0.0,
            intercept: log_value,
            r_squared: 1.0,
            window: (lo, hi),
            table: Vec::new(),
            degenerate: true,
        }
    }

    /// `slope intercept r2 window_lo window_hi`
    pub fn summary_line(&self) -> String {
        format!(
            "{:.6} {:.6} {:.6} {} {}",
            self.slope, self.intercept, self.r_squared, self.window.0, self.window.1
        )
    }
}

/// Regresses `ln y` on `ln x` (or on `ln(1/x)` when `reciprocal`).
///
/// Needs at least three points. Constant `y` gives a flagged zero slope.
pub fn fit_log_log(xs: &[f64], ys: &[f64], reciprocal: bool) -> Result<DimensionEstimate> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 3 {
        return Err(HeisError::TooFewScales {
            usable: xs.len(),
            required: 3,
        });
    }
    if ys.iter().any(|y| !(*y > 0.0)) {
        return Err(HeisError::DegenerateRegression(
            "log-log fit needs positive values".into(),
        ));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(0.0, f64::max);
    let table: Vec<ScaleRow> = xs
        .iter()
        .zip(ys)
        .map(|(&scale, &value)| ScaleRow { scale, value })
        .collect();
    if ys.iter().all(|y| *y == ys[0]) {
        let mut est = DimensionEstimate::degenerate(lo, hi, ys[0].ln());
        est.table = table;
        return Ok(est);
    }
    let sign = if reciprocal { -1.0 } else { 1.0 };
    let u: Vec<f64> = xs.iter().map(|x| sign * x.ln()).collect();
    let v: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|a| (a - mu) * (a - mu)).sum();
    let suv: f64 = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let svv: f64 = v.iter().map(|b| (b - mv) * (b - mv)).sum();
    if suu <= 0.0 {
        return Err(HeisError::DegenerateRegression(
            "all scales coincide".into(),
        ));
    }
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let r_squared = if svv > 0.0 {
        ((suv * suv) / (suu * svv)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DimensionEstimate {
        slope,
        intercept,
        r_squared,
        window: (lo, hi),
        table,
        degenerate: false,
    })
}

fn check_scales(scales: &[f64]) -> Result<Vec<f64>> {
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(HeisError::InvalidParameter(
            "scales must be positive".into(),
        ));
    }
    let mut s = scales.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s.dedup();
    if s.len() >= 3 {
        let ratio = s[0] / s[1];
        if s.windows(2)
            .any(|w| ((w[0] / w[1]) / ratio - 1.0).abs() > 1e-6)
        {
            return Err(HeisError::InvalidParameter(
                "scales must be geometrically spaced".into(),
            ));
        }
    }
    Ok(s)
}

/// Geometric ratio-2 scales from `1` down to the finer of `2^-8` and
/// [`RESOLUTION_FACTOR`] times `resolution`.
pub fn default_scales(resolution: f64) -> Vec<f64> {
    let floor = (RESOLUTION_FACTOR * resolution).max(0.5f64.powi(8));
    (0..=8)
        .map(|k| 0.5f64.powi(k))
        .filter(|&d| d >= floor)
        .collect()
}

/// Occupied cells of the anisotropic grid at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    pub delta: f64,
    pub anchor: HPoint,
    /// Sorted, deduplicated cell triples.
    pub occupancy: Vec<(i64, i64, i64)>,
}

impl BoxGrid {
    pub fn build(points: &[HPoint], delta: f64, anchor: HPoint) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(HeisError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let d2 = delta * delta;
        let mut occupancy: Vec<(i64, i64, i64)> = points
            .par_iter()
            .map(|p| {
                (
                    ((p.x - anchor.x) / delta).floor() as i64,
                    ((p.y - anchor.y) / delta).floor() as i64,
                    ((p.t - anchor.t) / d2).floor() as i64,
                )
            })
            .collect();
        occupancy.par_sort_unstable();
        occupancy.dedup();
        Ok(BoxGrid {
            delta,
            anchor,
            occupancy,
        })
    }

    pub fn count(&self) -> usize {
        self.occupancy.len()
    }
}

/// Number of occupied `δ × δ × δ²` cells, grid anchored at the origin.
pub fn box_count(cloud: &WeightedCloud, delta: f64) -> Result<usize> {
    box_count_anchored(cloud, delta, HPoint::IDENTITY)
}

pub fn box_count_anchored(cloud: &WeightedCloud, delta: f64, anchor: HPoint) -> Result<usize> {
    Ok(BoxGrid::build(cloud.points(), delta, anchor)?.count())
}

/// Slope of `log N(δ)` against `log(1/δ)` over the scales at least
/// [`RESOLUTION_FACTOR`] times the cloud resolution.
pub fn box_dimension(cloud: &WeightedCloud, scales: &[f64]) -> Result<DimensionEstimate> {
    box_dimension_anchored(cloud, scales, HPoint::IDENTITY)
}

pub fn box_dimension_anchored(
    cloud: &WeightedCloud,
    scales: &[f64],
    anchor: HPoint,
) -> Result<DimensionEstimate> {
    let cutoff = RESOLUTION_FACTOR * cloud.resolution();
    let usable: Vec<f64> = check_scales(scales)?
        .into_iter()
        .filter(|&d| d >= cutoff)
        .collect();
    if usable.len() < MIN_BOX_SCALES {
        return Err(HeisError::TooFewScales {
            usable: usable.len(),
            required: MIN_BOX_SCALES,
        });
    }
    let counts: Vec<f64> = usable
        .iter()
        .map(|&d| box_count_anchored(cloud, d, anchor).map(|c| c as f64))
        .collect::<Result<_>>()?;
    fit_log_log(&usable, &counts, true)
}

/// Number of occupied `δ × δ²` cells of the chart, anchored at the origin.
pub fn chart_box_count(points: &[VerticalChartPoint], delta: f64) -> usize {
    let d2 = delta * delta;
    let mut cells: Vec<(i64, i64)> = points
        .iter()
        .map(|p| {
            (
                (p.lambda1 / delta).floor() as i64,
                (p.lambda2 / d2).floor() as i64,
            )
        })
        .collect();
    cells.sort_unstable();
    cells.dedup();
    cells.len()
}

/// Median nearest-neighbour chart distance between distinct points, over at
/// most 2000 of them. Coincident projections count as one atom.
pub fn chart_resolution(points: &[VerticalChartPoint]) -> f64 {
    let mut distinct = points.to_vec();
    distinct.sort_by(|a, b| {
        a.lambda1
            .total_cmp(&b.lambda1)
            .then(a.lambda2.total_cmp(&b.lambda2))
    });
    distinct.dedup();
    let points = &distinct[..];
    if points.len() < 2 {
        return 0.0;
    }
    let (mut l1, mut l2) = (
        (f64::INFINITY, f64::NEG_INFINITY),
        (f64::INFINITY, f64::NEG_INFINITY),
    );
    for p in points {
        l1 = (l1.0.min(p.lambda1), l1.1.max(p.lambda1));
        l2 = (l2.0.min(p.lambda2), l2.1.max(p.lambda2));
    }
    let extent = (l1.1 - l1.0)
        .max((l2.1 - l2.0).abs().sqrt())
        .max(f64::MIN_POSITIVE);
    let h = (extent / (points.len() as f64).sqrt()).max(extent * 1e-6);
    let weights = vec![1.0; points.len()];
    let index = ChartIndex::for_radius(points, &weights, h);
    let probe: Vec<usize> = if points.len() <= 2000 {
        (0..points.len()).collect()
    } else {
        let mut r = rng::stream(points.len() as u64, purpose::SUBSAMPLE);
        let mut v = sample_indices(&mut r, points.len(), 2000).into_vec();
        v.sort_unstable();
        v
    };
    let mut nn: Vec<f64> = probe
        .iter()
        .map(|&i| {
            let mut r = h / 8.0;
            loop {
                if let Some(d) = index.nearest_within(&points[i], r) {
                    return d;
                }
                if r > 4.0 * extent {
                    return extent;
                }
                r *= 2.0;
            }
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    nn[nn.len() / 2]
}

/// Box dimension in the parabolic chart of a vertical subgroup.
pub fn chart_box_dimension(
    points: &[VerticalChartPoint],
    scales: &[f64],
) -> Result<DimensionEstimate> {
    if points.is_empty() {
        return Err(HeisError::EmptyCloud);
    }
    let cutoff = RESOLUTION_FACTOR * chart_resolution(points);
    let usable: Vec<f64> = check_scales(scales)?
        .into_iter()
        .filter(|&d| d >= cutoff)
        .collect();
    if usable.len() < MIN_BOX_SCALES {
        return Err(HeisError::TooFewScales {
            usable: usable.len(),
            required: MIN_BOX_SCALES,
        });
    }
    let counts: Vec<f64> = usable
        .iter()
        .map(|&d| chart_box_count(points, d) as f64)
        .collect();
    fit_log_log(&usable, &counts, true)
}

/// Weighted masses and counts of ordered pairs `(i, j)` with `i` in `refs`
/// and `j != i` within each (ascending) radius.
fn pair_sums(
    points: &[HPoint],
    weights: &[f64],
    radii: &[f64],
    refs: &[usize],
) -> (Vec<f64>, Vec<u64>) {
    let r4: Vec<f64> = radii.iter().map(|r| r * r * r * r).collect();
    let k = radii.len();
    let bucket = |d4: f64| r4.partition_point(|&x| x < d4);
    let add = |acc: &mut (Vec<f64>, Vec<u64>), b: usize, w: f64| {
        if b < k {
            acc.0[b] += w;
            acc.1[b] += 1;
        }
    };
    const CHUNK: usize = 256;
    let chunks: Vec<(Vec<f64>, Vec<u64>)> = if points.len() < ALL_PAIRS_BELOW {
        refs.par_chunks(CHUNK)
            .map(|ids| {
                let mut acc = (vec![0.0; k], vec![0u64; k]);
                for &i in ids {
                    for j in (0..points.len()).filter(|&j| j != i) {
                        let b = bucket(koranyi_dist4(&points[i], &points[j]));
                        add(&mut acc, b, weights[i] * weights[j]);
                    }
                }
                acc
            })
            .collect()
    } else {
        let r_max = radii[k - 1];
        let index = BallIndex::for_radius(points, weights, r_max);
        refs.par_chunks(CHUNK)
            .map(|ids| {
                let mut acc = (vec![0.0; k], vec![0u64; k]);
                for &i in ids {
                    index.for_each_within(&points[i], r_max, |j, w, d4| {
                        if j != i {
                            add(&mut acc, bucket(d4), weights[i] * w);
                        }
                    });
                }
                acc
            })
            .collect()
    };
    let mut mass = vec![0.0; k];
    let mut count = vec![0u64; k];
    for (m, c) in chunks {
        for b in 0..k {
            mass[b] += m[b];
            count[b] += c[b];
        }
    }
    for b in 1..k {
        mass[b] += mass[b - 1];
        count[b] += count[b - 1];
    }
    (mass, count)
}

/// Slope of the log weighted pair fraction `C(r)` against `log r`.
///
/// Scales are kept where at least [`MIN_PAIRS`] pairs fall within `r` and
/// `C(r) <= MAX_PAIR_FRACTION`. Tiny clouds (fewer than 1000 points) whose
/// pair fraction is a step function come back flagged degenerate; larger
/// clouds with fewer than three usable scales are an error. Pairs are
/// counted from at most 4096 deterministically chosen reference points
/// against the whole cloud, which keeps the cost linear in its size.
pub fn correlation_dimension(cloud: &WeightedCloud, scales: &[f64]) -> Result<DimensionEstimate> {
    if cloud.len() < 2 {
        return Err(HeisError::InvalidParameter(
            "correlation integral needs two points".into(),
        ));
    }
    let mut radii = check_scales(scales)?;
    radii.reverse();
    let (points, weights): (Vec<HPoint>, Vec<f64>) = if cloud.len() > MAX_PAIR_POINTS {
        let mut r = rng::stream(cloud.len() as u64, purpose::SUBSAMPLE);
        let mut keep = sample_indices(&mut r, cloud.len(), MAX_PAIR_POINTS).into_vec();
        keep.sort_unstable();
        keep.iter()
            .map(|&i| (cloud.points()[i], cloud.weights()[i]))
            .unzip()
    } else {
        (cloud.points().to_vec(), cloud.weights().to_vec())
    };
    let refs: Vec<usize> = if points.len() > MAX_REFERENCE_POINTS {
        let mut r = rng::stream(points.len() as u64, purpose::SUBSAMPLE + 1);
        let mut v = sample_indices(&mut r, points.len(), MAX_REFERENCE_POINTS).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..points.len()).collect()
    };
    let total: f64 = weights.iter().sum();
    // mass of all ordered pairs with a reference first
    let denom: f64 = refs
        .iter()
        .map(|&i| weights[i] * (total - weights[i]))
        .sum();
    let (mass, count) = pair_sums(&points, &weights, &radii, &refs);
    let fractions: Vec<f64> = mass.iter().map(|m| m / denom).collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(fractions.iter().zip(&count))
        .filter(|(_, (&f, &c))| c >= MIN_PAIRS && f <= MAX_PAIR_FRACTION)
        .map(|(&r, (&f, _))| (r, f))
        .unzip();
    if xs.len() < 3 {
        if cloud.len() < 1000 {
            let last = fractions.iter().copied().fold(0.0, f64::max);
            return Ok(DimensionEstimate::degenerate(
                radii[0],
                radii[radii.len() - 1],
                last.max(f64::MIN_POSITIVE).ln(),
            ));
        }
        return Err(HeisError::TooFewScales {
            usable: xs.len(),
            required: 3,
        });
    }
    fit_log_log(&xs, &ys, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{dilate, koranyi_dist, project_to_chart, Angle};
    use crate::measures::{sample_cube, sample_horizontal_line};

    fn dyadic(from: i32, to: i32) -> Vec<f64> {
        (from..=to).map(|k| 0.5f64.powi(k)).collect()
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.5)).collect();
        let e = fit_log_log(&xs, &ys, true).unwrap();
        assert!((e.slope - 2.5).abs() < 1e-12);
        assert!((e.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((e.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(e.window, (0.0625, 0.5));
        assert!(fit_log_log(&xs[..2], &ys[..2], true).is_err());
    }

    #[test]
    fn single_point_box_counts() {
        let c = WeightedCloud::uniform(vec![HPoint::new(0.3, -0.2, 5.0)]).unwrap();
        for d in dyadic(0, 10) {
            assert_eq!(box_count(&c, d).unwrap(), 1);
        }
        let e = box_dimension(&c, &dyadic(1, 6)).unwrap();
        assert_eq!(e.slope, 0.0);
        assert!(e.degenerate);
        assert!(box_count(&c, 0.0).is_err());
    }

    #[test]
    fn full_cube_grid_count_matches_analytic() {
        // one point per cell of the 1/8 grid fills every cell of [0,1]^3
        let mut pts = Vec::new();
        let (m, mt) = (8usize, 64usize);
        for i in 0..m {
            for j in 0..m {
                for k in 0..mt {
                    pts.push(HPoint::new(
                        (i as f64 + 0.5) / m as f64,
                        (j as f64 + 0.5) / m as f64,
                        (k as f64 + 0.5) / mt as f64,
                    ));
                }
            }
        }
        let c = WeightedCloud::uniform(pts).unwrap();
        for d in [0.5f64, 0.25, 0.125] {
            let n = (1.0 / d).ceil();
            assert_eq!(
                box_count(&c, d).unwrap() as f64,
                n * n * (1.0 / (d * d)).ceil()
            );
        }
    }

    #[test]
    fn box_count_invariances() {
        let c = sample_cube(5000, 3).unwrap();
        let d = 0.125;
        let base = box_count(&c, d).unwrap();
        let shifted = c
            .map_points(|p| HPoint::new(p.x + 3.0 * d, p.y - 5.0 * d, p.t + 7.0 * d * d))
            .unwrap();
        assert_eq!(box_count(&shifted, d).unwrap(), base);
        // coarsening never adds cells
        for k in 1..7 {
            let fine = box_count(&c, 0.5f64.powi(k + 1)).unwrap();
            let coarse = box_count(&c, 0.5f64.powi(k)).unwrap();
            assert!(coarse <= fine);
        }
        // dilation by 2 with the scale dilated alike
        let dilated = c.map_points(|p| dilate(2.0, p).unwrap()).unwrap();
        for k in 1..6 {
            let d = 0.5f64.powi(k);
            assert_eq!(
                box_count(&dilated, 2.0 * d).unwrap(),
                box_count(&c, d).unwrap()
            );
        }
        // permutation
        let mut pts = c.points().to_vec();
        pts.reverse();
        let rev = WeightedCloud::uniform(pts).unwrap();
        assert_eq!(box_count(&rev, d).unwrap(), base);
    }

    #[test]
    fn box_dimension_needs_enough_scales() {
        let c = sample_cube(1000, 1).unwrap();
        assert!(matches!(
            box_dimension(&c, &[0.5, 0.25, 0.125]),
            Err(HeisError::TooFewScales { .. })
        ));
        assert!(box_dimension(&c, &[0.5, 0.25, 0.2, 0.1]).is_err());
    }

    #[test]
    fn weights_do_not_affect_box_dimension() {
        let c = sample_horizontal_line(Angle::new(1.0), 4000, 8).unwrap();
        let heavy = WeightedCloud::new(c.points().to_vec(), vec![7.0; c.len()]).unwrap();
        let s = dyadic(2, 8);
        assert_eq!(
            box_dimension(&c, &s).unwrap(),
            box_dimension(&heavy, &s).unwrap()
        );
    }

    #[test]
    fn chart_examples() {
        let one = [VerticalChartPoint::new(0.1, 0.7)];
        let e = chart_box_dimension(&one, &dyadic(1, 6)).unwrap();
        assert_eq!(e.slope, 0.0);

        // a full chart square: one point per finest cell
        let (m, mt) = (64usize, 4096usize);
        let mut sq = Vec::with_capacity(m * mt);
        for i in 0..m {
            for j in 0..mt {
                sq.push(VerticalChartPoint::new(
                    (i as f64 + 0.5) / m as f64,
                    (j as f64 + 0.5) / mt as f64,
                ));
            }
        }
        for d in dyadic(1, 6) {
            assert_eq!(chart_box_count(&sq, d) as f64, (1.0 / d) * (1.0 / (d * d)));
        }
        let e = chart_box_dimension(&sq, &dyadic(1, 5)).unwrap();
        assert!((e.slope - 3.0).abs() <= 0.2, "slope {}", e.slope);

        let seg: Vec<VerticalChartPoint> = (0..5000)
            .map(|k| VerticalChartPoint::new(k as f64 / 5000.0, 0.3))
            .collect();
        let e = chart_box_dimension(&seg, &dyadic(2, 8)).unwrap();
        assert!((e.slope - 1.0).abs() <= 0.2, "slope {}", e.slope);
    }

    #[test]
    fn chart_resolution_of_projected_line() {
        let th = Angle::new(0.4);
        let pts: Vec<VerticalChartPoint> = (0..=100)
            .map(|k| project_to_chart(&th, &HPoint::new(0.0, k as f64 / 100.0, 0.0)))
            .collect();
        assert!(chart_resolution(&pts) > 0.0);
    }

    #[test]
    fn correlation_pair_sums_agree_between_paths() {
        let c = sample_cube(2500, 4).unwrap();
        let radii = [0.05, 0.1, 0.2];
        let all: Vec<usize> = (0..c.len()).collect();
        let (m, n) = pair_sums(c.points(), c.weights(), &radii, &all);
        for (k, &r) in radii.iter().enumerate() {
            let mut brute = 0u64;
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    if koranyi_dist(&c.points()[i], &c.points()[j]) <= r {
                        brute += 1;
                    }
                }
            }
            assert_eq!(n[k], 2 * brute);
            let w = c.weights()[0];
            assert!((m[k] - 2.0 * brute as f64 * w * w).abs() < 1e-9);
        }
    }

    #[test]
    fn correlation_two_points_is_degenerate() {
        let c = WeightedCloud::uniform(vec![HPoint::IDENTITY, HPoint::new(0.3, 0.0, 0.0)]).unwrap();
        let e = correlation_dimension(&c, &dyadic(0, 6)).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.slope, 0.0);
    }

    #[test]
    fn default_window() {
        assert_eq!(default_scales(0.0), dyadic(0, 8));
        assert_eq!(default_scales(0.02), dyadic(0, 4));
    }
}
