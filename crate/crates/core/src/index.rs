//! Uniform anisotropic grids for Korányi ball queries.
//!
//! Points are bucketed into `(h, h, h_t)` cells and stored sorted by cell
//! key, so the candidates of one `(x, y)` column form a contiguous run that
//! two binary searches locate. A Korányi ball `B(c, r)` satisfies
//! `|z - z_c| <= r` and `|t - t_c| <= r^2 + 2 r |z_c|` (the wedge twist),
//! which bounds the columns and the `t` range visited. Exact distances are
//! always re-checked.

use crate::group::{koranyi_dist4, HPoint, VerticalChartPoint};

type Key = (i64, i64, i64);

#[inline]
fn cell(v: f64, h: f64) -> i64 {
    (v / h).floor() as i64
}

/// Sorted-cell index over Heisenberg points.
#[derive(Debug, Clone)]
pub struct BallIndex {
    h: f64,
    h_t: f64,
    keys: Vec<Key>,
    points: Vec<HPoint>,
    weights: Vec<f64>,
    ids: Vec<u32>,
}

impl BallIndex {
    /// Index tuned for query radius `r`: cells `(r, r, r^2)`.
    pub fn for_radius(points: &[HPoint], weights: &[f64], r: f64) -> Self {
        Self::with_cells(points, weights, r, r * r)
    }

    pub fn with_cells(points: &[HPoint], weights: &[f64], h: f64, h_t: f64) -> Self {
        assert_eq!(points.len(), weights.len());
        assert!(h > 0.0 && h_t > 0.0, "cell sizes must be positive");
        let mut order: Vec<(Key, u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((cell(p.x, h), cell(p.y, h), cell(p.t, h_t)), i as u32))
            .collect();
        order.sort_unstable();
        let keys = order.iter().map(|(k, _)| *k).collect();
        let ids: Vec<u32> = order.iter().map(|(_, i)| *i).collect();
        BallIndex {
            h,
            h_t,
            keys,
            points: ids.iter().map(|&i| points[i as usize]).collect(),
            weights: ids.iter().map(|&i| weights[i as usize]).collect(),
            ids,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Calls `f(original index, weight, squared-squared distance)` for every
    /// point with `d(center, p) <= r`, in deterministic index order.
    pub fn for_each_within<F: FnMut(usize, f64, f64)>(&self, center: &HPoint, r: f64, mut f: F) {
        let r4 = r * r * r * r;
        self.for_each_candidate(center, r, |k| {
            let d4 = koranyi_dist4(&self.points[k], center);
            if d4 <= r4 {
                f(self.ids[k] as usize, self.weights[k], d4);
            }
        });
    }

    /// Total weight of the closed ball `B(center, r)`.
    pub fn ball_mass(&self, center: &HPoint, r: f64) -> f64 {
        let mut m = 0.0;
        self.for_each_within(center, r, |_, w, _| m += w);
        m
    }

    pub fn ball_count(&self, center: &HPoint, r: f64) -> usize {
        let mut n = 0;
        self.for_each_within(center, r, |_, _, _| n += 1);
        n
    }

    /// Distance from `center` to the nearest indexed point other than
    /// `exclude`, searched out to `max_r`.
    pub fn nearest_within(&self, center: &HPoint, exclude: usize, max_r: f64) -> Option<f64> {
        let mut best = f64::INFINITY;
        self.for_each_within(center, max_r, |i, _, d4| {
            if i != exclude && d4 < best {
                best = d4;
            }
        });
        best.is_finite().then(|| best.sqrt().sqrt())
    }

    fn for_each_candidate<F: FnMut(usize)>(&self, center: &HPoint, r: f64, mut f: F) {
        let twist = r * r + 2.0 * r * (center.x * center.x + center.y * center.y).sqrt();
        let (a0, a1) = (cell(center.x - r, self.h), cell(center.x + r, self.h));
        let (b0, b1) = (cell(center.y - r, self.h), cell(center.y + r, self.h));
        let (c0, c1) = (
            cell(center.t - twist, self.h_t),
            cell(center.t + twist, self.h_t),
        );
        for a in a0..=a1 {
            for b in b0..=b1 {
                let lo = self.keys.partition_point(|k| *k < (a, b, c0));
                let hi = self.keys.partition_point(|k| *k <= (a, b, c1));
                for k in lo..hi {
                    f(k);
                }
            }
        }
    }
}

/// Sorted-cell index over vertical-chart points with `(h, h^2)` cells.
///
/// The chart metric `(|Δλ1|^4 + |Δλ2|^2)^{1/4}` is translation invariant, so
/// no twist correction is needed.
#[derive(Debug, Clone)]
pub struct ChartIndex {
    h: f64,
    h_t: f64,
    keys: Vec<(i64, i64)>,
    points: Vec<VerticalChartPoint>,
    weights: Vec<f64>,
    ids: Vec<u32>,
}

impl ChartIndex {
    pub fn for_radius(points: &[VerticalChartPoint], weights: &[f64], r: f64) -> Self {
        assert_eq!(points.len(), weights.len());
        assert!(r > 0.0, "radius must be positive");
        let (h, h_t) = (r, r * r);
        let mut order: Vec<((i64, i64), u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((cell(p.lambda1, h), cell(p.lambda2, h_t)), i as u32))
            .collect();
        order.sort_unstable();
        ChartIndex {
            h,
            h_t,
            keys: order.iter().map(|(k, _)| *k).collect(),
            points: order.iter().map(|(_, i)| points[*i as usize]).collect(),
            weights: order.iter().map(|(_, i)| weights[*i as usize]).collect(),
            ids: order.iter().map(|(_, i)| *i).collect(),
        }
    }

    /// Calls `f(original index, weight)` for every point within chart
    /// distance `r` of `center`, in deterministic index order.
    pub fn for_each_within<F: FnMut(usize, f64)>(
        &self,
        center: &VerticalChartPoint,
        r: f64,
        mut f: F,
    ) {
        let r4 = r * r * r * r;
        let r2 = r * r;
        let (a0, a1) = (
            cell(center.lambda1 - r, self.h),
            cell(center.lambda1 + r, self.h),
        );
        let (c0, c1) = (
            cell(center.lambda2 - r2, self.h_t),
            cell(center.lambda2 + r2, self.h_t),
        );
        for a in a0..=a1 {
            let lo = self.keys.partition_point(|k| *k < (a, c0));
            let hi = self.keys.partition_point(|k| *k <= (a, c1));
            for k in lo..hi {
                let p = &self.points[k];
                let da = p.lambda1 - center.lambda1;
                let db = p.lambda2 - center.lambda2;
                let da2 = da * da;
                if da2 * da2 + db * db <= r4 {
                    f(self.ids[k] as usize, self.weights[k]);
                }
            }
        }
    }

    /// Total weight within chart distance `r` of `center`.
    pub fn ball_mass(&self, center: &VerticalChartPoint, r: f64) -> f64 {
        let mut m = 0.0;
        self.for_each_within(center, r, |_, w| m += w);
        m
    }

    /// Chart distance to the nearest point other than one coincident with
    /// `center` by index, searched out to `max_r`.
    pub fn nearest_within(&self, center: &VerticalChartPoint, max_r: f64) -> Option<f64> {
        let r2 = max_r * max_r;
        let (a0, a1) = (
            cell(center.lambda1 - max_r, self.h),
            cell(center.lambda1 + max_r, self.h),
        );
        let (c0, c1) = (
            cell(center.lambda2 - r2, self.h_t),
            cell(center.lambda2 + r2, self.h_t),
        );
        let mut best = f64::INFINITY;
        let mut skipped_self = false;
        for a in a0..=a1 {
            let lo = self.keys.partition_point(|k| *k < (a, c0));
            let hi = self.keys.partition_point(|k| *k <= (a, c1));
            for k in lo..hi {
                let d = self.points[k].dist(center);
                if d == 0.0 && !skipped_self {
                    skipped_self = true;
                    continue;
                }
                best = best.min(d);
            }
        }
        (best <= max_r).then_some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::koranyi_dist;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn ball_queries_match_brute_force() {
        let mut r = rng::stream(11, 0);
        let pts: Vec<HPoint> = (0..3000)
            .map(|_| {
                HPoint::new(
                    r.gen_range(-2.0..2.0),
                    r.gen_range(-2.0..2.0),
                    r.gen_range(-3.0..3.0),
                )
            })
            .collect();
        let w = vec![1.0; pts.len()];
        for &radius in &[0.05, 0.2, 0.7] {
            let idx = BallIndex::for_radius(&pts, &w, radius);
            for c in pts.iter().step_by(97) {
                let brute = pts.iter().filter(|p| koranyi_dist(p, c) <= radius).count();
                assert_eq!(idx.ball_count(c, radius), brute);
                // larger query than the tuned radius still works
                let brute2 = pts
                    .iter()
                    .filter(|p| koranyi_dist(p, c) <= 2.5 * radius)
                    .count();
                assert_eq!(idx.ball_count(c, 2.5 * radius), brute2);
            }
        }
    }

    #[test]
    fn chart_queries_match_brute_force() {
        let mut r = rng::stream(12, 0);
        let pts: Vec<VerticalChartPoint> = (0..2000)
            .map(|_| VerticalChartPoint::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let w = vec![0.5; pts.len()];
        for &radius in &[0.03, 0.1, 0.4] {
            let idx = ChartIndex::for_radius(&pts, &w, radius);
            for c in pts.iter().step_by(53) {
                let brute: f64 = pts
                    .iter()
                    .filter(|p| p.dist(c) <= radius)
                    .map(|_| 0.5)
                    .sum();
                assert_eq!(idx.ball_mass(c, radius), brute);
                let mut ids = Vec::new();
                idx.for_each_within(c, radius, |i, _| ids.push(i));
                ids.sort_unstable();
                let want: Vec<usize> = (0..pts.len())
                    .filter(|&i| pts[i].dist(c) <= radius)
                    .collect();
                assert_eq!(ids, want);
            }
        }
    }
}
