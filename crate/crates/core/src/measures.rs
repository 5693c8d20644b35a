//! Weighted point clouds standing in for compactly supported Borel measures,
//! their generators, the plain-text cloud format, and the empirical Frostman
//! exponent.

use std::io::{BufRead, Write};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use crate::dimension::{fit_log_log, DimensionEstimate};
use crate::error::{HeisError, Result};
use crate::group::{koranyi_dist, vertical_embed, Angle, HPoint, VerticalChartPoint};
use crate::index::BallIndex;
use crate::rng::{self, purpose};

/// Axis-aligned bounding box of a cloud in `(x, y, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    fn of(points: &[HPoint]) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for (k, v) in [p.x, p.y, p.t].into_iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        BoundingBox { min, max }
    }

    pub fn contains(&self, p: &HPoint) -> bool {
        let c = [p.x, p.y, p.t];
        (0..3).all(|k| self.min[k] <= c[k] && c[k] <= self.max[k])
    }

    /// Korányi distance between opposite corners, an upper bound on
    /// nothing in particular but a serviceable length scale.
    pub fn koranyi_extent(&self) -> f64 {
        let lo = HPoint::new(self.min[0], self.min[1], self.min[2]);
        let hi = HPoint::new(self.max[0], self.max[1], self.max[2]);
        let a = HPoint::new(self.min[0], self.max[1], self.max[2]);
        let b = HPoint::new(self.max[0], self.min[1], self.min[2]);
        koranyi_dist(&lo, &hi).max(koranyi_dist(&a, &b))
    }
}

/// A finite weighted point set.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCloud {
    points: Vec<HPoint>,
    weights: Vec<f64>,
    total_mass: f64,
    bbox: BoundingBox,
    nominal_dim: Option<f64>,
}

impl WeightedCloud {
    pub fn new(points: Vec<HPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(HeisError::EmptyCloud);
        }
        if points.len() != weights.len() {
            return Err(HeisError::InvalidParameter(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(HeisError::InvalidParameter(format!("non-finite point {p}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(HeisError::InvalidParameter(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        let total_mass = compensated_sum(&weights);
        if total_mass <= 0.0 {
            return Err(HeisError::InvalidParameter("total mass is zero".into()));
        }
        let bbox = BoundingBox::of(&points);
        Ok(WeightedCloud {
            points,
            weights,
            total_mass,
            bbox,
            nominal_dim: None,
        })
    }

    /// Equal weights summing to one.
    pub fn uniform(points: Vec<HPoint>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let n = points.len();
        Self::new(points, vec![w; n])
    }

    pub fn with_nominal_dim(mut self, s: f64) -> Self {
        self.nominal_dim = Some(s);
        self
    }

    /// Dimension declared by the generator (similarity or subgroup dimension).
    pub fn nominal_dim(&self) -> Option<f64> {
        self.nominal_dim
    }

    pub fn points(&self) -> &[HPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_weight(&self) -> f64 {
        self.total_mass / self.points.len() as f64
    }

    /// Applies `f` to every point, keeping the weights.
    pub fn map_points<F: Fn(&HPoint) -> HPoint>(&self, f: F) -> Result<Self> {
        let pts = self.points.iter().map(f).collect();
        let mut out = Self::new(pts, self.weights.clone())?;
        out.nominal_dim = self.nominal_dim;
        Ok(out)
    }

    /// Draws `k` point indices distributed according to the weights.
    pub fn sample_indices<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        let mut cumulative = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        (0..k)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                cumulative.partition_point(|&c| c <= u).min(self.len() - 1)
            })
            .collect()
    }

    /// Median nearest-neighbour Korányi distance over a deterministic
    /// subsample of at most 2000 points; zero for a single point.
    ///
    /// Below this scale the cloud cannot be told apart from a finite set of
    /// atoms.
    pub fn resolution(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let extent = self.bbox.koranyi_extent().max(f64::MIN_POSITIVE);
        let h = (extent / (self.len() as f64).powf(0.25)).max(extent * 1e-6);
        let index = BallIndex::for_radius(&self.points, &self.weights, h);
        let probe: Vec<usize> = if self.len() <= 2000 {
            (0..self.len()).collect()
        } else {
            let mut r = rng::stream(self.len() as u64, purpose::SUBSAMPLE);
            let mut v = sample_indices(&mut r, self.len(), 2000).into_vec();
            v.sort_unstable();
            v
        };
        let mut nn: Vec<f64> = probe
            .par_iter()
            .map(|&i| {
                let mut r = h / 8.0;
                loop {
                    if let Some(d) = index.nearest_within(&self.points[i], i, r) {
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
}

/// Neumaier summation, so that `n` equal weights `1/n` add up to 1 within
/// a few ulps.
pub(crate) fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn require_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(HeisError::InvalidParameter(
            "sample size must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// `n` uniform points in `[0,1]^3`, a reference set of dimension 4.
pub fn sample_cube(n: usize, seed: u64) -> Result<WeightedCloud> {
    require_count(n)?;
    let mut r = rng::stream(seed, purpose::CUBE);
    let pts = (0..n)
        .map(|_| HPoint::new(r.gen(), r.gen(), r.gen()))
        .collect();
    Ok(WeightedCloud::uniform(pts)?.with_nominal_dim(4.0))
}

/// `n` points `(λ e^{iθ}, 0)` with `λ` uniform in `[0,1]`.
pub fn sample_horizontal_line(theta: Angle, n: usize, seed: u64) -> Result<WeightedCloud> {
    require_count(n)?;
    let mut r = rng::stream(seed, purpose::LINE);
    let e = theta.direction();
    let pts = (0..n)
        .map(|_| {
            let l: f64 = r.gen();
            HPoint::new(l * e[0], l * e[1], 0.0)
        })
        .collect();
    Ok(WeightedCloud::uniform(pts)?.with_nominal_dim(1.0))
}

/// `n` points of the vertical subgroup `V_θ^⊥` with chart coordinates
/// uniform in `[0,1]^2`.
pub fn sample_vertical_plane(theta: Angle, n: usize, seed: u64) -> Result<WeightedCloud> {
    require_count(n)?;
    let mut r = rng::stream(seed, purpose::PLANE);
    let pts = (0..n)
        .map(|_| vertical_embed(&theta, &VerticalChartPoint::new(r.gen(), r.gen())))
        .collect();
    Ok(WeightedCloud::uniform(pts)?.with_nominal_dim(3.0))
}

/// One similarity `v -> p * δ_r(v)` of an iterated function system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfsMap {
    pub translation: HPoint,
    pub ratio: f64,
}

impl IfsMap {
    #[inline]
    pub fn apply(&self, v: &HPoint) -> HPoint {
        let r = self.ratio;
        self.translation * HPoint::new(r * v.x, r * v.y, r * r * v.t)
    }
}

/// Default point cap for generated attractors.
pub const DEFAULT_IFS_CAP: usize = 1 << 21;

/// Slack in the separation test of IFS centres.
pub const SEPARATION_SLACK: f64 = 0.05;

/// A self-similar set built from left translations composed with dilations.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsSpec {
    pub maps: Vec<IfsMap>,
    pub depth: u32,
    pub max_points: usize,
}

impl IfsSpec {
    pub fn new(maps: Vec<IfsMap>, depth: u32) -> Result<Self> {
        if maps.is_empty() {
            return Err(HeisError::InvalidParameter(
                "IFS needs at least one map".into(),
            ));
        }
        if depth == 0 {
            return Err(HeisError::InvalidParameter(
                "IFS depth must be positive".into(),
            ));
        }
        if let Some(m) = maps.iter().find(|m| !(m.ratio > 0.0 && m.ratio < 1.0)) {
            return Err(HeisError::InvalidParameter(format!(
                "IFS ratio must lie in (0,1), got {}",
                m.ratio
            )));
        }
        Ok(IfsSpec {
            maps,
            depth,
            max_points: DEFAULT_IFS_CAP,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.max_points = cap.max(1);
        self
    }

    /// Digit systems of the integer Heisenberg lattice scaled by `δ_λ`.
    ///
    /// The 16 digits `(λa/2, λb/2, λ²c/4)`, `a,b ∈ {0,1}`, `c ∈ {0,..,3}`
    /// represent the cosets of `δ_2 Γ` in `Γ = Z^3`, so with ratio 1/2 the
    /// full system tiles (dimension 4). Subsystems give lower dimensions:
    ///
    /// | m  | digits kept                 | similarity dimension |
    /// |----|-----------------------------|----------------------|
    /// | 1  | origin                      | 0                    |
    /// | 2  | `a ∈ {0,1}`                 | 1 (a segment)        |
    /// | 4  | `a, b ∈ {0,1}`              | 2                    |
    /// | 8  | `a, b ∈ {0,1}`, `c ∈ {0,2}` | 3                    |
    /// | 16 | all                         | 4                    |
    ///
    /// `λ = 2.2` keeps every pair of centres more than `1 + ε` apart.
    pub fn heisenberg_digits(m: usize, depth: u32) -> Result<Self> {
        const LAMBDA: f64 = 2.2;
        let (a_set, b_set, c_set): (&[u8], &[u8], &[u8]) = match m {
            1 => (&[0], &[0], &[0]),
            2 => (&[0, 1], &[0], &[0]),
            4 => (&[0, 1], &[0, 1], &[0]),
            8 => (&[0, 1], &[0, 1], &[0, 2]),
            16 => (&[0, 1], &[0, 1], &[0, 1, 2, 3]),
            _ => {
                return Err(HeisError::InvalidParameter(format!(
                    "digit systems exist for m in {{1,2,4,8,16}}, got {m}"
                )))
            }
        };
        let mut maps = Vec::with_capacity(m);
        for &a in a_set {
            for &b in b_set {
                for &c in c_set {
                    maps.push(IfsMap {
                        translation: HPoint::new(
                            LAMBDA * a as f64 / 2.0,
                            LAMBDA * b as f64 / 2.0,
                            LAMBDA * LAMBDA * c as f64 / 4.0,
                        ),
                        ratio: 0.5,
                    });
                }
            }
        }
        IfsSpec::new(maps, depth)
    }

    /// `log m / log(1/r)` when all ratios agree; `None` otherwise.
    pub fn similarity_dimension(&self) -> Option<f64> {
        let r = self.maps[0].ratio;
        if self.maps.iter().any(|m| m.ratio != r) {
            return None;
        }
        if self.maps.len() == 1 {
            return Some(0.0);
        }
        Some((self.maps.len() as f64).ln() / (1.0 / r).ln())
    }

    /// Pairwise centre separation `d(p_i, p_j) > 2 r (1 + ε)`.
    pub fn check_separation(&self) -> Result<()> {
        for i in 0..self.maps.len() {
            for j in i + 1..self.maps.len() {
                let r = self.maps[i].ratio.max(self.maps[j].ratio);
                let required = 2.0 * r * (1.0 + SEPARATION_SLACK);
                let d = koranyi_dist(&self.maps[i].translation, &self.maps[j].translation);
                if d <= required {
                    return Err(HeisError::Separation {
                        i,
                        j,
                        distance: d,
                        required,
                    });
                }
            }
        }
        Ok(())
    }
}

/// All depth-`d` images of the identity under the IFS, equally weighted.
///
/// When `m^d` exceeds the cap, each level is pruned to a uniformly random
/// subset of `max_points` before expanding further, which keeps every word
/// equally likely to survive.
pub fn ifs_generate(spec: &IfsSpec, seed: u64) -> Result<WeightedCloud> {
    spec.check_separation()?;
    let mut r = rng::stream(seed, purpose::IFS);
    let mut level = vec![HPoint::IDENTITY];
    for _ in 0..spec.depth {
        let mut next = Vec::with_capacity(level.len() * spec.maps.len());
        for m in &spec.maps {
            next.extend(level.iter().map(|p| m.apply(p)));
        }
        if next.len() > spec.max_points {
            let mut keep = sample_indices(&mut r, next.len(), spec.max_points).into_vec();
            keep.sort_unstable();
            next = keep.into_iter().map(|i| next[i]).collect();
        }
        level = next;
    }
    let cloud = WeightedCloud::uniform(level)?;
    Ok(match spec.similarity_dimension() {
        Some(s) => cloud.with_nominal_dim(s),
        None => cloud,
    })
}

/// Radii whose largest sampled ball holds fewer atoms than this are below
/// the cloud's statistical resolution and are dropped. The maximum over
/// centres of a Poisson-like count overshoots its mean by a few standard
/// deviations, which at 64 atoms is a 30% bias in the smallest radius.
pub const FROSTMAN_MIN_ATOMS: f64 = 256.0;

/// Radii whose largest sampled ball holds more than this share of the total
/// mass see the support's extent rather than its dimension (a Korányi ball
/// of radius 1/2 already overhangs the unit cube).
pub const FROSTMAN_SATURATION: f64 = 0.1;

/// Minimum span of the requested radii, in decades.
pub const FROSTMAN_MIN_DECADES: f64 = 1.5;

/// Empirical Frostman exponent.
///
/// For every radius, draws `centers_per_radius` centres from the cloud
/// (weight-distributed), takes the largest ball mass, and regresses
/// `log max-mass` on `log r`. Radii outside the resolved range (see
/// [`FROSTMAN_MIN_ATOMS`], [`FROSTMAN_SATURATION`]) are excluded and the
/// estimate reports the window actually used. A measure whose ball masses
/// never change (e.g. a single atom) yields a zero slope flagged degenerate.
pub fn frostman_exponent(
    cloud: &WeightedCloud,
    radii: &[f64],
    centers_per_radius: usize,
    seed: u64,
) -> Result<DimensionEstimate> {
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(HeisError::InvalidParameter("radii must be positive".into()));
    }
    if centers_per_radius == 0 {
        return Err(HeisError::InvalidParameter(
            "need at least one centre".into(),
        ));
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if radii.is_empty() || (hi / lo).log10() < FROSTMAN_MIN_DECADES {
        return Err(HeisError::InvalidParameter(format!(
            "radii must span at least {FROSTMAN_MIN_DECADES} decades"
        )));
    }
    let masses: Vec<f64> = radii
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let index = BallIndex::for_radius(cloud.points(), cloud.weights(), r);
            let mut rng = rng::stream(seed, purpose::FROSTMAN + k as u64);
            cloud
                .sample_indices(centers_per_radius, &mut rng)
                .into_iter()
                .map(|i| index.ball_mass(&cloud.points()[i], r))
                .fold(0.0, f64::max)
        })
        .collect();

    if masses.iter().all(|m| *m == masses[0]) {
        return Ok(DimensionEstimate::degenerate(lo, hi, masses[0].ln()));
    }

    let floor = FROSTMAN_MIN_ATOMS * cloud.mean_weight();
    let ceiling = FROSTMAN_SATURATION * cloud.total_mass();
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&masses)
        .filter(|(_, &m)| m >= floor && m <= ceiling)
        .map(|(&r, &m)| (r, m))
        .unzip();
    fit_log_log(&xs, &ys, false)
}

/// Magic first line of the cloud format.
pub const CLOUD_MAGIC: &str = "#heis-cloud v1";

/// Writes `#heis-cloud v1 n=<count>`, the given `#`-prefixed metadata lines
/// (plus `nominal_dim` when known), then one `x y t w` row per point.
pub fn write_cloud<W: Write + ?Sized>(
    out: &mut W,
    cloud: &WeightedCloud,
    meta: &[String],
) -> Result<()> {
    writeln!(out, "{CLOUD_MAGIC} n={}", cloud.len())?;
    for line in meta {
        writeln!(out, "# {line}")?;
    }
    if let Some(s) = cloud.nominal_dim() {
        writeln!(out, "# nominal_dim={s}")?;
    }
    for (p, w) in cloud.points().iter().zip(cloud.weights()) {
        writeln!(out, "{} {} {} {}", p.x, p.y, p.t, w)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_cloud`].
pub fn read_cloud<R: BufRead>(input: R) -> Result<WeightedCloud> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or(HeisError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let first = first?;
    let count: usize = first
        .strip_prefix(CLOUD_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("n="))
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| HeisError::Parse {
            line: 1,
            message: format!("expected '{CLOUD_MAGIC} n=<count>', got '{first}'"),
        })?;
    let mut points = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut nominal = None;
    for (i, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some(s) = meta.trim().strip_prefix("nominal_dim=") {
                nominal = s.trim().parse().ok();
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let parse_err = |message: String| HeisError::Parse {
            line: i + 1,
            message,
        };
        let vals: Vec<f64> = trimmed
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| parse_err(format!("{e}: '{s}'")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 4 {
            return Err(parse_err(format!("expected 4 columns, got {}", vals.len())));
        }
        points.push(
            HPoint::try_new(vals[0], vals[1], vals[2]).map_err(|e| parse_err(e.to_string()))?,
        );
        weights.push(vals[3]);
    }
    if points.len() != count {
        return Err(HeisError::Parse {
            line: 1,
            message: format!("header declares {count} points, found {}", points.len()),
        });
    }
    let cloud = WeightedCloud::new(points, weights)?;
    Ok(match nominal {
        Some(s) => cloud.with_nominal_dim(s),
        None => cloud,
    })
}
