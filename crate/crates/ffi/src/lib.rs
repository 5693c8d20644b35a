//! C ABI over `heis`.
//!
//! Every call returns a [`HeisStatus`]; results go through out-pointers.
//! On failure, [`heis_last_error`] holds a message for the calling thread.
//! Clouds are opaque handles owned by the caller and released with
//! [`heis_cloud_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heis::lemmas::{triple_point_solve, TripleSolution};
use heis::measures::{read_cloud, write_cloud};
use heis::{
    bound_theorem, box_dimension, frostman_exponent, ifs_generate, koranyi_dist, sample_cube,
    sample_horizontal_line, sample_vertical_plane, vertical_projection, Angle, DimensionEstimate,
    HPoint, HeisError, IfsSpec, WeightedCloud,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl From<HPoint> for HeisPoint {
    fn from(p: HPoint) -> Self {
        HeisPoint {
            x: p.x,
            y: p.y,
            t: p.t,
        }
    }
}

impl HeisPoint {
    fn to_core(self) -> Result<HPoint, HeisError> {
        HPoint::try_new(self.x, self.y, self.t)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisDimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    /// Nonzero when the measured quantity did not vary with scale.
    pub degenerate: i32,
}

impl From<&DimensionEstimate> for HeisDimensionEstimate {
    fn from(e: &DimensionEstimate) -> Self {
        HeisDimensionEstimate {
            slope: e.slope,
            intercept: e.intercept,
            r_squared: e.r_squared,
            window_lo: e.window.0,
            window_hi: e.window.1,
            degenerate: i32::from(e.degenerate),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    NotVertical = 4,
    EmptyCloud = 5,
    TooFewScales = 6,
    Degenerate = 7,
    Io = 8,
    Parse = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeisCloudKind {
    Cube = 0,
    Line = 1,
    Plane = 2,
}

/// Opaque weighted point cloud.
pub struct HeisCloud(WeightedCloud);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &HeisError) -> HeisStatus {
    match err {
        HeisError::NonFinite(_) => HeisStatus::NonFinite,
        HeisError::NotInVerticalSubgroup { .. } => HeisStatus::NotVertical,
        HeisError::EmptyCloud => HeisStatus::EmptyCloud,
        HeisError::TooFewScales { .. } => HeisStatus::TooFewScales,
        HeisError::DegenerateRegression(_) => HeisStatus::Degenerate,
        HeisError::Io(_) => HeisStatus::Io,
        HeisError::Parse { .. } => HeisStatus::Parse,
        _ => HeisStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status plus the
/// thread's last-error message.
fn guard<F: FnOnce() -> Result<(), HeisError>>(f: F) -> HeisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HeisStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            HeisStatus::Panic
        }
    }
}

fn null() -> HeisError {
    HeisError::InvalidParameter("null pointer".into())
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return HeisStatus::NullPointer;
        }
    };
}

/// Message for the last failing call on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn heis_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Korányi distance.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_dist(a: HeisPoint, b: HeisPoint, out: *mut f64) -> HeisStatus {
    nonnull!(out);
    guard(|| {
        *out = koranyi_dist(&a.to_core()?, &b.to_core()?);
        Ok(())
    })
}

/// Group product `a * b`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_mul(a: HeisPoint, b: HeisPoint, out: *mut HeisPoint) -> HeisStatus {
    nonnull!(out);
    guard(|| {
        *out = (a.to_core()? * b.to_core()?).into();
        Ok(())
    })
}

/// Projection of `v` to the vertical subgroup orthogonal to angle `theta`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_vertical_projection(
    theta: f64,
    v: HeisPoint,
    out: *mut HeisPoint,
) -> HeisStatus {
    nonnull!(out);
    guard(|| {
        if !theta.is_finite() {
            return Err(HeisError::NonFinite("theta"));
        }
        *out = vertical_projection(&Angle::new(theta), &v.to_core()?).into();
        Ok(())
    })
}

/// Lower bound on projected dimension for sets of dimension `s` in (2, 4].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_bound_theorem(s: f64, out: *mut f64) -> HeisStatus {
    nonnull!(out);
    guard(|| {
        *out = bound_theorem(s)?;
        Ok(())
    })
}

/// Solves for the point whose second Korányi component vanishes against
/// all three inputs. Returns `Degenerate` for (near-)collinear inputs.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_triple_solve(
    v1: HeisPoint,
    v2: HeisPoint,
    v3: HeisPoint,
    out: *mut HeisPoint,
) -> HeisStatus {
    nonnull!(out);
    guard(
        || match triple_point_solve(&v1.to_core()?, &v2.to_core()?, &v3.to_core()?) {
            TripleSolution::Unique { point, .. } => {
                *out = point.into();
                Ok(())
            }
            TripleSolution::Degenerate { det } => Err(HeisError::DegenerateRegression(format!(
                "collinear triple, determinant {det:e}"
            ))),
        },
    )
}

fn boxed(cloud: WeightedCloud) -> *mut HeisCloud {
    Box::into_raw(Box::new(HeisCloud(cloud)))
}

/// Samples `n` points of a reference set; `theta` orients the line and
/// the plane and is ignored for the cube.
///
/// # Safety
/// `out` must be valid for writes. On success `*out` owns a new cloud.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_sample(
    kind: HeisCloudKind,
    n: usize,
    theta: f64,
    seed: u64,
    out: *mut *mut HeisCloud,
) -> HeisStatus {
    nonnull!(out);
    guard(|| {
        let th = Angle::new(theta);
        let c = match kind {
            HeisCloudKind::Cube => sample_cube(n, seed)?,
            HeisCloudKind::Line => sample_horizontal_line(th, n, seed)?,
            HeisCloudKind::Plane => sample_vertical_plane(th, n, seed)?,
        };
        *out = boxed(c);
        Ok(())
    })
}

/// Self-similar cloud with `m` maps of ratio 1/2 iterated `depth` times.
///
/// # Safety
/// `out` must be valid for writes. On success `*out` owns a new cloud.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_ifs(
    m: usize,
    depth: u32,
    seed: u64,
    out: *mut *mut HeisCloud,
) -> HeisStatus {
    nonnull!(out);
    guard(|| {
        *out = boxed(ifs_generate(&IfsSpec::heisenberg_digits(m, depth)?, seed)?);
        Ok(())
    })
}

/// Copies `n` points and optional weights (NULL for unit weights).
///
/// # Safety
/// `points` must hold `n` readable points, `weights` `n` doubles when not
/// NULL, and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_from_points(
    points: *const HeisPoint,
    weights: *const f64,
    n: usize,
    out: *mut *mut HeisCloud,
) -> HeisStatus {
    nonnull!(points, out);
    guard(|| {
        let pts = std::slice::from_raw_parts(points, n)
            .iter()
            .map(|p| p.to_core())
            .collect::<Result<Vec<_>, _>>()?;
        let c = if weights.is_null() {
            WeightedCloud::uniform(pts)?
        } else {
            WeightedCloud::new(pts, std::slice::from_raw_parts(weights, n).to_vec())?
        };
        *out = boxed(c);
        Ok(())
    })
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `cloud` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_len(cloud: *const HeisCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// Copies point `i` and its weight.
///
/// # Safety
/// `cloud` must be a live handle; `point` and `weight` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_get(
    cloud: *const HeisCloud,
    i: usize,
    point: *mut HeisPoint,
    weight: *mut f64,
) -> HeisStatus {
    nonnull!(cloud, point, weight);
    guard(|| {
        let c = &(*cloud).0;
        if i >= c.len() {
            return Err(HeisError::InvalidParameter(format!(
                "index {i} out of range for {} points",
                c.len()
            )));
        }
        *point = c.points()[i].into();
        *weight = c.weights()[i];
        Ok(())
    })
}

/// Releases a cloud. NULL is a no-op.
///
/// # Safety
/// `cloud` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_free(cloud: *mut HeisCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, HeisError> {
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| HeisError::InvalidParameter("path is not UTF-8".into()))
}

/// Reads a cloud file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_read(
    path: *const c_char,
    out: *mut *mut HeisCloud,
) -> HeisStatus {
    nonnull!(path, out);
    guard(|| {
        let p = path_arg(path)?;
        let f = File::open(p).map_err(|e| HeisError::Io(format!("{p}: {e}")))?;
        *out = boxed(read_cloud(BufReader::new(f))?);
        Ok(())
    })
}

/// Writes a cloud file.
///
/// # Safety
/// `cloud` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn heis_cloud_write(
    cloud: *const HeisCloud,
    path: *const c_char,
) -> HeisStatus {
    nonnull!(cloud, path);
    guard(|| {
        let p = path_arg(path)?;
        let f = File::create(p).map_err(|e| HeisError::Io(format!("{p}: {e}")))?;
        let mut w = BufWriter::new(f);
        write_cloud(&mut w, &(*cloud).0, &[])?;
        w.flush()?;
        Ok(())
    })
}

unsafe fn scales_arg<'a>(scales: *const f64, n: usize) -> Result<&'a [f64], HeisError> {
    if scales.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(scales, n))
}

/// Box-counting dimension over the given scales.
///
/// # Safety
/// `cloud` must be a live handle, `scales` hold `n_scales` doubles, `out`
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn heis_box_dimension(
    cloud: *const HeisCloud,
    scales: *const f64,
    n_scales: usize,
    out: *mut HeisDimensionEstimate,
) -> HeisStatus {
    nonnull!(cloud, scales, out);
    guard(|| {
        let est = box_dimension(&(*cloud).0, scales_arg(scales, n_scales)?)?;
        *out = (&est).into();
        Ok(())
    })
}

/// Empirical Frostman exponent over the given radii.
///
/// # Safety
/// As for [`heis_box_dimension`].
#[no_mangle]
pub unsafe extern "C" fn heis_frostman(
    cloud: *const HeisCloud,
    radii: *const f64,
    n_radii: usize,
    centers_per_radius: usize,
    seed: u64,
    out: *mut HeisDimensionEstimate,
) -> HeisStatus {
    nonnull!(cloud, radii, out);
    guard(|| {
        let est = frostman_exponent(
            &(*cloud).0,
            scales_arg(radii, n_radii)?,
            centers_per_radius,
            seed,
        )?;
        *out = (&est).into();
        Ok(())
    })
}
