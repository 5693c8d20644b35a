//! Numerical experiments on vertical projections in the first Heisenberg
//! group: Korányi geometry, sample measures, dimension estimators, the
//! projection-angle sweep, direct checks of the transversality, covering,
//! rigidity and incidence estimates, and the `heis` command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dimension;
pub mod error;
pub mod group;
pub mod index;
pub mod lemmas;
pub mod measures;
pub mod rng;
pub mod sweep;

pub use dimension::{
    box_count, box_dimension, chart_box_dimension, correlation_dimension, BoxGrid,
    DimensionEstimate,
};
pub use error::{HeisError, Result};
pub use group::{
    dilate, group_inv, group_mul, horizontal_projection, koranyi_dist, koranyi_norm, rotate,
    vertical_chart, vertical_embed, vertical_projection, wedge, Angle, HPoint, VerticalChartPoint,
};
pub use measures::{
    frostman_exponent, ifs_generate, sample_cube, sample_horizontal_line, sample_vertical_plane,
    IfsSpec, WeightedCloud,
};
pub use sweep::{
    alpha, bound_bdfm, bound_fh, bound_theorem, eta_choice, improvement_interval, kappa,
};
