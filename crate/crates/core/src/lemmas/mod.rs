//! Direct numerical checks of the quantitative estimates behind the
//! projection theorem.

pub mod cover;
pub mod gap;
pub mod identities;
pub mod incidence;
pub mod transversality;
pub mod triple;

pub use cover::{cover_euclidean_ball, cover_sweep, verify_cover, Cover, CoverReport};
pub use gap::second_component_gap;
pub use identities::{
    holder_constants, identity_suite, metric_suite, triple_suite, HolderConstants, IdentityCheck,
};
pub use incidence::{incidence_experiment, incidence_sweep, IncidenceConfig, IncidenceReport};
pub use transversality::{
    near_angle_set, transversality_f, verify_transversality, AngleIntervalSet,
    TransversalityConfig, TransversalityFrame, TransversalityReport,
};
pub use triple::{triple_point_solve, TripleSolution};
