//! Ball systems on the unit ball, region predicates and sampled measures.

mod anchor;
mod dense;
mod domain;
mod index;
mod regions;
mod system;

pub use anchor::{AnchoredPoint, MAX_OFFSET};
pub use dense::{dense_sequence, DyadicPoint, DyadicSequence};
pub use domain::{unit_ball_volume, Domain};
pub use index::BallIndex;
pub use regions::{
    calibrate_epsilon, estimate_region_fraction, in_good_local, region_membership, Region,
    RegionOracle, RegionParams, RegionReport,
};
pub use system::{
    build_ball_system, build_ball_system_logged, check_containment, check_radius_decay,
    check_window_disjointness, covering_radius, icbrt, tail_measure_ratio, truncation_tail_bound,
    Ball, BallRecord, BallSystem, BuildOptions, BuildStep, DecayReport, RadiusRule, SystemFile,
    DISJOINT_TOL, RADIUS_FLOOR,
};
