//! Reach estimation for point clouds sampled from a submanifold of Euclidean space.
//!
//! The central object is the convexity defect function
//! `h_X(t) = H(hull(X, t) | X)`, where `hull(X, t)` is the union of convex hulls of
//! subsets of `X` whose smallest enclosing ball has radius at most `t`. Its small-scale
//! curvature gives a local reach estimate and its first contact with the diagonal gives
//! the weak feature size; the reach is the smaller of the two.

pub mod defect;
pub mod error;
pub mod estimators;
pub mod geom;
pub mod io;
pub mod rates;
pub mod synth;

pub use defect::{
    defect_at, defect_bruteforce, defect_profile, first_diagonal_touch, pair_contribution,
    DefectConfig, DefectProfile, PairContribution, ScaleGrid,
};
pub use error::{Error, Result};
pub use estimators::{
    estimate_epsilon, local_reach, reach, reach_from_profile, rmax_from_density, wfs, Branch,
    ModelParams, ReachEstimate,
};
pub use geom::{
    dist, hausdorff, hausdorff_asym, min_enclosing_ball, nearest_dist, segment_farthest, Ball,
    Point, PointCloud, SpatialIndex,
};
pub use synth::{
    bump_profile, ground_truth, perturb_bump, sample, BumpProfile, GroundTruth, ManifoldSpec,
    Provenance, Reference, Truth,
};
