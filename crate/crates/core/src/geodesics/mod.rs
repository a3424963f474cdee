//! Geodesics of the metrics in [`crate::metrics`]: shooting, boundary value
//! problems, distances, log map and Karcher mean.

mod bvp;
mod exp;
mod mean;

pub use exp::{
    completeness_probe, exp_map, integrate_geodesic, BlowupReason, BlowupReport, GeodesicOptions, GeodesicRun,
    GeodesicState, ProbeScenario, PROBE_SAMPLES,
};
pub use bvp::{
    geodesic_distance, geodesic_distance_with, path_straighten, shape_distance, shape_distance_with,
    ShapeDistanceOptions, StraightenOptions, StraightenResult,
};
pub use mean::{karcher_mean, log_map, KarcherOptions, KarcherResult, LogOptions, LogResult};
