//! Geometric stability analysis of the closed loop.

mod criteria;
mod metrics;
mod phi;
mod region;

pub use criteria::{
    admissible_or_boundary, characteristic_poly, loop_factor, multiplier_admissible, schur_stable,
    spectral_radius,
};
pub use phi::PhiFunction;
pub use metrics::{
    boundary_curve, check_boundary_simple, check_typically_real, i_metric, j_metric,
    real_axis_crossings, stability_bounds, stability_report, BoundaryCurve, StabilityBounds,
    StabilityReport,
};
pub use region::{
    inverted_boundary_window, margin_raster, region_area, region_length, Raster, RegionArea,
    RegionLength, Window, DEFAULT_LENGTH_WINDOW,
};
