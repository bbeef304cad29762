//! Polynomial arithmetic, zero counting in disks and root extraction.

mod poly;
mod roots;
mod winding;

pub use poly::{ComplexPoly, RealPoly, TRIM_RELATIVE};
pub use roots::{poly_roots, RESIDUAL_TOL};
pub use winding::{
    count_zeros_in_disk, count_zeros_in_disk_perturbed, DELTA_CIRCLE, MAX_NUDGES, RADIUS_NUDGE,
};
