//! Slow, obviously-correct reference computations for the ctcpp test suites.
//!
//! Everything here works on plain slices and closures and shares no code with the
//! production crate, so agreement between the two is evidence rather than tautology.

mod fov;
mod grid;
mod tsp;

pub use fov::{fov_coverage_audit, AuditReport, Cone};
pub use grid::{
    batch_log_odds, batch_probability, closing_exact, components_exact, navigable_exact, Raster,
};
pub use tsp::{tsp_exact, ExactTour, MAX_EXACT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refused(pub String);

impl std::fmt::Display for Refused {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "oracle refused: {}", self.0)
    }
}

impl std::error::Error for Refused {}
