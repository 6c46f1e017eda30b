//! Layered coverage path planning over unknown, projectively planar terrain.
//!
//! The survey volume is sliced into horizontal planes. An AUV covers the safe part
//! of each plane with a 2D planner while its downward sonar builds an occupancy map of
//! the plane below; disconnected safe subregions found there become new nodes of a
//! coverage tree, and a dummy-vertex TSP picks which unexplored node to visit next.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the simulator
//! itself runs in `f64`.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage_tree;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod mission;
pub mod occupancy;
pub mod planner2d;
pub mod scalar;
pub mod sensor;
pub mod terrain;
pub mod traversal;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ProbOccupancyGridF64 = occupancy::ProbOccupancyGrid<f64>;
pub type ProbOccupancyGridF32 = occupancy::ProbOccupancyGrid<f32>;
pub type WeightMatrixF64 = traversal::WeightMatrix<f64>;
pub type WeightMatrixF32 = traversal::WeightMatrix<f32>;
pub type TourF64 = traversal::Tour<f64>;
pub type TourF32 = traversal::Tour<f32>;
pub type EnergyModelF64 = metrics::EnergyModel<f64>;
pub type EnergyModelF32 = metrics::EnergyModel<f32>;
