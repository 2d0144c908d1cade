//! Ship navigation through movable ice.
//!
//! The crate models an ice-covered channel as rigid convex floes, summarises it
//! as a ratio occupancy grid, and plans lattice paths with an A* search whose
//! edge costs come from predicted occupancy change. A deterministic pushing
//! simulator provides the ground truth and doubles as a perfect predictor.

pub mod context;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod lattice;
pub mod occupancy;
pub mod planner;
pub mod predictor;

pub use context::NavContext;
pub use error::{Error, Result};
