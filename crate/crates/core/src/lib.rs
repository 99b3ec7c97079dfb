//! Self-improving planar maxima and convex hulls over product distributions.
//!
//! A learning phase samples a few instances to build distribution-tuned
//! structures (a vertical slab structure or canonical hull, plus one search
//! tree per input index); the limiting phase then answers each instance with
//! work that adapts to the distribution, always emitting a certificate that
//! an independent verifier checks against brute-force oracles.

pub mod bucket_heap;
pub mod certificates;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod hull_engine;
pub mod hull_learning;
pub mod maxima;
pub mod metrics;
pub mod search_tree;
pub mod slabs;

pub use error::{Error, Result};
pub use geometry::{DirectedLine, Instance, Point, Side};
