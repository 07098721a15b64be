//! Simulation of random-walk leader election on anonymous port-numbered
//! networks under CONGEST message accounting.
//!
//! * [`graph`]: port-numbered graphs, generators, walk and conductance oracles.
//! * [`sim`]: deterministic synchronous round engine.
//! * [`leader`]: the contender / random-walk / proxy election protocol.
//! * [`broadcast`]: push-pull dissemination of the elected id.
//! * [`lowerbound`]: measurements on the clique-expanded and dumbbell families.

pub mod broadcast;
pub mod error;
pub mod graph;
pub mod leader;
pub mod lowerbound;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{Graph, Label, PortRef};
pub use scalar::Scalar;

/// Exact rational scalar for small-graph oracles.
pub type Rational = num_rational::BigRational;

pub type Matrix64 = graph::Matrix<f64>;
pub type Matrix32 = graph::Matrix<f32>;
pub type ExactMatrix = graph::Matrix<Rational>;
pub type WalkAnalysis64 = graph::WalkAnalysis<f64>;
pub type WalkAnalysis32 = graph::WalkAnalysis<f32>;
pub type ExactWalkAnalysis = graph::WalkAnalysis<Rational>;
pub type SpectralBounds64 = graph::SpectralBounds<f64>;
pub type SpectralBounds32 = graph::SpectralBounds<f32>;
