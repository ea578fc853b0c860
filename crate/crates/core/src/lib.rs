//! Simulation of lattice walks and Brownian motion in two and three
//! dimensions, with cut-point detection and scaling estimators.

pub mod boxes;
pub mod brownian;
pub mod cut;
pub mod error;
pub mod estimators;
pub mod exponents;
pub mod format;
pub mod lattice;
pub mod measures;
pub mod parallel;
pub mod rng;
mod serde_array;
pub mod spatial;
pub mod walk;

pub use brownian::{BrownianPath, CoupledPair, ContinuousCutBallEvent};
pub use cut::{CutBallEvent, CutPointSet, SeparationQuality, VisitIndex};
pub use error::{Error, Result};
pub use estimators::{FitResult, MomentTable, PointFunctionTable, TransferRatio};
pub use exponents::Exponents;
pub use lattice::{BallSpec, LatticePoint, RealPoint};
pub use parallel::TrialRunner;
pub use rng::RngStream;
pub use walk::{LatticePath, PathTime};
