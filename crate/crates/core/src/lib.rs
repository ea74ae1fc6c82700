//! Quantitative recurrence on homogeneous self-similar sets.
//!
//! A homogeneous iterated function system `phi_j(x) = rho x + a_j` on `[0, 1]` with strong
//! separation, its attractor `K`, the self-similar measure `mu`, and the shift `T` on `K`.
//! The crate computes exact cylinder geometry, measures of recurrence windows, closed-form
//! convergence verdicts for the governing series, and seeded Monte Carlo orbit statistics.

pub mod asymptotics;
pub mod coding;
pub mod error;
pub mod experiments;
pub mod ifs;
pub mod interval;
pub mod measure;
pub mod numeric;
pub mod recurrence;
pub mod rng;
pub mod verify;

pub use asymptotics::{DimensionFunction, Outcome, RateFunction, Verdict};
pub use coding::{CodedPoint, DistanceEstimate, PointKind};
pub use error::{Error, Result};
pub use ifs::{IfsConfig, IfsSpec, Word};
pub use interval::Interval;
pub use measure::{mu_ball, mu_interval, MeasureEstimate};
pub use numeric::GammaExpr;
