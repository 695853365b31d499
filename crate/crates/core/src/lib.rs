//! Numerical toolkit for coherent-plus-incoherent control of open quantum
//! systems.
//!
//! The crate covers three layers:
//!
//! * GKSL master-equation propagation with piecewise-constant coherent
//!   controls and environment distributions acting as incoherent controls
//!   ([`propagator`], [`generators`]);
//! * learning control of the environment distribution with a genetic
//!   algorithm ([`gaopt`], [`objectives`]);
//! * kinematic (Kraus-map) control-landscape analysis on the complex Stiefel
//!   manifold, including all-to-one steering channels and saddle detection
//!   ([`kinematic`]).
//!
//! Scenarios are single JSON documents dispatched by [`scenario`].

pub mod error;
pub mod gaopt;
pub mod generators;
pub mod kinematic;
pub mod linalg;
pub mod objectives;
pub mod propagator;
pub mod qcore;
pub mod scenario;

pub use error::{Error, Result};
