//! Network evolution under triadic closure, at four levels of description.
//!
//! * [`micro`]: exact SSA over the full adjacency matrix of an `n`-node graph.
//! * [`chain`]: the scalar birth–death chain on the edge count, with its
//!   product-form stationary distribution and mean exit times.
//! * [`langevin`]: the diffusion approximation of the edge density and its
//!   mean-first-passage-time boundary value problem.
//! * [`ode`]: the deterministic reaction-rate equation and the unit-step
//!   mean-field map.
//!
//! [`params`] holds the rate constants and the drift cubic whose roots organise
//! all four levels.

pub mod chain;
pub mod error;
pub mod graph;
pub mod langevin;
pub mod micro;
pub mod ode;
pub mod params;
pub mod path;
pub mod rng;
pub mod tridiag;

pub use chain::{BDChain, Distribution, Modality, ModalityReport, TransitionRow};
pub use error::{Error, Result};
pub use graph::{GraphState, InitialCondition};
pub use langevin::{BoundaryKind, EmOptions, MfptProblem, MfptSolution, SdeSpec};
pub use micro::{ClassPropensities, MicroSimulator, Reaction};
pub use params::{CubicRoots, DegeneratePolicy, ModelParams, Regime};
pub use path::{Observable, PathRecord, Recording};
