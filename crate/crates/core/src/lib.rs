//! Nested-sampling quadrature with plateau-aware contraction: a modified
//! live-set loop that removes ties in batches, level-set surrogates for
//! replaying stored runs against new integrands, and estimators for
//! evidence, rare-event probabilities, moments, and survival curves.

pub mod engine;
pub mod estimators;
pub mod model;
pub mod numerics;
pub mod problems;
pub mod samplers;

pub use engine::{run, EngineConfig, EngineError};
pub use model::{ContractionScheme, DeadRecord, NsRun, Position, Problem, TerminationReason};
pub use numerics::{logsumexp, LogWeight, StepFunction};
