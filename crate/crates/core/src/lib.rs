//! Finite-group harmonic analysis and models for the sequential group composition task.

pub mod constructions;
pub mod encoding;
pub mod error;
pub mod group;
pub mod harmonic;
pub mod lab;
pub mod linalg;
pub mod networks;
pub mod reps;
pub mod theory;
