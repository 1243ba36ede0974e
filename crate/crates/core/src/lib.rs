//! Lattice Yang–Mills–Higgs fields, string operations and a Monte Carlo checker
//! for the master loop equations.

pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod groups;
pub mod linalg;
pub mod observables;
pub mod sampler;
pub mod stringops;
pub mod strings;
pub mod verifier;

pub use error::{Error, Result};
pub use geometry::{LatticeGeometry, OrientedEdge, Plaquette, Vertex};
