//! Extremes of stationary regularly varying random fields indexed by general
//! growing subsets of Z^k.

pub mod error;
pub mod exceedance;
pub mod extremal;
pub mod families;
pub mod lattice;
pub mod models;
pub mod rng;
pub mod shape;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
