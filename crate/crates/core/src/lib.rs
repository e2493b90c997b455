//! Numerical verification of totally skew embeddings for polynomial maps.

pub mod blowup;
pub mod cli;
pub mod constructions;
pub mod dd;
pub mod error;
pub mod geometry;
pub mod jets;
pub mod linalg;
pub mod local_condition;
pub mod sampling;
pub mod skewness;
pub mod sphere;
pub mod stratification;

pub use error::{Error, Result};
pub use jets::{Jet3, PolyMap, SymMultiMap};
