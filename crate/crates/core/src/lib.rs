//! Exact computations on the Berkovich projective line over Q_p.

pub mod corpus;
pub mod dynamics;
pub mod error;
pub mod fp;
pub mod hensel;
pub mod lyapunov;
pub mod map;
pub mod measure;
pub mod newton;
pub mod point;
pub mod poly;
pub mod rational;
pub mod sample;
pub mod suite;
pub mod tree;
pub mod valuation;

pub use error::{Error, Result};
