pub mod backends;
pub mod capgen;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod hashing;
pub mod imgen;
pub mod rng;
pub mod text;

pub use error::{Error, Result};
