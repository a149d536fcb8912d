//! Numerical laboratory for local limit theorems of Bernoulli-smoothed sums
//! `Z_n = (X + X_1 + ... + X_n) / √n`.

pub mod asymptotics;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod inversion;
pub mod lattice;
pub mod oracle;
pub mod smoothing;
pub mod special;

pub use error::{Error, Result};
