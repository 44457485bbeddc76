//! Reference-angle kernels, projection configurations and the two
//! reference-angle-based ANN indexes (inverted-file MIPS and graph routing).

pub mod bench;
pub mod config;
pub mod data;
pub mod error;
pub mod graph;
pub mod kernels;
pub mod linalg;
pub mod mips;
pub mod rng;
pub mod special;
pub mod verify;

mod codec;

pub use error::{Error, Result};
