//! Dense matrices, parameters, initialisation and the seeded generator.

mod init;
mod matrix;
mod param;
mod rng;

pub use init::{glorot_bound, init_glorot};
pub use matrix::{sigmoid, Matrix};
pub use param::Parameter;
pub use rng::Rng;
