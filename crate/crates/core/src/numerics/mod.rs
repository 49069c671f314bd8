//! Dense matrices and the seeded generator everything else builds on.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub use rng::Rng;
