//! Wavelet Kolmogorov-Arnold networks.
//!
//! Every edge of a [`kan::WavKanLayer`] carries its own learnable wavelet
//! `w · ψ((x − τ)/s)` and every node sums its incoming edges. The crate also
//! ships a conventional MLP baseline, an AdamW training harness, an IDX
//! (MNIST) reader and a small wavelet-analysis toolkit.

pub mod data;
pub mod error;
pub mod kan;
pub mod mlp;
pub mod numerics;
pub mod training;
pub mod wavelets;

pub use error::{Error, Result};
pub use numerics::{Matrix, Rng};
pub use wavelets::{WaveletFamily, WaveletKind};
