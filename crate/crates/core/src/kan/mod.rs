//! Wav-KAN layers, batch normalization, network composition and
//! checkpoints.

mod batchnorm;
pub mod checkpoint;
mod layer;
mod network;
mod param;

pub use batchnorm::{BatchNorm1d, Mode, BN_EPS, BN_MOMENTUM};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use layer::{WavKanLayer, MIN_SCALE};
pub use network::{Layer, ModelKind, Network, ParamCount};
pub use param::{ParamGroup, ParamSlot};
