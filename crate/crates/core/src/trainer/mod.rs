//! Desk-scale residual network trainer.

mod adam;
pub mod gradcheck;
mod net;
pub mod ops;
mod tensor;
mod train;

pub use adam::{Adam, AdamConfig};
pub use net::{capture_layer, measure_layer_entropy, LayerPick, NetSpec, ResNet, Trace};
pub use tensor::{InputScaling, Tensor};
pub use train::{accuracy, train, ModelSummary, RunRecord, TrainConfig};
