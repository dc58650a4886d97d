//! From-scratch convolutional classifier: forward pass, backpropagation,
//! class-weighted binary cross-entropy, ADAM, data augmentation and the
//! training loop, all in f64.

mod adam;
mod augment;
mod layers;
mod loss;
mod model;
mod tensor;
mod train;

pub use adam::{adam_step, OptimizerState, ADAM_BETA2, ADAM_EPSILON};
pub use augment::{apply_affine, augment, AugmentRanges};
pub use layers::{DataShape, LayerSpec};
pub use loss::{weighted_bce, BCE_EPSILON};
pub use model::{
    Cache, Class, CnnModel, Gradients, LayerParams, ModelContainer, DECISION_THRESHOLD,
    MODEL_SCHEMA,
};
pub use tensor::Tensor;
pub use train::{
    load_manifest, train, write_loss_trace, Hyperparams, TrainOutcome, TrainSample,
    HYPERPARAMS_SCHEMA,
};
