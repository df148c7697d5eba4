//! A small fully-connected embedding network trained with SGD on
//! classification plus an optional metric loss.
//!
//! The network is `input -> [affine + ReLU]* -> embedding -> affine -> logits`.
//! Metric losses attach to the rectified embedding, never to the logits.

mod checkpoint;
mod model;
mod sampler;
mod schedule;
mod train;

pub use checkpoint::{decode_model, encode_model, load_model, load_model_for, save_model};
pub use model::{init_model, network_gradcheck, Dense, ForwardCache, Gradients, Model, ModelConfig};
pub use sampler::{pk_sample, pk_sample_labels};
pub use schedule::lr_at;
pub use train::{
    embed_manifest, image_to_input, images_to_grid, prepare_images, train, train_on_pool, train_step,
    write_history_csv, EpochRecord, LossMode, Sgd, StepRecord, TrainBatch, TrainConfig, TrainHistory,
    TrainingPool, HISTORY_HEADER,
};
