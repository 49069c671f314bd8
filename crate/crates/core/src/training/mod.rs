//! Cross-entropy loss, AdamW, the epoch loop and metrics output.

mod adamw;
mod loss;
mod metrics;
mod trainer;

pub use adamw::{AdamW, AdamWConfig};
pub use loss::{argmax, per_sample_nll, softmax_xent};
pub use metrics::{
    trial_means, write_comparison_csv, write_metrics_csv, MetricsRow, Split, Trial, METRICS_HEADER,
};
pub use trainer::{
    evaluate, minibatches, run_training, run_training_with, train_step, NonFiniteLoss, TrainConfig,
    TrainingOutcome, EVAL_BATCH,
};
