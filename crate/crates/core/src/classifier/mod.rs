//! Embeddings, the MLP emotion classifier, its training protocol, and
//! evaluation reports.

mod embed;
mod gradcheck;
mod metrics;
mod mlp;
mod train;

pub use embed::{
    decode_embeddings, encode_embeddings, export_embeddings, import_embeddings, pool_embed,
    EmbeddingError, EmbeddingVector, POOL_SIDE,
};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckOptions};
pub use metrics::EvalReport;
pub use mlp::{
    softmax_rows, Activation, AdamState, DenseLayer, Gradients, MlpModel, Mode, ModelError,
    EMBEDDING_DIM, NUM_CLASSES,
};
pub use train::{
    accuracy, evaluate, fit, split_dataset, to_matrix, train, train_epoch, train_model,
    EpochStats, Example, FitHistory, Split, TrainConfig, TrainError, TrainOutcome,
};
