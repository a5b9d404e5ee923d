//! Small dense networks with a Gaussian NLL head, trained with Adam.

pub mod adam;
pub mod bundle;
pub mod mlp;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use bundle::{BundleMetadata, CategorySummary, ModelBundle};
pub use mlp::{backward, backward_batch, category_dims, nll_loss, LogSigmaClamp, Mlp, HIDDEN_LAYERS};
pub use train::{train_category, TrainConfig, TrainReport};
