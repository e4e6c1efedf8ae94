//! Diverse and relevant subset selection for retrieval augmentation.
//!
//! Given embeddings for a small labeled target set and a large pseudo-labeled
//! auxiliary pool, this crate builds sparse similarity graphs, evaluates
//! combinatorial mutual information objectives over them, and maximizes those
//! objectives greedily under a cardinality budget. Nearest-neighbor baselines,
//! MMR, diversity metrics and a 2D toy experiment sit alongside.

pub mod baselines;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod ground;
pub mod io;
pub mod kernels;
pub mod metrics;
pub mod optimize;
pub mod selection;
pub mod sparse;
pub mod submodular;
pub mod toy;
pub mod verify;

pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use ground::GroundSet;
pub use optimize::{BudgetConstraint, Engine, GreedyRun};
pub use selection::SelectionResult;
pub use sparse::SparseSimilarity;
pub use submodular::Objective;
