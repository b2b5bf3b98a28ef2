//! Second stage: gradient-boosted regression trees with pluggable losses.

mod binning;
mod loss;
mod model;
mod tree;

pub use binning::{BinMapper, BinnedMatrix};
pub use loss::{logsumexp, softmax_minimax_grad_hess, softmax_weights, LossKind, LossSpec};
pub use model::{fit_gbm, fit_gbm_traced, predict_gbm, FitTrace, GbmModel, GbmParams, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{
    gain_is_significant, leaf_output, leaf_score, soft_threshold, Node, RegressionTree, TreeParams,
    HESSIAN_EPS,
};
