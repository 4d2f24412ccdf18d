pub mod histogram;
pub mod loss;
pub mod split;
pub mod surrogate;
pub mod train;
pub mod tree;

pub use histogram::{
    build_histogram, build_leaf_histograms, merge_histograms, BinEdges, BinStats, BinnedMatrix,
    FeatureHistogram, HistogramError,
};
pub use loss::{analytic_loss_grad_hess, Label, LossDerivatives};
pub use split::{best_split, leaf_weight, leaf_weight_fp, split_gain, SplitCandidate, SplitParams};
pub use surrogate::{fit_surrogate, GradientPair, LossSpec, Surrogate, SurrogateError};
pub use train::{
    calibration_edges, shard_gradients, train_centralized, BoostParams, CALIBRATION_ROWS,
};
pub use tree::{
    grow_tree, metrics, Ensemble, LeafRouter, LevelSource, Metrics, RegTree, TreeNode, TreeParams,
};
