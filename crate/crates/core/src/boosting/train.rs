use std::convert::Infallible;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::histogram::{build_leaf_histograms, BinEdges, BinnedMatrix, FeatureHistogram};
use super::loss::Label;
use super::split::SplitParams;
use super::surrogate::{GradientPair, Surrogate, SurrogateError};
use super::tree::{grow_tree, Ensemble, LeafRouter, LevelSource, TreeParams};

/// Rows in the public sample that fixes the global bin edges.
pub const CALIBRATION_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub n_bins: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            rounds: 20,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            learning_rate: 0.3,
            n_bins: 32,
        }
    }
}

impl BoostParams {
    pub fn tree_params(&self, fraction_bits: u32) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            split: SplitParams {
                lambda: self.lambda,
                gamma: self.gamma,
                fraction_bits,
            },
        }
    }
}

/// Quantile edges from a seeded sample of at most [`CALIBRATION_ROWS`] rows.
pub fn calibration_edges(features: &[Vec<f64>], n_bins: usize, seed: u64) -> BinEdges {
    let n_features = features.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = CALIBRATION_ROWS.min(features.len());
    let mut idx = rand::seq::index::sample(&mut rng, features.len(), take).into_vec();
    idx.sort_unstable();
    let sample: Vec<Vec<f64>> = idx.into_iter().map(|i| features[i].clone()).collect();
    BinEdges::from_quantiles(&sample, n_features, n_bins)
}

/// Surrogate derivatives at each row's current margin.
pub fn shard_gradients(
    surrogate: &Surrogate,
    ensemble: &Ensemble,
    labels: &[Label],
    raw: &[i64],
) -> Result<Vec<GradientPair>, SurrogateError> {
    labels
        .iter()
        .zip(raw)
        .map(|(&y, &r)| surrogate.gradient_at(y, ensemble.margin_from_raw(r)))
        .collect()
}

struct Centralized<'a> {
    binned: &'a BinnedMatrix,
    shape: Vec<usize>,
    gradients: Vec<GradientPair>,
    router: LeafRouter,
}

impl LevelSource for Centralized<'_> {
    type Error = Infallible;

    fn level_histograms(
        &mut self,
        _depth: usize,
        n_leaves: usize,
    ) -> Result<Vec<FeatureHistogram>, Infallible> {
        Ok(build_leaf_histograms(
            self.binned,
            &self.shape,
            &self.gradients,
            self.router.leaf_of(),
            n_leaves,
        ))
    }

    fn apply_splits(&mut self, splits: &[Option<(usize, u16)>]) -> Result<(), Infallible> {
        self.router.apply(self.binned, splits);
        Ok(())
    }
}

/// Trains on one pooled dataset. `on_round` sees the ensemble and the raw
/// training outputs after each tree.
pub fn train_centralized(
    binned: &BinnedMatrix,
    labels: &[Label],
    edges: BinEdges,
    surrogate: &Surrogate,
    params: &BoostParams,
    mut on_round: impl FnMut(usize, &Ensemble, &[i64]),
) -> Result<Ensemble, SurrogateError> {
    let f = surrogate.fraction_bits();
    let shape = edges.shape();
    let mut ensemble = Ensemble::new(params.learning_rate, f, edges);
    let mut raw = vec![0i64; labels.len()];
    let tree_params = params.tree_params(f);
    for round in 0..params.rounds {
        let mut source = Centralized {
            binned,
            shape: shape.clone(),
            gradients: shard_gradients(surrogate, &ensemble, labels, &raw)?,
            router: LeafRouter::new(labels.len()),
        };
        let tree = match grow_tree(&mut source, &tree_params) {
            Ok(t) => t,
            Err(never) => match never {},
        };
        for (i, r) in raw.iter_mut().enumerate() {
            *r += tree.output(binned.row(i));
        }
        ensemble.push(tree);
        on_round(round, &ensemble, &raw);
    }
    Ok(ensemble)
}
