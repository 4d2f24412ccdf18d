use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::boosting::Label;

use super::FedError;

/// Label-skewed shards of equal size.
///
/// Node `k` draws its positive fraction from a two-class Dirichlet centred
/// on the global rate `pi`, i.e. `Beta(2 alpha pi, 2 alpha (1 - pi))`, and
/// takes rows without replacement from shuffled per-class pools. When a
/// pool runs dry the other class fills the shard. `shard_size` defaults to
/// `n_rows / n_nodes`; leftover rows are dropped. Indices in each shard are
/// ascending.
pub fn partition_noniid(
    labels: &[Label],
    n_nodes: usize,
    shard_size: Option<usize>,
    alpha: f64,
    seed: u64,
) -> Result<Vec<Vec<usize>>, FedError> {
    if n_nodes == 0 {
        return Err(FedError::InvalidArgument(
            "n_nodes must be at least 1".into(),
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(FedError::InvalidArgument(format!(
            "dirichlet alpha {alpha}"
        )));
    }
    let size = shard_size.unwrap_or(labels.len() / n_nodes);
    if size == 0 || size * n_nodes > labels.len() {
        return Err(FedError::DatasetTooSmall {
            rows: labels.len(),
            nodes: n_nodes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| labels[i].is_positive());
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let pi = pos.len() as f64 / labels.len() as f64;
    let beta = if pi > 0.0 && pi < 1.0 {
        Some(
            Beta::new(2.0 * alpha * pi, 2.0 * alpha * (1.0 - pi))
                .map_err(|e| FedError::InvalidArgument(e.to_string()))?,
        )
    } else {
        None
    };

    let mut shards = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let p = beta.as_ref().map_or(pi, |b| b.sample(&mut rng));
        let mut n_pos = ((p * size as f64).round() as usize).min(pos.len());
        n_pos = n_pos.max(size.saturating_sub(neg.len()));
        let mut shard: Vec<usize> = pos.split_off(pos.len() - n_pos);
        shard.extend(neg.split_off(neg.len() - (size - n_pos)));
        shard.sort_unstable();
        shards.push(shard);
    }
    Ok(shards)
}
