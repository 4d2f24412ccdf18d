//! Aggregator-side checks and aggregation rules. Nothing here can see a
//! node's honesty; decisions depend only on what the update carries.

use crate::boosting::{BinStats, FeatureHistogram};
use crate::config::Defense;
use crate::r1cs::PublicInputs;
use crate::snark::{verify, Crs, Proof};

use super::FedError;

/// One node's contribution to one tree level.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUpdate {
    pub node_id: usize,
    pub round: usize,
    pub depth: usize,
    /// One histogram per open leaf, in leaf order.
    pub histograms: Vec<FeatureHistogram>,
    /// Totals over the rows still routed to open leaves.
    pub public: PublicInputs,
    /// Attached to the depth-0 update under the zkp defense.
    pub proof: Option<Proof>,
    forged: bool,
}

impl NodeUpdate {
    pub fn new(
        node_id: usize,
        round: usize,
        depth: usize,
        histograms: Vec<FeatureHistogram>,
        public: PublicInputs,
        proof: Option<Proof>,
        forged: bool,
    ) -> Self {
        Self {
            node_id,
            round,
            depth,
            histograms,
            public,
            proof,
            forged,
        }
    }

    /// Whether a Byzantine node built this. For tests and bookkeeping only.
    pub fn forged(&self) -> bool {
        self.forged
    }

    pub fn set_forged(&mut self, forged: bool) {
        self.forged = forged;
    }
}

/// For every feature, the bin sums over all leaves equal the declared totals.
pub fn public_linear_check(update: &NodeUpdate) -> bool {
    let Some(n_features) = update.histograms.first().map(FeatureHistogram::n_features) else {
        return update.public == PublicInputs::default();
    };
    if update
        .histograms
        .iter()
        .any(|h| h.n_features() != n_features)
    {
        return false;
    }
    (0..n_features).all(|k| {
        let mut sum = BinStats::default();
        for h in &update.histograms {
            sum.add(&h.feature_totals(k));
        }
        sum.g == update.public.g_total
            && sum.h == update.public.h_total
            && sum.count == update.public.n_count
    })
}

/// The per-update gate run by verification workers. Under zkp the depth-0
/// update must carry a proof that verifies against its totals.
pub fn admit(defense: Defense, crs: Option<&Crs>, update: &NodeUpdate) -> bool {
    match defense {
        Defense::None | Defense::Median => true,
        Defense::Zkp => {
            if !public_linear_check(update) {
                return false;
            }
            if update.depth > 0 {
                return true;
            }
            match (crs, &update.proof) {
                (Some(crs), Some(proof)) => verify(crs, &update.public.to_field(), proof),
                _ => false,
            }
        }
    }
}

/// Median of `values`; the mean of the middle pair for even counts and 0
/// for none.
pub fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

type Stat = fn(&BinStats) -> i64;
const ROBUST_STATS: [Stat; 2] = [|b| b.g, |b| b.h];

/// Median over nodes of the per-instance bin mean `stat / count`, skipping
/// nodes with nothing in the bin.
fn median_of_means(cells: &[&BinStats], stat: Stat, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(
        cells
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| stat(b) as f64 / b.count as f64),
    );
    median(scratch)
}

fn cells<'a>(updates: &[&'a NodeUpdate], leaf: usize, k: usize, v: usize) -> Vec<&'a BinStats> {
    updates
        .iter()
        .map(|u| &u.histograms[leaf].feature(k)[v])
        .collect()
}

fn check_shapes(updates: &[&NodeUpdate], shape: &[usize], n_leaves: usize) -> Result<(), FedError> {
    let ok = updates
        .iter()
        .all(|u| u.histograms.len() == n_leaves && u.histograms.iter().all(|h| h.shape() == shape));
    if ok {
        Ok(())
    } else {
        Err(FedError::ShapeMismatch)
    }
}

/// Per-leaf aggregate of `updates` (already filtered to the accepted set and
/// sorted by node id). Sums for none and zkp. For median, each bin's `G` and
/// `H` are the median over nodes of the per-instance bin means, times the
/// bin's total count; counts are summed.
pub fn aggregate(
    defense: Defense,
    updates: &[&NodeUpdate],
    shape: &[usize],
    n_leaves: usize,
) -> Result<Vec<FeatureHistogram>, FedError> {
    check_shapes(updates, shape, n_leaves)?;
    let mut out = vec![FeatureHistogram::zeros(shape); n_leaves];
    match defense {
        Defense::None | Defense::Zkp => {
            for u in updates {
                for (acc, h) in out.iter_mut().zip(&u.histograms) {
                    acc.add(h)?;
                }
            }
        }
        Defense::Median => {
            let mut scratch = Vec::with_capacity(updates.len());
            for (leaf, acc) in out.iter_mut().enumerate() {
                for (k, feature) in acc.features_mut().iter_mut().enumerate() {
                    for (v, bin) in feature.iter_mut().enumerate() {
                        let cells = cells(updates, leaf, k, v);
                        let count: u64 = cells.iter().map(|b| b.count).sum();
                        let scaled = |m: f64| (m * count as f64).round() as i64;
                        bin.g = scaled(median_of_means(&cells, ROBUST_STATS[0], &mut scratch));
                        bin.h = scaled(median_of_means(&cells, ROBUST_STATS[1], &mut scratch));
                        bin.count = count;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradient and hessian coordinates `(leaf, feature, bin, stat)` whose
/// robust estimate differs between `all` and `reduced`. Returns
/// `(changed, total)`.
pub fn median_influence(
    all: &[&NodeUpdate],
    reduced: &[&NodeUpdate],
    shape: &[usize],
    n_leaves: usize,
) -> Result<(u64, u64), FedError> {
    check_shapes(all, shape, n_leaves)?;
    check_shapes(reduced, shape, n_leaves)?;
    let (mut changed, mut total) = (0u64, 0u64);
    let mut scratch = Vec::new();
    for leaf in 0..n_leaves {
        for (k, &bins) in shape.iter().enumerate() {
            for v in 0..bins {
                let (a, b) = (cells(all, leaf, k, v), cells(reduced, leaf, k, v));
                for stat in ROBUST_STATS {
                    let before = median_of_means(&a, stat, &mut scratch);
                    let after = median_of_means(&b, stat, &mut scratch);
                    total += 1;
                    changed += u64::from(before.to_bits() != after.to_bits());
                }
            }
        }
    }
    Ok((changed, total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseOutcome {
    pub accepted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub merged: Vec<FeatureHistogram>,
}

fn run_defense(
    defense: Defense,
    crs: Option<&Crs>,
    updates: &[NodeUpdate],
    shape: &[usize],
    n_leaves: usize,
) -> Result<DefenseOutcome, FedError> {
    let mut sorted: Vec<&NodeUpdate> = updates.iter().collect();
    sorted.sort_by_key(|u| u.node_id);
    let (ok, bad): (Vec<&NodeUpdate>, Vec<&NodeUpdate>) =
        sorted.into_iter().partition(|u| admit(defense, crs, u));
    let merged = aggregate(defense, &ok, shape, n_leaves)?;
    Ok(DefenseOutcome {
        accepted: ok.iter().map(|u| u.node_id).collect(),
        rejected: bad.iter().map(|u| u.node_id).collect(),
        merged,
    })
}

/// Accept everything and sum.
pub fn defense_none(
    updates: &[NodeUpdate],
    shape: &[usize],
    n_leaves: usize,
) -> Result<DefenseOutcome, FedError> {
    run_defense(Defense::None, None, updates, shape, n_leaves)
}

/// Accept everything; coordinate-wise median of bin means scaled by the
/// bin count.
pub fn defense_median(
    updates: &[NodeUpdate],
    shape: &[usize],
    n_leaves: usize,
) -> Result<DefenseOutcome, FedError> {
    run_defense(Defense::Median, None, updates, shape, n_leaves)
}

/// Accept updates whose proof verifies and whose bins add up; sum those.
pub fn defense_zkp(
    crs: &Crs,
    updates: &[NodeUpdate],
    shape: &[usize],
    n_leaves: usize,
) -> Result<DefenseOutcome, FedError> {
    run_defense(Defense::Zkp, Some(crs), updates, shape, n_leaves)
}
