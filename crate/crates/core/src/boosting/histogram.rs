//! Per-leaf gradient histograms: for feature `k` and bin `v`, the exact
//! fixed-point sums `G_kv`, `H_kv` and the instance count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::surrogate::GradientPair;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistogramError {
    #[error("histogram shapes differ")]
    ShapeMismatch,
    #[error("nothing to merge")]
    Empty,
    #[error("bin edges for feature {0} are not strictly increasing and finite")]
    UnsortedEdges(usize),
    #[error("row has {got} features, edges cover {expected}")]
    RowWidth { expected: usize, got: usize },
}

/// Shared per-feature cut points. A value lands in bin
/// `#{edges < value}`, so the last bin catches everything above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    edges: Vec<Vec<f64>>,
}

impl BinEdges {
    pub fn new(edges: Vec<Vec<f64>>) -> Result<Self, HistogramError> {
        for (k, e) in edges.iter().enumerate() {
            if e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HistogramError::UnsortedEdges(k));
            }
            if e.len() >= u16::MAX as usize {
                return Err(HistogramError::UnsortedEdges(k));
            }
        }
        Ok(Self { edges })
    }

    /// Quantile cut points of `sample` (rows of features), at most
    /// `n_bins - 1` per feature after removing duplicates.
    pub fn from_quantiles(sample: &[Vec<f64>], n_features: usize, n_bins: usize) -> Self {
        let n_bins = n_bins.max(1);
        let edges = (0..n_features)
            .map(|k| {
                let mut col: Vec<f64> = sample
                    .iter()
                    .map(|r| r[k])
                    .filter(|v| v.is_finite())
                    .collect();
                col.sort_by(f64::total_cmp);
                let mut cuts: Vec<f64> = (1..n_bins)
                    .filter_map(|q| col.get(q * col.len() / n_bins).copied())
                    .collect();
                cuts.dedup();
                cuts
            })
            .collect();
        Self { edges }
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.n_features()).map(|k| self.n_bins(k)).collect()
    }

    pub fn feature_edges(&self, feature: usize) -> &[f64] {
        &self.edges[feature]
    }

    pub fn bin(&self, feature: usize, value: f64) -> u16 {
        self.edges[feature].partition_point(|&e| e < value) as u16
    }
}

/// Rows pre-mapped to bin indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedMatrix {
    n_features: usize,
    bins: Vec<u16>,
}

impl BinnedMatrix {
    pub fn new(edges: &BinEdges, rows: &[Vec<f64>]) -> Result<Self, HistogramError> {
        let n_features = edges.n_features();
        let mut bins = Vec::with_capacity(rows.len() * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(HistogramError::RowWidth {
                    expected: n_features,
                    got: row.len(),
                });
            }
            bins.extend(row.iter().enumerate().map(|(k, &v)| edges.bin(k, v)));
        }
        Ok(Self { n_features, bins })
    }

    pub fn n_rows(&self) -> usize {
        self.bins.len() / self.n_features.max(1)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.bins[i * self.n_features..(i + 1) * self.n_features]
    }

    /// The listed rows, in order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut bins = Vec::with_capacity(rows.len() * self.n_features);
        for &i in rows {
            bins.extend_from_slice(self.row(i));
        }
        Self {
            n_features: self.n_features,
            bins,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct BinStats {
    pub g: i64,
    pub h: i64,
    pub count: u64,
}

impl BinStats {
    pub fn add(&mut self, other: &BinStats) {
        self.g += other.g;
        self.h += other.h;
        self.count += other.count;
    }

    pub fn sub(&self, other: &BinStats) -> BinStats {
        BinStats {
            g: self.g - other.g,
            h: self.h - other.h,
            count: self.count - other.count,
        }
    }

    fn push(&mut self, gp: GradientPair) {
        self.g += gp.g;
        self.h += gp.h;
        self.count += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureHistogram {
    bins: Vec<Vec<BinStats>>,
}

impl FeatureHistogram {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            bins: shape
                .iter()
                .map(|&n| vec![BinStats::default(); n])
                .collect(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.bins.iter().map(Vec::len).collect()
    }

    pub fn n_features(&self) -> usize {
        self.bins.len()
    }

    pub fn feature(&self, k: usize) -> &[BinStats] {
        &self.bins[k]
    }

    pub fn features(&self) -> &[Vec<BinStats>] {
        &self.bins
    }

    pub fn features_mut(&mut self) -> &mut [Vec<BinStats>] {
        &mut self.bins
    }

    /// Sums of feature `k`'s bins.
    pub fn feature_totals(&self, k: usize) -> BinStats {
        let mut t = BinStats::default();
        for b in &self.bins[k] {
            t.add(b);
        }
        t
    }

    /// Leaf totals, read off the first feature.
    pub fn totals(&self) -> BinStats {
        if self.bins.is_empty() {
            BinStats::default()
        } else {
            self.feature_totals(0)
        }
    }

    pub fn add(&mut self, other: &FeatureHistogram) -> Result<(), HistogramError> {
        if self.shape() != other.shape() {
            return Err(HistogramError::ShapeMismatch);
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            for (x, y) in a.iter_mut().zip(b) {
                x.add(y);
            }
        }
        Ok(())
    }

    /// Applies `f` to every bin.
    pub fn map_bins(&self, f: impl Fn(&BinStats) -> BinStats) -> Self {
        Self {
            bins: self
                .bins
                .iter()
                .map(|feat| feat.iter().map(&f).collect())
                .collect(),
        }
    }
}

/// Histogram of the listed rows.
pub fn build_histogram(
    binned: &BinnedMatrix,
    shape: &[usize],
    gradients: &[GradientPair],
    rows: impl IntoIterator<Item = usize>,
) -> FeatureHistogram {
    let mut hist = FeatureHistogram::zeros(shape);
    for i in rows {
        for (k, &bin) in binned.row(i).iter().enumerate() {
            hist.bins[k][bin as usize].push(gradients[i]);
        }
    }
    hist
}

/// One histogram per leaf; `leaf_of[i] = None` drops row `i`.
pub fn build_leaf_histograms(
    binned: &BinnedMatrix,
    shape: &[usize],
    gradients: &[GradientPair],
    leaf_of: &[Option<usize>],
    n_leaves: usize,
) -> Vec<FeatureHistogram> {
    let mut hists = vec![FeatureHistogram::zeros(shape); n_leaves];
    for (i, leaf) in leaf_of.iter().enumerate() {
        if let Some(l) = *leaf {
            for (k, &bin) in binned.row(i).iter().enumerate() {
                hists[l].bins[k][bin as usize].push(gradients[i]);
            }
        }
    }
    hists
}

/// Coordinate-wise sums. Summing sufficient statistics is the same as
/// count-weighted averaging of the per-node bin means.
pub fn merge_histograms<'a>(
    hists: impl IntoIterator<Item = &'a FeatureHistogram>,
) -> Result<FeatureHistogram, HistogramError> {
    let mut iter = hists.into_iter();
    let mut acc = iter.next().ok_or(HistogramError::Empty)?.clone();
    for h in iter {
        acc.add(h)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gp(g: i64, h: i64) -> GradientPair {
        GradientPair { g, h }
    }

    fn random_setup(
        rng: &mut ChaCha8Rng,
        rows: usize,
    ) -> (BinEdges, BinnedMatrix, Vec<GradientPair>) {
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let edges = BinEdges::from_quantiles(&data, 3, 8);
        let binned = BinnedMatrix::new(&edges, &data).unwrap();
        let grads = (0..rows)
            .map(|_| {
                gp(
                    rng.random_range(-1 << 20..1 << 20),
                    rng.random_range(0..1 << 20),
                )
            })
            .collect();
        (edges, binned, grads)
    }

    #[test]
    fn bin_index_counts_smaller_edges() {
        let edges = BinEdges::new(vec![vec![-1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(edges.bin(0, -5.0), 0);
        assert_eq!(edges.bin(0, -1.0), 0);
        assert_eq!(edges.bin(0, -0.5), 1);
        assert_eq!(edges.bin(0, 1.0), 2);
        assert_eq!(edges.bin(0, 1e9), 3);
        assert!(BinEdges::new(vec![vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn quantile_edges_are_deduplicated() {
        let sample: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 3) as f64]).collect();
        let edges = BinEdges::from_quantiles(&sample, 1, 32);
        assert_eq!(edges.feature_edges(0), &[0.0, 1.0, 2.0]);
        assert!(BinEdges::new(vec![edges.feature_edges(0).to_vec()]).is_ok());
    }

    #[test]
    fn two_instances_in_one_bin() {
        let edges = BinEdges::new(vec![vec![0.0]]).unwrap();
        let binned = BinnedMatrix::new(&edges, &[vec![1.0], vec![2.0]]).unwrap();
        let one = 1 << 16;
        let h = build_histogram(
            &binned,
            &edges.shape(),
            &[gp(one / 2, 0), gp(-one / 5, 0)],
            0..2,
        );
        assert_eq!(h.feature(0)[1].g, one / 2 - one / 5);
        assert_eq!(h.feature(0)[1].count, 2);
        assert_eq!(h.feature(0)[0], BinStats::default());
    }

    #[test]
    fn empty_rows_give_zero_histogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let (edges, binned, grads) = random_setup(&mut rng, 10);
        let h = build_histogram(&binned, &edges.shape(), &grads, std::iter::empty());
        assert_eq!(h, FeatureHistogram::zeros(&edges.shape()));
    }

    #[test]
    fn totals_agree_across_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let (edges, binned, grads) = random_setup(&mut rng, 50);
        let h = build_histogram(&binned, &edges.shape(), &grads, 0..50);
        let t = h.totals();
        assert_eq!(t.count, 50);
        assert_eq!(t.g, grads.iter().map(|x| x.g).sum::<i64>());
        for k in 0..3 {
            assert_eq!(h.feature_totals(k), t);
        }
    }

    #[test]
    fn merge_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let (edges, binned, grads) = random_setup(&mut rng, 20);
        let x = build_histogram(&binned, &edges.shape(), &grads, 0..20);
        let zero = FeatureHistogram::zeros(&edges.shape());
        assert_eq!(merge_histograms([&x, &zero]).unwrap(), x);
        assert_eq!(
            merge_histograms(std::iter::empty()),
            Err(HistogramError::Empty)
        );
        assert_eq!(
            merge_histograms([&x, &FeatureHistogram::zeros(&[2])]),
            Err(HistogramError::ShapeMismatch)
        );
    }

    #[test]
    fn leaf_histograms_partition_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let (edges, binned, grads) = random_setup(&mut rng, 30);
        let leaf_of: Vec<Option<usize>> = (0..30)
            .map(|i| if i % 5 == 0 { None } else { Some(i % 3) })
            .collect();
        let leaves = build_leaf_histograms(&binned, &edges.shape(), &grads, &leaf_of, 3);
        for (l, h) in leaves.iter().enumerate() {
            let rows = (0..30).filter(|&i| leaf_of[i] == Some(l));
            assert_eq!(*h, build_histogram(&binned, &edges.shape(), &grads, rows));
        }
    }

    proptest! {
        #[test]
        fn union_of_disjoint_shards_is_merge(seed in any::<u64>(), split in 0usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (edges, binned, grads) = random_setup(&mut rng, 40);
            let shape = edges.shape();
            let whole = build_histogram(&binned, &shape, &grads, 0..40);
            let a = build_histogram(&binned, &shape, &grads, 0..split);
            let b = build_histogram(&binned, &shape, &grads, split..40);
            prop_assert_eq!(merge_histograms([&a, &b]).unwrap(), whole);
        }

        #[test]
        fn merge_commutes_and_associates(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (edges, binned, grads) = random_setup(&mut rng, 30);
            let shape = edges.shape();
            let x = build_histogram(&binned, &shape, &grads, 0..7);
            let y = build_histogram(&binned, &shape, &grads, 7..19);
            let z = build_histogram(&binned, &shape, &grads, 19..30);
            prop_assert_eq!(merge_histograms([&x, &y]).unwrap(), merge_histograms([&y, &x]).unwrap());
            let left = merge_histograms([&merge_histograms([&x, &y]).unwrap(), &z]).unwrap();
            let right = merge_histograms([&x, &merge_histograms([&y, &z]).unwrap()]).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
