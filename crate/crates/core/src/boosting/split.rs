use serde::{Deserialize, Serialize};

use super::histogram::{BinStats, FeatureHistogram};

/// Regularization shared by split search and leaf weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub lambda: f64,
    pub gamma: f64,
    pub fraction_bits: u32,
}

impl SplitParams {
    fn to_real(self, v: i64) -> f64 {
        v as f64 / (1u64 << self.fraction_bits) as f64
    }
}

/// Rows with `bin <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: u16,
    pub gain: f64,
    pub left: BinStats,
    pub right: BinStats,
}

/// `1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma` on real-valued sums.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

/// `-G / (H + lambda)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

/// Leaf weight of fixed-point sums, rounded back to fixed point.
pub fn leaf_weight_fp(stats: &BinStats, params: &SplitParams) -> i64 {
    let w = leaf_weight(
        params.to_real(stats.g),
        params.to_real(stats.h),
        params.lambda,
    );
    (w * (1u64 << params.fraction_bits) as f64).round() as i64
}

/// Best boundary over all features by prefix sums. Only strictly better gains
/// replace the incumbent, so ties go to the lower feature, then lower bin.
/// Splits leaving one side empty are skipped.
pub fn best_split(hist: &FeatureHistogram, params: &SplitParams) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for (feature, bins) in hist.features().iter().enumerate() {
        let total = hist.feature_totals(feature);
        let mut left = BinStats::default();
        for (threshold, bin) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
            left.add(bin);
            let right = total.sub(&left);
            if left.count == 0 || right.count == 0 {
                continue;
            }
            let gain = split_gain(
                params.to_real(left.g),
                params.to_real(left.h),
                params.to_real(right.g),
                params.to_real(right.h),
                params.lambda,
                params.gamma,
            );
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: threshold as u16,
                    gain,
                    left,
                    right,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PARAMS: SplitParams = SplitParams {
        lambda: 1.0,
        gamma: 0.0,
        fraction_bits: 16,
    };

    fn stats(g: f64, h: f64, count: u64) -> BinStats {
        let one = (1i64 << 16) as f64;
        BinStats {
            g: (g * one) as i64,
            h: (h * one) as i64,
            count,
        }
    }

    #[test]
    fn gain_example() {
        let gain = split_gain(-2.0, 3.0, 1.0, 2.0, 1.0, 0.0);
        assert!((gain - 0.5 * (1.0 + 1.0 / 3.0 - 1.0 / 6.0)).abs() < 1e-12);
        assert!((gain - 0.58333).abs() < 1e-5);
    }

    #[test]
    fn leaf_weight_example() {
        assert_eq!(leaf_weight(-2.0, 3.0, 1.0), 0.5);
        assert_eq!(leaf_weight_fp(&stats(-2.0, 3.0, 4), &PARAMS), 1 << 15);
    }

    #[test]
    fn two_bins_give_the_hand_computed_split() {
        let mut h = FeatureHistogram::zeros(&[2]);
        h.features_mut()[0][0] = stats(-2.0, 3.0, 3);
        h.features_mut()[0][1] = stats(1.0, 2.0, 2);
        let s = best_split(&h, &PARAMS).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 0));
        assert!((s.gain - 0.583333).abs() < 1e-5);
    }

    #[test]
    fn zero_gradients_give_no_split() {
        let mut h = FeatureHistogram::zeros(&[4, 4]);
        for f in h.features_mut() {
            for b in f.iter_mut() {
                b.count = 3;
                b.h = 1 << 16;
            }
        }
        assert_eq!(best_split(&h, &PARAMS), None);
    }

    #[test]
    fn ties_go_to_lowest_feature_then_bin() {
        let mut h = FeatureHistogram::zeros(&[3, 3]);
        for f in h.features_mut() {
            f[0] = stats(-1.0, 1.0, 1);
            f[1] = stats(0.0, 0.0, 1);
            f[2] = stats(1.0, 1.0, 1);
        }
        // thresholds 0 and 1 both isolate the first bin's mass from the last
        let s = best_split(&h, &PARAMS).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 0));
    }

    fn brute_force(hist: &FeatureHistogram, params: &SplitParams) -> Option<(usize, u16, f64)> {
        let mut best: Option<(usize, u16, f64)> = None;
        for (k, bins) in hist.features().iter().enumerate() {
            for t in 0..bins.len() - 1 {
                let sum = |r: std::ops::Range<usize>| {
                    let mut s = BinStats::default();
                    for b in &bins[r] {
                        s.add(b);
                    }
                    s
                };
                let (l, r) = (sum(0..t + 1), sum(t + 1..bins.len()));
                if l.count == 0 || r.count == 0 {
                    continue;
                }
                let gain = split_gain(
                    params.to_real(l.g),
                    params.to_real(l.h),
                    params.to_real(r.g),
                    params.to_real(r.h),
                    params.lambda,
                    params.gamma,
                );
                if gain > 0.0 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((k, t as u16, gain));
                }
            }
        }
        best
    }

    fn histogram_strategy() -> impl Strategy<Value = FeatureHistogram> {
        prop::collection::vec((-1i64 << 18..1i64 << 18, 0i64..1 << 18, 0u64..4), 8).prop_map(
            |cells| {
                let mut h = FeatureHistogram::zeros(&[4, 4]);
                for (i, (g, hh, c)) in cells.into_iter().enumerate() {
                    h.features_mut()[i / 4][i % 4] = BinStats { g, h: hh, count: c };
                }
                h
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn agrees_with_brute_force(hist in histogram_strategy(), gamma in 0.0f64..0.5) {
            let params = SplitParams { gamma, ..PARAMS };
            let got = best_split(&hist, &params).map(|s| (s.feature, s.threshold, s.gain));
            prop_assert_eq!(got, brute_force(&hist, &params));
        }
    }
}
