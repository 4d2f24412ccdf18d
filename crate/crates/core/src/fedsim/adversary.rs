use serde::Serialize;

use crate::boosting::{BinStats, FeatureHistogram, GradientPair};
use crate::r1cs::PublicInputs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Honesty {
    Honest,
    Byzantine { kappa: f64, invert: bool },
}

impl Honesty {
    pub fn is_byzantine(&self) -> bool {
        matches!(self, Honesty::Byzantine { .. })
    }

    /// The per-instance attack: `g -> round(-kappa g)` (or `+kappa` without
    /// inversion) and `h -> round(kappa h)`. Histograms built from tampered
    /// instances stay consistent with their totals.
    pub fn tamper(&self, gp: GradientPair) -> GradientPair {
        match *self {
            Honesty::Honest => gp,
            Honesty::Byzantine { kappa, invert } => GradientPair {
                g: scale(gp.g, signed(kappa, invert)),
                h: scale(gp.h, kappa),
            },
        }
    }
}

fn signed(kappa: f64, invert: bool) -> f64 {
    if invert {
        -kappa
    } else {
        kappa
    }
}

fn scale(v: i64, by: f64) -> i64 {
    (v as f64 * by).round() as i64
}

/// The same attack applied to finished histograms and totals. Counts are
/// untouched. For integer `kappa` this equals building the histograms from
/// [`Honesty::tamper`]ed instances.
pub fn byzantine_perturb(
    hists: &[FeatureHistogram],
    totals: &PublicInputs,
    kappa: f64,
    invert: bool,
) -> (Vec<FeatureHistogram>, PublicInputs) {
    let gs = signed(kappa, invert);
    let perturbed = hists
        .iter()
        .map(|h| {
            h.map_bins(|b| BinStats {
                g: scale(b.g, gs),
                h: scale(b.h, kappa),
                count: b.count,
            })
        })
        .collect();
    let totals = PublicInputs {
        g_total: scale(totals.g_total, gs),
        h_total: scale(totals.h_total, kappa),
        n_count: totals.n_count,
    };
    (perturbed, totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::{build_histogram, BinEdges, BinnedMatrix};
    use crate::fedsim::defense::{public_linear_check, NodeUpdate};

    const ONE: f64 = 65536.0;

    fn fixture() -> (
        Vec<FeatureHistogram>,
        PublicInputs,
        BinnedMatrix,
        Vec<GradientPair>,
        Vec<usize>,
    ) {
        let edges = BinEdges::new(vec![vec![0.0], vec![-1.0, 1.0]]).unwrap();
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64 - 6.0, (i % 5) as f64 - 2.0])
            .collect();
        let binned = BinnedMatrix::new(&edges, &rows).unwrap();
        let grads: Vec<GradientPair> = (0..12)
            .map(|i| GradientPair {
                g: (i * 7919 % 30011) - 15000,
                h: i * 3001 % 20011,
            })
            .collect();
        let hist = build_histogram(&binned, &edges.shape(), &grads, 0..12);
        let totals = PublicInputs {
            g_total: grads.iter().map(|g| g.g).sum(),
            h_total: grads.iter().map(|g| g.h).sum(),
            n_count: 12,
        };
        (vec![hist], totals, binned, grads, edges.shape())
    }

    #[test]
    fn gradient_example() {
        let g = GradientPair {
            g: (0.3 * ONE).round() as i64,
            h: 0,
        };
        let t = Honesty::Byzantine {
            kappa: 10.0,
            invert: true,
        }
        .tamper(g);
        assert!((t.g as f64 / ONE + 3.0).abs() < 1e-4);
    }

    #[test]
    fn invert_only_flips_signs() {
        let (hists, totals, ..) = fixture();
        let (p, t) = byzantine_perturb(&hists, &totals, 1.0, true);
        assert_eq!(t.g_total, -totals.g_total);
        assert_eq!(t.h_total, totals.h_total);
        for (a, b) in p[0]
            .features()
            .iter()
            .flatten()
            .zip(hists[0].features().iter().flatten())
        {
            assert_eq!((a.g, a.h, a.count), (-b.g, b.h, b.count));
        }
    }

    #[test]
    fn perturbation_keeps_the_linear_check() {
        let (hists, totals, ..) = fixture();
        let (p, t) = byzantine_perturb(&hists, &totals, 10.0, true);
        let update = NodeUpdate::new(0, 0, 0, p, t, None, true);
        assert!(public_linear_check(&update));
    }

    #[test]
    fn integer_kappa_matches_instance_tampering() {
        let (hists, totals, binned, grads, shape) = fixture();
        let attacker = Honesty::Byzantine {
            kappa: 10.0,
            invert: true,
        };
        let tampered: Vec<_> = grads.iter().map(|&g| attacker.tamper(g)).collect();
        let direct = build_histogram(&binned, &shape, &tampered, 0..12);
        let (p, _) = byzantine_perturb(&hists, &totals, 10.0, true);
        assert_eq!(p[0], direct);
    }
}
