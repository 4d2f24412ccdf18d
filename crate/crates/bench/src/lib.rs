//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zkfl_core::boosting::{
    build_histogram, BinEdges, BinnedMatrix, FeatureHistogram, GradientPair, Label,
};
use zkfl_core::config::ExperimentConfig;
use zkfl_core::field::FieldElement;
use zkfl_core::r1cs::{build_gradient_circuit, synthesize_witness, Witness};
use zkfl_core::snark::{r1cs_to_qap, setup, Crs, Qap};

/// A gradient circuit for `n` instances with a satisfying witness.
pub struct ProofFixture {
    pub qap: Qap,
    pub crs: Crs,
    pub witness: Witness,
    pub public: Vec<FieldElement>,
}

pub fn proof_fixture(n: usize, seed: u64) -> ProofFixture {
    let circuit_cfg = ExperimentConfig::default().circuit;
    let loss = circuit_cfg.loss_spec().expect("default loss fits");
    let params = circuit_cfg
        .gradient_params(&loss, n)
        .expect("default circuit params");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circuit = build_gradient_circuit(&params).expect("circuit builds");
    let qap = r1cs_to_qap(&circuit.cs).expect("qap");
    let (crs, _) = setup(&qap, rng.random());
    let clamp = params.margin_clamp();
    let shard: Vec<(Label, f64)> = (0..n)
        .map(|_| {
            (
                Label::from_binary(rng.random()),
                rng.random_range(-clamp..clamp),
            )
        })
        .collect();
    let synth = synthesize_witness(&params, &shard).expect("witness");
    ProofFixture {
        public: synth.public.to_field(),
        qap,
        crs,
        witness: synth.witness,
    }
}

pub fn random_elements(n: usize, seed: u64) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| FieldElement::random(&mut rng)).collect()
}

/// One histogram per node, each over `rows` random rows.
pub fn node_histograms(
    nodes: usize,
    rows: usize,
    n_features: usize,
    n_bins: usize,
    seed: u64,
) -> (Vec<usize>, Vec<FeatureHistogram>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = || -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| {
                (0..n_features)
                    .map(|_| rng.random_range(-3.0..3.0))
                    .collect()
            })
            .collect()
    };
    let edges = BinEdges::from_quantiles(&sample(), n_features, n_bins);
    let shape = edges.shape();
    let hists = (0..nodes)
        .map(|_| {
            let binned = BinnedMatrix::new(&edges, &sample()).expect("row widths match");
            let grads: Vec<GradientPair> = (0..rows)
                .map(|i| GradientPair {
                    g: (i as i64 % 7 - 3) << 14,
                    h: 1 << 14,
                })
                .collect();
            build_histogram(&binned, &shape, &grads, 0..rows)
        })
        .collect();
    (shape, hists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use zkfl_core::snark::{prove, verify, ProveMode};

    #[test]
    fn fixtures_are_well_formed() {
        let fx = proof_fixture(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let proof = prove(&fx.crs, &fx.qap, &fx.witness, ProveMode::Strict, &mut rng).unwrap();
        assert!(verify(&fx.crs, &fx.public, &proof));

        let (shape, hists) = node_histograms(3, 20, 4, 8, 2);
        assert_eq!(hists.len(), 3);
        assert!(hists
            .iter()
            .all(|h| h.shape() == shape && h.totals().count == 20));
    }
}
