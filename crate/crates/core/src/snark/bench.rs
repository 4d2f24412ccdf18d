use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boosting::Label;
use crate::r1cs::{build_gradient_circuit, synthesize_witness, GradientCircuitParams};

use super::{prove, r1cs_to_qap, setup, verify, ProveMode, SnarkError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchReport {
    pub n_instances: usize,
    pub constraints: usize,
    pub prove_ms: f64,
    pub verify_ms: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Median wall-clock prove and verify times over `iterations` runs on a
/// random shard of the gradient circuit.
pub fn bench_prove_verify(
    params: &GradientCircuitParams,
    iterations: usize,
    seed: u64,
) -> Result<BenchReport, SnarkError> {
    let iterations = iterations.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circuit = build_gradient_circuit(params)?;
    let qap = r1cs_to_qap(&circuit.cs)?;
    let (crs, _) = setup(&qap, rng.random());
    let clamp = params.margin_clamp();
    let shard: Vec<(Label, f64)> = (0..params.n_instances())
        .map(|_| {
            (
                Label::from_binary(rng.random()),
                rng.random_range(-clamp..clamp),
            )
        })
        .collect();
    let synth = synthesize_witness(params, &shard)?;
    let public = synth.public.to_field();

    let mut prove_times = Vec::with_capacity(iterations);
    let mut verify_times = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        let proof = prove(&crs, &qap, &synth.witness, ProveMode::Strict, &mut rng)?;
        prove_times.push(start.elapsed().as_secs_f64() * 1e3);

        let start = Instant::now();
        let ok = verify(&crs, &public, &proof);
        verify_times.push(start.elapsed().as_secs_f64() * 1e3);
        assert!(ok, "honest proof failed to verify");
    }
    Ok(BenchReport {
        n_instances: params.n_instances(),
        constraints: qap.num_constraints(),
        prove_ms: median(prove_times),
        verify_ms: median(verify_times),
    })
}
