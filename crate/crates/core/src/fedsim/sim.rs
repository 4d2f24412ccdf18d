//! The round loop. Each round every node computes gradients at its current
//! margins, the tree is grown level by level from node updates that pass
//! through the partitioned queue and the verification workers, and the
//! finished tree is broadcast back.
//!
//! Under zkp the depth-0 update carries the proof over the node's totals. A
//! node rejected at any level sits out the rest of that round.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::boosting::{
    build_leaf_histograms, calibration_edges, grow_tree, metrics, shard_gradients,
    train_centralized, BinEdges, BinnedMatrix, Ensemble, FeatureHistogram, GradientPair, Label,
    LeafRouter, LevelSource, LossSpec,
};
use crate::config::{DatasetSource, Defense, ExperimentConfig};
use crate::data::{generate_synthetic, load_csv, Dataset};
use crate::r1cs::{
    build_gradient_circuit, synthesize_forged_witness, synthesize_witness, GradientCircuitParams,
    PublicInputs,
};
use crate::snark::{prove, r1cs_to_qap, setup, Crs, ProveMode, Qap};

use super::adversary::Honesty;
use super::defense::{admit, aggregate, median_influence, NodeUpdate};
use super::partition::partition_noniid;
use super::queue::PartitionedQueue;
use super::report::{RoundReport, Summary, SummaryRecord};
use super::FedError;

const TAG_PARTITION: u64 = 1;
const TAG_BYZANTINE: u64 = 2;
const TAG_CALIBRATION: u64 = 3;
const TAG_SETUP: u64 = 4;
const TAG_PROOF: u64 = 5;

/// Independent sub-seed per purpose.
fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng.next_u64()
}

/// A circuit and its CRS, shared by every node of an experiment.
pub struct ZkSetup {
    pub qap: Qap,
    pub crs: Crs,
}

impl ZkSetup {
    pub fn new(params: &GradientCircuitParams, seed: u64) -> Result<Self, FedError> {
        let circuit = build_gradient_circuit(params)?;
        let qap = r1cs_to_qap(&circuit.cs)?;
        let (crs, _) = setup(&qap, seed);
        Ok(Self { qap, crs })
    }
}

/// Everything fixed before the first round: data, shards, bin edges, the
/// Byzantine set and the circuit.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub loss: LossSpec,
    pub circuit: GradientCircuitParams,
    pub edges: BinEdges,
    pub train: Dataset,
    pub train_binned: BinnedMatrix,
    pub test_binned: BinnedMatrix,
    pub test_labels: Vec<Label>,
    pub shards: Vec<Vec<usize>>,
    pub byzantine: Vec<bool>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self, FedError> {
        config.validate()?;
        let data = match &config.dataset {
            DatasetSource::Synthetic { n_features, noise } => generate_synthetic(
                config.n_nodes * config.rows_per_node + config.test_rows,
                *n_features,
                *noise,
                config.seed,
            )?,
            DatasetSource::Csv { path, limit_rows } => load_csv(path, *limit_rows)?,
        };
        if data.n_rows() <= config.test_rows {
            return Err(FedError::DatasetTooSmall {
                rows: data.n_rows(),
                nodes: config.n_nodes,
            });
        }
        let (train, test) = data.split_tail(config.test_rows);
        let shard_size = config.rows_per_node.min(train.n_rows() / config.n_nodes);
        let shards = partition_noniid(
            &train.labels,
            config.n_nodes,
            Some(shard_size.max(1)),
            config.dirichlet_alpha,
            derive_seed(config.seed, TAG_PARTITION),
        )?;

        let mut ids: Vec<usize> = (0..config.n_nodes).collect();
        rand::seq::SliceRandom::shuffle(
            ids.as_mut_slice(),
            &mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, TAG_BYZANTINE)),
        );
        let mut byzantine = vec![false; config.n_nodes];
        for &i in &ids[..config.n_byzantine()] {
            byzantine[i] = true;
        }

        let edges = calibration_edges(
            &train.features,
            config.bins,
            derive_seed(config.seed, TAG_CALIBRATION),
        );
        let train_binned = BinnedMatrix::new(&edges, &train.features)?;
        let test_binned = BinnedMatrix::new(&edges, &test.features)?;
        let loss = config.circuit.loss_spec()?;
        let circuit = config.circuit.gradient_params(&loss, shard_size)?;
        Ok(Self {
            config: config.clone(),
            loss,
            circuit,
            edges,
            train,
            train_binned,
            test_binned,
            test_labels: test.labels,
            shards,
            byzantine,
        })
    }

    /// The same setup with every node honest.
    pub fn pristine(&self) -> Prepared {
        Prepared {
            config: ExperimentConfig {
                byzantine_fraction: 0.0,
                ..self.config.clone()
            },
            loss: self.loss.clone(),
            circuit: self.circuit.clone(),
            edges: self.edges.clone(),
            train: self.train.clone(),
            train_binned: self.train_binned.clone(),
            test_binned: self.test_binned.clone(),
            test_labels: self.test_labels.clone(),
            shards: self.shards.clone(),
            byzantine: vec![false; self.byzantine.len()],
        }
    }

    pub fn zk_setup(&self) -> Result<ZkSetup, FedError> {
        ZkSetup::new(&self.circuit, derive_seed(self.config.seed, TAG_SETUP))
    }

    pub fn thread_pool(&self) -> Result<ThreadPool, FedError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.config.threads {
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| FedError::ThreadPool(e.to_string()))
    }

    /// Held-out accuracy of `ensemble`.
    pub fn test_accuracy(&self, ensemble: &Ensemble) -> f64 {
        metrics(&ensemble.predict_all(&self.test_binned), &self.test_labels).accuracy
    }

    /// Trains on the concatenated shards in one place.
    pub fn centralized(&self) -> Result<Ensemble, FedError> {
        let rows: Vec<usize> = self.shards.concat();
        let binned = self.train_binned.select(&rows);
        let labels: Vec<Label> = rows.iter().map(|&i| self.train.labels[i]).collect();
        let params = self.config.boost_params();
        Ok(train_centralized(
            &binned,
            &labels,
            self.edges.clone(),
            self.loss.surrogate(),
            &params,
            |_, _, _| {},
        )?)
    }

    fn nodes(&self) -> Vec<Node> {
        self.shards
            .iter()
            .enumerate()
            .map(|(id, rows)| Node {
                id,
                binned: self.train_binned.select(rows),
                labels: rows.iter().map(|&i| self.train.labels[i]).collect(),
                raw: vec![0; rows.len()],
                honesty: if self.byzantine[id] {
                    Honesty::Byzantine {
                        kappa: self.config.kappa,
                        invert: self.config.invert,
                    }
                } else {
                    Honesty::Honest
                },
            })
            .collect()
    }
}

/// Node-local state. Only the node itself reads `honesty`.
struct Node {
    id: usize,
    binned: BinnedMatrix,
    labels: Vec<Label>,
    /// Sum of fixed-point tree outputs per row.
    raw: Vec<i64>,
    honesty: Honesty,
}

impl Node {
    /// Depth-0 gradients and, under zkp, the proof over their totals.
    fn start_round(
        &self,
        ensemble: &Ensemble,
        prepared: &Prepared,
        zk: Option<&ZkSetup>,
        round: usize,
    ) -> Result<(Vec<GradientPair>, Option<crate::snark::Proof>), FedError> {
        let Some(zk) = zk else {
            let honest =
                shard_gradients(prepared.loss.surrogate(), ensemble, &self.labels, &self.raw)?;
            return Ok((
                honest.into_iter().map(|g| self.honesty.tamper(g)).collect(),
                None,
            ));
        };
        let shard: Vec<(Label, f64)> = self
            .labels
            .iter()
            .zip(&self.raw)
            .map(|(&y, &r)| (y, ensemble.margin_from_raw(r)))
            .collect();
        let (synth, mode) = match self.honesty {
            Honesty::Honest => (
                synthesize_witness(&prepared.circuit, &shard)?,
                ProveMode::Strict,
            ),
            Honesty::Byzantine { .. } => (
                synthesize_forged_witness(&prepared.circuit, &shard, |_, g| {
                    self.honesty.tamper(g)
                })?,
                ProveMode::Forge,
            ),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(prepared.config.seed, TAG_PROOF));
        rng.set_stream(((self.id as u64) << 32) | round as u64);
        let proof = prove(&zk.crs, &zk.qap, &synth.witness, mode, &mut rng)?;
        Ok((synth.gradients, Some(proof)))
    }
}

struct Federation<'a> {
    prepared: &'a Prepared,
    defense: Defense,
    zk: Option<&'a ZkSetup>,
    pool: &'a ThreadPool,
    nodes: &'a [Node],
    round: usize,
    shape: Vec<usize>,
    gradients: Vec<Vec<GradientPair>>,
    proofs: Vec<Option<crate::snark::Proof>>,
    routers: Vec<LeafRouter>,
    active: Vec<bool>,
    rejected: BTreeSet<usize>,
    byzantine_submitted: usize,
    byzantine_accepted: usize,
    influenced: u64,
    coords: u64,
    agg_time: Duration,
}

impl Federation<'_> {
    fn update(&self, node: usize, depth: usize, n_leaves: usize) -> NodeUpdate {
        let n = &self.nodes[node];
        let leaf_of = self.routers[node].leaf_of();
        let histograms = build_leaf_histograms(
            &n.binned,
            &self.shape,
            &self.gradients[node],
            leaf_of,
            n_leaves,
        );
        let mut public = PublicInputs::default();
        for (g, leaf) in self.gradients[node].iter().zip(leaf_of) {
            if leaf.is_some() {
                public.g_total += g.g;
                public.h_total += g.h;
                public.n_count += 1;
            }
        }
        let proof = if depth == 0 { self.proofs[node] } else { None };
        NodeUpdate::new(
            n.id,
            self.round,
            depth,
            histograms,
            public,
            proof,
            n.honesty.is_byzantine(),
        )
    }
}

impl LevelSource for Federation<'_> {
    type Error = FedError;

    fn level_histograms(
        &mut self,
        depth: usize,
        n_leaves: usize,
    ) -> Result<Vec<FeatureHistogram>, FedError> {
        let participants: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.active[i]).collect();
        let updates: Vec<NodeUpdate> = self.pool.install(|| {
            participants
                .par_iter()
                .map(|&i| self.update(i, depth, n_leaves))
                .collect()
        });

        let start = Instant::now();
        let queue = PartitionedQueue::new(self.prepared.config.queue_partitions);
        for u in updates {
            queue.push(u.node_id, u);
        }
        let (defense, crs) = (self.defense, self.zk.map(|z| &z.crs));
        let mut verdicts: Vec<(bool, NodeUpdate)> = self
            .pool
            .install(|| queue.consume(|u| (admit(defense, crs, &u), u)))
            .into_iter()
            .flatten()
            .collect();
        debug_assert_eq!(queue.enqueued(), queue.dequeued());
        verdicts.sort_by_key(|(_, u)| u.node_id);
        let accepted: Vec<&NodeUpdate> = verdicts
            .iter()
            .filter(|(ok, _)| *ok)
            .map(|(_, u)| u)
            .collect();
        let merged = aggregate(self.defense, &accepted, &self.shape, n_leaves)?;
        self.agg_time += start.elapsed();

        for (ok, u) in &verdicts {
            if !ok {
                self.active[u.node_id] = false;
                self.rejected.insert(u.node_id);
            }
        }
        // bookkeeping for the poison metrics, outside the decision path
        let is_byz = |u: &NodeUpdate| self.prepared.byzantine[u.node_id];
        if depth == 0 {
            self.byzantine_submitted += verdicts.iter().filter(|(_, u)| is_byz(u)).count();
            self.byzantine_accepted += verdicts.iter().filter(|(ok, u)| *ok && is_byz(u)).count();
        }
        if self.defense == Defense::Median {
            let honest: Vec<&NodeUpdate> =
                accepted.iter().copied().filter(|u| !is_byz(u)).collect();
            let (changed, total) = median_influence(&accepted, &honest, &self.shape, n_leaves)?;
            self.influenced += changed;
            self.coords += total;
        }
        Ok(merged)
    }

    fn apply_splits(&mut self, splits: &[Option<(usize, u16)>]) -> Result<(), FedError> {
        for (router, node) in self.routers.iter_mut().zip(self.nodes) {
            router.apply(&node.binned, splits);
        }
        Ok(())
    }
}

/// One defense run over all rounds.
#[derive(Debug, Clone)]
pub struct DefenseRun {
    pub defense: Defense,
    pub reports: Vec<RoundReport>,
    pub ensemble: Ensemble,
}

impl DefenseRun {
    pub fn final_accuracy(&self) -> f64 {
        self.reports.last().map_or(0.0, |r| r.accuracy)
    }

    pub fn poison_success(&self) -> f64 {
        poison_success_metric(&self.reports, self.defense)
    }

    pub fn summary(&self, timings: bool) -> SummaryRecord {
        let times: Vec<f64> = self.reports.iter().filter_map(|r| r.agg_ms).collect();
        let (mean, median) = if timings && !times.is_empty() {
            let mut sorted = times.clone();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            };
            (Some(times.iter().sum::<f64>() / n as f64), Some(median))
        } else {
            (None, None)
        };
        SummaryRecord {
            defense: self.defense,
            final_accuracy: self.final_accuracy(),
            mean_agg_ms: mean,
            median_agg_ms: median,
            poison_success: self.poison_success(),
        }
    }
}

/// none and zkp: accepted over submitted Byzantine depth-0 updates. median:
/// changed over compared coordinates when Byzantine inputs are dropped.
/// Empty denominators give 0.
pub fn poison_success_metric(reports: &[RoundReport], defense: Defense) -> f64 {
    let (num, den) = match defense {
        Defense::Median => reports.iter().fold((0u64, 0u64), |(a, b), r| {
            (a + r.influenced_coords, b + r.total_coords)
        }),
        Defense::None | Defense::Zkp => reports.iter().fold((0u64, 0u64), |(a, b), r| {
            (
                a + r.byzantine_accepted as u64,
                b + r.byzantine_submitted as u64,
            )
        }),
    };
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Runs every round under `defense`. `zk` is required for zkp.
pub fn run_defense(
    prepared: &Prepared,
    defense: Defense,
    zk: Option<&ZkSetup>,
    pool: &ThreadPool,
) -> Result<DefenseRun, FedError> {
    let zk = match defense {
        Defense::Zkp => {
            Some(zk.ok_or_else(|| FedError::InvalidArgument("zkp needs a circuit setup".into()))?)
        }
        _ => None,
    };
    let mut nodes = prepared.nodes();
    let params = prepared.config.boost_params();
    let tree_params = params.tree_params(prepared.loss.fraction_bits());
    let mut ensemble = Ensemble::new(
        params.learning_rate,
        prepared.loss.fraction_bits(),
        prepared.edges.clone(),
    );
    let mut reports = Vec::with_capacity(params.rounds);
    for round in 0..params.rounds {
        let started: Vec<_> = pool.install(|| {
            nodes
                .par_iter()
                .map(|n| n.start_round(&ensemble, prepared, zk, round))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let (gradients, proofs) = started.into_iter().unzip();
        let mut fed = Federation {
            prepared,
            defense,
            zk,
            pool,
            nodes: &nodes,
            round,
            shape: prepared.edges.shape(),
            gradients,
            proofs,
            routers: nodes
                .iter()
                .map(|n| LeafRouter::new(n.labels.len()))
                .collect(),
            active: vec![true; nodes.len()],
            rejected: BTreeSet::new(),
            byzantine_submitted: 0,
            byzantine_accepted: 0,
            influenced: 0,
            coords: 0,
            agg_time: Duration::ZERO,
        };
        let tree = grow_tree(&mut fed, &tree_params)?;
        let rejected: Vec<usize> = fed.rejected.iter().copied().collect();
        let report = RoundReport {
            round,
            defense,
            accepted: (0..nodes.len())
                .filter(|i| !fed.rejected.contains(i))
                .collect(),
            rejected,
            byzantine_submitted: fed.byzantine_submitted,
            byzantine_accepted: fed.byzantine_accepted,
            influenced_coords: fed.influenced,
            total_coords: fed.coords,
            accuracy: 0.0,
            agg_ms: prepared
                .config
                .timings
                .then_some(fed.agg_time.as_secs_f64() * 1e3),
        };
        for node in &mut nodes {
            for (i, r) in node.raw.iter_mut().enumerate() {
                *r += tree.output(node.binned.row(i));
            }
        }
        ensemble.push(tree);
        reports.push(RoundReport {
            accuracy: prepared.test_accuracy(&ensemble),
            ..report
        });
    }
    Ok(DefenseRun {
        defense,
        reports,
        ensemble,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<DefenseRun>,
    pub summary: Summary,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, FedError> {
    let prepared = Prepared::new(config)?;
    run_prepared(&prepared)
}

pub fn run_prepared(prepared: &Prepared) -> Result<ExperimentResult, FedError> {
    let config = &prepared.config;
    let pool = prepared.thread_pool()?;
    let defenses = config.defense.defenses();
    let zk = if defenses.contains(&Defense::Zkp) {
        Some(prepared.zk_setup()?)
    } else {
        None
    };
    let runs = defenses
        .into_iter()
        .map(|d| run_defense(prepared, d, zk.as_ref(), &pool))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = Summary {
        seed: config.seed,
        n_nodes: config.n_nodes,
        n_byzantine: prepared.byzantine.iter().filter(|&&b| b).count(),
        rounds: config.rounds,
        constraints: zk.as_ref().map(|z| z.qap.num_constraints()),
        records: runs.iter().map(|r| r.summary(config.timings)).collect(),
    };
    Ok(ExperimentResult { runs, summary })
}
