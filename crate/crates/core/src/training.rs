//! Training orchestration: profile silos, fit the standardizer once,
//! build graphs, sample negatives once, then run full-batch or
//! incremental (silo-by-silo) epochs.
//!
//! The whole run is a pure function of (silos, config): profiling,
//! sampling, initialization, and the epoch loop are all seeded, and the
//! numeric kernels reduce in fixed order.

use crate::adam::AdamState;
use crate::error::Error;
use crate::graph::{self, EdgeSet, ProfileMap, RelatednessGraph};
use crate::neural::{self, Dims, EdgeBatch, ModelParams};
use crate::profiling::{self, Standardizer};
use crate::rng;
use crate::sampling::{self, SamplerConfig};
use crate::silo::Silo;
use crate::Result;
use serde::{Deserialize, Serialize};

const SAMPLER_DERIVE_TAG: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub sampling: SamplerConfig,
    pub incremental: bool,
    pub seed: u64,
    pub dims: Dims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            lr: crate::adam::DEFAULT_LR,
            sampling: SamplerConfig::new(sampling::Strategy::Ns3, 0),
            incremental: true,
            seed: 0,
            dims: Dims::new(profiling::FEATURE_LEN, 300, 300),
        }
    }
}

/// What a run was made of; persisted with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: TrainConfig,
    pub silo_ids: Vec<String>,
    /// Manifest paths when the run came from files (CLI); empty for
    /// in-process runs.
    pub manifest_paths: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: ModelParams,
    /// Loss per executed epoch, over the epoch's full edge batch.
    pub training_log: Vec<f64>,
    pub provenance: Provenance,
}

/// Standardized per-silo feature maps, using an already-fitted
/// standardizer (the model's own at inference/resume time).
pub fn silo_feature_maps(silos: &[Silo], std: &Standardizer) -> Result<Vec<ProfileMap>> {
    let mut maps = Vec::with_capacity(silos.len());
    for silo in silos {
        let profiled = profiling::profile_silo(silo);
        let mut map = ProfileMap::new();
        for (r, fv) in profiled.profiles {
            map.insert(r, std.apply(fv.as_slice())?);
        }
        maps.push(map);
    }
    Ok(maps)
}

pub fn build_graphs(silos: &[Silo], maps: &[ProfileMap]) -> Result<Vec<RelatednessGraph>> {
    silos
        .iter()
        .zip(maps)
        .map(|(silo, map)| graph::build_relatedness_graph(silo, map))
        .collect()
}

/// Per-graph sampler config: one derived seed per graph index so equal
/// graph structures in different silos do not receive correlated draws.
pub fn per_graph_sampler(cfg: &SamplerConfig, graph_idx: usize) -> SamplerConfig {
    SamplerConfig {
        seed: rng::derive_seed(cfg.seed, &[SAMPLER_DERIVE_TAG, graph_idx as u64]),
        ..*cfg
    }
}

fn validate_config(config: &TrainConfig) -> Result<()> {
    if config.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be ≥ 1".into()));
    }
    if !(config.lr.is_finite() && config.lr > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {}",
            config.lr
        )));
    }
    Ok(())
}

/// Concatenates per-graph edge sets into one batch over the stacked
/// node table (same offsets as [`neural::node_offsets`]).
pub fn global_edge_batch(
    graphs: &[&RelatednessGraph],
    pos: &[EdgeSet],
    neg: &[EdgeSet],
) -> EdgeBatch {
    let offsets = neural::node_offsets(graphs);
    let mut batch = EdgeBatch::default();
    for (gi, set) in pos.iter().enumerate() {
        let off = offsets[gi];
        batch
            .pos
            .extend(set.edges.iter().map(|&(u, v)| (off + u, off + v)));
    }
    for (gi, set) in neg.iter().enumerate() {
        let off = offsets[gi];
        batch
            .neg
            .extend(set.edges.iter().map(|&(r, s)| (off + r, off + s)));
    }
    batch
}

fn run_epochs(
    graphs: &[&RelatednessGraph],
    edges: &EdgeBatch,
    params: &mut ModelParams,
    adam: &mut AdamState,
    epochs: usize,
    log: &mut Vec<f64>,
) -> Result<()> {
    for _ in 0..epochs {
        let (loss, grads) = neural::backward(graphs, params, edges)?;
        adam.step(params, &grads);
        log.push(loss);
    }
    Ok(())
}

fn provenance_from_graphs(graphs: &[&RelatednessGraph], config: &TrainConfig) -> Provenance {
    let mut silo_ids: Vec<String> = graphs
        .iter()
        .filter_map(|g| g.nodes().first().map(|r| r.silo_id.clone()))
        .collect();
    silo_ids.dedup();
    Provenance {
        config: config.clone(),
        silo_ids,
        manifest_paths: Vec::new(),
    }
}

/// Full-batch training: e epochs over every graph and every edge.
pub fn train_full(
    graphs: &[&RelatednessGraph],
    pos: &[EdgeSet],
    neg: &[EdgeSet],
    mut params: ModelParams,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    validate_config(config)?;
    let edges = global_edge_batch(graphs, pos, neg);
    let mut adam = AdamState::new(&params, config.lr);
    let mut log = Vec::with_capacity(config.epochs);
    run_epochs(graphs, &edges, &mut params, &mut adam, config.epochs, &mut log)?;
    Ok(TrainedModel {
        params,
        training_log: log,
        provenance: provenance_from_graphs(graphs, config),
    })
}

/// Incremental training: stage i adds graph i to the training set and
/// runs floor(e/n) epochs over the union of edges so far; the final
/// stage absorbs the remainder. Optimizer state carries across stages.
pub fn train_incremental(
    graphs: &[&RelatednessGraph],
    pos: &[EdgeSet],
    neg: &[EdgeSet],
    params: ModelParams,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    train_incremental_observed(graphs, pos, neg, params, config, |_, _| {})
}

/// As [`train_incremental`], invoking `observer(stage_idx, params)`
/// after each stage completes.
pub fn train_incremental_observed<F>(
    graphs: &[&RelatednessGraph],
    pos: &[EdgeSet],
    neg: &[EdgeSet],
    mut params: ModelParams,
    config: &TrainConfig,
    mut observer: F,
) -> Result<TrainedModel>
where
    F: FnMut(usize, &ModelParams),
{
    validate_config(config)?;
    let n = graphs.len();
    if n == 0 {
        return Err(Error::InvalidConfig("no graphs to train on".into()));
    }
    let e_p = config.epochs / n;
    let remainder = config.epochs % n;
    let mut adam = AdamState::new(&params, config.lr);
    let mut log = Vec::with_capacity(config.epochs);
    for stage in 0..n {
        let prefix = &graphs[..=stage];
        let edges = global_edge_batch(prefix, &pos[..=stage], &neg[..=stage]);
        let epochs = if stage + 1 == n { e_p + remainder } else { e_p };
        run_epochs(prefix, &edges, &mut params, &mut adam, epochs, &mut log)?;
        observer(stage, &params);
    }
    Ok(TrainedModel {
        params,
        training_log: log,
        provenance: provenance_from_graphs(graphs, config),
    })
}

/// Samples each graph's negatives once, in graph order, with derived
/// per-graph seeds. Errors if no graph yields any negative edge.
pub fn collect_edges(
    graphs: &[RelatednessGraph],
    sampling_cfg: &SamplerConfig,
) -> Result<(Vec<EdgeSet>, Vec<EdgeSet>)> {
    let pos: Vec<EdgeSet> = graphs.iter().map(graph::positive_edges).collect();
    let neg: Vec<EdgeSet> = graphs
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            sampling::sample_negative_edges(g, &per_graph_sampler(sampling_cfg, gi)).edges
        })
        .collect();
    if neg.iter().all(EdgeSet::is_empty) {
        return Err(Error::NoNegativeEvidence);
    }
    Ok((pos, neg))
}

/// The end-to-end pipeline: profile, fit standardizer over every
/// training silo, build graphs, sample edges once, train.
pub fn run_pipeline(silos: &[Silo], config: &TrainConfig) -> Result<TrainedModel> {
    validate_config(config)?;
    if silos.is_empty() {
        return Err(Error::InvalidConfig("at least one silo required".into()));
    }
    for silo in silos {
        if silo.column_count() == 0 {
            return Err(Error::EmptySilo(silo.silo_id.clone()));
        }
    }

    let profiled: Vec<profiling::SiloProfiles> =
        silos.iter().map(profiling::profile_silo).collect();
    let rows: Vec<&[f64]> = profiled
        .iter()
        .flat_map(|p| p.profiles.values().map(|fv| fv.as_slice()))
        .collect();
    let standardizer = Standardizer::fit(&rows)?;
    if config.dims.d_in != standardizer.dim() {
        return Err(Error::DimMismatch {
            context: "config d_in vs profile width".into(),
            expected: standardizer.dim(),
            actual: config.dims.d_in,
        });
    }

    let mut maps = Vec::with_capacity(silos.len());
    for p in &profiled {
        let mut map = ProfileMap::new();
        for (r, fv) in &p.profiles {
            map.insert(r.clone(), standardizer.apply(fv.as_slice())?);
        }
        maps.push(map);
    }
    let graphs = build_graphs(silos, &maps)?;
    let (pos, neg) = collect_edges(&graphs, &config.sampling)?;

    let mut params = neural::init_params(config.dims, config.seed)?;
    params.standardizer = standardizer;

    let graph_refs: Vec<&RelatednessGraph> = graphs.iter().collect();
    let mut model = if config.incremental {
        train_incremental(&graph_refs, &pos, &neg, params, config)?
    } else {
        train_full(&graph_refs, &pos, &neg, params, config)?
    };
    model.provenance.silo_ids = silos.iter().map(|s| s.silo_id.clone()).collect();
    Ok(model)
}

/// Continues a trained model on a grown silo set (the staged-file
/// embodiment of silo-by-silo training): the stored standardizer is
/// reused as-is, negatives are resampled per graph with the same derived
/// seeds, and `config.epochs` more full-batch epochs run over the union.
pub fn continue_pipeline(
    prev: TrainedModel,
    silos: &[Silo],
    config: &TrainConfig,
) -> Result<TrainedModel> {
    validate_config(config)?;
    if silos.is_empty() {
        return Err(Error::InvalidConfig("at least one silo required".into()));
    }
    for silo in silos {
        if silo.column_count() == 0 {
            return Err(Error::EmptySilo(silo.silo_id.clone()));
        }
    }
    let maps = silo_feature_maps(silos, &prev.params.standardizer)?;
    let graphs = build_graphs(silos, &maps)?;
    let (pos, neg) = collect_edges(&graphs, &config.sampling)?;
    let graph_refs: Vec<&RelatednessGraph> = graphs.iter().collect();

    let mut params = prev.params;
    let mut adam = AdamState::new(&params, config.lr);
    let edges = global_edge_batch(&graph_refs, &pos, &neg);
    let mut log = prev.training_log;
    run_epochs(&graph_refs, &edges, &mut params, &mut adam, config.epochs, &mut log)?;
    Ok(TrainedModel {
        params,
        training_log: log,
        provenance: Provenance {
            config: config.clone(),
            silo_ids: silos.iter().map(|s| s.silo_id.clone()).collect(),
            manifest_paths: prev.provenance.manifest_paths,
        },
    })
}
