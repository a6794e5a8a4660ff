//! Negative-edge sampling over a relatedness graph.
//!
//! Three strategies, all emitting strictly cross-component edges,
//! deterministic under the configured seed:
//!
//! - NS1: uniform without replacement over all cross-component pairs;
//!   target size min(|positive edges|, #cross pairs).
//! - NS2: per node, min(positive degree, #foreign nodes) directed edges
//!   into the node from uniformly drawn foreign nodes. Isolated nodes
//!   receive none.
//! - NS3: per node, exactly one directed edge from each foreign
//!   component (uniform member); optional rebalance subsamples a node's
//!   negatives down to max(degree, 1) when they exceed its degree ≥ 1.
//!
//! A negative (receiver, source) is directed only for bookkeeping; the
//! trainer scores it as an unordered pair. Sampling is sequential within
//! one call; callers may parallelize across graphs.

use crate::graph::{all_negative_pairs, EdgeSet, RelatednessGraph};
use crate::rng::{self, sample_without_replacement};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ns1,
    Ns2,
    Ns3,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Ns1 => "ns1",
            Strategy::Ns2 => "ns2",
            Strategy::Ns3 => "ns3",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ns1" => Ok(Strategy::Ns1),
            "ns2" => Ok(Strategy::Ns2),
            "ns3" => Ok(Strategy::Ns3),
            other => Err(format!("unknown sampling strategy: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub seed: u64,
    /// NS3 only; ignored by the other strategies.
    pub rebalance: bool,
}

impl SamplerConfig {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        SamplerConfig {
            strategy,
            seed,
            rebalance: false,
        }
    }
}

/// Sampler output: the edge set plus any degenerate-input warnings.
#[derive(Debug, Clone)]
pub struct NegativeSample {
    pub edges: EdgeSet,
    pub warnings: Vec<String>,
}

const NS1_TAG: u64 = 1;
const NS2_TAG: u64 = 2;
const NS3_TAG: u64 = 3;

/// Uniform over all cross-component pairs; |NE| = min(|PE|, #cross).
/// Receiver of each sampled pair is its smaller index.
pub fn sample_ns1(g: &RelatednessGraph, cfg: &SamplerConfig) -> NegativeSample {
    let pairs = all_negative_pairs(g);
    let mut warnings = Vec::new();
    if pairs.is_empty() {
        let msg = "single-component graph: no cross-component pairs to sample".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
        return NegativeSample {
            edges: EdgeSet::negative(Vec::new()),
            warnings,
        };
    }
    let target = g.edges().len().min(pairs.len());
    let mut rng = rng::stream(cfg.seed, &[NS1_TAG]);
    let mut chosen = sample_without_replacement(&pairs, target, &mut rng);
    chosen.sort_unstable();
    NegativeSample {
        edges: EdgeSet::negative(chosen),
        warnings,
    }
}

/// Per-node degree-matched sampling: node v receives
/// min(deg(v), #foreign nodes) edges from uniformly drawn foreign nodes.
pub fn sample_ns2(g: &RelatednessGraph, cfg: &SamplerConfig) -> NegativeSample {
    let n = g.n_nodes();
    let mut edges = Vec::new();
    for v in 0..n {
        let deg = g.degree(v);
        if deg == 0 {
            continue;
        }
        let candidates: Vec<usize> = (0..n)
            .filter(|&u| g.component_of(u) != g.component_of(v))
            .collect();
        let k = deg.min(candidates.len());
        if k == 0 {
            continue;
        }
        let mut rng = rng::stream(cfg.seed, &[NS2_TAG, v as u64]);
        let mut sources = sample_without_replacement(&candidates, k, &mut rng);
        sources.sort_unstable();
        edges.extend(sources.into_iter().map(|u| (v, u)));
    }
    NegativeSample {
        edges: EdgeSet::negative(edges),
        warnings: Vec::new(),
    }
}

/// Per-domain sampling: node v receives exactly one edge from each
/// foreign component; under `rebalance` a node keeps at most
/// max(deg(v), 1) of them once its count exceeds deg(v) ≥ 1.
pub fn sample_ns3(g: &RelatednessGraph, cfg: &SamplerConfig) -> NegativeSample {
    let n = g.n_nodes();
    let mut edges = Vec::new();
    for v in 0..n {
        let my_comp = g.component_of(v);
        let mut rng = rng::stream(cfg.seed, &[NS3_TAG, v as u64]);
        let mut incoming: Vec<(usize, usize)> = Vec::new();
        for c in 0..g.n_components() {
            if c == my_comp {
                continue;
            }
            let members = g.component(c);
            let src = members[rng.gen_range(0..members.len())];
            incoming.push((v, src));
        }
        let deg = g.degree(v);
        if cfg.rebalance && deg >= 1 && incoming.len() > deg {
            let keep = deg.max(1);
            let mut rng = rng::stream(cfg.seed, &[NS3_TAG, v as u64, 1]);
            incoming = sample_without_replacement(&incoming, keep, &mut rng);
        }
        incoming.sort_unstable();
        edges.extend(incoming);
    }
    NegativeSample {
        edges: EdgeSet::negative(edges),
        warnings: Vec::new(),
    }
}

pub fn sample_negative_edges(g: &RelatednessGraph, cfg: &SamplerConfig) -> NegativeSample {
    match cfg.strategy {
        Strategy::Ns1 => sample_ns1(g, cfg),
        Strategy::Ns2 => sample_ns2(g, cfg),
        Strategy::Ns3 => sample_ns3(g, cfg),
    }
}
