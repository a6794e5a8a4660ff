//! The numeric heart: one-layer max-pool GraphSAGE encoder, MLP pair
//! scorer, binary cross-entropy loss, and exact analytic gradients.
//!
//! Conventions, fixed for determinism and reproducibility:
//! - all arithmetic in f64;
//! - relu for the pool and layer transforms, sigmoid only at the score;
//! - empty neighborhoods aggregate to the zero vector;
//! - max-pool ties route gradient to the lowest node index;
//! - relu'(0) = 0;
//! - embeddings are not L2-normalized (standardized inputs suffice).
//!
//! Scores are symmetric by construction: the MLP logit is evaluated in
//! both argument orders and averaged before the sigmoid.

use crate::error::Error;
use crate::graph::RelatednessGraph;
use crate::profiling::Standardizer;
use crate::rng;
use crate::tensor::{self, dot, Matrix};
use crate::Result;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub d_in: usize,
    pub d_emb: usize,
    pub d_hid: usize,
}

impl Dims {
    pub fn new(d_in: usize, d_emb: usize, d_hid: usize) -> Self {
        Dims { d_in, d_emb, d_hid }
    }
}

/// All trainable tensors plus the embedded input standardizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    /// d_in × d_in; the neighbor transform of the max-pool aggregator.
    pub pool_weight: Matrix,
    pub pool_bias: Vec<f64>,
    /// d_emb × 2·d_in; applied to concat(f_v, h_Nv). No bias.
    pub layer_weight: Matrix,
    /// d_hid × 2·d_emb.
    pub mlp_hidden_weight: Matrix,
    pub mlp_hidden_bias: Vec<f64>,
    /// d_hid.
    pub mlp_out_weight: Vec<f64>,
    pub mlp_out_bias: f64,
    pub standardizer: Standardizer,
}

pub(crate) const TENSOR_NAMES: [&str; 7] = [
    "pool_weight",
    "pool_bias",
    "layer_weight",
    "mlp_hidden_weight",
    "mlp_hidden_bias",
    "mlp_out_weight",
    "mlp_out_bias",
];

impl ModelParams {
    pub fn is_finite(&self) -> bool {
        (0..TENSOR_NAMES.len()).all(|k| self.view(k).iter().all(|v| v.is_finite()))
    }

    /// Flat view of tensor `k` in the fixed `TENSOR_NAMES` order.
    pub fn view(&self, k: usize) -> &[f64] {
        match k {
            0 => self.pool_weight.as_slice(),
            1 => &self.pool_bias,
            2 => self.layer_weight.as_slice(),
            3 => self.mlp_hidden_weight.as_slice(),
            4 => &self.mlp_hidden_bias,
            5 => &self.mlp_out_weight,
            6 => std::slice::from_ref(&self.mlp_out_bias),
            _ => unreachable!("tensor index"),
        }
    }

    pub(crate) fn view_mut(&mut self, k: usize) -> &mut [f64] {
        match k {
            0 => self.pool_weight.as_mut_slice(),
            1 => &mut self.pool_bias,
            2 => self.layer_weight.as_mut_slice(),
            3 => self.mlp_hidden_weight.as_mut_slice(),
            4 => &mut self.mlp_hidden_bias,
            5 => &mut self.mlp_out_weight,
            6 => std::slice::from_mut(&mut self.mlp_out_bias),
            _ => unreachable!("tensor index"),
        }
    }
}

/// Gradients, shaped like the trainable tensors of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub pool_weight: Matrix,
    pub pool_bias: Vec<f64>,
    pub layer_weight: Matrix,
    pub mlp_hidden_weight: Matrix,
    pub mlp_hidden_bias: Vec<f64>,
    pub mlp_out_weight: Vec<f64>,
    pub mlp_out_bias: f64,
}

impl Gradients {
    pub fn zeros(dims: Dims) -> Self {
        Gradients {
            pool_weight: Matrix::zeros(dims.d_in, dims.d_in),
            pool_bias: vec![0.0; dims.d_in],
            layer_weight: Matrix::zeros(dims.d_emb, 2 * dims.d_in),
            mlp_hidden_weight: Matrix::zeros(dims.d_hid, 2 * dims.d_emb),
            mlp_hidden_bias: vec![0.0; dims.d_hid],
            mlp_out_weight: vec![0.0; dims.d_hid],
            mlp_out_bias: 0.0,
        }
    }

    pub(crate) fn view(&self, k: usize) -> &[f64] {
        match k {
            0 => self.pool_weight.as_slice(),
            1 => &self.pool_bias,
            2 => self.layer_weight.as_slice(),
            3 => self.mlp_hidden_weight.as_slice(),
            4 => &self.mlp_hidden_bias,
            5 => &self.mlp_out_weight,
            6 => std::slice::from_ref(&self.mlp_out_bias),
            _ => unreachable!("tensor index"),
        }
    }
}

const INIT_TAG: u64 = 10;

/// Glorot-uniform weights (bound √(6/(fan_in+fan_out))), zero biases.
/// Standardizer starts as identity of width d_in; the trainer installs
/// the fitted one.
pub fn init_params(dims: Dims, seed: u64) -> Result<ModelParams> {
    if dims.d_in == 0 || dims.d_emb == 0 || dims.d_hid == 0 {
        return Err(Error::InvalidConfig(format!(
            "model dims must be positive, got {}/{}/{}",
            dims.d_in, dims.d_emb, dims.d_hid
        )));
    }
    let glorot = |tensor_idx: u64, rows: usize, cols: usize, fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut rng = rng::stream(seed, &[INIT_TAG, tensor_idx]);
        let data = (0..rows * cols)
            .map(|_| bound * (2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        Matrix::from_vec(rows, cols, data)
    };
    let (d_in, d_emb, d_hid) = (dims.d_in, dims.d_emb, dims.d_hid);
    let out_w = glorot(3, 1, d_hid, d_hid, 1);
    Ok(ModelParams {
        dims,
        pool_weight: glorot(0, d_in, d_in, d_in, d_in),
        pool_bias: vec![0.0; d_in],
        layer_weight: glorot(1, d_emb, 2 * d_in, 2 * d_in, d_emb),
        mlp_hidden_weight: glorot(2, d_hid, 2 * d_emb, 2 * d_emb, d_hid),
        mlp_hidden_bias: vec![0.0; d_hid],
        mlp_out_weight: out_w.as_slice().to_vec(),
        mlp_out_bias: 0.0,
        standardizer: Standardizer::from_parts(vec![0.0; d_in], vec![1.0; d_in])?,
    })
}

/// Node embeddings for a batch of graphs. Node (g, i) lives at row
/// `offsets[g] + i`; graphs never exchange messages.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    offsets: Vec<usize>,
    emb: Matrix,
}

impl EmbeddingTable {
    pub fn node(&self, graph_idx: usize, node_idx: usize) -> &[f64] {
        self.emb.row(self.offsets[graph_idx] + node_idx)
    }

    pub fn global(&self, row: usize) -> &[f64] {
        self.emb.row(row)
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_nodes(&self) -> usize {
        self.emb.rows()
    }

    pub fn d_emb(&self) -> usize {
        self.emb.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.emb.is_finite()
    }
}

/// Row offsets of each graph in the batch; last entry is the total.
pub fn node_offsets(graphs: &[&RelatednessGraph]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(graphs.len() + 1);
    let mut total = 0;
    for g in graphs {
        offsets.push(total);
        total += g.n_nodes();
    }
    offsets.push(total);
    offsets
}

const NO_NEIGHBOR: u32 = u32::MAX;

/// Everything the backward pass needs from the encoder forward pass.
struct SageCache {
    offsets: Vec<usize>,
    x: Matrix,         // N × d_in, node features
    pre_pool: Matrix,  // A = X·Wpᵀ + bp
    argmax: Vec<u32>,  // N·d_in, global index of the max contributor
    z: Matrix,         // N × 2d_in, concat(X, max-pooled neighborhood)
    pre_layer: Matrix, // Z·Wlᵀ
    emb: Matrix,       // relu(pre_layer)
}

fn relu_matrix(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for v in out.as_mut_slice() {
        *v = tensor::relu(*v);
    }
    out
}

fn add_row_bias(m: &mut Matrix, bias: &[f64]) {
    m.for_each_row_mut(|_, row| tensor::axpy(row, 1.0, bias));
}

/// Elementwise `grad ⊙ relu'(pre)` with relu'(0) = 0.
fn mask_by(grad: &Matrix, pre: &Matrix) -> Matrix {
    let mut out = grad.clone();
    for (o, p) in out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        *o *= tensor::relu_mask(*p);
    }
    out
}

fn sage_cache(graphs: &[&RelatednessGraph], params: &ModelParams) -> Result<SageCache> {
    let d_in = params.dims.d_in;
    for g in graphs {
        if g.d_in() != d_in {
            return Err(Error::DimMismatch {
                context: "graph feature width vs model d_in".into(),
                expected: d_in,
                actual: g.d_in(),
            });
        }
    }
    let offsets = node_offsets(graphs);
    let n_total = *offsets.last().unwrap();

    let mut x = Matrix::zeros(n_total, d_in);
    for (gi, g) in graphs.iter().enumerate() {
        for v in 0..g.n_nodes() {
            x.row_mut(offsets[gi] + v).copy_from_slice(g.features().row(v));
        }
    }

    let mut pre_pool = tensor::matmul_nt(&x, &params.pool_weight);
    add_row_bias(&mut pre_pool, &params.pool_bias);
    let pooled = relu_matrix(&pre_pool);

    // Max over neighbors, per output coordinate; strict > keeps the
    // lowest-index neighbor on ties. Isolated nodes keep the zero row.
    let mut node_neighbors: Vec<&[usize]> = Vec::with_capacity(n_total);
    let mut node_offset: Vec<usize> = Vec::with_capacity(n_total);
    for (gi, g) in graphs.iter().enumerate() {
        for v in 0..g.n_nodes() {
            node_neighbors.push(g.neighbors(v));
            node_offset.push(offsets[gi]);
        }
    }
    let rows = crate::exec::map_collect(&node_neighbors, |v, &neighbors| {
        let mut best = vec![0.0; d_in];
        let mut arg = vec![NO_NEIGHBOR; d_in];
        for &u_local in neighbors {
            let u = node_offset[v] + u_local;
            let mu = pooled.row(u);
            for j in 0..d_in {
                if arg[j] == NO_NEIGHBOR || mu[j] > best[j] {
                    best[j] = mu[j];
                    arg[j] = u as u32;
                }
            }
        }
        if neighbors.is_empty() {
            // empty neighborhood aggregates to the zero vector
            best.fill(0.0);
        }
        (best, arg)
    });
    let mut z = Matrix::zeros(n_total, 2 * d_in);
    let mut argmax = vec![NO_NEIGHBOR; n_total * d_in];
    for (v, (best, arg)) in rows.into_iter().enumerate() {
        let row = z.row_mut(v);
        row[..d_in].copy_from_slice(x.row(v));
        row[d_in..].copy_from_slice(&best);
        argmax[v * d_in..(v + 1) * d_in].copy_from_slice(&arg);
    }

    let pre_layer = tensor::matmul_nt(&z, &params.layer_weight);
    let emb = relu_matrix(&pre_layer);

    Ok(SageCache {
        offsets,
        x,
        pre_pool,
        argmax,
        z,
        pre_layer,
        emb,
    })
}

/// One-layer GraphSAGE embeddings for every node of every graph. The
/// graphs must carry standardized features of width d_in.
pub fn sage_forward(graphs: &[&RelatednessGraph], params: &ModelParams) -> Result<EmbeddingTable> {
    let cache = sage_cache(graphs, params)?;
    Ok(EmbeddingTable {
        offsets: cache.offsets,
        emb: cache.emb,
    })
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + eˣ), stable for large |x|.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// MLP logit for one concatenated embedding pair (length 2·d_emb).
fn directed_logit(params: &ModelParams, x2: &[f64]) -> f64 {
    let d_hid = params.dims.d_hid;
    let mut acc = params.mlp_out_bias;
    let mut hidden = vec![0.0; d_hid];
    for j in 0..d_hid {
        hidden[j] = tensor::relu(dot(x2, params.mlp_hidden_weight.row(j)) + params.mlp_hidden_bias[j]);
    }
    acc += dot(&hidden, &params.mlp_out_weight);
    acc
}

/// Symmetric pair score in (0,1): sigmoid of the mean of both directed
/// logits. `pair_score(u,v) == pair_score(v,u)` bit-exactly.
pub fn pair_score(h_u: &[f64], h_v: &[f64], params: &ModelParams) -> f64 {
    let d = h_u.len();
    let mut x = vec![0.0; 2 * d];
    x[..d].copy_from_slice(h_u);
    x[d..].copy_from_slice(h_v);
    let l_uv = directed_logit(params, &x);
    x[..d].copy_from_slice(h_v);
    x[d..].copy_from_slice(h_u);
    let l_vu = directed_logit(params, &x);
    sigmoid((l_uv + l_vu) / 2.0)
}

/// Standard binary cross-entropy over probability scores:
/// −Σ_pos [log s] − Σ_neg [log(1−s)]. The training loop computes the
/// same quantity in softplus form from logits; this entry point is for
/// reporting over scores.
pub fn bce_loss(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    let mut loss = 0.0;
    for &s in pos_scores {
        loss -= s.ln();
    }
    for &s in neg_scores {
        loss -= (1.0 - s).ln();
    }
    loss
}

/// Edges to score, as global node indices (row offsets of the batch).
#[derive(Debug, Clone, Default)]
pub struct EdgeBatch {
    pub pos: Vec<(usize, usize)>,
    pub neg: Vec<(usize, usize)>,
}

impl EdgeBatch {
    pub fn len(&self) -> usize {
        self.pos.len() + self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

/// Per-direction MLP forward over the edge batch. Row 2e is (u,v),
/// row 2e+1 is (v,u), edges in pos-then-neg order.
struct MlpCache {
    xe: Matrix,      // 2E × 2d_emb
    pre_mlp: Matrix, // 2E × d_hid
    hidden: Matrix,  // relu(pre_mlp)
    z: Vec<f64>,     // E, averaged over the two directed logits
}

fn mlp_cache(emb: &Matrix, edges: &EdgeBatch, params: &ModelParams) -> MlpCache {
    let d_emb = emb.cols();
    let e_total = edges.len();
    let mut xe = Matrix::zeros(2 * e_total, 2 * d_emb);
    for (e, &(u, v)) in edges.pos.iter().chain(edges.neg.iter()).enumerate() {
        let row = xe.row_mut(2 * e);
        row[..d_emb].copy_from_slice(emb.row(u));
        row[d_emb..].copy_from_slice(emb.row(v));
        let row = xe.row_mut(2 * e + 1);
        row[..d_emb].copy_from_slice(emb.row(v));
        row[d_emb..].copy_from_slice(emb.row(u));
    }
    let mut pre_mlp = tensor::matmul_nt(&xe, &params.mlp_hidden_weight);
    add_row_bias(&mut pre_mlp, &params.mlp_hidden_bias);
    let hidden = relu_matrix(&pre_mlp);
    let logits: Vec<f64> = (0..2 * e_total)
        .map(|d| dot(hidden.row(d), &params.mlp_out_weight) + params.mlp_out_bias)
        .collect();
    let z: Vec<f64> = (0..e_total)
        .map(|e| (logits[2 * e] + logits[2 * e + 1]) / 2.0)
        .collect();
    MlpCache {
        xe,
        pre_mlp,
        hidden,
        z,
    }
}

/// BCE in softplus form on averaged logits; positives first, matching
/// the edge order of `mlp_cache`.
fn loss_from_z(z: &[f64], n_pos: usize) -> f64 {
    let mut loss = 0.0;
    for (e, &ze) in z.iter().enumerate() {
        loss += if e < n_pos { softplus(-ze) } else { softplus(ze) };
    }
    loss
}

/// Loss only — the finite-difference side of the gradient check.
pub fn forward_loss(
    graphs: &[&RelatednessGraph],
    params: &ModelParams,
    edges: &EdgeBatch,
) -> Result<f64> {
    let cache = sage_cache(graphs, params)?;
    let mlp = mlp_cache(&cache.emb, edges, params);
    Ok(loss_from_z(&mlp.z, edges.pos.len()))
}

/// Loss and exact analytic gradients of [`bce_loss`] over the batch.
///
/// Max-pool routing sends gradient only to the argmax neighbor per
/// coordinate; relu masks use the stored pre-activations; every
/// accumulation runs in a fixed canonical order, so the result is
/// bit-reproducible regardless of the parallel toggle.
pub fn backward(
    graphs: &[&RelatednessGraph],
    params: &ModelParams,
    edges: &EdgeBatch,
) -> Result<(f64, Gradients)> {
    let cache = sage_cache(graphs, params)?;
    let mlp = mlp_cache(&cache.emb, edges, params);
    let n_pos = edges.pos.len();
    let loss = loss_from_z(&mlp.z, n_pos);

    let dims = params.dims;
    let (d_in, d_emb, d_hid) = (dims.d_in, dims.d_emb, dims.d_hid);
    let e_total = edges.len();
    let n_total = cache.emb.rows();

    // dL/dz_e = σ(z) − y; each direction gets half.
    let mut gdir = vec![0.0; 2 * e_total];
    for e in 0..e_total {
        let y = if e < n_pos { 1.0 } else { 0.0 };
        let g = sigmoid(mlp.z[e]) - y;
        gdir[2 * e] = g / 2.0;
        gdir[2 * e + 1] = g / 2.0;
    }

    // Output layer.
    let mut grad_out_weight = vec![0.0; d_hid];
    let mut grad_out_bias = 0.0;
    for d in 0..2 * e_total {
        tensor::axpy(&mut grad_out_weight, gdir[d], mlp.hidden.row(d));
        grad_out_bias += gdir[d];
    }

    // Hidden layer: Δ = (gdir ⊗ wo) ⊙ relu'(pre_mlp).
    let mut delta = Matrix::zeros(2 * e_total, d_hid);
    for d in 0..2 * e_total {
        let pre = mlp.pre_mlp.row(d);
        let row = delta.row_mut(d);
        for j in 0..d_hid {
            row[j] = gdir[d] * params.mlp_out_weight[j] * tensor::relu_mask(pre[j]);
        }
    }
    let grad_hidden_weight = tensor::matmul_tn(&delta, &mlp.xe);
    let grad_hidden_bias = tensor::column_sums(&delta);

    // Into the embeddings, splitting each direction row back onto (u,v).
    let grad_xe = tensor::matmul_nn(&delta, &params.mlp_hidden_weight);
    let mut grad_h = Matrix::zeros(n_total, d_emb);
    for (e, &(u, v)) in edges.pos.iter().chain(edges.neg.iter()).enumerate() {
        let fwd = grad_xe.row(2 * e);
        let rev = grad_xe.row(2 * e + 1);
        tensor::axpy(&mut grad_h.row_mut(u)[..], 1.0, &fwd[..d_emb]);
        tensor::axpy(&mut grad_h.row_mut(v)[..], 1.0, &fwd[d_emb..]);
        tensor::axpy(&mut grad_h.row_mut(v)[..], 1.0, &rev[..d_emb]);
        tensor::axpy(&mut grad_h.row_mut(u)[..], 1.0, &rev[d_emb..]);
    }

    // Through the SAGE layer.
    let g_pre = mask_by(&grad_h, &cache.pre_layer);
    let grad_layer_weight = tensor::matmul_tn(&g_pre, &cache.z);
    let grad_z = tensor::matmul_nn(&g_pre, &params.layer_weight);

    // Split grad_z; the X half feeds constant inputs and is dropped.
    // Route the h_Nv half through the max-pool argmax.
    let mut grad_pooled = Matrix::zeros(n_total, d_in);
    for v in 0..n_total {
        let gz = &grad_z.row(v)[d_in..];
        let arg = &cache.argmax[v * d_in..(v + 1) * d_in];
        for j in 0..d_in {
            if arg[j] != NO_NEIGHBOR {
                grad_pooled.row_mut(arg[j] as usize)[j] += gz[j];
            }
        }
    }
    let delta_pool = mask_by(&grad_pooled, &cache.pre_pool);
    let grad_pool_weight = tensor::matmul_tn(&delta_pool, &cache.x);
    let grad_pool_bias = tensor::column_sums(&delta_pool);

    Ok((
        loss,
        Gradients {
            pool_weight: grad_pool_weight,
            pool_bias: grad_pool_bias,
            layer_weight: grad_layer_weight,
            mlp_hidden_weight: grad_hidden_weight,
            mlp_hidden_bias: grad_hidden_bias,
            mlp_out_weight: grad_out_weight,
            mlp_out_bias: grad_out_bias,
        },
    ))
}

/// One gradient-check verdict: max over parameters of
/// |analytic − central difference| / max(1, |analytic|, |numeric|).
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub pass: bool,
}

/// Central-difference gradient check (h = 1e-6) against [`backward`].
/// Meant for small instances only; cost is two loss evaluations per
/// parameter entry.
pub fn grad_check(
    graphs: &[&RelatednessGraph],
    params: &ModelParams,
    edges: &EdgeBatch,
    tolerance: f64,
) -> Result<GradCheckReport> {
    const H: f64 = 1e-6;
    let (_, analytic) = backward(graphs, params, edges)?;
    let mut probe = params.clone();
    let mut max_rel_err = 0.0;
    let mut worst_tensor = String::new();
    let mut worst_index = 0;
    for k in 0..TENSOR_NAMES.len() {
        for i in 0..params.view(k).len() {
            let orig = probe.view(k)[i];
            probe.view_mut(k)[i] = orig + H;
            let up = forward_loss(graphs, &probe, edges)?;
            probe.view_mut(k)[i] = orig - H;
            let down = forward_loss(graphs, &probe, edges)?;
            probe.view_mut(k)[i] = orig;
            let numeric = (up - down) / (2.0 * H);
            let a = analytic.view(k)[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if rel > max_rel_err {
                max_rel_err = rel;
                worst_tensor = TENSOR_NAMES[k].to_string();
                worst_index = i;
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        worst_tensor,
        worst_index,
        pass: max_rel_err < tolerance,
    })
}
