//! Two-view graph contrastive training.
//!
//! Encoder: `H = Â · relu(Â · X · W1) · W2`. Objective: the normalized
//! temperature-scaled cross-entropy over cosine similarities, where node `i`
//! in one view is the positive for node `i` in the other and every other node
//! of both views is a negative. Gradients are derived by hand and the weights
//! are updated by full-batch gradient descent with L2 weight decay.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::augmentation::{self, CandidateFeatureSet, ViewConfig};
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, NormalizedAdjacency};
use crate::matrix::{dot, Matrix};
use crate::ranking::FeatureRanking;
use crate::seed::{self, Rng};

/// Floor on row norms before cosine normalization.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Matrix,
    pub w2: Matrix,
}

impl EncoderParams {
    /// Glorot-uniform initialization: entries in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn init(num_features: usize, hidden: usize, output: usize, rng: &mut Rng) -> Self {
        Self {
            w1: glorot(num_features, hidden, rng),
            w2: glorot(hidden, output, rng),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite() && self.w2.is_finite()
    }
}

fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Matrix {
    let bound = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    let mut m = Matrix::zeros(fan_in, fan_out);
    for v in m.as_mut_slice() {
        *v = rng.gen_range(-bound..=bound);
    }
    m
}

/// Intermediate products of one encoder pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `Â X`
    ax: Matrix,
    /// `Â X W1`, before the rectifier.
    pre: Matrix,
    /// `Â relu(Â X W1)`
    az: Matrix,
    pub h: Matrix,
}

pub fn forward(
    params: &EncoderParams,
    adj: &NormalizedAdjacency,
    x: &Matrix,
) -> Result<ForwardPass> {
    if x.cols() != params.w1.rows() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} columns, W1 expects {}",
            x.cols(),
            params.w1.rows()
        )));
    }
    let ax = adj.spmm(x)?;
    let pre = ax.matmul(&params.w1)?;
    let z = pre.map(|v| v.max(0.0));
    let az = adj.spmm(&z)?;
    let h = az.matmul(&params.w2)?;
    Ok(ForwardPass { ax, pre, az, h })
}

pub fn encode(params: &EncoderParams, adj: &NormalizedAdjacency, x: &Matrix) -> Result<Matrix> {
    forward(params, adj, x).map(|f| f.h)
}

fn row_norms(h: &Matrix) -> Vec<f64> {
    (0..h.rows())
        .map(|i| dot(h.row(i), h.row(i)).sqrt().max(NORM_EPS))
        .collect()
}

fn normalize_rows(h: &Matrix, norms: &[f64]) -> Matrix {
    let mut out = h.clone();
    for (i, &n) in norms.iter().enumerate() {
        for v in out.row_mut(i) {
            *v /= n;
        }
    }
    out
}

/// Backward of `u = h / max(|h|, eps)` given `du`.
fn normalize_rows_backward(u: &Matrix, h: &Matrix, norms: &[f64], du: &Matrix) -> Matrix {
    let mut dh = Matrix::zeros(h.rows(), h.cols());
    for (i, &n) in norms.iter().enumerate() {
        let clamped = dot(h.row(i), h.row(i)).sqrt() < NORM_EPS;
        let proj = if clamped {
            0.0
        } else {
            dot(u.row(i), du.row(i))
        };
        for ((d, &ui), &gi) in dh.row_mut(i).iter_mut().zip(u.row(i)).zip(du.row(i)) {
            *d = (gi - ui * proj) / n;
        }
    }
    dh
}

/// `exp((a_i · a_k - 1) / tau)` off the diagonal, zero on it. Computed on the
/// upper triangle and mirrored.
fn exp_gram(a: &Matrix, inv_tau: f64) -> Result<Matrix> {
    let n = a.rows();
    let mut e = a.matmul_t(a)?;
    for i in 0..n {
        e[(i, i)] = 0.0;
        for k in i + 1..n {
            let v = ((e[(i, k)] - 1.0) * inv_tau).exp();
            e[(i, k)] = v;
            e[(k, i)] = v;
        }
    }
    Ok(e)
}

fn check_pair(h1: &Matrix, h2: &Matrix, tau: f64) -> Result<()> {
    if h1.shape() != h2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "views have shapes {:?} and {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    if h1.rows() < 2 {
        return Err(Error::DimensionMismatch(
            "contrastive loss needs at least two nodes".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    Ok(())
}

/// Loss value and its gradients with respect to both embedding matrices.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub d_h1: Matrix,
    pub d_h2: Matrix,
}

/// Symmetric contrastive loss, averaged over nodes and both anchor directions.
pub fn contrastive_loss(h1: &Matrix, h2: &Matrix, tau: f64) -> Result<f64> {
    contrastive_loss_grad(h1, h2, tau).map(|g| g.loss)
}

pub fn contrastive_loss_grad(h1: &Matrix, h2: &Matrix, tau: f64) -> Result<LossGrad> {
    check_pair(h1, h2, tau)?;
    let n = h1.rows();
    let (n1, n2) = (row_norms(h1), row_norms(h2));
    let u = normalize_rows(h1, &n1);
    let v = normalize_rows(h2, &n2);

    // Similarities are shifted by the largest possible value 1/tau; the shift
    // cancels in every softmax ratio.
    let inv_tau = 1.0 / tau;
    let s_uv = u.matmul_t(&v)?;
    let e_uv = s_uv.map(|x| ((x - 1.0) * inv_tau).exp());
    let e_uu = exp_gram(&u, inv_tau)?;
    let e_vv = exp_gram(&v, inv_tau)?;

    // denom_u[i]: anchor u_i; denom_v[k]: anchor v_k. Gram diagonals are zero.
    let mut denom_u = vec![0.0; n];
    let mut denom_v = vec![0.0; n];
    for (i, du) in denom_u.iter_mut().enumerate() {
        let row = e_uv.row(i);
        *du = row.iter().sum::<f64>() + e_uu.row(i).iter().sum::<f64>();
        for (d, &e) in denom_v.iter_mut().zip(row) {
            *d += e;
        }
    }
    for (i, d) in denom_v.iter_mut().enumerate() {
        *d += e_vv.row(i).iter().sum::<f64>();
    }
    let mut loss = 0.0;
    for i in 0..n {
        let pos = (s_uv[(i, i)] - 1.0) * inv_tau;
        loss += (denom_u[i].ln() - pos) + (denom_v[i].ln() - pos);
    }
    let scale = 1.0 / (2.0 * n as f64);
    loss *= scale;

    let inv_u: Vec<f64> = denom_u.iter().map(|d| scale / d).collect();
    let inv_v: Vec<f64> = denom_v.iter().map(|d| scale / d).collect();
    let mut g_uv = e_uv;
    for i in 0..n {
        for (k, g) in g_uv.row_mut(i).iter_mut().enumerate() {
            *g *= inv_u[i] + inv_v[k];
        }
        g_uv[(i, i)] -= 2.0 * scale;
    }
    // Both (i,k) and (k,i) terms feed the same similarity.
    let gram_grad = |e: Matrix, inv: &[f64]| {
        let mut g = e;
        for i in 0..n {
            for (k, x) in g.row_mut(i).iter_mut().enumerate() {
                *x *= inv[i] + inv[k];
            }
        }
        g
    };
    let g_uu = gram_grad(e_uu, &inv_u);
    let g_vv = gram_grad(e_vv, &inv_v);

    let mut d_u = g_uv.matmul(&v)?;
    d_u.add_scaled(&g_uu.matmul(&u)?, 1.0);
    let mut d_v = g_uv.t_matmul(&u)?;
    d_v.add_scaled(&g_vv.matmul(&v)?, 1.0);
    let d_u = d_u.scale(inv_tau);
    let d_v = d_v.scale(inv_tau);

    Ok(LossGrad {
        loss,
        d_h1: normalize_rows_backward(&u, h1, &n1, &d_u),
        d_h2: normalize_rows_backward(&v, h2, &n2, &d_v),
    })
}

fn backward(
    params: &EncoderParams,
    adj: &NormalizedAdjacency,
    pass: &ForwardPass,
    d_h: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let d_w2 = pass.az.t_matmul(d_h)?;
    let d_az = d_h.matmul_t(&params.w2)?;
    let mut d_pre = adj.spmm(&d_az)?;
    for (d, &p) in d_pre.as_mut_slice().iter_mut().zip(pass.pre.as_slice()) {
        if p <= 0.0 {
            *d = 0.0;
        }
    }
    let d_w1 = pass.ax.t_matmul(&d_pre)?;
    Ok((d_w1, d_w2))
}

/// One augmented input: its normalized adjacency and (masked) features.
#[derive(Debug, Clone)]
pub struct ViewInput {
    pub adj: NormalizedAdjacency,
    pub features: Matrix,
}

impl ViewInput {
    pub fn new(adj: NormalizedAdjacency, features: Matrix) -> Self {
        Self { adj, features }
    }
}

#[derive(Debug, Clone)]
pub struct Gradients {
    /// Contrastive loss, without the weight-decay term.
    pub loss: f64,
    pub w1: Matrix,
    pub w2: Matrix,
}

/// Gradients of `loss + weight_decay / 2 * (|W1|² + |W2|²)`.
pub fn gradients(
    params: &EncoderParams,
    view1: &ViewInput,
    view2: &ViewInput,
    temperature: f64,
    weight_decay: f64,
) -> Result<Gradients> {
    let p1 = forward(params, &view1.adj, &view1.features)?;
    let p2 = forward(params, &view2.adj, &view2.features)?;
    let lg = contrastive_loss_grad(&p1.h, &p2.h, temperature)?;
    let (mut w1, mut w2) = backward(params, &view1.adj, &p1, &lg.d_h1)?;
    let (w1b, w2b) = backward(params, &view2.adj, &p2, &lg.d_h2)?;
    w1.add_scaled(&w1b, 1.0);
    w2.add_scaled(&w2b, 1.0);
    w1.add_scaled(&params.w1, weight_decay);
    w2.add_scaled(&params.w2, weight_decay);
    Ok(Gradients {
        loss: lg.loss,
        w1,
        w2,
    })
}

/// Full objective value matching [`gradients`]; used for finite-difference checks.
pub fn objective(
    params: &EncoderParams,
    view1: &ViewInput,
    view2: &ViewInput,
    temperature: f64,
    weight_decay: f64,
) -> Result<f64> {
    let h1 = encode(params, &view1.adj, &view1.features)?;
    let h2 = encode(params, &view2.adj, &view2.features)?;
    let decay = 0.5 * weight_decay * (params.w1.frobenius_sq() + params.w2.frobenius_sq());
    Ok(contrastive_loss(&h1, &h2, temperature)? + decay)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_size: usize,
    pub output_size: usize,
    pub temperature: f64,
    pub view1: ViewConfig,
    pub view2: ViewConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.5,
            weight_decay: 1e-5,
            hidden_size: 32,
            output_size: 16,
            temperature: 0.5,
            view1: ViewConfig::all_features(0.3, 0.2),
            view2: ViewConfig::all_features(0.4, 0.3),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn views(&self) -> [&ViewConfig; 2] {
        [&self.view1, &self.view2]
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.epochs == 0 {
            out.push("train.epochs must be at least 1".to_string());
        }
        if !(self.learning_rate > 0.0) {
            out.push(format!(
                "train.learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.weight_decay >= 0.0) {
            out.push(format!(
                "train.weight_decay must be non-negative, got {}",
                self.weight_decay
            ));
        }
        if !(self.temperature > 0.0) {
            out.push(format!(
                "train.temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.hidden_size == 0 || self.output_size == 0 {
            out.push("train.hidden_size and train.output_size must be at least 1".to_string());
        }
        out.extend(self.view1.violations("view1."));
        out.extend(self.view2.violations("view2."));
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub params: EncoderParams,
    /// Embeddings of the unaugmented graph under the final parameters.
    pub embeddings: Matrix,
    /// Contrastive loss per epoch, before that epoch's update.
    pub loss_trace: Vec<f64>,
    pub candidates: [CandidateFeatureSet; 2],
}

/// Selects candidate features for both views (once) and runs `cfg.epochs`
/// gradient steps on freshly augmented view pairs.
pub fn train(
    graph: &AttributedGraph,
    ranking: Option<&FeatureRanking>,
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    if !(cfg.temperature > 0.0) || !(cfg.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(cfg.violations().join("; ")));
    }
    let f = graph.num_features();
    let mut candidates = Vec::with_capacity(2);
    for (view_id, view) in (1u64..).zip(cfg.views()) {
        view.validate()?;
        let mut rng = augmentation::selection_rng(cfg.seed, view_id, view);
        candidates.push(augmentation::candidate_features(
            f, view, ranking, &mut rng,
        )?);
    }
    let candidates: [CandidateFeatureSet; 2] = candidates.try_into().expect("two views");

    let mut init_rng = seed::rng_for(cfg.seed, &[seed::TAG_INIT]);
    let mut params = EncoderParams::init(f, cfg.hidden_size, cfg.output_size, &mut init_rng);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut inputs = Vec::with_capacity(2);
        for ((view_id, view), cf) in (1u64..).zip(cfg.views()).zip(&candidates) {
            let mut rng = augmentation::epoch_rng(cfg.seed, view_id, view, epoch as u64);
            let v = augmentation::apply_view(graph, cf, view, &mut rng)?;
            inputs.push(ViewInput::new(
                NormalizedAdjacency::from_edges(graph.num_nodes(), &v.edges),
                v.features,
            ));
        }
        let grads = gradients(
            &params,
            &inputs[0],
            &inputs[1],
            cfg.temperature,
            cfg.weight_decay,
        )?;
        if !grads.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                trace: loss_trace,
            });
        }
        if !grads.w1.is_finite() || !grads.w2.is_finite() {
            return Err(Error::NonFinite {
                what: "gradient",
                epoch,
            });
        }
        loss_trace.push(grads.loss);
        params.w1.add_scaled(&grads.w1, -cfg.learning_rate);
        params.w2.add_scaled(&grads.w2, -cfg.learning_rate);
    }

    let embeddings = encode(&params, &graph.normalized_adjacency(), graph.features())?;
    if !embeddings.is_finite() {
        return Err(Error::NonFinite {
            what: "embedding",
            epoch: cfg.epochs,
        });
    }
    Ok(TrainRun {
        params,
        embeddings,
        loss_trace,
        candidates,
    })
}

/// Embeddings from the untrained, seed-initialized encoder.
pub fn random_init_embeddings(graph: &AttributedGraph, cfg: &TrainConfig) -> Result<Matrix> {
    let mut init_rng = seed::rng_for(cfg.seed, &[seed::TAG_INIT]);
    let params = EncoderParams::init(
        graph.num_features(),
        cfg.hidden_size,
        cfg.output_size,
        &mut init_rng,
    );
    encode(&params, &graph.normalized_adjacency(), graph.features())
}
