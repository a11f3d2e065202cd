//! Relational graph attention. Additive leaky-ReLU attention scoring with a
//! per-relation scalar bias on the pre-softmax logit; attention normalizes
//! over all in-edges of a node across the six relations, so a node pair
//! linked by two relations contributes two logits.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Relation, VariableContextGraph};
use crate::nn::tape::{Tape, Var};

const NEG_INF: f64 = -1e30;

#[derive(Debug, Clone)]
pub struct GatLayerParams {
    /// Per-head transform, F×F′.
    pub w: Vec<Array2<f64>>,
    /// Per-head destination-side attention vector, F′×1.
    pub a_src: Vec<Array2<f64>>,
    /// Per-head source-side attention vector, F′×1.
    pub a_dst: Vec<Array2<f64>>,
    /// One scalar per relation, 1×6, shared across heads.
    pub rel_bias: Array2<f64>,
    pub leaky_alpha: f64,
}

impl GatLayerParams {
    pub fn init<R: Rng>(heads: usize, f_in: usize, f_out: usize, rng: &mut R) -> Self {
        let lim_w = (6.0 / (f_in + f_out) as f64).sqrt();
        let lim_a = (6.0 / (f_out + 1) as f64).sqrt();
        let mut uni = |r: usize, c: usize, lim: f64| {
            Array2::from_shape_fn((r, c), |_| (rng.random::<f64>() * 2.0 - 1.0) * lim)
        };
        GatLayerParams {
            w: (0..heads).map(|_| uni(f_in, f_out, lim_w)).collect(),
            a_src: (0..heads).map(|_| uni(f_out, 1, lim_a)).collect(),
            a_dst: (0..heads).map(|_| uni(f_out, 1, lim_a)).collect(),
            rel_bias: Array2::zeros((1, Relation::COUNT)),
            leaky_alpha: 0.2,
        }
    }

    pub fn head_count(&self) -> usize {
        self.w.len()
    }

    pub fn in_dim(&self) -> usize {
        self.w[0].nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w[0].ncols()
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Array2<f64>)) {
        for (k, w) in self.w.iter().enumerate() {
            f(format!("{prefix}.h{k}.w"), w);
        }
        for (k, a) in self.a_src.iter().enumerate() {
            f(format!("{prefix}.h{k}.a_src"), a);
        }
        for (k, a) in self.a_dst.iter().enumerate() {
            f(format!("{prefix}.h{k}.a_dst"), a);
        }
        f(format!("{prefix}.rel_bias"), &self.rel_bias);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Array2<f64>)) {
        for (k, w) in self.w.iter_mut().enumerate() {
            f(format!("{prefix}.h{k}.w"), w);
        }
        for (k, a) in self.a_src.iter_mut().enumerate() {
            f(format!("{prefix}.h{k}.a_src"), a);
        }
        for (k, a) in self.a_dst.iter_mut().enumerate() {
            f(format!("{prefix}.h{k}.a_dst"), a);
        }
        f(format!("{prefix}.rel_bias"), &mut self.rel_bias);
    }
}

/// Tape handles for one layer's parameters.
pub struct GatLayerVars {
    pub w: Vec<Var>,
    pub a_src: Vec<Var>,
    pub a_dst: Vec<Var>,
    pub rel_bias: Var,
    pub leaky_alpha: f64,
}

impl GatLayerVars {
    pub fn register(t: &mut Tape, prefix: &str, p: &GatLayerParams) -> GatLayerVars {
        GatLayerVars {
            w: p
                .w
                .iter()
                .enumerate()
                .map(|(k, w)| t.param(&format!("{prefix}.h{k}.w"), w.clone()))
                .collect(),
            a_src: p
                .a_src
                .iter()
                .enumerate()
                .map(|(k, a)| t.param(&format!("{prefix}.h{k}.a_src"), a.clone()))
                .collect(),
            a_dst: p
                .a_dst
                .iter()
                .enumerate()
                .map(|(k, a)| t.param(&format!("{prefix}.h{k}.a_dst"), a.clone()))
                .collect(),
            rel_bias: t.param(&format!("{prefix}.rel_bias"), p.rel_bias.clone()),
            leaky_alpha: p.leaky_alpha,
        }
    }
}

/// Additive attention masks, one N×N block per relation:
/// `mask[r][(i, j)] = 0` iff an r-edge j→i exists, else −1e30.
pub struct RelationMasks {
    blocks: Vec<Array2<f64>>,
    isolated: Option<usize>,
}

impl RelationMasks {
    pub fn new(g: &VariableContextGraph) -> RelationMasks {
        let n = g.node_count();
        let mut blocks = vec![Array2::from_elem((n, n), NEG_INF); Relation::COUNT];
        let mut in_degree = vec![0usize; n];
        for e in &g.edges {
            blocks[e.rel.id()][(e.dst, e.src)] = 0.0;
            in_degree[e.dst] += 1;
        }
        let isolated = in_degree.iter().position(|&d| d == 0);
        RelationMasks { blocks, isolated }
    }

    pub fn node_count(&self) -> usize {
        self.blocks[0].nrows()
    }
}

/// One attention layer on the tape: x is N×F, result is N×(K·F′) with
/// ReLU applied per head before concatenation.
pub fn gat_layer<R: Rng>(
    t: &mut Tape,
    x: Var,
    masks: &RelationMasks,
    p: &GatLayerVars,
    dropout: Option<(&mut R, f64)>,
) -> Result<Var> {
    let n = masks.node_count();
    if t.value(x).nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, graph has {n} nodes",
            t.value(x).nrows()
        )));
    }
    let f_in = t.value(p.w[0]).nrows();
    if t.value(x).ncols() != f_in {
        return Err(Error::DimensionMismatch(format!(
            "features have width {}, layer expects {f_in}",
            t.value(x).ncols()
        )));
    }
    if let Some(i) = masks.isolated {
        return Err(Error::IsolatedNode(i));
    }

    // one shared dropout pattern across relations per head keeps the cost
    // of the concatenated softmax predictable
    let drop_masks: Option<Vec<Array2<f64>>> = dropout.map(|(rng, prob)| {
        (0..p.w.len())
            .map(|_| {
                Array2::from_shape_fn((n, Relation::COUNT * n), |_| {
                    if rng.random::<f64>() < prob {
                        0.0
                    } else {
                        1.0 / (1.0 - prob)
                    }
                })
            })
            .collect()
    });

    let mut heads = Vec::with_capacity(p.w.len());
    for k in 0..p.w.len() {
        let z = t.matmul(x, p.w[k]);
        let s = t.matmul(z, p.a_src[k]);
        let d = t.matmul(z, p.a_dst[k]);
        let e = t.outer_sum(s, d);
        let el = t.leaky_relu(e, p.leaky_alpha);
        let mut blocks = Vec::with_capacity(Relation::COUNT);
        for r in 0..Relation::COUNT {
            let bias = t.slice_cols(p.rel_bias, r, 1);
            let with_bias = t.add_scalar_var(el, bias);
            blocks.push(t.add_const(with_bias, &masks.blocks[r]));
        }
        let logits = t.concat_cols(&blocks);
        let mut attn = t.softmax_rows(logits);
        if let Some(dm) = &drop_masks {
            attn = t.mul_const(attn, &dm[k]);
        }
        let mut parts = Vec::with_capacity(Relation::COUNT);
        for r in 0..Relation::COUNT {
            let a_r = t.slice_cols(attn, r * n, n);
            parts.push(t.matmul(a_r, z));
        }
        let summed = t.add_n(&parts);
        heads.push(t.relu(summed));
    }
    Ok(t.concat_cols(&heads))
}

/// Inference-mode forward pass (no dropout), plain matrices in and out.
pub fn gat_forward(
    x: &Array2<f64>,
    g: &VariableContextGraph,
    p: &GatLayerParams,
) -> Result<Array2<f64>> {
    let mut t = Tape::new();
    let xv = t.constant(x.clone());
    let vars = GatLayerVars::register(&mut t, "gat", p);
    let masks = RelationMasks::new(g);
    let out = gat_layer::<rand::rngs::ThreadRng>(&mut t, xv, &masks, &vars, None)?;
    Ok(t.value(out).clone())
}

/// Contiguous block `[c·F′, (c+1)·F′)` of a 1×(K·F′) node representation.
pub fn select_head(h: &Array2<f64>, class_index: usize, heads: usize) -> Result<Array2<f64>> {
    if class_index >= heads {
        return Err(Error::IndexOutOfRange { index: class_index, heads });
    }
    let total = h.ncols();
    if heads == 0 || total % heads != 0 {
        return Err(Error::DimensionMismatch(format!(
            "representation width {total} not divisible into {heads} blocks"
        )));
    }
    let f = total / heads;
    Ok(h.slice(ndarray::s![.., class_index * f..(class_index + 1) * f])
        .to_owned())
}
