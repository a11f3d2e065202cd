//! Reverse-mode autodiff over a Wengert list. Values are `f64` matrices;
//! scalars are 1×1. Ops cover exactly what the graph encoder, decoder, and
//! classifier need. Gradients for trainable leaves are collected by name.

use std::collections::HashMap;

use ndarray::{concatenate, Array2, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

enum Op {
    Leaf { trainable: bool },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddScalarVar(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    AddN(Vec<Var>),
    Relu(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Log(Var),
    Exp(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize, usize),
    SliceRow(Var, usize),
    OuterSum(Var, Var),
    SumAll(Var),
    MeanRows(Var),
    AddConst(Var),
    MulConst(Var, Array2<f64>),
    ReplaceRow(Var, usize, Var),
    EmbedRows(Var, Vec<usize>),
    GroupMeanRows(Var, Vec<Vec<usize>>),
    StraightThrough(Var),
}

struct TapeNode {
    value: Array2<f64>,
    op: Op,
    name: Option<String>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<TapeNode>,
}

/// Gradients keyed by tape position, with named-leaf lookup.
pub struct Grads {
    slots: Vec<Option<Array2<f64>>>,
    by_name: HashMap<String, usize>,
}

impl Grads {
    pub fn wrt(&self, v: Var) -> Option<&Array2<f64>> {
        self.slots[v.0].as_ref()
    }

    pub fn by_name(&self, name: &str) -> Option<&Array2<f64>> {
        self.by_name.get(name).and_then(|&i| self.slots[i].as_ref())
    }

    pub fn into_named(mut self) -> HashMap<String, Array2<f64>> {
        let mut out = HashMap::new();
        for (name, i) in self.by_name.drain() {
            if let Some(g) = self.slots[i].take() {
                out.insert(name, g);
            }
        }
        out
    }
}

fn rows_softmax(x: &Array2<f64>) -> Array2<f64> {
    let mut y = x.clone();
    for mut row in y.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    y
}

fn rows_log_softmax(x: &Array2<f64>) -> Array2<f64> {
    let mut y = x.clone();
    for mut row in y.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        row.mapv_inplace(|v| v - lse);
    }
    y
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let val = &self.nodes[v.0].value;
        assert_eq!(val.dim(), (1, 1), "scalar() on non-1x1 value");
        val[(0, 0)]
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(TapeNode { value, op, name: None });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf; its gradient is retrievable by `name`.
    pub fn param(&mut self, name: &str, value: Array2<f64>) -> Var {
        self.nodes.push(TapeNode {
            value,
            op: Op::Leaf { trainable: true },
            name: Some(name.to_string()),
        });
        Var(self.nodes.len() - 1)
    }

    /// Non-trainable input.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf { trainable: false })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = &self.nodes[a.0].value + &self.nodes[b.0].value;
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = &self.nodes[a.0].value - &self.nodes[b.0].value;
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = &self.nodes[a.0].value * &self.nodes[b.0].value;
        self.push(v, Op::Mul(a, b))
    }

    /// Broadcast-add a 1×1 scalar variable onto every entry.
    pub fn add_scalar_var(&mut self, x: Var, s: Var) -> Var {
        assert_eq!(self.nodes[s.0].value.dim(), (1, 1));
        let sv = self.nodes[s.0].value[(0, 0)];
        let v = self.nodes[x.0].value.mapv(|e| e + sv);
        self.push(v, Op::AddScalarVar(x, s))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let v = self.nodes[x.0].value.mapv(|e| e * c);
        self.push(v, Op::Scale(x, c))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add_n(&mut self, vs: &[Var]) -> Var {
        assert!(!vs.is_empty());
        let mut v = self.nodes[vs[0].0].value.clone();
        for &x in &vs[1..] {
            v += &self.nodes[x.0].value;
        }
        self.push(v, Op::AddN(vs.to_vec()))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0].value.mapv(|e| e.max(0.0));
        self.push(v, Op::Relu(x))
    }

    pub fn leaky_relu(&mut self, x: Var, alpha: f64) -> Var {
        let v = self.nodes[x.0].value.mapv(|e| if e > 0.0 { e } else { alpha * e });
        self.push(v, Op::LeakyRelu(x, alpha))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0].value.mapv(|e| 1.0 / (1.0 + (-e).exp()));
        self.push(v, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0].value.mapv(f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0].value.mapv(f64::ln);
        self.push(v, Op::Log(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0].value.mapv(f64::exp);
        self.push(v, Op::Exp(x))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let v = rows_softmax(&self.nodes[x.0].value);
        self.push(v, Op::SoftmaxRows(x))
    }

    pub fn log_softmax_rows(&mut self, x: Var) -> Var {
        let v = rows_log_softmax(&self.nodes[x.0].value);
        self.push(v, Op::LogSoftmaxRows(x))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let views: Vec<_> = parts.iter().map(|p| self.nodes[p.0].value.view()).collect();
        let v = concatenate(Axis(1), &views).expect("column concat shape mismatch");
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.nodes[x.0]
            .value
            .slice(ndarray::s![.., start..start + len])
            .to_owned();
        self.push(v, Op::SliceCols(x, start, len))
    }

    pub fn slice_row(&mut self, x: Var, row: usize) -> Var {
        let v = self.nodes[x.0]
            .value
            .row(row)
            .to_owned()
            .insert_axis(Axis(0));
        self.push(v, Op::SliceRow(x, row))
    }

    /// E[i][j] = s[i] + d[j] for column vectors s (N×1) and d (M×1) → N×M.
    pub fn outer_sum(&mut self, s: Var, d: Var) -> Var {
        let sv = &self.nodes[s.0].value;
        let dv = &self.nodes[d.0].value;
        assert_eq!(sv.ncols(), 1);
        assert_eq!(dv.ncols(), 1);
        let (n, m) = (sv.nrows(), dv.nrows());
        let v = Array2::from_shape_fn((n, m), |(i, j)| sv[(i, 0)] + dv[(j, 0)]);
        self.push(v, Op::OuterSum(s, d))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let v = Array2::from_elem((1, 1), self.nodes[x.0].value.sum());
        self.push(v, Op::SumAll(x))
    }

    pub fn mean_rows(&mut self, x: Var) -> Var {
        let xv = &self.nodes[x.0].value;
        let v = (xv.sum_axis(Axis(0)) / xv.nrows() as f64).insert_axis(Axis(0));
        self.push(v, Op::MeanRows(x))
    }

    pub fn add_const(&mut self, x: Var, c: &Array2<f64>) -> Var {
        let v = &self.nodes[x.0].value + c;
        self.push(v, Op::AddConst(x))
    }

    pub fn mul_const(&mut self, x: Var, c: &Array2<f64>) -> Var {
        let v = &self.nodes[x.0].value * c;
        self.push(v, Op::MulConst(x, c.clone()))
    }

    /// x with row `i` replaced by the 1×C variable `r`.
    pub fn replace_row(&mut self, x: Var, i: usize, r: Var) -> Var {
        let mut v = self.nodes[x.0].value.clone();
        let rv = &self.nodes[r.0].value;
        assert_eq!(rv.nrows(), 1);
        assert_eq!(rv.ncols(), v.ncols());
        v.row_mut(i).assign(&rv.row(0));
        self.push(v, Op::ReplaceRow(x, i, r))
    }

    /// Gather rows of `table` by index; duplicates allowed.
    pub fn embed_rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let tv = &self.nodes[table.0].value;
        let mut v = Array2::zeros((ids.len(), tv.ncols()));
        for (k, &id) in ids.iter().enumerate() {
            v.row_mut(k).assign(&tv.row(id));
        }
        self.push(v, Op::EmbedRows(table, ids.to_vec()))
    }

    /// Row k = mean of `table` rows in groups[k]; empty groups give zeros.
    pub fn group_mean_rows(&mut self, table: Var, groups: &[Vec<usize>]) -> Var {
        let tv = &self.nodes[table.0].value;
        let mut v = Array2::zeros((groups.len(), tv.ncols()));
        for (k, group) in groups.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let mut acc = v.row_mut(k);
            for &id in group {
                acc += &tv.row(id);
            }
            acc /= group.len() as f64;
        }
        self.push(v, Op::GroupMeanRows(table, groups.to_vec()))
    }

    /// Forward value `hard`, gradient passed through to `soft` untouched.
    pub fn straight_through(&mut self, soft: Var, hard: Array2<f64>) -> Var {
        assert_eq!(self.nodes[soft.0].value.dim(), hard.dim());
        self.push(hard, Op::StraightThrough(soft))
    }

    /// Reverse sweep from a 1×1 loss. Returns gradients for every node that
    /// influences the loss; named trainable leaves are addressable by name.
    pub fn backward(&self, loss: Var) -> Grads {
        assert_eq!(
            self.nodes[loss.0].value.dim(),
            (1, 1),
            "backward() expects a scalar loss"
        );
        let mut slots: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        slots[loss.0] = Some(Array2::from_elem((1, 1), 1.0));

        for i in (0..=loss.0).rev() {
            // leaves keep their slot: it is the result
            if matches!(self.nodes[i].op, Op::Leaf { .. }) {
                continue;
            }
            let g = match &slots[i] {
                Some(g) => g.clone(),
                None => continue,
            };
            let bump = |slot: &mut Option<Array2<f64>>, contrib: Array2<f64>| {
                match slot {
                    Some(acc) => *acc += &contrib,
                    None => *slot = Some(contrib),
                }
            };
            // split_at keeps the borrow checker happy: node i reads earlier
            // slots only
            let (head, tail) = slots.split_at_mut(i);
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf { .. } => {}
                Op::Add(a, b) => {
                    bump(&mut head[a.0], g.clone());
                    bump(&mut head[b.0], g.clone());
                }
                Op::Sub(a, b) => {
                    bump(&mut head[a.0], g.clone());
                    bump(&mut head[b.0], -&g);
                }
                Op::Mul(a, b) => {
                    bump(&mut head[a.0], &g * &self.nodes[b.0].value);
                    bump(&mut head[b.0], &g * &self.nodes[a.0].value);
                }
                Op::AddScalarVar(x, s) => {
                    bump(&mut head[x.0], g.clone());
                    bump(&mut head[s.0], Array2::from_elem((1, 1), g.sum()));
                }
                Op::Scale(x, c) => bump(&mut head[x.0], g.mapv(|e| e * c)),
                Op::MatMul(a, b) => {
                    bump(&mut head[a.0], g.dot(&self.nodes[b.0].value.t()));
                    bump(&mut head[b.0], self.nodes[a.0].value.t().dot(&g));
                }
                Op::AddN(vs) => {
                    for v in vs {
                        bump(&mut head[v.0], g.clone());
                    }
                }
                Op::Relu(x) => {
                    let xv = &self.nodes[x.0].value;
                    let contrib =
                        Array2::from_shape_fn(g.dim(), |ix| {
                            if xv[ix] > 0.0 {
                                g[ix]
                            } else {
                                0.0
                            }
                        });
                    bump(&mut head[x.0], contrib);
                }
                Op::LeakyRelu(x, alpha) => {
                    let xv = &self.nodes[x.0].value;
                    let contrib = Array2::from_shape_fn(g.dim(), |ix| {
                        if xv[ix] > 0.0 {
                            g[ix]
                        } else {
                            alpha * g[ix]
                        }
                    });
                    bump(&mut head[x.0], contrib);
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    bump(&mut head[x.0], &g * &(y * &y.mapv(|e| 1.0 - e)));
                }
                Op::Tanh(x) => {
                    let y = &node.value;
                    bump(&mut head[x.0], &g * &y.mapv(|e| 1.0 - e * e));
                }
                Op::Log(x) => bump(&mut head[x.0], &g / &self.nodes[x.0].value),
                Op::Exp(x) => bump(&mut head[x.0], &g * &node.value),
                Op::SoftmaxRows(x) => {
                    let y = &node.value;
                    let mut contrib = Array2::zeros(g.dim());
                    for r in 0..y.nrows() {
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let dot: f64 = yr.iter().zip(gr.iter()).map(|(a, b)| a * b).sum();
                        for c in 0..y.ncols() {
                            contrib[(r, c)] = yr[c] * (gr[c] - dot);
                        }
                    }
                    bump(&mut head[x.0], contrib);
                }
                Op::LogSoftmaxRows(x) => {
                    let y = &node.value;
                    let mut contrib = Array2::zeros(g.dim());
                    for r in 0..y.nrows() {
                        let gsum: f64 = g.row(r).sum();
                        for c in 0..y.ncols() {
                            contrib[(r, c)] = g[(r, c)] - y[(r, c)].exp() * gsum;
                        }
                    }
                    bump(&mut head[x.0], contrib);
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let w = self.nodes[p.0].value.ncols();
                        bump(
                            &mut head[p.0],
                            g.slice(ndarray::s![.., start..start + w]).to_owned(),
                        );
                        start += w;
                    }
                }
                Op::SliceCols(x, start, len) => {
                    let mut contrib = Array2::zeros(self.nodes[x.0].value.dim());
                    contrib
                        .slice_mut(ndarray::s![.., *start..*start + *len])
                        .assign(&g);
                    bump(&mut head[x.0], contrib);
                }
                Op::SliceRow(x, row) => {
                    let mut contrib = Array2::zeros(self.nodes[x.0].value.dim());
                    contrib.row_mut(*row).assign(&g.row(0));
                    bump(&mut head[x.0], contrib);
                }
                Op::OuterSum(s, d) => {
                    let gs = g.sum_axis(Axis(1)).insert_axis(Axis(1));
                    let gd = g.sum_axis(Axis(0)).insert_axis(Axis(1));
                    bump(&mut head[s.0], gs);
                    bump(&mut head[d.0], gd);
                }
                Op::SumAll(x) => {
                    let contrib =
                        Array2::from_elem(self.nodes[x.0].value.dim(), g[(0, 0)]);
                    bump(&mut head[x.0], contrib);
                }
                Op::MeanRows(x) => {
                    let n = self.nodes[x.0].value.nrows();
                    let contrib = Array2::from_shape_fn(
                        self.nodes[x.0].value.dim(),
                        |(_, c)| g[(0, c)] / n as f64,
                    );
                    bump(&mut head[x.0], contrib);
                }
                Op::AddConst(x) => bump(&mut head[x.0], g.clone()),
                Op::MulConst(x, c) => bump(&mut head[x.0], &g * c),
                Op::ReplaceRow(x, i_row, r) => {
                    let mut gx = g.clone();
                    gx.row_mut(*i_row).fill(0.0);
                    bump(&mut head[x.0], gx);
                    bump(&mut head[r.0], g.row(*i_row).to_owned().insert_axis(Axis(0)));
                }
                Op::EmbedRows(table, ids) => {
                    let mut contrib = Array2::zeros(self.nodes[table.0].value.dim());
                    for (k, &id) in ids.iter().enumerate() {
                        let mut row = contrib.row_mut(id);
                        row += &g.row(k);
                    }
                    bump(&mut head[table.0], contrib);
                }
                Op::GroupMeanRows(table, groups) => {
                    let mut contrib = Array2::zeros(self.nodes[table.0].value.dim());
                    for (k, group) in groups.iter().enumerate() {
                        if group.is_empty() {
                            continue;
                        }
                        let w = 1.0 / group.len() as f64;
                        for &id in group {
                            let mut row = contrib.row_mut(id);
                            row.scaled_add(w, &g.row(k));
                        }
                    }
                    bump(&mut head[table.0], contrib);
                }
                Op::StraightThrough(soft) => bump(&mut head[soft.0], g.clone()),
            }
            let _ = tail;
        }

        let mut by_name = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if let (Op::Leaf { trainable: true }, Some(name)) = (&node.op, &node.name) {
                by_name.insert(name.clone(), i);
            }
        }
        Grads { slots, by_name }
    }
}
