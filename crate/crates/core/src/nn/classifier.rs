//! Watermark classifier: two affine layers with ReLU, softmax over 2^L
//! chunk classes.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::tape::{Tape, Var};

#[derive(Debug, Clone)]
pub struct ClassifierParams {
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
}

impl ClassifierParams {
    pub fn init<R: Rng>(input: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        let mut uni = |r: usize, c: usize| {
            let lim = (6.0 / (r + c) as f64).sqrt();
            Array2::from_shape_fn((r, c), |_| (rng.random::<f64>() * 2.0 - 1.0) * lim)
        };
        ClassifierParams {
            w1: uni(input, hidden),
            b1: Array2::zeros((1, hidden)),
            w2: uni(hidden, classes),
            b2: Array2::zeros((1, classes)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.w2.ncols()
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Array2<f64>)) {
        f(format!("{prefix}.w1"), &self.w1);
        f(format!("{prefix}.b1"), &self.b1);
        f(format!("{prefix}.w2"), &self.w2);
        f(format!("{prefix}.b2"), &self.b2);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Array2<f64>)) {
        f(format!("{prefix}.w1"), &mut self.w1);
        f(format!("{prefix}.b1"), &mut self.b1);
        f(format!("{prefix}.w2"), &mut self.w2);
        f(format!("{prefix}.b2"), &mut self.b2);
    }
}

/// Tape handles for the classifier parameters.
pub struct ClassifierVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl ClassifierVars {
    pub fn register(t: &mut Tape, prefix: &str, p: &ClassifierParams) -> ClassifierVars {
        ClassifierVars {
            w1: t.param(&format!("{prefix}.w1"), p.w1.clone()),
            b1: t.param(&format!("{prefix}.b1"), p.b1.clone()),
            w2: t.param(&format!("{prefix}.w2"), p.w2.clone()),
            b2: t.param(&format!("{prefix}.b2"), p.b2.clone()),
        }
    }

    /// Softmax class probabilities for a 1×D representation.
    pub fn forward(&self, t: &mut Tape, x: Var) -> Var {
        let l1 = t.matmul(x, self.w1);
        let l1b = t.add(l1, self.b1);
        let hid = t.relu(l1b);
        let l2 = t.matmul(hid, self.w2);
        let logits = t.add(l2, self.b2);
        t.softmax_rows(logits)
    }
}

/// Inference-mode probabilities over the 2^L chunk classes.
pub fn classify_watermark(repr: &Array2<f64>, p: &ClassifierParams) -> Result<Array2<f64>> {
    if repr.nrows() != 1 || repr.ncols() != p.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "representation {}×{} vs classifier input {}",
            repr.nrows(),
            repr.ncols(),
            p.input_dim()
        )));
    }
    let mut t = Tape::new();
    let x = t.constant(repr.clone());
    let vars = ClassifierVars::register(&mut t, "cls", p);
    let out = vars.forward(&mut t, x);
    Ok(t.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn zero_weights_give_uniform() {
        let p = ClassifierParams {
            w1: Array2::zeros((3, 5)),
            b1: Array2::zeros((1, 5)),
            w2: Array2::zeros((5, 4)),
            b2: Array2::zeros((1, 4)),
        };
        let out = classify_watermark(&ndarray::array![[0.3, -1.0, 2.0]], &p).unwrap();
        for &v in out.iter() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_normalize() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = ClassifierParams::init(6, 8, 4, &mut rng);
        let x = Array2::from_shape_fn((1, 6), |_| rng.random::<f64>() - 0.5);
        let out = classify_watermark(&x, &p).unwrap();
        assert!((out.sum() - 1.0).abs() < 1e-9);
        assert!(out.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let p = ClassifierParams::init(6, 8, 4, &mut rng);
        let x = Array2::zeros((1, 5));
        assert!(matches!(
            classify_watermark(&x, &p),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn separates_four_synthetic_clusters() {
        // one cluster per class at the corners of a simplex in R^4
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut xs: Vec<Array2<f64>> = Vec::new();
        let mut ys: Vec<usize> = Vec::new();
        for class in 0..4 {
            for _ in 0..10 {
                let mut x = Array2::from_shape_fn((1, 4), |_| {
                    (rng.random::<f64>() - 0.5) * 0.2
                });
                x[(0, class)] += 2.0;
                xs.push(x);
                ys.push(class);
            }
        }
        let mut p = ClassifierParams::init(4, 8, 4, &mut rng);
        // plain gradient descent using the tape
        for _ in 0..200 {
            for (x, &y) in xs.iter().zip(&ys) {
                let mut t = Tape::new();
                let xv = t.constant(x.clone());
                let vars = ClassifierVars::register(&mut t, "c", &p);
                let probs = vars.forward(&mut t, xv);
                let lg = t.log(probs);
                let mut pick = Array2::zeros((1, 4));
                pick[(0, y)] = -1.0;
                let nll = t.mul_const(lg, &pick);
                let loss = t.sum_all(nll);
                let grads = t.backward(loss);
                p.visit_mut("c", &mut |name, arr| {
                    if let Some(g) = grads.by_name(&name) {
                        arr.scaled_add(-0.1, g);
                    }
                });
            }
        }
        let mut correct = 0;
        for (x, &y) in xs.iter().zip(&ys) {
            let probs = classify_watermark(x, &p).unwrap();
            let pred = probs
                .row(0)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            if pred == y {
                correct += 1;
            }
        }
        assert_eq!(correct, xs.len(), "clusters are linearly separable");
    }
}
