//! Gumbel-softmax sampling with optional straight-through one-hot forward.

use ndarray::Array2;
use rand::Rng;

use crate::nn::tape::{Tape, Var};

/// Sample once from `softmax((logits + gumbel_noise) / tau)` on the tape.
/// `hard` returns a one-hot forward value whose gradient is the soft
/// sample's (straight-through).
pub fn gumbel_softmax<R: Rng>(
    t: &mut Tape,
    logits: Var,
    tau: f64,
    hard: bool,
    rng: &mut R,
) -> Var {
    assert!(tau > 0.0, "gumbel temperature must be positive");
    let dim = t.value(logits).dim();
    assert_eq!(dim.0, 1, "gumbel_softmax expects a 1×V logit row");
    let noise = Array2::from_shape_fn(dim, |_| {
        let u: f64 = rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12);
        -(-u.ln()).ln()
    });
    let noisy = t.add_const(logits, &noise);
    let scaled = t.scale(noisy, 1.0 / tau);
    let soft = t.softmax_rows(scaled);
    if !hard {
        return soft;
    }
    let sv = t.value(soft);
    let argmax = sv
        .row(0)
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
        .expect("non-empty row")
        .0;
    let mut one_hot = Array2::zeros(dim);
    one_hot[(0, argmax)] = 1.0;
    t.straight_through(soft, one_hot)
}
