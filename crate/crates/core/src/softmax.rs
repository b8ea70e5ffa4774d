//! Sense-conditioned hierarchical softmax.
//!
//! `p(v | z = k, w) = ∏_{n ∈ path(v)} σ(sign_n · ⟨in_wk, out_n⟩)`

use crate::huffman::Path;
use crate::math::{dot, log_sigmoid, sigmoid, Scalar};
use crate::model::SenseModel;

/// `log p(v | prototype)` for an arbitrary prototype vector.
#[inline]
pub fn path_log_prob<F: Scalar>(model: &SenseModel<F>, prototype: &[F], path: Path<'_>) -> f64 {
    path.iter()
        .map(|(n, sign)| log_sigmoid(sign as f64 * dot(prototype, model.out_vec(n))))
        .sum()
}

/// `log p(v | z = k, w)`.
pub fn log_p_word<F: Scalar>(model: &SenseModel<F>, v: u32, w: u32, k: usize) -> f64 {
    path_log_prob(model, model.in_vec(w, k), model.code().path(v))
}

/// Exact gradient of [`log_p_word`] with respect to the prototype and to
/// each output vector on the path.
#[derive(Clone, Debug, PartialEq)]
pub struct WordGradient {
    pub input: Vec<f64>,
    pub output: Vec<(u32, Vec<f64>)>,
}

/// Coefficient `∂ log σ(sign·s) / ∂s = sign · σ(−sign·s)`.
#[inline]
pub fn branch_coefficient(sign: i8, score: f64) -> f64 {
    let sign = sign as f64;
    sign * sigmoid(-sign * score)
}

pub fn grad_log_p_word<F: Scalar>(model: &SenseModel<F>, v: u32, w: u32, k: usize) -> WordGradient {
    let proto = model.in_vec(w, k);
    let dim = model.dim();
    let mut input = vec![0.0; dim];
    let mut output = Vec::new();
    for (n, sign) in model.code().path(v).iter() {
        let out = model.out_vec(n);
        let g = branch_coefficient(sign, dot(proto, out));
        for (gi, &o) in input.iter_mut().zip(out) {
            *gi += g * o.to_f64();
        }
        output.push((n, proto.iter().map(|&x| g * x.to_f64()).collect()));
    }
    WordGradient { input, output }
}
