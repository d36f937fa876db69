use rand::{Rng, RngCore};

use super::params::{Init, ParamId, ParamStore};
use super::tensor::Tensor2D;
use crate::error::{Error, Result};

/// Floor applied to probabilities before taking a logarithm.
pub const PROB_EPS: f64 = 1e-9;

/// A linear map applied independently to every row (candidate) of its input:
/// the `1 x 1` convolution over a candidate axis.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    /// Registers `{name}.weight` (`d_in x d_out`) and `{name}.bias` (`1 x d_out`).
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.register(format!("{name}.weight"), d_in, d_out, Init::FanIn(d_in), rng);
        let bias = store.register(format!("{name}.bias"), 1, d_out, Init::FanIn(d_in), rng);
        Linear {
            weight,
            bias,
            d_in,
            d_out,
        }
    }

    /// Binds to parameters that already exist in `store`.
    pub fn bind(store: &ParamStore, name: &str) -> Result<Self> {
        let missing = |n: String| Error::Config(format!("missing parameter {n}"));
        let weight = store
            .find(&format!("{name}.weight"))
            .ok_or_else(|| missing(format!("{name}.weight")))?;
        let bias = store
            .find(&format!("{name}.bias"))
            .ok_or_else(|| missing(format!("{name}.bias")))?;
        let w = store.param(weight);
        Ok(Linear {
            weight,
            bias,
            d_in: w.rows,
            d_out: w.cols,
        })
    }

    pub fn forward(&self, store: &ParamStore, input: &Tensor2D) -> Result<Tensor2D> {
        if input.cols() != self.d_in {
            return Err(Error::dim("Linear::forward", self.d_in, input.cols()));
        }
        let w = store.value(self.weight);
        let b = store.value(self.bias);
        let mut out = Tensor2D::zeros(input.rows(), self.d_out);
        for k in 0..input.rows() {
            let x = input.row(k);
            let y = out.row_mut(k);
            y.copy_from_slice(b);
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let w_row = &w[i * self.d_out..(i + 1) * self.d_out];
                for (yo, &wo) in y.iter_mut().zip(w_row) {
                    *yo += xi * wo;
                }
            }
        }
        Ok(out)
    }

    /// Accumulates weight and bias gradients into `store` and returns the
    /// gradient with respect to the input.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        input: &Tensor2D,
        grad_out: &Tensor2D,
    ) -> Result<Tensor2D> {
        if grad_out.cols() != self.d_out || grad_out.rows() != input.rows() {
            return Err(Error::dim(
                "Linear::backward",
                format!("{}x{}", input.rows(), self.d_out),
                format!("{}x{}", grad_out.rows(), grad_out.cols()),
            ));
        }
        let d_out = self.d_out;
        {
            let gw = store.grad_mut(self.weight);
            for k in 0..input.rows() {
                let g = grad_out.row(k);
                for (i, &xi) in input.row(k).iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    for (gwo, &go) in gw[i * d_out..(i + 1) * d_out].iter_mut().zip(g) {
                        *gwo += xi * go;
                    }
                }
            }
        }
        {
            let gb = store.grad_mut(self.bias);
            for k in 0..input.rows() {
                for (gbo, &go) in gb.iter_mut().zip(grad_out.row(k)) {
                    *gbo += go;
                }
            }
        }
        let w = store.value(self.weight);
        let mut grad_in = Tensor2D::zeros(input.rows(), self.d_in);
        for k in 0..input.rows() {
            let g = grad_out.row(k);
            let gi = grad_in.row_mut(k);
            for (i, gii) in gi.iter_mut().enumerate() {
                *gii = dot(&w[i * d_out..(i + 1) * d_out], g);
            }
        }
        Ok(grad_in)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, t: &Tensor2D) -> Tensor2D {
        let mut out = t.clone();
        for v in out.data_mut() {
            *v = match self {
                Activation::Identity => *v,
                Activation::Tanh => v.tanh(),
                Activation::Relu => v.max(0.0),
                Activation::Sigmoid => sigmoid(*v),
            };
        }
        out
    }

    /// Gradient through the activation, given its output and the upstream gradient.
    pub fn backward(self, output: &Tensor2D, grad_out: &Tensor2D) -> Tensor2D {
        let mut g = grad_out.clone();
        for (gi, &y) in g.data_mut().iter_mut().zip(output.data()) {
            *gi *= match self {
                Activation::Identity => 1.0,
                Activation::Tanh => 1.0 - y * y,
                Activation::Relu => {
                    if y > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Activation::Sigmoid => y * (1.0 - y),
            };
        }
        g
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `softmax(beta * logits)`, computed with max subtraction.
/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Draws an index from a probability vector by inverse CDF.
pub fn sample_categorical(p: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

pub fn softmax(logits: &[f64], beta: f64) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::dim("softmax", "non-empty", 0));
    }
    let max = logits
        .iter()
        .map(|l| beta * l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (beta * l - max).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    Ok(out)
}

/// Gradient with respect to the logits of `softmax(beta * logits)`.
pub fn softmax_backward(probs: &[f64], grad_out: &[f64], beta: f64) -> Vec<f64> {
    let inner = dot(probs, grad_out);
    probs
        .iter()
        .zip(grad_out)
        .map(|(p, g)| beta * p * (g - inner))
        .collect()
}

/// `H(target, predicted) = -sum_i target_i * ln(max(predicted_i, eps))`.
pub fn cross_entropy(target: &[f64], predicted: &[f64]) -> Result<f64> {
    if target.len() != predicted.len() {
        return Err(Error::dim("cross_entropy", target.len(), predicted.len()));
    }
    Ok(-target
        .iter()
        .zip(predicted)
        .map(|(p, q)| if *p == 0.0 { 0.0 } else { p * q.max(PROB_EPS).ln() })
        .sum::<f64>())
}

/// Gradient of [`cross_entropy`] with respect to `predicted`.
pub fn cross_entropy_grad(target: &[f64], predicted: &[f64]) -> Vec<f64> {
    target
        .iter()
        .zip(predicted)
        .map(|(p, q)| if *q < PROB_EPS { 0.0 } else { -p / q })
        .collect()
}

/// Mean squared error and its gradient with respect to `predicted`.
pub fn mse(predicted: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if target.len() != predicted.len() {
        return Err(Error::dim("mse", target.len(), predicted.len()));
    }
    let n = predicted.len().max(1) as f64;
    let loss = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    let grad = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    Ok((loss, grad))
}

pub fn column_sum(t: &Tensor2D) -> Vec<f64> {
    let mut s = vec![0.0; t.cols()];
    for k in 0..t.rows() {
        for (si, v) in s.iter_mut().zip(t.row(k)) {
            *si += v;
        }
    }
    s
}

/// Appends the sum over rows (the context embedding) to every row:
/// `K x D -> K x 2D`.
pub fn concat_context(t: &Tensor2D) -> Tensor2D {
    let ctx = column_sum(t);
    let d = t.cols();
    let mut out = Tensor2D::zeros(t.rows(), 2 * d);
    for k in 0..t.rows() {
        let row = out.row_mut(k);
        row[..d].copy_from_slice(t.row(k));
        row[d..].copy_from_slice(&ctx);
    }
    out
}

pub fn concat_context_backward(grad_out: &Tensor2D) -> Tensor2D {
    let d = grad_out.cols() / 2;
    let mut ctx_grad = vec![0.0; d];
    for k in 0..grad_out.rows() {
        for (c, g) in ctx_grad.iter_mut().zip(&grad_out.row(k)[d..]) {
            *c += g;
        }
    }
    let mut g = Tensor2D::zeros(grad_out.rows(), d);
    for k in 0..grad_out.rows() {
        let src = grad_out.row(k);
        for (i, gi) in g.row_mut(k).iter_mut().enumerate() {
            *gi = src[i] + ctx_grad[i];
        }
    }
    g
}
