//! Plain (non-recording) versions of the differentiable kernels.

use alloc::format;
use alloc::vec::Vec;

use super::tape::dot;
use super::RealArray;
use crate::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `x / (1 + |x|)`.
pub fn softsign(x: f64) -> f64 {
    x / (1.0 + libm::fabs(x))
}

pub fn tanh_act(x: f64) -> f64 {
    libm::tanh(x)
}

/// Bounded output nonlinearity of the reward model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Softsign,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Softsign => softsign(x),
            Activation::Tanh => tanh_act(x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Softsign => "softsign",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "softsign" => Ok(Activation::Softsign),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected softsign or tanh)"
            ))),
        }
    }
}

fn check_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    check_finite(logits, "softmax logits")?;
    if logits.is_empty() {
        return Err(Error::Shape("softmax of an empty vector".into()));
    }
    Ok(masked_softmax(logits, &[]))
}

pub(crate) fn masked_logsumexp(logits: &[f64], masked: &[usize]) -> f64 {
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| !masked.contains(i))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| !masked.contains(i))
        .map(|(_, &v)| libm::exp(v - max))
        .sum();
    max + libm::log(sum)
}

/// Softmax with `masked` entries forced to probability zero.
pub(crate) fn masked_softmax(logits: &[f64], masked: &[usize]) -> Vec<f64> {
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| !masked.contains(i))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, &v)| if masked.contains(&i) { 0.0 } else { libm::exp(v - max) })
        .collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    out
}

/// Log-probabilities with `masked` entries at negative infinity.
pub fn masked_log_softmax(logits: &[f64], masked: &[usize]) -> Vec<f64> {
    let lse = masked_logsumexp(logits, masked);
    logits
        .iter()
        .enumerate()
        .map(|(i, &v)| if masked.contains(&i) { f64::NEG_INFINITY } else { v - lse })
        .collect()
}

/// `w * x` for a 2-D `w`.
pub fn matvec(w: &RealArray, x: &[f64]) -> Result<Vec<f64>> {
    let (r, c) = (w.rows(), w.cols());
    if x.len() != c || w.shape().len() != 2 {
        return Err(Error::Shape(format!(
            "matrix {:?} times vector of length {}",
            w.shape(),
            x.len()
        )));
    }
    let wd = w.data();
    Ok((0..r).map(|i| dot(&wd[i * c..(i + 1) * c], x)).collect())
}

/// Borrowed weights of one GRU cell (input `X`, hidden `H`).
#[derive(Clone, Copy, Debug)]
pub struct GruWeights<'a> {
    pub w_z: &'a RealArray,
    pub u_z: &'a RealArray,
    pub b_z: &'a RealArray,
    pub w_r: &'a RealArray,
    pub u_r: &'a RealArray,
    pub b_r: &'a RealArray,
    pub w_h: &'a RealArray,
    pub u_h: &'a RealArray,
    pub b_h: &'a RealArray,
}

/// One GRU step:
/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h)`, `h' = (1 - z) ⊙ h + z ⊙ h̃`.
pub fn gru_cell(h_prev: &[f64], x: &[f64], w: &GruWeights<'_>) -> Result<Vec<f64>> {
    check_finite(h_prev, "gru hidden state")?;
    check_finite(x, "gru input")?;
    let h = h_prev.len();
    if w.u_z.rows() != h || w.u_z.cols() != h || w.w_z.cols() != x.len() {
        return Err(Error::Shape(format!(
            "gru expects hidden {} / input {}, got {} / {}",
            w.u_z.rows(),
            w.w_z.cols(),
            h,
            x.len()
        )));
    }
    let gate = |wx: &RealArray, uh: &RealArray, b: &RealArray, hv: &[f64]| -> Result<Vec<f64>> {
        let a = matvec(wx, x)?;
        let c = matvec(uh, hv)?;
        Ok(a.iter().zip(&c).zip(b.data()).map(|((p, q), r)| p + q + r).collect())
    };
    let z: Vec<f64> = gate(w.w_z, w.u_z, w.b_z, h_prev)?.into_iter().map(sigmoid).collect();
    let r: Vec<f64> = gate(w.w_r, w.u_r, w.b_r, h_prev)?.into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = gate(w.w_h, w.u_h, w.b_h, &rh)?.into_iter().map(libm::tanh).collect();
    Ok(h_prev
        .iter()
        .zip(&z)
        .zip(&cand)
        .map(|((hp, zi), ci)| hp + zi * (ci - hp))
        .collect())
}

pub(crate) fn conv1d_raw(
    input: &[f64],
    e: usize,
    kernel: &[f64],
    bias: &[f64],
    f: usize,
    k: usize,
    positions: usize,
) -> Vec<f64> {
    let ke = k * e;
    let mut out = Vec::with_capacity(positions * f);
    for p in 0..positions {
        let window = &input[p * e..p * e + ke];
        for fi in 0..f {
            out.push(bias[fi] + dot(&kernel[fi * ke..(fi + 1) * ke], window));
        }
    }
    out
}

pub(crate) fn max_pool2_raw(input: &[f64], t: usize, f: usize) -> Vec<f64> {
    let rows = t.div_ceil(2);
    let mut out = Vec::with_capacity(rows * f);
    for i in 0..rows {
        for j in 0..f {
            let a = input[2 * i * f + j];
            out.push(if 2 * i + 1 < t { a.max(input[(2 * i + 1) * f + j]) } else { a });
        }
    }
    out
}

/// One convolution bank: `F x (k*E)` kernel plus `F` bias.
#[derive(Clone, Copy, Debug)]
pub struct ConvBank<'a> {
    pub kernel: &'a RealArray,
    pub bias: &'a RealArray,
}

/// Runs every bank over a `T x E` embedding matrix: valid stride-1
/// convolution, max-pool (window 2, stride 2, odd tail passed through),
/// flatten, then concatenate across banks.
pub fn conv1d_bank(embeddings: &RealArray, banks: &[ConvBank<'_>]) -> Result<Vec<f64>> {
    if embeddings.is_empty() || embeddings.shape().len() != 2 {
        return Err(Error::Shape("conv1d_bank needs a non-empty T x E matrix".into()));
    }
    let (t, e) = (embeddings.rows(), embeddings.cols());
    let mut out = Vec::new();
    for bank in banks {
        let (f, ke) = (bank.kernel.rows(), bank.kernel.cols());
        if ke % e != 0 || bank.bias.len() != f {
            return Err(Error::Shape(format!(
                "kernel {:?} incompatible with embedding width {e}",
                bank.kernel.shape()
            )));
        }
        let k = ke / e;
        if t < k {
            return Err(Error::Shape(format!("sequence of length {t} shorter than kernel {k}")));
        }
        let positions = t - k + 1;
        let map = conv1d_raw(embeddings.data(), e, bank.kernel.data(), bank.bias.data(), f, k, positions);
        out.extend(max_pool2_raw(&map, positions, f));
    }
    Ok(out)
}
