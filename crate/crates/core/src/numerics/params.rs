use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{rng_from_seed, RealArray, Rng};
use crate::{Error, Result};

/// Handle to one named entry of a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Initial values for a new parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform on `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
    Uniform(f64),
}

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    name: String,
    value: RealArray,
    grad: Vec<f64>,
}

/// Named, shaped parameters of one model, each with a gradient buffer.
///
/// Entries keep insertion order, and initial values are drawn from a
/// generator seeded by `rng_seed`, so two stores built by the same sequence
/// of [`ParamStore::add`] calls are bit-identical.
#[derive(Clone, Debug)]
pub struct ParamStore {
    entries: Vec<Entry>,
    rng_seed: u64,
    rng: Rng,
}

impl PartialEq for ParamStore {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl ParamStore {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            entries: Vec::new(),
            rng_seed,
            rng: rng_from_seed(rng_seed),
        }
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn add(&mut self, name: &str, shape: &[usize], init: Init) -> Result<ParamId> {
        if self.id(name).is_some() {
            return Err(Error::DuplicateParam(name.to_string()));
        }
        let mut value = RealArray::zeros(shape);
        let bound = match init {
            Init::Zeros => None,
            Init::Glorot { fan_in, fan_out } => {
                Some(libm::sqrt(6.0 / (fan_in + fan_out).max(1) as f64))
            }
            Init::Uniform(a) => Some(a),
        };
        if let Some(a) = bound {
            if a > 0.0 {
                for v in value.data_mut() {
                    *v = self.rng.gen_range(-a..a);
                }
            }
        }
        self.entries.push(Entry {
            name: name.to_string(),
            grad: vec![0.0; value.len()],
            value,
        });
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &RealArray {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut RealArray {
        &mut self.entries[id.0].value
    }

    /// Gradient buffer, same length (and row-major layout) as the value.
    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].grad
    }

    /// Replaces a value, keeping the declared shape.
    pub fn set_value(&mut self, id: ParamId, value: RealArray) -> Result<()> {
        let entry = &mut self.entries[id.0];
        if entry.value.shape() != value.shape() {
            return Err(Error::Shape(alloc::format!(
                "`{}` has shape {:?}, got {:?}",
                entry.name,
                entry.value.shape(),
                value.shape()
            )));
        }
        entry.value = value;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.fill(0.0);
        }
    }

    /// Moves the gradient buffers out so a tape can borrow the values while
    /// the caller accumulates into them. Pair with [`ParamStore::put_grads`].
    pub fn take_grads(&mut self) -> Grads {
        Grads {
            bufs: self.entries.iter_mut().map(|e| core::mem::take(&mut e.grad)).collect(),
        }
    }

    pub fn put_grads(&mut self, grads: Grads) {
        assert_eq!(grads.bufs.len(), self.entries.len(), "gradient buffer mismatch");
        for (e, g) in self.entries.iter_mut().zip(grads.bufs) {
            assert_eq!(g.len(), e.value.len(), "gradient buffer mismatch");
            e.grad = g;
        }
    }

    /// Zeroed gradient buffers shaped like this store.
    pub fn zero_grads(&self) -> Grads {
        Grads {
            bufs: self
                .entries
                .iter()
                .map(|e| vec![0.0; e.value.len()])
                .collect(),
        }
    }

    /// Adds `scale * grads` into the stored gradient buffers.
    pub fn accumulate(&mut self, grads: &Grads, scale: f64) {
        for (e, g) in self.entries.iter_mut().zip(&grads.bufs) {
            for (dst, src) in e.grad.iter_mut().zip(g) {
                *dst += scale * src;
            }
        }
    }

    /// All values concatenated in entry order.
    pub fn flat_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for e in &self.entries {
            out.extend_from_slice(e.value.data());
        }
        out
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for e in &self.entries {
            out.extend_from_slice(&e.grad);
        }
        out
    }

    /// Maps a flat coordinate to (entry, offset within entry).
    pub fn locate(&self, mut flat: usize) -> Option<(ParamId, usize)> {
        for (i, e) in self.entries.iter().enumerate() {
            if flat < e.value.len() {
                return Some((ParamId(i), flat));
            }
            flat -= e.value.len();
        }
        None
    }

    /// Copies every value from `other`, which must have identical names and shapes.
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Shape(alloc::format!(
                "{} entries vs {}",
                self.entries.len(),
                other.entries.len()
            )));
        }
        for (dst, src) in self.entries.iter_mut().zip(&other.entries) {
            if dst.name != src.name || dst.value.shape() != src.value.shape() {
                return Err(Error::Shape(alloc::format!(
                    "entry `{}` {:?} vs `{}` {:?}",
                    dst.name,
                    dst.value.shape(),
                    src.name,
                    src.value.shape()
                )));
            }
            dst.value = src.value.clone();
        }
        Ok(())
    }
}

/// Gradient buffers aligned entry-for-entry with a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    bufs: Vec<Vec<f64>>,
}

impl Grads {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.bufs[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.bufs[id.0]
    }

    pub fn fill_zero(&mut self) {
        for b in &mut self.bufs {
            b.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for b in &mut self.bufs {
            for v in b.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Grads, s: f64) {
        for (a, b) in self.bufs.iter_mut().zip(&other.bufs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.bufs.iter().flat_map(|b| b.iter().copied()).collect()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.bufs.iter().flat_map(|b| b.iter()).map(|v| v * v).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.bufs.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}
