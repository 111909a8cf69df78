use alloc::vec;
use alloc::vec::Vec;

use super::{Grads, ParamId, ParamStore};

/// Reference to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Softsign(Var),
    Concat(Vec<Var>),
    Rows { table: Var, ids: Vec<usize> },
    Conv1d { input: Var, kernel: Var, bias: Var },
    MaxPool2 { input: Var, argmax: Vec<usize> },
    LogSoftmaxPick { logits: Var, index: usize, probs: Vec<f64> },
    Sum(Var),
    WeightedSum(Vec<(Var, f64)>),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
}

/// Records primitive operations over the values of one [`ParamStore`] and
/// replays them in reverse to accumulate parameter gradients.
///
/// Vectors are stored as `n x 1`; matrices are row-major.
pub struct Tape<'s> {
    store: &'s ParamStore,
    nodes: Vec<Node>,
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'s ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded node.
    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Var {
        debug_assert!(matches!(op, Op::Param(_)) || value.len() == rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.store.value(id).data(),
            _ => &node.value,
        }
    }

    /// Scalar value of a one-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        let x = self.value(v);
        assert_eq!(x.len(), 1, "not a scalar");
        x[0]
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    fn size(&self, v: Var) -> usize {
        let (r, c) = self.dims(v);
        r * c
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let shape = self.store.value(id).shape();
        let rows = shape[0];
        let cols = shape[1..].iter().product();
        self.push(rows, cols, Vec::new(), Op::Param(id))
    }

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        let n = value.len();
        self.push(n, 1, value, Op::Leaf)
    }

    pub fn matrix_constant(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> Var {
        assert_eq!(rows * cols, value.len());
        self.push(rows, cols, value, Op::Leaf)
    }

    /// `w * x` for a `r x c` matrix and a length-`c` vector.
    pub fn matvec(&mut self, w: Var, x: Var) -> Var {
        let (r, c) = self.dims(w);
        assert_eq!(self.size(x), c, "matvec: inner dimension mismatch");
        let wv = self.value(w);
        let xv = self.value(x);
        let out = (0..r)
            .map(|i| dot(&wv[i * c..(i + 1) * c], xv))
            .collect();
        self.push(r, 1, out, Op::MatVec(w, x))
    }

    fn zip_with(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        assert_eq!(self.size(a), self.size(b), "elementwise size mismatch");
        let (r, c) = self.dims(a);
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        self.push(r, c, out, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (r, c) = self.dims(a);
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        self.push(r, c, out, op)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| s * x, Op::Scale(a, s))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, super::kernels::sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, libm::tanh, Op::Tanh(a))
    }

    pub fn softsign(&mut self, a: Var) -> Var {
        self.map(a, super::kernels::softsign, Op::Softsign(a))
    }

    /// Concatenates the flattened values of `parts` into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let n = out.len();
        self.push(n, 1, out, Op::Concat(parts.to_vec()))
    }

    /// Gathers rows of `table`; one id yields a vector, several a matrix.
    pub fn rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let (r, c) = self.dims(table);
        let tv = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * c);
        for &id in ids {
            assert!(id < r, "row {id} out of range for table with {r} rows");
            out.extend_from_slice(&tv[id * c..(id + 1) * c]);
        }
        let (rows, cols) = if ids.len() == 1 { (c, 1) } else { (ids.len(), c) };
        self.push(
            rows,
            cols,
            out,
            Op::Rows {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    /// Valid stride-1 convolution of a `T x E` input with a `F x (k*E)`
    /// kernel; returns the `(T-k+1) x F` feature map.
    pub fn conv1d(&mut self, input: Var, kernel: Var, bias: Var) -> Var {
        let (t, e) = self.dims(input);
        let (f, ke) = self.dims(kernel);
        assert!(ke % e == 0 && ke >= e, "conv1d: kernel width mismatch");
        let k = ke / e;
        assert!(t >= k, "conv1d: input shorter than kernel");
        assert_eq!(self.size(bias), f, "conv1d: bias mismatch");
        let positions = t - k + 1;
        let out = super::kernels::conv1d_raw(self.value(input), e, self.value(kernel), self.value(bias), f, k, positions);
        self.push(positions, f, out, Op::Conv1d { input, kernel, bias })
    }

    /// Max over non-overlapping row pairs; an odd trailing row passes through.
    pub fn max_pool2(&mut self, input: Var) -> Var {
        let (t, f) = self.dims(input);
        let iv = self.value(input);
        let rows = t.div_ceil(2);
        let mut out = Vec::with_capacity(rows * f);
        let mut argmax = Vec::with_capacity(rows * f);
        for i in 0..rows {
            for j in 0..f {
                let a = 2 * i * f + j;
                let mut best = a;
                if 2 * i + 1 < t && iv[a + f] > iv[a] {
                    best = a + f;
                }
                out.push(iv[best]);
                argmax.push(best);
            }
        }
        self.push(rows, f, out, Op::MaxPool2 { input, argmax })
    }

    /// `log softmax(logits)[index]`, with `masked` entries excluded from the
    /// normalizer (probability zero).
    pub fn log_softmax_pick(&mut self, logits: Var, index: usize, masked: &[usize]) -> Var {
        let lv = self.value(logits);
        assert!(index < lv.len() && !masked.contains(&index));
        let probs = super::kernels::masked_softmax(lv, masked);
        let lse = super::kernels::masked_logsumexp(lv, masked);
        let out = lv[index] - lse;
        self.push(1, 1, vec![out], Op::LogSoftmaxPick { logits, index, probs })
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(1, 1, vec![s], Op::Sum(a))
    }

    /// `sum_i w_i * x_i` over scalar nodes.
    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Var {
        let s = terms.iter().map(|&(v, w)| w * self.scalar(v)).sum();
        self.push(1, 1, vec![s], Op::WeightedSum(terms.to_vec()))
    }

    /// Reverse accumulation from the scalar `out`; parameter gradients are
    /// added into `grads`.
    pub fn backward(&self, out: Var, grads: &mut Grads) {
        assert_eq!(self.size(out), 1, "backward needs a scalar output");
        let mut adj: Vec<Vec<f64>> = vec![Vec::new(); out.0 + 1];
        adj[out.0] = vec![1.0];
        for i in (0..=out.0).rev() {
            if adj[i].is_empty() {
                continue;
            }
            let g = core::mem::take(&mut adj[i]);
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => {
                    for (d, s) in grads.get_mut(*id).iter_mut().zip(&g) {
                        *d += s;
                    }
                }
                Op::MatVec(w, x) => {
                    let (r, c) = self.dims(*w);
                    let wv = self.value(*w);
                    let xv = self.value(*x);
                    {
                        let gw = slot(&mut adj, *w, r * c);
                        for (row, &gr) in g.iter().enumerate() {
                            if gr != 0.0 {
                                for (d, &xc) in gw[row * c..(row + 1) * c].iter_mut().zip(xv) {
                                    *d += gr * xc;
                                }
                            }
                        }
                    }
                    let gx = slot(&mut adj, *x, c);
                    for (row, &gr) in g.iter().enumerate() {
                        if gr != 0.0 {
                            for (d, &wc) in gx.iter_mut().zip(&wv[row * c..(row + 1) * c]) {
                                *d += gr * wc;
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(slot(&mut adj, *a, g.len()), &g, 1.0);
                    add_into(slot(&mut adj, *b, g.len()), &g, 1.0);
                }
                Op::Sub(a, b) => {
                    add_into(slot(&mut adj, *a, g.len()), &g, 1.0);
                    add_into(slot(&mut adj, *b, g.len()), &g, -1.0);
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let ga = slot(&mut adj, *a, g.len());
                    for ((d, &gi), &bi) in ga.iter_mut().zip(&g).zip(bv) {
                        *d += gi * bi;
                    }
                    let gb = slot(&mut adj, *b, g.len());
                    for ((d, &gi), &ai) in gb.iter_mut().zip(&g).zip(av) {
                        *d += gi * ai;
                    }
                }
                Op::Scale(a, s) => add_into(slot(&mut adj, *a, g.len()), &g, *s),
                Op::Sigmoid(a) => {
                    let ga = slot(&mut adj, *a, g.len());
                    for ((d, &gi), &y) in ga.iter_mut().zip(&g).zip(&node.value) {
                        *d += gi * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let ga = slot(&mut adj, *a, g.len());
                    for ((d, &gi), &y) in ga.iter_mut().zip(&g).zip(&node.value) {
                        *d += gi * (1.0 - y * y);
                    }
                }
                Op::Softsign(a) => {
                    let av = self.value(*a);
                    let ga = slot(&mut adj, *a, g.len());
                    for ((d, &gi), &x) in ga.iter_mut().zip(&g).zip(av) {
                        let den = 1.0 + libm::fabs(x);
                        *d += gi / (den * den);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.size(p);
                        add_into(slot(&mut adj, p, n), &g[off..off + n], 1.0);
                        off += n;
                    }
                }
                Op::Rows { table, ids } => {
                    let (r, c) = self.dims(*table);
                    let gt = slot(&mut adj, *table, r * c);
                    for (k, &id) in ids.iter().enumerate() {
                        add_into(&mut gt[id * c..(id + 1) * c], &g[k * c..(k + 1) * c], 1.0);
                    }
                }
                Op::Conv1d { input, kernel, bias } => {
                    let (t, e) = self.dims(*input);
                    let (f, ke) = self.dims(*kernel);
                    let positions = node.rows;
                    let iv = self.value(*input);
                    let kv = self.value(*kernel);
                    {
                        let gb = slot(&mut adj, *bias, f);
                        for p in 0..positions {
                            add_into(gb, &g[p * f..(p + 1) * f], 1.0);
                        }
                    }
                    {
                        let gk = slot(&mut adj, *kernel, f * ke);
                        for p in 0..positions {
                            let window = &iv[p * e..p * e + ke];
                            for fi in 0..f {
                                let gpf = g[p * f + fi];
                                if gpf != 0.0 {
                                    add_into(&mut gk[fi * ke..(fi + 1) * ke], window, gpf);
                                }
                            }
                        }
                    }
                    let gi = slot(&mut adj, *input, t * e);
                    for p in 0..positions {
                        for fi in 0..f {
                            let gpf = g[p * f + fi];
                            if gpf != 0.0 {
                                add_into(&mut gi[p * e..p * e + ke], &kv[fi * ke..(fi + 1) * ke], gpf);
                            }
                        }
                    }
                }
                Op::MaxPool2 { input, argmax } => {
                    let n = self.size(*input);
                    let gi = slot(&mut adj, *input, n);
                    for (&src, &gv) in argmax.iter().zip(&g) {
                        gi[src] += gv;
                    }
                }
                Op::LogSoftmaxPick {
                    logits,
                    index,
                    probs,
                } => {
                    let gl = slot(&mut adj, *logits, probs.len());
                    for (j, (d, &p)) in gl.iter_mut().zip(probs).enumerate() {
                        let ind = if j == *index { 1.0 } else { 0.0 };
                        *d += g[0] * (ind - p);
                    }
                }
                Op::Sum(a) => {
                    let n = self.size(*a);
                    for d in slot(&mut adj, *a, n) {
                        *d += g[0];
                    }
                }
                Op::WeightedSum(terms) => {
                    for &(v, w) in terms {
                        slot(&mut adj, v, 1)[0] += w * g[0];
                    }
                }
            }
        }
    }
}

fn slot(adj: &mut [Vec<f64>], v: Var, len: usize) -> &mut [f64] {
    let s = &mut adj[v.0];
    if s.is_empty() {
        *s = vec![0.0; len];
    }
    s
}

fn add_into(dst: &mut [f64], src: &[f64], s: f64) {
    for (d, &x) in dst.iter_mut().zip(src) {
        *d += s * x;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Init;

    #[test]
    fn reverse_pass_of_product_rule() {
        let mut store = ParamStore::new(1);
        let a = store.add("a", &[3], Init::Uniform(1.0)).unwrap();
        let mut grads = store.zero_grads();
        let tape_store = store.clone();
        let mut tape = Tape::new(&tape_store);
        let x = tape.param(a);
        let y = tape.mul(x, x);
        let s = tape.sum(y);
        tape.backward(s, &mut grads);
        let expected: Vec<f64> = store.value(a).data().iter().map(|v| 2.0 * v).collect();
        assert_eq!(grads.get(a), &expected[..]);
    }

    #[test]
    fn cleared_tape_accumulates_nothing() {
        let mut store = ParamStore::new(2);
        let a = store.add("a", &[2], Init::Uniform(1.0)).unwrap();
        let mut grads = store.zero_grads();
        let mut tape = Tape::new(&store);
        let x = tape.param(a);
        let _ = tape.sum(x);
        tape.clear();
        assert!(tape.is_empty());
        let c = tape.constant(vec![3.0]);
        let s = tape.sum(c);
        tape.backward(s, &mut grads);
        assert!(grads.flat().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn max_pool_passes_odd_tail_through() {
        let store = ParamStore::new(0);
        let mut tape = Tape::new(&store);
        let m = tape.matrix_constant(3, 2, vec![1.0, 5.0, 4.0, 2.0, 7.0, -1.0]);
        let p = tape.max_pool2(m);
        assert_eq!(tape.dims(p), (2, 2));
        assert_eq!(tape.value(p), &[4.0, 5.0, 7.0, -1.0]);
    }
}
