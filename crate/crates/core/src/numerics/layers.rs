//! Parameter groups shared by the policy and reward models.

use alloc::format;
use alloc::vec::Vec;

use super::kernels::{gru_cell, matvec, GruWeights};
use super::{Init, ParamId, ParamStore, Tape, Var};
use crate::Result;

/// Handles for one GRU cell's nine parameter arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GruLayer {
    pub input: usize,
    pub hidden: usize,
    w_z: ParamId,
    u_z: ParamId,
    b_z: ParamId,
    w_r: ParamId,
    u_r: ParamId,
    b_r: ParamId,
    w_h: ParamId,
    u_h: ParamId,
    b_h: ParamId,
}

impl GruLayer {
    pub fn register(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        let wx = Init::Glorot {
            fan_in: input,
            fan_out: hidden,
        };
        let uh = Init::Glorot {
            fan_in: hidden,
            fan_out: hidden,
        };
        let mut add = |name: &str, shape: &[usize], init| store.add(&format!("{prefix}.{name}"), shape, init);
        Ok(Self {
            input,
            hidden,
            w_z: add("w_z", &[hidden, input], wx)?,
            u_z: add("u_z", &[hidden, hidden], uh)?,
            b_z: add("b_z", &[hidden], Init::Zeros)?,
            w_r: add("w_r", &[hidden, input], wx)?,
            u_r: add("u_r", &[hidden, hidden], uh)?,
            b_r: add("b_r", &[hidden], Init::Zeros)?,
            w_h: add("w_h", &[hidden, input], wx)?,
            u_h: add("u_h", &[hidden, hidden], uh)?,
            b_h: add("b_h", &[hidden], Init::Zeros)?,
        })
    }

    pub fn param_ids(&self) -> [ParamId; 9] {
        [
            self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r, self.w_h, self.u_h, self.b_h,
        ]
    }

    pub fn weights<'a>(&self, store: &'a ParamStore) -> GruWeights<'a> {
        GruWeights {
            w_z: store.value(self.w_z),
            u_z: store.value(self.u_z),
            b_z: store.value(self.b_z),
            w_r: store.value(self.w_r),
            u_r: store.value(self.u_r),
            b_r: store.value(self.b_r),
            w_h: store.value(self.w_h),
            u_h: store.value(self.u_h),
            b_h: store.value(self.b_h),
        }
    }

    pub fn step(&self, store: &ParamStore, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        gru_cell(h_prev, x, &self.weights(store))
    }

    /// Records one step on `tape`.
    pub fn step_tape(&self, tape: &mut Tape<'_>, h_prev: Var, x: Var) -> Var {
        let gate = |tape: &mut Tape<'_>, w: ParamId, u: ParamId, b: ParamId, h: Var| {
            let (w, u, b) = (tape.param(w), tape.param(u), tape.param(b));
            let wx = tape.matvec(w, x);
            let uh = tape.matvec(u, h);
            let s = tape.add(wx, uh);
            tape.add(s, b)
        };
        let z = gate(tape, self.w_z, self.u_z, self.b_z, h_prev);
        let z = tape.sigmoid(z);
        let r = gate(tape, self.w_r, self.u_r, self.b_r, h_prev);
        let r = tape.sigmoid(r);
        let rh = tape.mul(r, h_prev);
        let c = gate(tape, self.w_h, self.u_h, self.b_h, rh);
        let c = tape.tanh(c);
        let d = tape.sub(c, h_prev);
        let zd = tape.mul(z, d);
        tape.add(h_prev, zd)
    }
}

/// Affine map `W x + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linear {
    pub input: usize,
    pub output: usize,
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn register(store: &mut ParamStore, prefix: &str, input: usize, output: usize) -> Result<Self> {
        let w = store.add(
            &format!("{prefix}.w"),
            &[output, input],
            Init::Glorot {
                fan_in: input,
                fan_out: output,
            },
        )?;
        let b = store.add(&format!("{prefix}.b"), &[output], Init::Zeros)?;
        Ok(Self { input, output, w, b })
    }

    pub fn apply(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = matvec(store.value(self.w), x)?;
        for (v, b) in y.iter_mut().zip(store.value(self.b).data()) {
            *v += b;
        }
        Ok(y)
    }

    pub fn apply_tape(&self, tape: &mut Tape<'_>, x: Var) -> Var {
        let (w, b) = (tape.param(self.w), tape.param(self.b));
        let y = tape.matvec(w, x);
        tape.add(y, b)
    }
}
