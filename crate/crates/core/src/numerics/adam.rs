use alloc::vec;
use alloc::vec::Vec;

use super::ParamStore;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of a single coordinate; `t` counts from 1.
/// Returns the new value.
pub fn adam_update(value: f64, grad: f64, m: &mut f64, v: &mut f64, t: u64, cfg: &AdamConfig) -> Result<f64> {
    if t == 0 {
        return Err(Error::ZeroStep);
    }
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * grad;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * grad * grad;
    let ti = t.min(i32::MAX as u64) as i32;
    let m_hat = *m / (1.0 - libm::pow(cfg.beta1, ti as f64));
    let v_hat = *v / (1.0 - libm::pow(cfg.beta2, ti as f64));
    Ok(value - cfg.lr * m_hat / (libm::sqrt(v_hat) + cfg.eps))
}

/// Adam moments for every coordinate of one [`ParamStore`]. Descends on the
/// gradients stored in the store.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = store.ids().map(|id| vec![0.0; store.value(id).len()]).collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        if !store.flat_grads().iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.t += 1;
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            let grad = store.grad(id).to_vec();
            let (m, v) = (&mut self.m[id.index()], &mut self.v[id.index()]);
            let value = store.value_mut(id).data_mut();
            for i in 0..value.len() {
                value[i] = adam_update(value[i], grad[i], &mut m[i], &mut v[i], self.t, &self.config)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Init;

    #[test]
    fn zero_gradient_leaves_values() {
        let mut store = ParamStore::new(3);
        store.add("w", &[4, 2], Init::Glorot { fan_in: 2, fan_out: 4 }).unwrap();
        let before = store.flat_values();
        let mut adam = Adam::new(&store, AdamConfig::default());
        for _ in 0..3 {
            adam.step(&mut store).unwrap();
        }
        assert_eq!(store.flat_values(), before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let (mut m, mut v) = (0.0, 0.0);
        let out = adam_update(0.0, 1.0, &mut m, &mut v, 1, &cfg).unwrap();
        assert!((out + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(adam_update(0.0, 1.0, &mut m, &mut v, 0, &cfg), Err(Error::ZeroStep));
    }

    #[test]
    fn three_step_trace_matches_scalar_oracle() {
        // oracle: textbook Adam written out with powi
        let cfg = AdamConfig {
            lr: 0.05,
            beta1: 0.8,
            beta2: 0.99,
            eps: 1e-8,
        };
        let grads = [0.5, -1.5, 2.0];
        let mut theta_o = 1.0f64;
        let (mut mo, mut vo) = (0.0f64, 0.0f64);
        for (i, g) in grads.iter().enumerate() {
            let t = (i + 1) as i32;
            mo = 0.8 * mo + 0.2 * g;
            vo = 0.99 * vo + 0.01 * g * g;
            let mh = mo / (1.0 - 0.8f64.powi(t));
            let vh = vo / (1.0 - 0.99f64.powi(t));
            theta_o -= 0.05 * mh / (vh.sqrt() + 1e-8);
        }
        let mut theta = 1.0;
        let (mut m, mut v) = (0.0, 0.0);
        for (i, g) in grads.iter().enumerate() {
            theta = adam_update(theta, *g, &mut m, &mut v, i as u64 + 1, &cfg).unwrap();
        }
        assert!((theta - theta_o).abs() < 1e-14, "{theta} vs {theta_o}");
    }
}
