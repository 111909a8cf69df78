use rand::Rng as _;

use super::{rng_from_seed, ParamStore, Tape, Var};
use crate::Result;

/// Outcome of [`grad_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub probes: usize,
}

/// Compares reverse-mode gradients of the scalar built by `f` against
/// central differences `(f(θ+εe) − f(θ−εe)) / 2ε` on `n_probes` random
/// coordinates. Relative error uses `max(|analytic|, |numeric|, 1e-8)` as the
/// denominator.
pub fn grad_check<F>(store: &mut ParamStore, f: F, n_probes: usize, eps: f64, seed: u64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let mut grads = store.zero_grads();
    {
        let mut tape = Tape::new(store);
        let out = f(&mut tape)?;
        tape.backward(out, &mut grads);
    }
    let analytic = grads.flat();
    let total = store.num_values();
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(store);
        let out = f(&mut tape)?;
        Ok(tape.scalar(out))
    };
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_probes {
        let flat = rng.gen_range(0..total);
        let (id, off) = store.locate(flat).expect("coordinate in range");
        let orig = store.value(id).data()[off];
        store.value_mut(id).data_mut()[off] = orig + eps;
        let plus = eval(store)?;
        store.value_mut(id).data_mut()[off] = orig - eps;
        let minus = eval(store)?;
        store.value_mut(id).data_mut()[off] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[flat];
        let denom = libm::fabs(a).max(libm::fabs(numeric)).max(1e-8);
        worst = worst.max(libm::fabs(a - numeric) / denom);
    }
    Ok(GradCheckReport {
        max_relative_error: worst,
        probes: n_probes,
    })
}
