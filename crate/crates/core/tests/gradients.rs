//! Finite-difference checks of every tape operation and of both models.

mod support;

use arel_core::numerics::{grad_check, GruLayer, Init, Linear, ParamStore, Tape, Var};
use arel_core::policy::{Policy, STORY_LEN};
use arel_core::reward::{Combine, RewardModel};
use arel_core::numerics::Activation;
use rand::Rng as _;
use support::*;

const PROBES: usize = 100;
const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

/// Dot product with fixed pseudo-random weights, so every output entry
/// reaches the scalar with a distinct coefficient.
fn reduce(tape: &mut Tape<'_>, v: Var) -> Var {
    let (r, c) = tape.dims(v);
    let w: Vec<f64> = (0..r * c).map(|i| ((i * 7919 % 13) as f64 - 6.0) / 5.0).collect();
    let wv = tape.matrix_constant(r, c, w);
    let p = tape.mul(v, wv);
    tape.sum(p)
}

fn store() -> ParamStore {
    let mut s = ParamStore::new(11);
    s.add("a", &[6], Init::Uniform(1.0)).unwrap();
    s.add("b", &[6], Init::Uniform(1.0)).unwrap();
    s.add("m", &[4, 6], Init::Uniform(1.0)).unwrap();
    s.add("table", &[7, 3], Init::Uniform(1.0)).unwrap();
    s.add("kernel", &[4, 6], Init::Uniform(1.0)).unwrap();
    s.add("bias", &[4], Init::Uniform(1.0)).unwrap();
    s
}

fn check<F>(name: &str, mut s: ParamStore, f: F)
where
    F: Fn(&mut Tape<'_>) -> arel_core::Result<Var>,
{
    let report = grad_check(&mut s, f, PROBES, EPS, 5).unwrap();
    assert!(
        report.max_relative_error < TOL,
        "{name}: max relative error {}",
        report.max_relative_error
    );
}

fn p(t: &mut Tape<'_>, name: &str) -> Var {
    let id = t.store().id(name).unwrap();
    t.param(id)
}

#[test]
fn elementwise_ops() {
    check("add", store(), |t| {
        let (a, b) = (p(t, "a"), p(t, "b"));
        let v = t.add(a, b);
        Ok(reduce(t, v))
    });
    check("sub", store(), |t| {
        let (a, b) = (p(t, "a"), p(t, "b"));
        let v = t.sub(a, b);
        Ok(reduce(t, v))
    });
    check("mul", store(), |t| {
        let (a, b) = (p(t, "a"), p(t, "b"));
        let v = t.mul(a, b);
        Ok(reduce(t, v))
    });
    check("scale", store(), |t| {
        let a = p(t, "a");
        let v = t.scale(a, -2.5);
        Ok(reduce(t, v))
    });
    check("sigmoid", store(), |t| {
        let a = p(t, "a");
        let v = t.sigmoid(a);
        Ok(reduce(t, v))
    });
    check("tanh", store(), |t| {
        let a = p(t, "a");
        let v = t.tanh(a);
        Ok(reduce(t, v))
    });
    check("softsign", store(), |t| {
        let a = p(t, "a");
        let v = t.softsign(a);
        Ok(reduce(t, v))
    });
}

#[test]
fn structural_ops() {
    check("matvec", store(), |t| {
        let (m, a) = (p(t, "m"), p(t, "a"));
        let v = t.matvec(m, a);
        Ok(reduce(t, v))
    });
    check("concat", store(), |t| {
        let (a, b) = (p(t, "a"), p(t, "b"));
        let sq = t.mul(a, a);
        let v = t.concat(&[sq, b, a]);
        Ok(reduce(t, v))
    });
    check("rows", store(), |t| {
        let table = p(t, "table");
        let one = t.rows(table, &[4]);
        let many = t.rows(table, &[1, 4, 4, 0, 6]);
        let s1 = reduce(t, one);
        let s2 = reduce(t, many);
        Ok(t.weighted_sum(&[(s1, 0.5), (s2, 1.5)]))
    });
    check("sum and weighted_sum", store(), |t| {
        let (a, b) = (p(t, "a"), p(t, "b"));
        let ab = t.mul(a, b);
        let s1 = t.sum(ab);
        let s2 = reduce(t, a);
        Ok(t.weighted_sum(&[(s1, 0.3), (s2, -1.7), (s1, 2.0)]))
    });
}

#[test]
fn convolution_pooling_and_softmax() {
    check("conv1d", store(), |t| {
        let (table, k, b) = (p(t, "table"), p(t, "kernel"), p(t, "bias"));
        let x = t.rows(table, &[0, 1, 2, 3, 4, 5]);
        let v = t.conv1d(x, k, b);
        Ok(reduce(t, v))
    });
    check("max_pool2", store(), |t| {
        let (table, k, b) = (p(t, "table"), p(t, "kernel"), p(t, "bias"));
        let x = t.rows(table, &[0, 1, 2, 3, 4, 5, 6]);
        let c = t.conv1d(x, k, b);
        let v = t.max_pool2(c);
        Ok(reduce(t, v))
    });
    check("log_softmax_pick", store(), |t| {
        let (m, a) = (p(t, "m"), p(t, "a"));
        let logits = t.matvec(m, a);
        let x = t.log_softmax_pick(logits, 2, &[0]);
        let y = t.log_softmax_pick(logits, 3, &[]);
        Ok(t.weighted_sum(&[(x, 1.0), (y, 0.5)]))
    });
}

#[test]
fn gru_and_linear_layers() {
    let mut s = ParamStore::new(3);
    let gru = GruLayer::register(&mut s, "g", 4, 3).unwrap();
    let lin = Linear::register(&mut s, "l", 3, 5).unwrap();
    s.add("x", &[4], Init::Uniform(1.0)).unwrap();
    s.add("h", &[3], Init::Uniform(1.0)).unwrap();
    let mut rng = seeded(9);
    randomize(&mut s, 0.8, &mut rng);
    check("gru+linear", s, |t| {
        let (x, h) = (p(t, "x"), p(t, "h"));
        let h1 = gru.step_tape(t, h, x);
        let h2 = gru.step_tape(t, h1, x);
        let y = lin.apply_tape(t, h2);
        Ok(reduce(t, y))
    });
}

#[test]
fn policy_log_likelihood() {
    let dims = small_policy_dims(9);
    let mut policy = Policy::new(dims, 21).unwrap();
    let mut rng = seeded(22);
    randomize(policy.store_mut(), 0.5, &mut rng);
    let features = random_features(dims.d_img, &mut rng);
    let story = random_story(dims.vocab, dims.max_sub_len, &mut rng);
    let probe = policy.clone();
    let mut store = policy.store().clone();
    let report = grad_check(
        &mut store,
        |t| {
            // the closure sees the perturbed store through the tape
            let lps = probe.record_log_probs(t, &features, &story, None)?;
            let terms: Vec<(Var, f64)> = lps.iter().map(|l| (l.log_prob, 1.0)).collect();
            Ok(t.weighted_sum(&terms))
        },
        PROBES,
        EPS,
        23,
    )
    .unwrap();
    assert!(report.max_relative_error < TOL, "policy: {}", report.max_relative_error);
    let _ = STORY_LEN;
}

#[test]
fn reward_model_all_variants() {
    for (act, combine) in [
        (Activation::Softsign, Combine::Add),
        (Activation::Tanh, Combine::Add),
        (Activation::Softsign, Combine::Concat),
    ] {
        let dims = arel_core::reward::RewardDims {
            activation: act,
            combine,
            ..small_reward_dims(9, 5)
        };
        let model = RewardModel::new(dims, 31).unwrap();
        let mut rng = seeded(32);
        let features = random_features(5, &mut rng);
        let story = random_story(9, 7, &mut rng);
        let mut store = model.store().clone();
        randomize(&mut store, 0.7, &mut rng);
        let report = grad_check(
            &mut store,
            |t| Ok(model.record_story(t, &story, &features)?.0),
            PROBES,
            EPS,
            rng.gen(),
        )
        .unwrap();
        assert!(report.max_relative_error < TOL, "reward {act:?}/{combine:?}: {}", report.max_relative_error);
    }
}
