use alloc::collections::BTreeMap;

/// Stand-in for a zero clipped n-gram count.
pub const BLEU_EPSILON: f64 = 1e-9;

pub(crate) fn ngram_counts<T: Ord>(s: &[T], n: usize) -> BTreeMap<&[T], usize> {
    let mut m = BTreeMap::new();
    if n > 0 && s.len() >= n {
        for w in s.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Sentence BLEU with orders `1..=n`: clipped n-gram precisions (zero
/// counts replaced by [`BLEU_EPSILON`]), geometric mean, and brevity penalty
/// `exp(1 - r/c)` when the hypothesis is shorter than the closest reference.
pub fn bleu<T: Ord, R: AsRef<[T]>>(hyp: &[T], refs: &[R], n: usize) -> f64 {
    if hyp.is_empty() || refs.is_empty() || n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let counts = ngram_counts(hyp, k);
        let mut max_ref: BTreeMap<&[T], usize> = BTreeMap::new();
        for r in refs {
            for (g, c) in ngram_counts(r.as_ref(), k) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let clipped: usize = counts
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total = (hyp.len() + 1).saturating_sub(k).max(1);
        let numerator = if clipped == 0 { BLEU_EPSILON } else { clipped as f64 };
        log_sum += libm::log(numerator / total as f64);
    }
    let c = hyp.len();
    // closest reference length, shorter on ties
    let r = refs
        .iter()
        .map(|r| r.as_ref().len())
        .min_by_key(|&l| (l.abs_diff(c), l))
        .unwrap_or(0);
    let bp = if c < r { libm::exp(1.0 - r as f64 / c as f64) } else { 1.0 };
    bp * libm::exp(log_sum / n as f64)
}
