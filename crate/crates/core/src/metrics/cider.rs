use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::bleu::ngram_counts;

const MAX_N: usize = 4;

/// Document frequencies of reference n-grams, counted once per album.
#[derive(Clone, Debug, PartialEq)]
pub struct CiderStats<T> {
    df: [BTreeMap<Vec<T>, usize>; MAX_N],
    n_docs: usize,
}

impl<T: Ord + Clone> CiderStats<T> {
    /// `albums[i]` lists the reference token sequences of album `i`.
    pub fn new<R: AsRef<[T]>>(albums: &[Vec<R>]) -> Self {
        let mut df: [BTreeMap<Vec<T>, usize>; MAX_N] = Default::default();
        for refs in albums {
            for (n, table) in df.iter_mut().enumerate() {
                let mut seen: BTreeSet<&[T]> = BTreeSet::new();
                for r in refs {
                    seen.extend(ngram_counts(r.as_ref(), n + 1).into_keys());
                }
                for g in seen {
                    *table.entry(g.to_vec()).or_insert(0) += 1;
                }
            }
        }
        Self {
            df,
            n_docs: albums.len(),
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// `log(N / max(1, df))`.
    pub fn idf(&self, gram: &[T]) -> f64 {
        let n = gram.len();
        if n == 0 || n > MAX_N || self.n_docs == 0 {
            return 0.0;
        }
        let df = self.df[n - 1].get(gram).copied().unwrap_or(0).max(1);
        libm::log(self.n_docs as f64 / df as f64)
    }

    fn vector<'a>(&self, s: &'a [T], n: usize) -> BTreeMap<&'a [T], f64> {
        ngram_counts(s, n)
            .into_iter()
            .map(|(g, c)| (g, c as f64 * self.idf(g)))
            .collect()
    }
}

fn cosine<T: Ord>(a: &BTreeMap<&[T], f64>, b: &BTreeMap<&[T], f64>) -> f64 {
    let na: f64 = a.values().map(|v| v * v).sum();
    let nb: f64 = b.values().map(|v| v * v).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(g, v)| b.get(g).map(|w| v * w)).sum();
    dot / (libm::sqrt(na) * libm::sqrt(nb))
}

/// Classic CIDEr (no length penalty): for n = 1..4, the mean cosine
/// similarity between tf-idf vectors of the hypothesis and each reference,
/// averaged over n and scaled by 10.
pub fn cider<T: Ord + Clone, R: AsRef<[T]>>(hyp: &[T], refs: &[R], stats: &CiderStats<T>) -> f64 {
    if hyp.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for n in 1..=MAX_N {
        let h = stats.vector(hyp, n);
        let sum: f64 = refs.iter().map(|r| cosine(&h, &stats.vector(r.as_ref(), n))).sum();
        total += sum / refs.len() as f64;
    }
    10.0 * total / MAX_N as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_album_corpus_scores_zero() {
        let refs = vec![vec![vec![1, 2, 3], vec![1, 2, 4]]];
        let stats = CiderStats::new(&refs);
        assert_eq!(cider(&[1, 2, 3], &refs[0], &stats), 0.0);
    }

    #[test]
    fn no_shared_ngram_scores_zero() {
        let refs = vec![vec![vec![1, 2, 3]], vec![vec![4, 5, 6]]];
        let stats = CiderStats::new(&refs);
        assert_eq!(cider(&[7, 8, 9], &refs[0], &stats), 0.0);
        assert!(cider(&[1, 2, 3], &refs[0], &stats) > 0.0);
    }
}
