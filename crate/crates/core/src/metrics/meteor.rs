use alloc::vec;
use alloc::vec::Vec;

/// Exact-match unigram alignment between a hypothesis and one reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    /// `(hyp index, ref index)` pairs sorted by hypothesis index.
    pub pairs: Vec<(usize, usize)>,
    pub chunks: usize,
}

/// Greedy longest-run-first alignment: repeatedly align the longest run of
/// identical tokens that are still unmatched on both sides (ties: earliest
/// hypothesis position, then earliest reference position). Every token type
/// ends up matched `min(count_hyp, count_ref)` times, and taking long runs
/// first keeps the number of chunks low.
pub fn meteor_alignment<T: PartialEq>(hyp: &[T], reference: &[T]) -> Alignment {
    let (nh, nr) = (hyp.len(), reference.len());
    let mut used_h = vec![false; nh];
    let mut used_r = vec![false; nr];
    let mut pairs = Vec::new();
    let mut run = vec![0usize; (nh + 1) * (nr + 1)];
    loop {
        // run[i][j]: length of the free matching run starting at (i, j)
        let mut best = (0usize, 0usize, 0usize);
        for i in (0..nh).rev() {
            for j in (0..nr).rev() {
                let v = if !used_h[i] && !used_r[j] && hyp[i] == reference[j] {
                    1 + run[(i + 1) * (nr + 1) + j + 1]
                } else {
                    0
                };
                run[i * (nr + 1) + j] = v;
            }
        }
        for i in 0..nh {
            for j in 0..nr {
                let v = run[i * (nr + 1) + j];
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (i, j, len) = best;
        if len == 0 {
            break;
        }
        for k in 0..len {
            used_h[i + k] = true;
            used_r[j + k] = true;
            pairs.push((i + k, j + k));
        }
    }
    pairs.sort_unstable();
    let chunks = count_chunks(&pairs);
    Alignment { pairs, chunks }
}

pub(crate) fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(h, r) in pairs {
        if prev != Some((h.wrapping_sub(1), r.wrapping_sub(1))) {
            chunks += 1;
        }
        prev = Some((h, r));
    }
    chunks
}

fn score_alignment(m: usize, chunks: usize, hyp_len: usize, ref_len: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / hyp_len as f64;
    let r = m as f64 / ref_len as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let frag = chunks as f64 / m as f64;
    let penalty = 0.5 * frag * frag * frag;
    f_mean * (1.0 - penalty)
}

/// METEOR-lite: exact matches only, `F_mean = 10PR / (R + 9P)`, fragmentation
/// penalty `0.5 (chunks / matches)³`; maximized over references.
pub fn meteor_lite<T: PartialEq, R: AsRef<[T]>>(hyp: &[T], refs: &[R]) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    refs.iter()
        .map(|r| {
            let r = r.as_ref();
            let a = meteor_alignment(hyp, r);
            score_alignment(a.pairs.len(), a.chunks, hyp.len(), r.len())
        })
        .fold(0.0, f64::max)
}
