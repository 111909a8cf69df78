use alloc::string::String;
use alloc::vec::Vec;

use super::{bleu, cider, histogram, meteor_lite, rouge_l, CiderStats, Histogram, Metric};
use crate::Result;

/// Bucket width of the score histograms (CIDEr is divided by 10 first).
pub const HISTOGRAM_WIDTH: f64 = 0.05;

/// All metric values for one hypothesis, on their natural scales
/// (`[0,1]`, CIDEr `[0,10]`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricScores {
    pub bleu: [f64; 4],
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

impl MetricScores {
    pub fn compute<T: Ord + Clone, R: AsRef<[T]>>(hyp: &[T], refs: &[R], stats: &CiderStats<T>) -> Self {
        Self {
            bleu: core::array::from_fn(|i| bleu(hyp, refs, i + 1)),
            meteor: meteor_lite(hyp, refs),
            rouge_l: rouge_l(hyp, refs),
            cider: cider(hyp, refs, stats),
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Bleu(n) => self.bleu[(n.clamp(1, 4) - 1) as usize],
            Metric::RougeL => self.rouge_l,
            Metric::Cider => self.cider,
            Metric::MeteorLite => self.meteor,
        }
    }

    /// Values in table order B1..B4, M, R, C.
    pub fn as_row(&self) -> [f64; 7] {
        [
            self.bleu[0],
            self.bleu[1],
            self.bleu[2],
            self.bleu[3],
            self.meteor,
            self.rouge_l,
            self.cider,
        ]
    }

    pub fn mean<'a>(items: impl IntoIterator<Item = &'a MetricScores>) -> Self {
        let mut acc = [0.0; 7];
        let mut n = 0usize;
        for s in items {
            for (a, v) in acc.iter_mut().zip(s.as_row()) {
                *a += v;
            }
            n += 1;
        }
        if n > 0 {
            for a in &mut acc {
                *a /= n as f64;
            }
        }
        Self {
            bleu: [acc[0], acc[1], acc[2], acc[3]],
            meteor: acc[4],
            rouge_l: acc[5],
            cider: acc[6],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlbumScores {
    pub album_id: String,
    pub scores: MetricScores,
}

/// Per-album scores, corpus means and the BLEU-3 / CIDEr histograms.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub albums: Vec<AlbumScores>,
    pub mean: MetricScores,
    pub bleu3_hist: Histogram,
    pub cider_hist: Histogram,
}

impl MetricReport {
    pub fn build(albums: Vec<AlbumScores>) -> Result<Self> {
        let mean = MetricScores::mean(albums.iter().map(|a| &a.scores));
        let b3: Vec<f64> = albums.iter().map(|a| a.scores.bleu[2]).collect();
        let c: Vec<f64> = albums.iter().map(|a| a.scores.cider / 10.0).collect();
        Ok(Self {
            bleu3_hist: histogram(&b3, HISTOGRAM_WIDTH, Some(1.0))?,
            cider_hist: histogram(&c, HISTOGRAM_WIDTH, Some(1.0))?,
            albums,
            mean,
        })
    }
}
