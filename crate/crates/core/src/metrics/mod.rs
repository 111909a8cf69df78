//! Reference-based string metrics, score histograms and a hill-climbing
//! attack that games a single metric.
//!
//! Every metric is a pure function of token sequences (generic over any
//! `Ord` token type); CIDEr additionally reads precomputed document
//! frequencies. METEOR-lite is an exact-match-only simplification of METEOR
//! and is not comparable with the official scorer.

mod attack;
mod bleu;
mod cider;
mod histogram;
mod meteor;
mod report;
mod rouge;

use alloc::format;

pub use attack::{metric_attack, AttackConfig, AttackResult};
pub use bleu::{bleu, BLEU_EPSILON};
pub use cider::{cider, CiderStats};
pub use histogram::{histogram, Histogram};
pub use meteor::{meteor_alignment, meteor_lite, Alignment};
pub use report::{AlbumScores, MetricReport, MetricScores, HISTOGRAM_WIDTH};
pub use rouge::{lcs_len, rouge_l, ROUGE_BETA};

use crate::{Error, Result};

/// A metric usable as an RL return or attack target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// BLEU with n-grams up to the given order (1..=4).
    Bleu(u8),
    RougeL,
    Cider,
    MeteorLite,
}

impl Metric {
    pub fn name(self) -> alloc::string::String {
        match self {
            Metric::Bleu(n) => format!("bleu-{n}"),
            Metric::RougeL => "rouge-l".into(),
            Metric::Cider => "cider".into(),
            Metric::MeteorLite => "meteor-lite".into(),
        }
    }

    /// Accepts `bleu` (order 4), `bleu-N`, `rouge-l`, `cider`, `meteor`/`meteor-lite`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "bleu" => Ok(Metric::Bleu(4)),
            "rouge-l" | "rouge_l" | "rougel" | "rouge" => Ok(Metric::RougeL),
            "cider" => Ok(Metric::Cider),
            "meteor" | "meteor-lite" | "meteor_lite" => Ok(Metric::MeteorLite),
            other => {
                if let Some(n) = other.strip_prefix("bleu-").and_then(|n| n.parse::<u8>().ok()) {
                    if (1..=4).contains(&n) {
                        return Ok(Metric::Bleu(n));
                    }
                }
                Err(Error::Config(format!("unknown metric `{other}`")))
            }
        }
    }

    /// Scores `hyp` against `refs`. `stats` is required for CIDEr.
    pub fn score<T: Ord + Clone, R: AsRef<[T]>>(self, hyp: &[T], refs: &[R], stats: Option<&CiderStats<T>>) -> f64 {
        match self {
            Metric::Bleu(n) => bleu(hyp, refs, n as usize),
            Metric::RougeL => rouge_l(hyp, refs),
            Metric::MeteorLite => meteor_lite(hyp, refs),
            Metric::Cider => stats.map_or(0.0, |s| cider(hyp, refs, s)),
        }
    }
}
