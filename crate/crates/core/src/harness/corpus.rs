//! Synthetic albums: topic-conditioned features and template-grammar
//! references.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::numerics::{rng_from_seed, Rng};
use crate::policy::{RawAlbum, TextStory, STORY_LEN};
use crate::{Error, Result};

/// Words of one topic, most typical first.
#[derive(Clone, Copy, Debug)]
pub struct Topic {
    pub name: &'static str,
    pub nouns: &'static [&'static str],
    pub verbs: &'static [&'static str],
    pub adjectives: &'static [&'static str],
}

pub const TOPICS: [Topic; 8] = [
    Topic {
        name: "beach",
        nouns: &["beach", "ocean", "sand", "waves", "shore", "shells", "surf", "towel"],
        verbs: &["swam", "surfed", "relaxed", "splashed", "sunbathed"],
        adjectives: &["sunny", "warm", "salty", "breezy", "blue"],
    },
    Topic {
        name: "party",
        nouns: &["party", "cake", "balloons", "music", "guests", "presents", "candles", "games"],
        verbs: &["danced", "celebrated", "laughed", "sang", "cheered"],
        adjectives: &["fun", "loud", "colorful", "festive", "crowded"],
    },
    Topic {
        name: "wedding",
        nouns: &["wedding", "bride", "groom", "ceremony", "rings", "vows", "flowers", "chapel"],
        verbs: &["married", "kissed", "toasted", "cried", "embraced"],
        adjectives: &["beautiful", "elegant", "emotional", "white", "lovely"],
    },
    Topic {
        name: "graduation",
        nouns: &["graduation", "diploma", "gown", "caps", "stage", "speech", "campus", "class"],
        verbs: &["graduated", "walked", "clapped", "smiled", "posed"],
        adjectives: &["proud", "happy", "official", "formal", "final"],
    },
    Topic {
        name: "hiking",
        nouns: &["trail", "mountain", "forest", "summit", "trees", "backpack", "view", "river"],
        verbs: &["hiked", "climbed", "explored", "rested", "wandered"],
        adjectives: &["steep", "green", "quiet", "rocky", "tall"],
    },
    Topic {
        name: "city",
        nouns: &["city", "streets", "buildings", "traffic", "bridge", "skyline", "subway", "museum"],
        verbs: &["toured", "shopped", "visited", "strolled", "drove"],
        adjectives: &["busy", "modern", "huge", "bright", "noisy"],
    },
    Topic {
        name: "concert",
        nouns: &["concert", "band", "crowd", "guitar", "drums", "singer", "lights", "show"],
        verbs: &["played", "performed", "jumped", "screamed", "listened"],
        adjectives: &["amazing", "electric", "packed", "wild", "awesome"],
    },
    Topic {
        name: "food",
        nouns: &["dinner", "pizza", "restaurant", "dessert", "kitchen", "menu", "chef", "pasta"],
        verbs: &["ate", "cooked", "tasted", "ordered", "shared"],
        adjectives: &["delicious", "tasty", "spicy", "fresh", "sweet"],
    },
];

/// Slot of a sentence template.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Word(&'static str),
    Pronoun,
    Noun,
    Verb,
    Adjective,
}

use Slot::{Adjective as A, Noun as N, Pronoun as P, Verb as V, Word as W};

/// Fixed words alternate with topic words, so no two fixed words are ever
/// adjacent and every sentence ends on a topic word before the period.
const TEMPLATES: [&[Slot]; 6] = [
    &[W("we"), V, W("the"), N, W(".")],
    &[W("the"), N, W("was"), A, W(".")],
    &[P, V, W("a"), A, N, W(".")],
    &[W("it"), V, W("with"), N, W(".")],
    &[W("the"), A, N, W("was"), A, W(".")],
    &[P, V, W("and"), V, W(".")],
];

/// Template weights, most common first.
const TEMPLATE_WEIGHTS: [f64; 6] = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub n_albums: usize,
    pub n_topics: usize,
    pub d_img: usize,
    pub refs_per_album: usize,
    /// Standard deviation of the Gaussian noise added to topic embeddings.
    pub noise_scale: f64,
    /// Probability that an image keeps the album's main topic.
    pub topic_stickiness: f64,
    /// Probability that an album's pronoun is `he` rather than `she`.
    pub male_ratio: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_albums: 2400,
            n_topics: TOPICS.len(),
            d_img: 64,
            refs_per_album: 5,
            noise_scale: 0.5,
            topic_stickiness: 0.7,
            male_ratio: 0.6,
            seed: 0,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=TOPICS.len()).contains(&self.n_topics) {
            return Err(Error::Config(format!(
                "n_topics must lie in 2..={}, got {}",
                TOPICS.len(),
                self.n_topics
            )));
        }
        if self.refs_per_album == 0 || self.d_img == 0 {
            return Err(Error::Config("refs_per_album and d_img must be positive".into()));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) || !unit(self.topic_stickiness) || !unit(self.male_ratio) {
            return Err(Error::Config("noise_scale must be >= 0; probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Rounds to 9 significant digits, the precision of the dataset format.
pub fn round_sig9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Index drawn with probability proportional to `1 / (rank + 1)`.
fn zipf(n: usize, rng: &mut Rng) -> usize {
    let total: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let mut u = rng.gen::<f64>() * total;
    for k in 0..n {
        u -= 1.0 / (k + 1) as f64;
        if u < 0.0 {
            return k;
        }
    }
    n - 1
}

fn weighted(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn sentence(topic: &Topic, pronoun: &'static str, rng: &mut Rng) -> Vec<String> {
    let template = TEMPLATES[weighted(&TEMPLATE_WEIGHTS, rng)];
    template
        .iter()
        .map(|slot| match *slot {
            W(w) => w,
            P => pronoun,
            N => topic.nouns[zipf(topic.nouns.len(), rng)],
            V => topic.verbs[zipf(topic.verbs.len(), rng)],
            A => topic.adjectives[zipf(topic.adjectives.len(), rng)],
        })
        .map(ToString::to_string)
        .collect()
}

/// Album ids are `album-00000`, `album-00001`, ...
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<RawAlbum>> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let embeddings: Vec<Vec<f64>> = (0..spec.n_topics)
        .map(|_| (0..spec.d_img).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let mut albums = Vec::with_capacity(spec.n_albums);
    for a in 0..spec.n_albums {
        let main = rng.gen_range(0..spec.n_topics);
        let topics: [usize; STORY_LEN] = core::array::from_fn(|_| {
            if rng.gen::<f64>() < spec.topic_stickiness {
                main
            } else {
                rng.gen_range(0..spec.n_topics)
            }
        });
        let pronoun = if rng.gen::<f64>() < spec.male_ratio { "he" } else { "she" };
        let features: [Vec<f64>; STORY_LEN] = core::array::from_fn(|i| {
            embeddings[topics[i]]
                .iter()
                .map(|&e| round_sig9(e + spec.noise_scale * unit.sample(&mut rng)))
                .collect()
        });
        let references = (0..spec.refs_per_album)
            .map(|_| -> TextStory { core::array::from_fn(|i| sentence(&TOPICS[topics[i]], pronoun, &mut rng)) })
            .collect();
        albums.push(RawAlbum {
            id: format!("album-{a:05}"),
            features,
            references,
        });
    }
    Ok(albums)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_two_fixed_words_touch() {
        for t in TEMPLATES {
            for pair in t.windows(2) {
                let fixed = |s: &Slot| matches!(s, W(_) | P);
                assert!(!(fixed(&pair[0]) && fixed(&pair[1])), "{t:?}");
            }
            assert_eq!(t.last(), Some(&W(".")));
            assert!(!matches!(t[t.len() - 2], W(_) | P));
        }
    }

    #[test]
    fn topic_words_are_distinct() {
        let mut all: Vec<&str> = TOPICS
            .iter()
            .flat_map(|t| t.nouns.iter().chain(t.verbs).chain(t.adjectives).copied())
            .collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(round_sig9(1.234567891234), 1.23456789);
        assert_eq!(round_sig9(-0.000123456789012), -0.000123456789);
        assert_eq!(round_sig9(round_sig9(0.1 + 0.2)), round_sig9(0.1 + 0.2));
    }
}
