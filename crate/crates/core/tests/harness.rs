//! Synthetic corpus, vocabulary and reward report.

mod support;

use std::collections::HashSet;

use arel_core::harness::{build_vocab, generate_corpus, reward_report, CorpusSpec, Generator, TOPICS};
use arel_core::metrics::bleu;
use arel_core::policy::{Album, Policy, PolicyDims, RawAlbum, UNK};
use arel_core::reward::{RewardDims, RewardModel};
use support::*;

fn small(seed: u64) -> CorpusSpec {
    CorpusSpec {
        n_albums: 100,
        d_img: 8,
        seed,
        ..CorpusSpec::default()
    }
}

fn topic_of(feature: &[f64], embeddings: &[Vec<f64>]) -> usize {
    embeddings.iter().position(|e| e == feature).expect("noise-free feature is a topic embedding")
}

#[test]
fn same_seed_same_corpus() {
    assert_eq!(generate_corpus(&small(3)).unwrap(), generate_corpus(&small(3)).unwrap());
    assert_ne!(generate_corpus(&small(3)).unwrap(), generate_corpus(&small(4)).unwrap());
}

#[test]
fn noise_free_albums_share_topic_features_and_word_pools() {
    let spec = CorpusSpec {
        noise_scale: 0.0,
        refs_per_album: 1,
        ..small(5)
    };
    let corpus = generate_corpus(&spec).unwrap();
    let mut embeddings: Vec<Vec<f64>> = Vec::new();
    for album in &corpus {
        for f in &album.features {
            if !embeddings.contains(f) {
                embeddings.push(f.clone());
            }
        }
    }
    assert!(embeddings.len() <= spec.n_topics);
    let function: HashSet<&str> = ["we", "the", "was", "a", "it", "with", "and", "he", "she", "."].into();
    for album in &corpus {
        for (i, sentence) in album.references[0].iter().enumerate() {
            let t = topic_of(&album.features[i], &embeddings);
            // every content word of sentence i comes from one topic, the
            // same one for every album showing this feature
            let topics: HashSet<&str> = sentence
                .iter()
                .filter(|w| !function.contains(w.as_str()))
                .map(|w| {
                    TOPICS
                        .iter()
                        .find(|tp| tp.nouns.iter().chain(tp.verbs).chain(tp.adjectives).any(|x| x == w))
                        .expect("content word belongs to a topic")
                        .name
                })
                .collect();
            assert_eq!(topics.len(), 1);
            let name = *topics.iter().next().unwrap();
            for other in &corpus {
                for (j, s) in other.references[0].iter().enumerate() {
                    if topic_of(&other.features[j], &embeddings) == t {
                        let tp = TOPICS.iter().find(|tp| tp.name == name).unwrap();
                        assert!(s
                            .iter()
                            .filter(|w| !function.contains(w.as_str()))
                            .all(|w| tp.nouns.iter().chain(tp.verbs).chain(tp.adjectives).any(|x| x == w)));
                    }
                }
            }
        }
    }
}

fn flat(story: &[Vec<String>; 5]) -> Vec<&str> {
    story.iter().flatten().map(String::as_str).collect()
}

#[test]
fn references_cohere_within_an_album() {
    let corpus = generate_corpus(&small(6)).unwrap();
    let mut rng = seeded(7);
    let (mut own, mut other) = (0.0, 0.0);
    for (k, album) in corpus.iter().enumerate() {
        let hyp = flat(&album.references[0]);
        let same: Vec<Vec<&str>> = album.references[1..].iter().map(flat).collect();
        let mut j = rand::Rng::gen_range(&mut rng, 0..corpus.len() - 1);
        if j >= k {
            j += 1;
        }
        let rand_refs: Vec<Vec<&str>> = corpus[j].references.iter().map(flat).collect();
        own += bleu(&hyp, &same, 1);
        other += bleu(&hyp, &rand_refs, 1);
    }
    assert!(own > other, "own {own} vs other {other}");
}

#[test]
fn default_corpus_vocabulary() {
    let corpus = generate_corpus(&CorpusSpec::default()).unwrap();
    assert_eq!(corpus.len(), 2400);
    let vocab = build_vocab(&corpus, 3).unwrap();
    // 4 reserved ids, 10 function words, 8 topics of 18 content words
    assert_eq!(vocab.len(), 4 + 10 + 8 * 18);
    let all: Vec<&str> = corpus.iter().flat_map(RawAlbum::reference_tokens).collect();
    assert!(vocab.encode(&all).iter().all(|&t| t != UNK));
}

#[test]
fn reward_report_zero_model_and_determinism() {
    let corpus = generate_corpus(&small(8)).unwrap();
    let vocab = build_vocab(&corpus, 0).unwrap();
    let albums: Vec<Album> = corpus[..10].iter().map(|r| Album::encode(r, &vocab, 22).unwrap()).collect();
    let dims = PolicyDims { max_sub_len: 22, d_img: 8, ..small_policy_dims(vocab.len()) };
    let policy = Policy::new(dims, 1).unwrap();
    let mut reward = RewardModel::new(RewardDims::desk(vocab.len(), 8), 2).unwrap();
    let gen = Generator::Beam { beam: 2, min_len: 5, max_len: 22 };
    let first = reward_report(&policy, &reward, &albums, gen).unwrap();
    assert_eq!(first, reward_report(&policy, &reward, &albums, gen).unwrap());
    scale_params(reward.store_mut(), 0.0);
    let zero = reward_report(&policy, &reward, &albums, Generator::Sample { seed: 3 }).unwrap();
    assert_eq!((zero.mean_reference, zero.mean_generated), (0.0, 0.0));
}
