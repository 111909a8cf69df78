use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Dense token <-> id map. Ids 0..4 are PAD, BOS, EOS and UNK; the rest
/// are ordered by descending corpus count, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, TokenId>,
    min_count: usize,
}

impl Vocab {
    /// Keeps tokens seen strictly more than `min_count` times.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a str>, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(t, c)| c > min_count && !RESERVED.contains(&t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let list = RESERVED
            .iter()
            .copied()
            .chain(kept.into_iter().map(|(t, _)| t))
            .map(ToString::to_string)
            .collect();
        Self::from_list(list, min_count).expect("reserved tokens in place")
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_list(tokens: Vec<String>, min_count: usize) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()].iter().zip(RESERVED).any(|(a, b)| a != b) {
            return Err(Error::Invalid("vocabulary must start with <pad> <bos> <eos> <unk>".into()));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Invalid(alloc::format!("duplicate token `{t}` in vocabulary")));
            }
        }
        Ok(Self {
            tokens,
            index,
            min_count,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Id of `token`, or UNK.
    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<TokenId> {
        words.iter().map(|w| self.id(w.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<&str> {
        ids.iter().map(|&i| self.token(i).unwrap_or("<unk>")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<&'static str> {
        "the cat sat . the dog sat . a cat ran".split(' ').collect()
    }

    #[test]
    fn min_count_zero_keeps_everything() {
        let v = Vocab::build(corpus(), 0);
        for w in corpus() {
            assert!(v.contains(w));
        }
        assert_eq!(v.len(), 4 + 7);
    }

    #[test]
    fn boundary_count_is_excluded() {
        // "the", "cat", "sat", "." appear twice
        let v = Vocab::build(corpus(), 2);
        assert_eq!(v.len(), 4);
        let v = Vocab::build(corpus(), 1);
        assert_eq!(v.tokens()[4..], ["."[..].to_string(), "cat".into(), "sat".into(), "the".into()]);
        assert_eq!(v.id("dog"), UNK);
    }

    #[test]
    fn ids_follow_hand_count() {
        let v = Vocab::build("b a b c b a".split(' '), 0);
        assert_eq!(v.id("b"), 4);
        assert_eq!(v.id("a"), 5);
        assert_eq!(v.id("c"), 6);
        assert_eq!(v.token(EOS), Some("<eos>"));
        let again = Vocab::from_list(v.tokens().to_vec(), 0).unwrap();
        assert_eq!(again, v);
    }
}
