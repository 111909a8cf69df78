use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::vocab::{TokenId, Vocab, BOS, EOS, PAD};
use crate::{Error, Result};

/// Sentences (and feature vectors) per album.
pub const STORY_LEN: usize = 5;

/// One sentence as token ids, terminated by EOS.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubStory(Vec<TokenId>);

impl SubStory {
    /// Validates termination: exactly one EOS, last, with no PAD/BOS before it.
    pub fn new(tokens: Vec<TokenId>) -> Result<Self> {
        match tokens.last() {
            Some(&EOS) => {}
            _ => return Err(Error::InvalidStory("sub-story must end with EOS".into())),
        }
        if tokens[..tokens.len() - 1].iter().any(|&t| t == EOS || t == PAD || t == BOS) {
            return Err(Error::InvalidStory("EOS, PAD or BOS inside a sub-story".into()));
        }
        Ok(Self(tokens))
    }

    /// Appends EOS to a word sequence.
    pub fn from_words(words: &[TokenId]) -> Result<Self> {
        let mut t = words.to_vec();
        t.push(EOS);
        Self::new(t)
    }

    /// Accepts trailing PAD after the EOS and drops it.
    pub fn from_padded(tokens: &[TokenId]) -> Result<Self> {
        let end = tokens
            .iter()
            .position(|&t| t == EOS)
            .ok_or_else(|| Error::InvalidStory("no EOS in padded sub-story".into()))?;
        if tokens[end + 1..].iter().any(|&t| t != PAD) {
            return Err(Error::InvalidStory("non-PAD token after EOS".into()));
        }
        Self::new(tokens[..=end].to_vec())
    }

    /// Tokens including the final EOS.
    pub fn tokens(&self) -> &[TokenId] {
        &self.0
    }

    /// Tokens without the final EOS.
    pub fn words(&self) -> &[TokenId] {
        &self.0[..self.0.len() - 1]
    }

    /// Length including EOS.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Five sub-stories, one per feature vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Story {
    subs: [SubStory; STORY_LEN],
}

impl Story {
    pub fn new(subs: Vec<SubStory>) -> Result<Self> {
        let n = subs.len();
        let subs: [SubStory; STORY_LEN] = subs
            .try_into()
            .map_err(|_| Error::InvalidStory(format!("story needs {STORY_LEN} sub-stories, got {n}")))?;
        Ok(Self { subs })
    }

    pub fn from_array(subs: [SubStory; STORY_LEN]) -> Self {
        Self { subs }
    }

    pub fn subs(&self) -> &[SubStory; STORY_LEN] {
        &self.subs
    }

    pub fn sub(&self, i: usize) -> &SubStory {
        &self.subs[i]
    }

    /// Concatenated words of all sub-stories, delimiters stripped.
    pub fn flat_words(&self) -> Vec<TokenId> {
        self.subs.iter().flat_map(|s| s.words().iter().copied()).collect()
    }

    /// Total tokens including the five EOS markers.
    pub fn total_len(&self) -> usize {
        self.subs.iter().map(SubStory::len).sum()
    }

    pub fn check_vocab(&self, vocab_size: usize) -> Result<()> {
        for s in &self.subs {
            for &t in s.tokens() {
                if t as usize >= vocab_size {
                    return Err(Error::TokenOutOfRange { id: t, size: vocab_size });
                }
            }
        }
        Ok(())
    }

    /// Space-separated sentences joined by ` | `.
    pub fn render(&self, vocab: &Vocab) -> String {
        let parts: Vec<String> = self.subs.iter().map(|s| vocab.decode(s.words()).join(" ")).collect();
        parts.join(" | ")
    }
}

/// A story as whitespace tokens, one list per sentence.
pub type TextStory = [Vec<String>; STORY_LEN];

/// An album as stored on disk: features plus textual references.
#[derive(Clone, Debug, PartialEq)]
pub struct RawAlbum {
    pub id: String,
    pub features: [Vec<f64>; STORY_LEN],
    pub references: Vec<TextStory>,
}

impl RawAlbum {
    pub fn validate(&self) -> Result<()> {
        let d = self.features[0].len();
        if d == 0 || self.features.iter().any(|f| f.len() != d) {
            return Err(Error::InvalidAlbum(format!("album `{}` has ragged or empty features", self.id)));
        }
        if self.features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("album features"));
        }
        if self.references.is_empty() {
            return Err(Error::InvalidAlbum(format!("album `{}` has no references", self.id)));
        }
        Ok(())
    }

    /// Every reference token, in order.
    pub fn reference_tokens(&self) -> impl Iterator<Item = &str> {
        self.references.iter().flatten().flatten().map(String::as_str)
    }
}

/// An album with references encoded against a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Album {
    pub id: String,
    pub features: [Vec<f64>; STORY_LEN],
    pub references: Vec<Story>,
}

impl Album {
    /// Encodes references; sentences longer than `max_sub_len - 1` words are
    /// truncated so every sub-story fits the decoder cap.
    pub fn encode(raw: &RawAlbum, vocab: &Vocab, max_sub_len: usize) -> Result<Self> {
        raw.validate()?;
        let keep = max_sub_len.saturating_sub(1).max(1);
        let references = raw
            .references
            .iter()
            .map(|r| {
                let subs = r
                    .iter()
                    .map(|sent| {
                        let mut ids = vocab.encode(sent);
                        ids.truncate(keep);
                        SubStory::from_words(&ids)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Story::new(subs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            id: raw.id.clone(),
            features: raw.features.clone(),
            references,
        })
    }

    pub fn d_img(&self) -> usize {
        self.features[0].len()
    }

    /// Reference word lists (delimiters stripped) for metric evaluation.
    pub fn reference_words(&self) -> Vec<Vec<TokenId>> {
        self.references.iter().map(Story::flat_words).collect()
    }
}
