//! The story generator: a bidirectional GRU encoder over the five feature
//! vectors, one weight-tied GRU decoder applied to each position, and
//! sampling / greedy / beam decoding.

mod decode;
mod model;
mod story;
mod vocab;

pub use decode::{beam_search_sub_story, greedy_sub_story};
pub use model::{Policy, PolicyDims, SubStoryLogProb};
pub use story::{Album, RawAlbum, Story, SubStory, TextStory, STORY_LEN};
pub use vocab::{TokenId, Vocab, BOS, EOS, PAD, UNK};

/// Default per-sentence decoding cap: the 110-token story cap split evenly.
pub const DEFAULT_MAX_SUB_LEN: usize = 22;
