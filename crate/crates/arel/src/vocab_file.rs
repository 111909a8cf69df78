use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use arel_core::policy::Vocab;

const HEADER: &str = "#min_count=";

/// A `#min_count=N` header, then one token per line in id order.
pub fn format_vocab(vocab: &Vocab) -> String {
    let mut out = format!("{HEADER}{}\n", vocab.min_count());
    for t in vocab.tokens() {
        out.push_str(t);
        out.push('\n');
    }
    out
}

pub fn parse_vocab(text: &str) -> Result<Vocab> {
    let mut lines = text.lines();
    let min_count = lines
        .next()
        .and_then(|l| l.strip_prefix(HEADER))
        .context("vocabulary file must start with #min_count=N")?
        .parse()
        .context("bad min_count")?;
    let tokens = lines.map(str::to_string).collect();
    Ok(Vocab::from_list(tokens, min_count)?)
}

pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    fs::write(path, format_vocab(vocab)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_vocab(&text).with_context(|| format!("parsing {}", path.display()))
}
