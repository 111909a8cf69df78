use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use arel_core::policy::{RawAlbum, TextStory, STORY_LEN};

/// Separates sentences inside a reference field.
pub const SENTENCE_SEP: &str = " | ";

fn format_features(f: &[f64]) -> String {
    f.iter().map(|v| format!("{v:.8e}")).collect::<Vec<_>>().join(" ")
}

/// `id`, five feature fields and one field per reference, tab separated.
/// Features print with 9 significant digits.
pub fn format_album(album: &RawAlbum) -> Result<String> {
    ensure!(
        !album.id.is_empty() && !album.id.contains(char::is_whitespace),
        "album id `{}` must be non-empty without whitespace",
        album.id
    );
    let mut fields = vec![album.id.clone()];
    fields.extend(album.features.iter().map(|f| format_features(f)));
    for story in &album.references {
        let mut sentences = Vec::with_capacity(STORY_LEN);
        for sent in story {
            ensure!(!sent.is_empty(), "album `{}` has an empty sentence", album.id);
            for w in sent {
                ensure!(
                    !w.is_empty() && w != "|" && !w.contains(char::is_whitespace),
                    "token `{w}` cannot be stored"
                );
            }
            sentences.push(sent.join(" "));
        }
        fields.push(sentences.join(SENTENCE_SEP));
    }
    Ok(fields.join("\t"))
}

pub fn parse_album(line: &str) -> Result<RawAlbum> {
    let fields: Vec<&str> = line.split('\t').collect();
    ensure!(fields.len() > 1 + STORY_LEN, "album line needs an id, 5 feature fields and references");
    let mut features: [Vec<f64>; STORY_LEN] = Default::default();
    for (i, field) in fields[1..=STORY_LEN].iter().enumerate() {
        features[i] = field
            .split_whitespace()
            .map(|v| v.parse::<f64>().with_context(|| format!("bad feature value `{v}`")))
            .collect::<Result<_>>()?;
    }
    let mut references = Vec::new();
    for field in &fields[1 + STORY_LEN..] {
        let sentences: Vec<Vec<String>> = field
            .split('|')
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect();
        if sentences.len() != STORY_LEN || sentences.iter().any(Vec::is_empty) {
            bail!("reference `{field}` must have 5 non-empty sentences");
        }
        let story: TextStory = sentences.try_into().expect("five sentences");
        references.push(story);
    }
    let album = RawAlbum {
        id: fields[0].to_string(),
        features,
        references,
    };
    album.validate()?;
    Ok(album)
}

pub fn format_dataset(albums: &[RawAlbum]) -> Result<String> {
    let mut out = String::new();
    for a in albums {
        out.push_str(&format_album(a)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_dataset(text: &str) -> Result<Vec<RawAlbum>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| parse_album(l).with_context(|| format!("line {}", n + 1)))
        .collect()
}

pub fn write_dataset(path: &Path, albums: &[RawAlbum]) -> Result<()> {
    fs::write(path, format_dataset(albums)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_dataset(path: &Path) -> Result<Vec<RawAlbum>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let albums = parse_dataset(&text).with_context(|| format!("parsing {}", path.display()))?;
    ensure!(!albums.is_empty(), "{} holds no albums", path.display());
    let d = albums[0].features[0].len();
    ensure!(
        albums.iter().all(|a| a.features[0].len() == d),
        "{} mixes feature sizes",
        path.display()
    );
    Ok(albums)
}
