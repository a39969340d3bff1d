use std::io::Write;
use std::path::Path;

use super::tags::{tags_to_entities, Entity, Scheme};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub chars: Vec<char>,
    pub tags: Vec<String>,
}

impl TaggedSentence {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn entities(&self, scheme: Scheme) -> Vec<Entity> {
        tags_to_entities(&self.tags, scheme)
    }
}

/// Parses CoNLL-style text: one `char<space|tab>tag` per line, sentences
/// separated by blank lines. `path` is only used in error messages.
pub fn parse_corpus(text: &str, scheme: Scheme, path: &Path) -> Result<Vec<TaggedSentence>> {
    let mut out = Vec::new();
    let mut cur = TaggedSentence {
        chars: Vec::new(),
        tags: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::replace(
                    &mut cur,
                    TaggedSentence {
                        chars: Vec::new(),
                        tags: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let cols: Vec<&str> = line.split([' ', '\t']).filter(|c| !c.is_empty()).collect();
        let [token, tag] = cols[..] else {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected `char tag`, found {} columns", cols.len()),
            ));
        };
        let mut chars = token.chars();
        let (Some(c), None) = (chars.next(), chars.next()) else {
            return Err(Error::parse(
                path,
                lineno,
                format!("token {token:?} is not a single character"),
            ));
        };
        scheme
            .validate(tag)
            .map_err(|msg| Error::parse(path, lineno, msg))?;
        cur.chars.push(c);
        cur.tags.push(tag.to_owned());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn read_corpus(path: &Path, scheme: Scheme) -> Result<Vec<TaggedSentence>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, scheme, path)
}

pub fn write_corpus(w: &mut impl Write, sentences: &[TaggedSentence]) -> std::io::Result<()> {
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        for (c, t) in s.chars.iter().zip(&s.tags) {
            writeln!(w, "{c} {t}")?;
        }
    }
    Ok(())
}
