use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Character-level tagging scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Scheme {
    Bio,
    #[default]
    Bmes,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "bio" => Ok(Scheme::Bio),
            "bmes" => Ok(Scheme::Bmes),
            _ => Err(Error::Config(format!("unknown tag scheme {s:?}"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bio => "bio",
            Scheme::Bmes => "bmes",
        })
    }
}

impl Scheme {
    fn prefixes(self) -> &'static [char] {
        match self {
            Scheme::Bio => &['B', 'I'],
            Scheme::Bmes => &['B', 'M', 'E', 'S'],
        }
    }

    /// Checks that `tag` is `O` or `<prefix>-<type>` with a prefix of this scheme.
    pub fn validate(self, tag: &str) -> Result<(), String> {
        if tag == "O" {
            return Ok(());
        }
        match split_tag(tag) {
            Some((p, ty)) if self.prefixes().contains(&p) && !ty.is_empty() => Ok(()),
            _ => Err(format!("tag {tag:?} is not valid under the {self} scheme")),
        }
    }
}

fn split_tag(tag: &str) -> Option<(char, &str)> {
    let mut chars = tag.chars();
    let p = chars.next()?;
    let rest = chars.as_str();
    let ty = rest.strip_prefix('-')?;
    Some((p, ty))
}

/// A typed entity over characters `start..=end`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub ty: String,
    pub start: usize,
    pub end: usize,
}

impl Entity {
    pub fn new(ty: impl Into<String>, start: usize, end: usize) -> Self {
        Entity {
            ty: ty.into(),
            start,
            end,
        }
    }
}

/// Decodes entities leniently: a continuation tag that does not extend an
/// open entity of the same type starts a new one, and an unrecognised tag
/// acts like `O`.
pub fn tags_to_entities<S: AsRef<str>>(tags: &[S], scheme: Scheme) -> Vec<Entity> {
    let mut out = Vec::new();
    // open entity: (type, start)
    let mut open: Option<(String, usize)> = None;
    let close = |open: &mut Option<(String, usize)>, end: usize, out: &mut Vec<Entity>| {
        if let Some((ty, start)) = open.take() {
            out.push(Entity { ty, start, end });
        }
    };
    for (i, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        let Some((p, ty)) = split_tag(tag).filter(|(p, _)| scheme.prefixes().contains(p)) else {
            if i > 0 {
                close(&mut open, i - 1, &mut out);
            }
            continue;
        };
        let continues = matches!(&open, Some((t, _)) if t == ty);
        match (scheme, p) {
            (_, 'B') => {
                if i > 0 {
                    close(&mut open, i - 1, &mut out);
                }
                open = Some((ty.to_owned(), i));
            }
            (Scheme::Bio, 'I') | (Scheme::Bmes, 'M') => {
                if !continues {
                    if i > 0 {
                        close(&mut open, i - 1, &mut out);
                    }
                    open = Some((ty.to_owned(), i));
                }
            }
            (Scheme::Bmes, 'E') => {
                if !continues {
                    if i > 0 {
                        close(&mut open, i - 1, &mut out);
                    }
                    open = Some((ty.to_owned(), i));
                }
                close(&mut open, i, &mut out);
            }
            (Scheme::Bmes, 'S') => {
                if i > 0 {
                    close(&mut open, i - 1, &mut out);
                }
                out.push(Entity::new(ty, i, i));
            }
            _ => unreachable!("prefix checked against the scheme"),
        }
    }
    if !tags.is_empty() {
        close(&mut open, tags.len() - 1, &mut out);
    }
    out
}

/// Encodes non-overlapping entities as `n` tags.
pub fn entities_to_tags(entities: &[Entity], n: usize, scheme: Scheme) -> Vec<String> {
    let mut tags = vec!["O".to_owned(); n];
    for e in entities {
        match scheme {
            Scheme::Bio => {
                tags[e.start] = format!("B-{}", e.ty);
                for t in &mut tags[e.start + 1..=e.end] {
                    *t = format!("I-{}", e.ty);
                }
            }
            Scheme::Bmes => {
                if e.start == e.end {
                    tags[e.start] = format!("S-{}", e.ty);
                } else {
                    tags[e.start] = format!("B-{}", e.ty);
                    for t in &mut tags[e.start + 1..e.end] {
                        *t = format!("M-{}", e.ty);
                    }
                    tags[e.end] = format!("E-{}", e.ty);
                }
            }
        }
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bio_basic() {
        let ents = tags_to_entities(&["B-PER", "I-PER", "O"], Scheme::Bio);
        assert_eq!(ents, vec![Entity::new("PER", 0, 1)]);
    }

    #[test]
    fn adjacent_begins_split() {
        let ents = tags_to_entities(&["B-PER", "B-LOC"], Scheme::Bio);
        assert_eq!(ents, vec![Entity::new("PER", 0, 0), Entity::new("LOC", 1, 1)]);
    }

    #[test]
    fn bio_lenient_inside_after_outside() {
        let ents = tags_to_entities(&["O", "I-ORG", "I-ORG", "I-PER"], Scheme::Bio);
        assert_eq!(ents, vec![Entity::new("ORG", 1, 2), Entity::new("PER", 3, 3)]);
    }

    #[test]
    fn bmes_basic_and_lenient() {
        let tags = ["B-LOC", "M-LOC", "E-LOC", "S-PER", "O", "M-ORG", "E-ORG", "E-PER", "B-X"];
        let ents = tags_to_entities(&tags, Scheme::Bmes);
        assert_eq!(
            ents,
            vec![
                Entity::new("LOC", 0, 2),
                Entity::new("PER", 3, 3),
                Entity::new("ORG", 5, 6),
                Entity::new("PER", 7, 7),
                Entity::new("X", 8, 8),
            ]
        );
    }

    #[test]
    fn bmes_type_change_mid_entity() {
        let ents = tags_to_entities(&["B-LOC", "M-PER", "E-PER"], Scheme::Bmes);
        assert_eq!(ents, vec![Entity::new("LOC", 0, 0), Entity::new("PER", 1, 2)]);
    }

    #[test]
    fn validation() {
        assert!(Scheme::Bio.validate("I-PER").is_ok());
        assert!(Scheme::Bio.validate("M-PER").is_err());
        assert!(Scheme::Bmes.validate("S-LOC").is_ok());
        assert!(Scheme::Bmes.validate("B-").is_err());
        assert!(Scheme::Bmes.validate("X").is_err());
        assert!(Scheme::Bmes.validate("O").is_ok());
    }

    #[test]
    fn encode_bmes() {
        let tags = entities_to_tags(&[Entity::new("A", 0, 2), Entity::new("B", 4, 4)], 5, Scheme::Bmes);
        assert_eq!(tags, vec!["B-A", "M-A", "E-A", "O", "S-B"]);
    }
}
