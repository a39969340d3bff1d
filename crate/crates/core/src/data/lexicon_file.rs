use std::path::Path;

use crate::error::{Error, Result};

/// Words of a lexicon file: one word per line, blank lines skipped, and any
/// columns after the first (such as a frequency) ignored.
pub fn parse_lexicon(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|line| line.split_whitespace().next())
        .map(str::to_owned)
        .collect()
}

pub fn read_lexicon(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_lexicon(&text))
}
