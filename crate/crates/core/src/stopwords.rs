//! Stopword filtering for cluster term reports.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_ENGLISH: &str = include_str!("stopwords.txt");

/// A set of lowercase words excluded from term counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl Default for StopwordSet {
    fn default() -> Self {
        Self::from_lines(DEFAULT_ENGLISH)
    }
}

impl StopwordSet {
    pub fn empty() -> Self {
        StopwordSet { words: HashSet::new() }
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn from_lines(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopwordSet { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
