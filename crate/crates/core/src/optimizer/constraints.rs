use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{CbeError, Result};

/// Labeled pairs for the semi-supervised term: distances within `similar`
/// pairs are penalized, distances within `dissimilar` pairs rewarded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairConstraints {
    pub similar: Vec<(usize, usize)>,
    pub dissimilar: Vec<(usize, usize)>,
}

fn key((i, j): (usize, usize)) -> (usize, usize) {
    (i.min(j), i.max(j))
}

impl PairConstraints {
    pub fn new(similar: Vec<(usize, usize)>, dissimilar: Vec<(usize, usize)>) -> Self {
        Self {
            similar,
            dissimilar,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.similar.is_empty() && self.dissimilar.is_empty()
    }

    /// Checks indices against `n` rows and that no pair is in both sets.
    pub fn validate(&self, n: usize) -> Result<()> {
        for &(i, j) in self.similar.iter().chain(&self.dissimilar) {
            for idx in [i, j] {
                if idx >= n {
                    return Err(CbeError::OutOfRange { index: idx, len: n });
                }
            }
        }
        let similar: HashSet<_> = self.similar.iter().copied().map(key).collect();
        if let Some(&(i, j)) = self.dissimilar.iter().find(|&&p| similar.contains(&key(p))) {
            return Err(CbeError::InvalidData(format!(
                "pair ({i}, {j}) is both similar and dissimilar"
            )));
        }
        Ok(())
    }

    /// Parses the text format: `[similar]` / `[dissimilar]` section headers
    /// followed by one `i j` pair per line. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        enum Section {
            None,
            Similar,
            Dissimilar,
        }
        let mut out = Self::default();
        let mut section = Section::None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[similar]" => section = Section::Similar,
                "[dissimilar]" => section = Section::Dissimilar,
                _ => {
                    let bad = || {
                        CbeError::InvalidData(format!(
                            "line {}: expected `i j`, got {raw:?}",
                            lineno + 1
                        ))
                    };
                    let mut it = line.split_whitespace();
                    let i = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    let j = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                    if it.next().is_some() {
                        return Err(bad());
                    }
                    match section {
                        Section::Similar => out.similar.push((i, j)),
                        Section::Dissimilar => out.dissimilar.push((i, j)),
                        Section::None => {
                            return Err(CbeError::InvalidData(format!(
                                "line {}: pair before any [similar]/[dissimilar] header",
                                lineno + 1
                            )))
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CbeError::from(e).at_path(path))?;
        Self::parse(&text).map_err(|e| e.at_path(path))
    }
}
