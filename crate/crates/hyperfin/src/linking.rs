//! Resolve free-text labels to snapshot concepts.
//!
//! The whole normalized label is tried first; when that fails, the label is
//! decomposed greedily into the longest contiguous token n-grams that can be
//! linked, longer n-grams and then leftmost position winning the tie.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use crate::dataset::normalize_label;
use crate::error::{Error, Result};
use crate::kgstore::{ConceptId, KgSnapshot};

const DEFAULT_STOPWORDS: [&str; 6] = ["of", "the", "and", "for", "in", "on"];

/// Linker settings. Stopwords are never linked as standalone single tokens
/// during decomposition.
#[derive(Clone, Debug)]
pub struct LinkerConfig {
    stopwords: HashSet<String>,
}

impl Default for LinkerConfig {
    fn default() -> LinkerConfig {
        LinkerConfig {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LinkerConfig {
    pub fn with_stopwords<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> LinkerConfig {
        LinkerConfig {
            stopwords: words.into_iter().map(Into::into).collect(),
        }
    }

    /// Read a newline-separated stopword file; blank lines are skipped.
    pub fn from_stopword_file(path: &Path) -> Result<LinkerConfig> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut stopwords = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let word = line.trim();
            if !word.is_empty() {
                stopwords.insert(word.to_lowercase());
            }
        }
        Ok(LinkerConfig { stopwords })
    }

    fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }
}

/// One linked span: the token range it covers and every concept the span's
/// text resolves to (ambiguous labels keep all candidates).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub span: Range<usize>,
    pub concepts: BTreeSet<ConceptId>,
}

/// The concepts a label resolves to. `decomposed` is false exactly when a
/// single link covers the full token span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkSet {
    pub links: Vec<Link>,
    pub decomposed: bool,
}

impl LinkSet {
    pub fn empty() -> LinkSet {
        LinkSet {
            links: Vec::new(),
            decomposed: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Union of all linked concepts across spans, deduplicated.
    pub fn concepts(&self) -> BTreeSet<&ConceptId> {
        self.links
            .iter()
            .flat_map(|l| l.concepts.iter())
            .collect()
    }

    pub fn covered_tokens(&self) -> usize {
        self.links.iter().map(|l| l.span.len()).sum()
    }
}

/// Link a label into a snapshot. Candidate n-grams are re-normalized before
/// lookup so that inner plural tokens match labels that were normalized at
/// import time.
pub fn link(label: &str, snapshot: &KgSnapshot, config: &LinkerConfig) -> LinkSet {
    let normalized = normalize_label(label);
    if normalized.is_empty() {
        return LinkSet::empty();
    }
    let tokens: Vec<&str> = normalized.split(' ').collect();
    let n = tokens.len();

    let full = snapshot.lookup_label(&normalized);
    if !full.is_empty() {
        return LinkSet {
            links: vec![Link {
                span: 0..n,
                concepts: full,
            }],
            decomposed: false,
        };
    }

    let mut covered = vec![false; n];
    let mut links: Vec<Link> = Vec::new();
    loop {
        let mut best: Option<Link> = None;
        'search: for len in (1..=n).rev() {
            for start in 0..=(n - len) {
                if covered[start..start + len].iter().any(|&c| c) {
                    continue;
                }
                if len == 1 && config.is_stopword(tokens[start]) {
                    continue;
                }
                let candidate = normalize_label(&tokens[start..start + len].join(" "));
                let concepts = snapshot.lookup_label(&candidate);
                if !concepts.is_empty() {
                    best = Some(Link {
                        span: start..start + len,
                        concepts,
                    });
                    break 'search;
                }
            }
        }
        match best {
            Some(link) => {
                covered[link.span.clone()].iter_mut().for_each(|c| *c = true);
                links.push(link);
            }
            None => break,
        }
    }
    links.sort_by_key(|l| l.span.start);
    LinkSet {
        links,
        decomposed: true,
    }
}
