//! Concept vectors and the link-set similarity aggregation.
//!
//! Vectors come from a word2vec-style text file (token followed by the
//! vector components). Tokens are mapped to concept ids with the owning
//! graph's identifier normalization, so a WebIsALOD embedding file lines up
//! with a WebIsALOD snapshot.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kgstore::{ConceptId, Graph};
use crate::linking::LinkSet;

/// Expected vector width for the pre-trained graph embeddings.
pub const EMBEDDING_DIM: usize = 200;

/// Immutable token→vector store; all vectors share one dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingStore {
    vectors: HashMap<ConceptId, Vec<f64>>,
    dim: usize,
    duplicate_tokens: usize,
}

impl EmbeddingStore {
    /// Load a text-format embedding file with the standard 200-wide vectors.
    pub fn load_text(path: &Path, graph: Graph) -> Result<EmbeddingStore> {
        EmbeddingStore::load_text_with_dim(path, graph, EMBEDDING_DIM)
    }

    /// Load with an explicit dimension; every line must carry exactly
    /// `dim` components after the token. Duplicate tokens keep the last
    /// vector and are counted in [`EmbeddingStore::duplicate_tokens`].
    pub fn load_text_with_dim(path: &Path, graph: Graph, dim: usize) -> Result<EmbeddingStore> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vectors: HashMap<ConceptId, Vec<f64>> = HashMap::new();
        let mut duplicate_tokens = 0usize;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line has a first field");
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::parse(path, i + 1, format!("bad component {f:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != dim {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected {dim} components, found {}", values.len()),
                ));
            }
            if !values.iter().all(|v| v.is_finite()) {
                return Err(Error::parse(path, i + 1, "non-finite component"));
            }
            let id = ConceptId::new(graph, graph.normalize_id(token));
            if vectors.insert(id, values).is_some() {
                duplicate_tokens += 1;
            }
        }
        Ok(EmbeddingStore {
            vectors,
            dim,
            duplicate_tokens,
        })
    }

    pub fn from_vectors(graph: Graph, entries: Vec<(String, Vec<f64>)>, dim: usize) -> EmbeddingStore {
        let vectors = entries
            .into_iter()
            .map(|(token, v)| {
                debug_assert_eq!(v.len(), dim);
                (ConceptId::new(graph, graph.normalize_id(&token)), v)
            })
            .collect();
        EmbeddingStore {
            vectors,
            dim,
            duplicate_tokens: 0,
        }
    }

    pub fn get(&self, concept: &ConceptId) -> Option<&[f64]> {
        self.vectors.get(concept).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// How many file lines re-defined an existing token during load.
    pub fn duplicate_tokens(&self) -> usize {
        self.duplicate_tokens
    }

    /// (concepts with a vector, total concepts) over a link set.
    pub fn coverage(&self, links: &LinkSet) -> (usize, usize) {
        let concepts = links.concepts();
        let have = concepts.iter().filter(|c| self.vectors.contains_key(**c)).count();
        (have, concepts.len())
    }
}

/// Cosine similarity, clamped to [-1, 1] against rounding. A zero-norm
/// input is an error; the aggregation below maps it to similarity 0.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    assert_eq!(a.len(), b.len(), "cosine over mismatched dimensions");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNormVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Aggregate similarity between two link sets: the mean over hyponym-side
/// vectors of the best cosine match on the hypernym side. Links without a
/// stored vector are dropped first; if either side ends up empty the result
/// is 0.
pub fn linkset_similarity(
    hyponym_links: &LinkSet,
    hypernym_links: &LinkSet,
    store: &EmbeddingStore,
) -> f64 {
    let hypo: Vec<&[f64]> = hyponym_links
        .concepts()
        .into_iter()
        .filter_map(|c| store.get(c))
        .collect();
    let hyper: Vec<&[f64]> = hypernym_links
        .concepts()
        .into_iter()
        .filter_map(|c| store.get(c))
        .collect();
    if hypo.is_empty() || hyper.is_empty() {
        return 0.0;
    }
    let total: f64 = hypo
        .iter()
        .map(|vi| {
            hyper
                .iter()
                .map(|vj| cosine(vi, vj).unwrap_or(0.0))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / hypo.len() as f64
}
