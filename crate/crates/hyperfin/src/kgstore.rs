//! Hermetic in-memory stores over the three background knowledge graphs.
//!
//! A [`KgSnapshot`] is built once from a triple TSV plus a companion label
//! TSV and is immutable afterwards. Only the hypernym-bearing predicates of
//! each graph become edges; everything else is recorded as a node. Snapshots
//! are the sole knowledge source during feature extraction — the live SPARQL
//! client in [`crate::sparql`] is a snapshot *producer*, never consulted at
//! extraction time.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::normalize_label;
use crate::error::{Error, Result};

/// The three background graphs.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Graph {
    Wordnet,
    Wikidata,
    Webisalod,
}

impl Graph {
    pub fn all() -> [Graph; 3] {
        [Graph::Wordnet, Graph::Wikidata, Graph::Webisalod]
    }

    /// Predicates whose triples become hypernym edges in this graph.
    pub fn hypernym_predicates(self) -> &'static [&'static str] {
        match self {
            Graph::Wordnet => &["hypernym"],
            Graph::Wikidata => &["P31", "P279"],
            Graph::Webisalod => &["broader"],
        }
    }

    /// Hop budget used by the lookup features: two for the curated graphs,
    /// one for the noisy web-extracted graph.
    pub fn default_max_hops(self) -> usize {
        match self {
            Graph::Wordnet | Graph::Wikidata => 2,
            Graph::Webisalod => 1,
        }
    }

    /// Canonical form of a raw identifier. WebIsALOD concept ids are
    /// lowercased, spaces become underscores, and one trailing underscore
    /// (an artifact of the source concept URLs) is stripped. Other graphs
    /// keep identifiers verbatim.
    pub fn normalize_id(self, raw: &str) -> String {
        match self {
            Graph::Webisalod => {
                let mut id = raw.trim().to_lowercase().replace(' ', "_");
                if id.len() > 1 && id.ends_with('_') {
                    id.pop();
                }
                id
            }
            _ => raw.trim().to_string(),
        }
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Graph::Wordnet => "wordnet",
            Graph::Wikidata => "wikidata",
            Graph::Webisalod => "webisalod",
        };
        f.write_str(name)
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Graph> {
        match s.to_ascii_lowercase().as_str() {
            "wordnet" => Ok(Graph::Wordnet),
            "wikidata" => Ok(Graph::Wikidata),
            "webisalod" | "webisa" | "alod" => Ok(Graph::Webisalod),
            other => Err(Error::Validation(format!("unknown graph tag {other:?}"))),
        }
    }
}

/// A node in one specific graph. Equality is pairwise on (graph, local id).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptId {
    pub graph: Graph,
    pub local_id: String,
}

impl ConceptId {
    pub fn new(graph: Graph, local_id: impl Into<String>) -> ConceptId {
        ConceptId {
            graph,
            local_id: local_id.into(),
        }
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.graph, self.local_id)
    }
}

impl fmt::Debug for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Outcome of a bounded hypernym search: `hops` is present iff `found`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct HopResult {
    pub found: bool,
    pub hops: Option<usize>,
}

impl HopResult {
    pub fn miss() -> HopResult {
        HopResult {
            found: false,
            hops: None,
        }
    }

    pub fn hit(hops: usize) -> HopResult {
        HopResult {
            found: true,
            hops: Some(hops),
        }
    }
}

/// Immutable triple/label store for one graph.
#[derive(Clone, Debug)]
pub struct KgSnapshot {
    graph: Graph,
    nodes: HashSet<String>,
    hypernym_edges: HashMap<String, BTreeSet<String>>,
    labels: HashMap<String, BTreeSet<String>>,
    edge_count: usize,
}

impl KgSnapshot {
    pub fn empty(graph: Graph) -> KgSnapshot {
        KgSnapshot {
            graph,
            nodes: HashSet::new(),
            hypernym_edges: HashMap::new(),
            labels: HashMap::new(),
            edge_count: 0,
        }
    }

    /// Build a snapshot from a triple TSV and its companion label TSV.
    ///
    /// Triple lines are `subject<TAB>predicate<TAB>object` with an optional
    /// fourth `confidence` column; edges whose confidence falls below
    /// `confidence_threshold` are dropped (nodes are still recorded). Label
    /// lines are `concept<TAB>label`. `#`-prefixed and blank lines are
    /// ignored in both files.
    pub fn import(
        triples_path: &Path,
        labels_path: &Path,
        graph: Graph,
        confidence_threshold: f64,
    ) -> Result<KgSnapshot> {
        let mut snapshot = KgSnapshot::empty(graph);
        snapshot.import_triples(triples_path, confidence_threshold)?;
        snapshot.import_labels(labels_path)?;
        Ok(snapshot)
    }

    fn import_triples(&mut self, path: &Path, confidence_threshold: f64) -> Result<()> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() < 3 || cols.len() > 4 || cols[..3].iter().any(|c| c.trim().is_empty()) {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected `subject\\tpredicate\\tobject[\\tconfidence]`, got {} column(s)", cols.len()),
                ));
            }
            let subject = self.graph.normalize_id(cols[0]);
            let object = self.graph.normalize_id(cols[2]);
            let predicate = cols[1].trim();
            let confidence = match cols.get(3) {
                Some(raw) => raw.trim().parse::<f64>().map_err(|e| {
                    Error::parse(path, i + 1, format!("bad confidence {raw:?}: {e}"))
                })?,
                None => 1.0,
            };
            self.nodes.insert(subject.clone());
            self.nodes.insert(object.clone());
            let is_hypernym = self
                .graph
                .hypernym_predicates()
                .iter()
                .any(|p| *p == predicate);
            if is_hypernym && confidence >= confidence_threshold {
                if self
                    .hypernym_edges
                    .entry(subject)
                    .or_default()
                    .insert(object)
                {
                    self.edge_count += 1;
                }
            }
        }
        Ok(())
    }

    fn import_labels(&mut self, path: &Path) -> Result<()> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() != 2 || cols.iter().any(|c| c.trim().is_empty()) {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected `concept\\tlabel`, got {} column(s)", cols.len()),
                ));
            }
            let concept = self.graph.normalize_id(cols[0]);
            let label = normalize_label(cols[1]);
            if label.is_empty() {
                return Err(Error::parse(path, i + 1, "label normalizes to empty"));
            }
            // every labeled concept is a node, possibly edge-less
            self.nodes.insert(concept.clone());
            self.labels.entry(label).or_default().insert(concept);
        }
        Ok(())
    }

    pub fn graph(&self) -> Graph {
        self.graph
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn contains(&self, concept: &ConceptId) -> bool {
        concept.graph == self.graph && self.nodes.contains(&concept.local_id)
    }

    /// Direct hypernym parents of a concept.
    pub fn parents(&self, concept: &ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        self.hypernym_edges
            .get(&concept.local_id)
            .into_iter()
            .flatten()
            .map(|id| ConceptId::new(self.graph, id.clone()))
    }

    /// Exact lookup of an already-normalized label. Returns an empty set on
    /// a miss.
    pub fn lookup_label(&self, normalized_label: &str) -> BTreeSet<ConceptId> {
        self.labels
            .get(normalized_label)
            .map(|ids| {
                ids.iter()
                    .map(|id| ConceptId::new(self.graph, id.clone()))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Breadth-first search along hypernym edges. Returns the minimal hop
    /// count `h` in `1..=max_hops` at which any target is reached; the start
    /// node itself (hop 0) is never a match. A start node absent from the
    /// snapshot is an error, distinct from a clean miss.
    pub fn hypernym_within(
        &self,
        start: &ConceptId,
        targets: &BTreeSet<ConceptId>,
        max_hops: usize,
    ) -> Result<HopResult> {
        if !self.contains(start) {
            return Err(Error::ConceptNotFound(start.clone()));
        }
        let target_ids: HashSet<&str> = targets
            .iter()
            .filter(|t| t.graph == self.graph)
            .map(|t| t.local_id.as_str())
            .collect();
        if target_ids.is_empty() {
            return Ok(HopResult::miss());
        }
        let mut visited: HashSet<&str> = HashSet::new();
        visited.insert(start.local_id.as_str());
        let mut queue: VecDeque<(&str, usize)> = VecDeque::new();
        queue.push_back((start.local_id.as_str(), 0));
        while let Some((node, depth)) = queue.pop_front() {
            if depth == max_hops {
                continue;
            }
            if let Some(parents) = self.hypernym_edges.get(node) {
                for parent in parents {
                    if target_ids.contains(parent.as_str()) {
                        return Ok(HopResult::hit(depth + 1));
                    }
                    if visited.insert(parent.as_str()) {
                        queue.push_back((parent.as_str(), depth + 1));
                    }
                }
            }
        }
        Ok(HopResult::miss())
    }

    /// Test-support constructor: build a snapshot directly from edge and
    /// label lists, bypassing the TSV files.
    pub fn from_parts<S: AsRef<str>>(
        graph: Graph,
        edges: &[(S, S)],
        labels: &[(S, S)],
    ) -> KgSnapshot {
        let mut snapshot = KgSnapshot::empty(graph);
        for (child, parent) in edges {
            let child = graph.normalize_id(child.as_ref());
            let parent = graph.normalize_id(parent.as_ref());
            snapshot.nodes.insert(child.clone());
            snapshot.nodes.insert(parent.clone());
            if snapshot
                .hypernym_edges
                .entry(child)
                .or_default()
                .insert(parent)
            {
                snapshot.edge_count += 1;
            }
        }
        for (concept, label) in labels {
            let concept = graph.normalize_id(concept.as_ref());
            snapshot.nodes.insert(concept.clone());
            snapshot
                .labels
                .entry(normalize_label(label.as_ref()))
                .or_default()
                .insert(concept);
        }
        snapshot
    }

    /// Deterministic digest of the snapshot contents, used by the import
    /// determinism tests.
    pub fn content_summary(&self) -> (Vec<String>, Vec<(String, String)>, Vec<(String, String)>) {
        let mut nodes: Vec<String> = self.nodes.iter().cloned().collect();
        nodes.sort();
        let mut edges: Vec<(String, String)> = self
            .hypernym_edges
            .iter()
            .flat_map(|(s, os)| os.iter().map(move |o| (s.clone(), o.clone())))
            .collect();
        edges.sort();
        let mut labels: Vec<(String, String)> = self
            .labels
            .iter()
            .flat_map(|(l, cs)| cs.iter().map(move |c| (l.clone(), c.clone())))
            .collect();
        labels.sort();
        (nodes, edges, labels)
    }
}
