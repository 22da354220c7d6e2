//! The five length-10 feature groups and the concatenated signal vector.
//!
//! Group order is fixed: word overlap, Wikidata lookup, WordNet lookup,
//! WebIsALOD lookup, WebIsALOD embedding similarity. Group `g` occupies
//! signal positions `[10g, 10g+10)`, indexed by class within the group.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dataset::{normalize_label, ClassLabel, Dataset, CLASS_COUNT};
use crate::embeddings::EmbeddingStore;
use crate::kgstore::{ConceptId, Graph, KgSnapshot};
use crate::linking::{link, LinkSet, LinkerConfig};

pub const GROUP_COUNT: usize = 5;
pub const SIGNAL_LEN: usize = GROUP_COUNT * CLASS_COUNT;

/// The five feature groups, in signal order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FeatureGroup {
    Overlap,
    Wikidata,
    Wordnet,
    WebisalodHypernyms,
    WebisalodRdf2vec,
}

impl FeatureGroup {
    pub fn all() -> [FeatureGroup; GROUP_COUNT] {
        [
            FeatureGroup::Overlap,
            FeatureGroup::Wikidata,
            FeatureGroup::Wordnet,
            FeatureGroup::WebisalodHypernyms,
            FeatureGroup::WebisalodRdf2vec,
        ]
    }

    pub fn index(self) -> usize {
        match self {
            FeatureGroup::Overlap => 0,
            FeatureGroup::Wikidata => 1,
            FeatureGroup::Wordnet => 2,
            FeatureGroup::WebisalodHypernyms => 3,
            FeatureGroup::WebisalodRdf2vec => 4,
        }
    }

    /// Short tag used in CSV headers and diagnostics.
    pub fn tag(self) -> &'static str {
        match self {
            FeatureGroup::Overlap => "overlap",
            FeatureGroup::Wikidata => "wikidata",
            FeatureGroup::Wordnet => "wordnet",
            FeatureGroup::WebisalodHypernyms => "webisalod_hyp",
            FeatureGroup::WebisalodRdf2vec => "webisalod_rdf2vec",
        }
    }

    /// Row name used by the ablation table.
    pub fn display_name(self) -> &'static str {
        match self {
            FeatureGroup::Overlap => "Word Overlap",
            FeatureGroup::Wikidata => "Wikidata Hypernyms",
            FeatureGroup::Wordnet => "WordNet Hypernyms",
            FeatureGroup::WebisalodHypernyms => "ALOD Hypernyms",
            FeatureGroup::WebisalodRdf2vec => "ALOD RDF2vec",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One length-10 group vector, indexed by class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureGroupVector {
    pub group: FeatureGroup,
    pub values: [f64; CLASS_COUNT],
}

impl FeatureGroupVector {
    pub fn zeros(group: FeatureGroup) -> FeatureGroupVector {
        FeatureGroupVector {
            group,
            values: [0.0; CLASS_COUNT],
        }
    }
}

/// The concatenated 50-wide signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalVector([f64; SIGNAL_LEN]);

impl SignalVector {
    pub fn zeros() -> SignalVector {
        SignalVector([0.0; SIGNAL_LEN])
    }

    pub fn from_values(values: [f64; SIGNAL_LEN]) -> SignalVector {
        SignalVector(values)
    }

    pub fn from_groups(groups: &[FeatureGroupVector; GROUP_COUNT]) -> SignalVector {
        let mut values = [0.0; SIGNAL_LEN];
        for (i, g) in groups.iter().enumerate() {
            debug_assert_eq!(g.group.index(), i, "groups out of order");
            values[i * CLASS_COUNT..(i + 1) * CLASS_COUNT].copy_from_slice(&g.values);
        }
        SignalVector(values)
    }

    pub fn values(&self) -> &[f64; SIGNAL_LEN] {
        &self.0
    }

    /// The slice a group occupies.
    pub fn group(&self, group: FeatureGroup) -> &[f64] {
        let g = group.index();
        &self.0[g * CLASS_COUNT..(g + 1) * CLASS_COUNT]
    }

    /// Copy with one group's columns replaced by zeros; used by the
    /// ablation harness so the model input width stays fixed.
    pub fn with_group_zeroed(&self, group: FeatureGroup) -> SignalVector {
        let mut values = self.0;
        let g = group.index();
        values[g * CLASS_COUNT..(g + 1) * CLASS_COUNT].fill(0.0);
        SignalVector(values)
    }
}

/// Precomputed links of the ten class labels into each available graph.
#[derive(Clone, Debug, Default)]
pub struct ClassLinkTable {
    by_graph: BTreeMap<Graph, Vec<LinkSet>>,
    targets: BTreeMap<(Graph, usize), BTreeSet<ConceptId>>,
}

impl ClassLinkTable {
    pub fn build<'a>(
        snapshots: impl IntoIterator<Item = &'a KgSnapshot>,
        linker: &LinkerConfig,
    ) -> ClassLinkTable {
        let mut table = ClassLinkTable::default();
        for snapshot in snapshots {
            let sets: Vec<LinkSet> = ClassLabel::all()
                .map(|c| link(c.canonical_name(), snapshot, linker))
                .collect();
            for (i, set) in sets.iter().enumerate() {
                let concepts = set.concepts().into_iter().cloned().collect();
                table.targets.insert((snapshot.graph(), i), concepts);
            }
            table.by_graph.insert(snapshot.graph(), sets);
        }
        table
    }

    pub fn links(&self, graph: Graph, class: ClassLabel) -> Option<&LinkSet> {
        self.by_graph.get(&graph).map(|sets| &sets[class.index()])
    }

    pub fn target_concepts(&self, graph: Graph, class: ClassLabel) -> Option<&BTreeSet<ConceptId>> {
        self.targets.get(&(graph, class.index()))
    }
}

/// Word-overlap group: entry `c` is 1 when the normalized term contains the
/// normalized class name as a substring.
pub fn overlap_feature(term: &str) -> FeatureGroupVector {
    let normalized = normalize_label(term);
    let mut values = [0.0; CLASS_COUNT];
    for class in ClassLabel::all() {
        let needle = normalize_label(class.canonical_name());
        if normalized.contains(&needle) {
            values[class.index()] = 1.0;
        }
    }
    FeatureGroupVector {
        group: FeatureGroup::Overlap,
        values,
    }
}

/// Inverse-hop lookup group for one graph: link the term, then for each
/// class take `1/h` for the minimal hop count `h ≤ max_hops` from any term
/// concept to any of the class's linked concepts, else 0.
pub fn lookup_feature(
    term: &str,
    snapshot: &KgSnapshot,
    class_links: &ClassLinkTable,
    linker: &LinkerConfig,
    max_hops: usize,
) -> FeatureGroupVector {
    let term_links = link(term, snapshot, linker);
    lookup_feature_linked(&term_links, snapshot, class_links, max_hops)
}

fn group_for_graph(graph: Graph) -> FeatureGroup {
    match graph {
        Graph::Wikidata => FeatureGroup::Wikidata,
        Graph::Wordnet => FeatureGroup::Wordnet,
        Graph::Webisalod => FeatureGroup::WebisalodHypernyms,
    }
}

fn lookup_feature_linked(
    term_links: &LinkSet,
    snapshot: &KgSnapshot,
    class_links: &ClassLinkTable,
    max_hops: usize,
) -> FeatureGroupVector {
    let group = group_for_graph(snapshot.graph());
    let mut values = [0.0; CLASS_COUNT];
    let starts: Vec<&ConceptId> = term_links.concepts().into_iter().collect();
    if starts.is_empty() {
        return FeatureGroupVector { group, values };
    }
    for class in ClassLabel::all() {
        let Some(targets) = class_links.target_concepts(snapshot.graph(), class) else {
            continue;
        };
        if targets.is_empty() {
            continue;
        }
        let mut best: Option<usize> = None;
        for start in &starts {
            // linked concepts always come from this snapshot's label map,
            // so the start node is present by construction
            match snapshot.hypernym_within(start, targets, max_hops) {
                Ok(hit) => {
                    if let Some(h) = hit.hops {
                        best = Some(best.map_or(h, |b| b.min(h)));
                    }
                }
                Err(_) => continue,
            }
        }
        if let Some(h) = best {
            values[class.index()] = 1.0 / h as f64;
        }
    }
    FeatureGroupVector { group, values }
}

/// Embedding-similarity group: entry `c` is the link-set similarity between
/// the term's links and class `c`'s links.
pub fn rdf2vec_feature(
    term: &str,
    snapshot: &KgSnapshot,
    store: &EmbeddingStore,
    class_links: &ClassLinkTable,
    linker: &LinkerConfig,
) -> FeatureGroupVector {
    let term_links = link(term, snapshot, linker);
    rdf2vec_feature_linked(&term_links, snapshot.graph(), store, class_links)
}

fn rdf2vec_feature_linked(
    term_links: &LinkSet,
    graph: Graph,
    store: &EmbeddingStore,
    class_links: &ClassLinkTable,
) -> FeatureGroupVector {
    let mut values = [0.0; CLASS_COUNT];
    for class in ClassLabel::all() {
        if let Some(class_set) = class_links.links(graph, class) {
            values[class.index()] =
                crate::embeddings::linkset_similarity(term_links, class_set, store);
        }
    }
    FeatureGroupVector {
        group: FeatureGroup::WebisalodRdf2vec,
        values,
    }
}

/// Everything extraction needs: the available snapshots, the embedding
/// store, the linker settings, and the precomputed class links.
pub struct FeatureContext<'a> {
    pub wordnet: Option<&'a KgSnapshot>,
    pub wikidata: Option<&'a KgSnapshot>,
    pub webisalod: Option<&'a KgSnapshot>,
    pub embeddings: Option<&'a EmbeddingStore>,
    pub linker: LinkerConfig,
    class_links: ClassLinkTable,
}

impl<'a> FeatureContext<'a> {
    pub fn new(
        wordnet: Option<&'a KgSnapshot>,
        wikidata: Option<&'a KgSnapshot>,
        webisalod: Option<&'a KgSnapshot>,
        embeddings: Option<&'a EmbeddingStore>,
        linker: LinkerConfig,
    ) -> FeatureContext<'a> {
        let class_links = ClassLinkTable::build(
            [wordnet, wikidata, webisalod].into_iter().flatten(),
            &linker,
        );
        FeatureContext {
            wordnet,
            wikidata,
            webisalod,
            embeddings,
            linker,
            class_links,
        }
    }

    pub fn class_links(&self) -> &ClassLinkTable {
        &self.class_links
    }

    fn snapshot(&self, graph: Graph) -> Option<&'a KgSnapshot> {
        match graph {
            Graph::Wordnet => self.wordnet,
            Graph::Wikidata => self.wikidata,
            Graph::Webisalod => self.webisalod,
        }
    }
}

/// Per-run extraction counters: how often terms linked into each graph,
/// embedding coverage over term links, and which resources were absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub terms: usize,
    pub linked_terms: BTreeMap<Graph, usize>,
    pub embedding_links_covered: usize,
    pub embedding_links_total: usize,
    pub missing_resources: Vec<String>,
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "terms: {}", self.terms)?;
        for graph in Graph::all() {
            match self.linked_terms.get(&graph) {
                Some(n) => {
                    let pct = if self.terms == 0 {
                        0.0
                    } else {
                        100.0 * *n as f64 / self.terms as f64
                    };
                    writeln!(f, "linked[{graph}]: {n}/{} ({pct:.1}%)", self.terms)?;
                }
                None => writeln!(f, "linked[{graph}]: snapshot not loaded")?,
            }
        }
        if self.embedding_links_total > 0 {
            writeln!(
                f,
                "embedding coverage: {}/{} linked concepts",
                self.embedding_links_covered, self.embedding_links_total
            )?;
        }
        for missing in &self.missing_resources {
            writeln!(f, "missing resource: {missing} (group zeroed)")?;
        }
        Ok(())
    }
}

/// Build the signal for one term. Missing resources contribute a zero group
/// and a diagnostics note instead of failing.
pub fn build_signal(term: &str, ctx: &FeatureContext, diag: &mut Diagnostics) -> SignalVector {
    diag.terms += 1;
    let mut groups = [
        overlap_feature(term),
        FeatureGroupVector::zeros(FeatureGroup::Wikidata),
        FeatureGroupVector::zeros(FeatureGroup::Wordnet),
        FeatureGroupVector::zeros(FeatureGroup::WebisalodHypernyms),
        FeatureGroupVector::zeros(FeatureGroup::WebisalodRdf2vec),
    ];

    let mut webisalod_links: Option<LinkSet> = None;
    for graph in [Graph::Wikidata, Graph::Wordnet, Graph::Webisalod] {
        let Some(snapshot) = ctx.snapshot(graph) else {
            continue;
        };
        let term_links = link(term, snapshot, &ctx.linker);
        if !term_links.is_empty() {
            *diag.linked_terms.entry(graph).or_default() += 1;
        } else {
            diag.linked_terms.entry(graph).or_default();
        }
        let fv = lookup_feature_linked(&term_links, snapshot, &ctx.class_links, graph.default_max_hops());
        groups[fv.group.index()] = fv;
        if graph == Graph::Webisalod {
            webisalod_links = Some(term_links);
        }
    }

    match (ctx.webisalod, ctx.embeddings) {
        (Some(_), Some(store)) => {
            let term_links = webisalod_links.expect("webisalod links computed above");
            let (covered, total) = store.coverage(&term_links);
            diag.embedding_links_covered += covered;
            diag.embedding_links_total += total;
            let fv = rdf2vec_feature_linked(&term_links, Graph::Webisalod, store, &ctx.class_links);
            groups[fv.group.index()] = fv;
        }
        _ => {}
    }

    SignalVector::from_groups(&groups)
}

/// Extract the full signal matrix in record order.
pub fn extract_matrix(dataset: &Dataset, ctx: &FeatureContext) -> (Vec<SignalVector>, Diagnostics) {
    let mut diag = Diagnostics::default();
    if ctx.wordnet.is_none() {
        diag.missing_resources.push("wordnet snapshot".into());
    }
    if ctx.wikidata.is_none() {
        diag.missing_resources.push("wikidata snapshot".into());
    }
    if ctx.webisalod.is_none() {
        diag.missing_resources.push("webisalod snapshot".into());
    }
    if ctx.embeddings.is_none() {
        diag.missing_resources.push("embedding store".into());
    }
    let signals = dataset
        .records()
        .iter()
        .map(|r| build_signal(&r.term, ctx, &mut diag))
        .collect();
    (signals, diag)
}
