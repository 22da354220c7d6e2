//! Shared fixtures for the integration and acceptance suites: a synthetic
//! three-class corpus whose gold class name is embedded in every term, with
//! tiny knowledge-graph snapshots and embeddings that encode the matching
//! hypernym edges.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Thirty modifier tokens, none of which contains a class name.
pub const MODIFIERS: [&str; 30] = [
    "Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel", "India", "Juliett",
    "Kilo", "Lima", "Mike", "November", "Oscar", "Papa", "Quebec", "Romeo", "Sierra", "Tango",
    "Uniform", "Victor", "Whiskey", "Xray", "Yankee", "Zulu", "Amber", "Cobalt", "Crimson",
    "Teal",
];

/// The three toy classes: (class index, gold name, plural surface form).
pub const TOY_CLASSES: [(usize, &str, &str); 3] =
    [(2, "Bonds", "Bonds"), (3, "Swap", "Swaps"), (4, "Option", "Options")];

/// Ninety (term, gold class index) pairs, thirty per class.
pub fn toy_terms() -> Vec<(String, usize)> {
    let mut terms = Vec::new();
    for &(class, _, surface) in &TOY_CLASSES {
        for modifier in MODIFIERS {
            terms.push((format!("{modifier} {surface}"), class));
        }
    }
    terms
}

fn lower_snake(term: &str) -> String {
    term.to_lowercase().replace(' ', "_")
}

/// Strip the plural `s` the way the toy class surfaces pluralize, so the
/// concept ids line up with normalized labels ("Alpha Bonds" → alpha_bond).
fn concept_id(term: &str) -> String {
    let mut id = lower_snake(term);
    if id.ends_with('s') && !id.ends_with("ss") {
        id.pop();
    }
    id
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn config(&self) -> PathBuf {
        self.path().join("run.toml")
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path().join(name)
    }
}

fn write(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

fn dataset_json() -> String {
    let records: Vec<String> = toy_terms()
        .iter()
        .map(|(term, class)| {
            let name = TOY_CLASSES.iter().find(|(c, _, _)| c == class).unwrap().1;
            format!("  {{\"term\": \"{term}\", \"label\": \"{name}\"}}")
        })
        .collect();
    format!("[\n{}\n]\n", records.join(",\n"))
}

/// A 200-wide basis vector with a 1 at the class index.
fn basis_vector(class: usize) -> String {
    (0..200)
        .map(|i| if i == class { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Full fixture: dataset, all three snapshots, embeddings, and a run
/// config wiring them together.
pub fn build_full_fixture() -> Fixture {
    let fixture = Fixture {
        dir: tempfile::tempdir().unwrap(),
    };
    let dir = fixture.path();
    write(dir, "dataset.json", &dataset_json());

    let mut wikidata = String::new();
    let mut wikidata_labels = String::new();
    let mut wordnet = String::new();
    let mut wordnet_labels = String::new();
    let mut webisalod = String::new();
    let mut webisalod_labels = String::new();
    let mut embeddings = String::new();

    for (i, (term, class)) in toy_terms().iter().enumerate() {
        wikidata.push_str(&format!("T{i}_q\tP279\tC{class}_q\n"));
        wikidata_labels.push_str(&format!("T{i}_q\t{term}\n"));
        wordnet.push_str(&format!("t{i}-n\thypernym\tc{class}-n\n"));
        wordnet_labels.push_str(&format!("t{i}-n\t{term}\n"));
        let id = concept_id(term);
        webisalod.push_str(&format!("{id}\tbroader\tc{class}\n"));
        webisalod_labels.push_str(&format!("{id}\t{term}\n"));
        embeddings.push_str(&format!("{id} {}\n", basis_vector(*class)));
    }
    for &(class, name, _) in &TOY_CLASSES {
        wikidata_labels.push_str(&format!("C{class}_q\t{name}\n"));
        wordnet_labels.push_str(&format!("c{class}-n\t{name}\n"));
        webisalod_labels.push_str(&format!("c{class}\t{name}\n"));
        embeddings.push_str(&format!("c{class} {}\n", basis_vector(class)));
    }

    write(dir, "wikidata.tsv", &wikidata);
    write(dir, "wikidata_labels.tsv", &wikidata_labels);
    write(dir, "wordnet.tsv", &wordnet);
    write(dir, "wordnet_labels.tsv", &wordnet_labels);
    write(dir, "webisalod.tsv", &webisalod);
    write(dir, "webisalod_labels.tsv", &webisalod_labels);
    write(dir, "embeddings.txt", &embeddings);

    write(
        dir,
        "run.toml",
        r#"[paths]
dataset = "dataset.json"
wordnet_triples = "wordnet.tsv"
wordnet_labels = "wordnet_labels.tsv"
wikidata_triples = "wikidata.tsv"
wikidata_labels = "wikidata_labels.tsv"
webisalod_triples = "webisalod.tsv"
webisalod_labels = "webisalod_labels.tsv"
embeddings = "embeddings.txt"
cache_dir = "cache"
model = "model.json"
signals = "signals.csv"

[train]
seed = 42

[eval]
folds = 5
repeats = 2
"#,
    );
    fixture
}

/// Dataset-only fixture: no snapshots or embeddings configured, so only
/// the word-overlap group carries signal.
pub fn build_overlap_only_fixture() -> Fixture {
    let fixture = Fixture {
        dir: tempfile::tempdir().unwrap(),
    };
    let dir = fixture.path();
    write(dir, "dataset.json", &dataset_json());
    write(
        dir,
        "run.toml",
        r#"[paths]
dataset = "dataset.json"
model = "model.json"
signals = "signals.csv"

[train]
seed = 42

[eval]
folds = 5
repeats = 1
"#,
    );
    fixture
}

/// Run the CLI binary with the given arguments.
pub fn run_bin<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_hyperfin"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}
