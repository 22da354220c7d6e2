//! Optional SPARQL client with a persistent on-disk cache.
//!
//! This is a snapshot *producer*: it is only reached through the opt-in
//! network flag, never during feature extraction. Results are requested in
//! the SPARQL TSV format, cached verbatim under one file per key, and
//! parsed into plain triples. A warm cache answers without any network I/O
//! and always yields byte-identical results for the same key.

use std::path::PathBuf;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// A parsed result row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// On-disk cache directory; filenames are the hex SHA-256 digest of the key.
#[derive(Clone, Debug)]
pub struct SparqlCache {
    dir: PathBuf,
}

impl SparqlCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<SparqlCache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(SparqlCache { dir })
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let digest = Sha256::digest(key.as_bytes());
        self.dir.join(hex::encode(digest))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.path_for(key).is_file()
    }
}

/// Fetch a query result through the cache. A warm cache is served from disk
/// without touching the network; a miss executes the query (only when
/// `allow_network` is set), persists the raw TSV response atomically, and
/// returns the parsed rows.
pub fn fetch_and_cache(
    endpoint: &str,
    query: &str,
    key: &str,
    cache: &SparqlCache,
    allow_network: bool,
) -> Result<Vec<Triple>> {
    let path = cache.path_for(key);
    if path.is_file() {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        return parse_tsv(&bytes).map_err(|message| Error::Cache { path, message });
    }
    if !allow_network {
        return Err(Error::Fetch {
            endpoint: endpoint.to_string(),
            key: key.to_string(),
            message: "cache is cold and network access is disabled".to_string(),
        });
    }
    let bytes = execute(endpoint, query).map_err(|message| Error::Fetch {
        endpoint: endpoint.to_string(),
        key: key.to_string(),
        message,
    })?;
    // parse before persisting so an error page never poisons the cache
    let triples = parse_tsv(&bytes).map_err(|message| Error::Fetch {
        endpoint: endpoint.to_string(),
        key: key.to_string(),
        message: format!("unparseable response: {message}"),
    })?;
    write_atomic(&path, &bytes)?;
    Ok(triples)
}

fn execute(endpoint: &str, query: &str) -> std::result::Result<Vec<u8>, String> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(60))
        .user_agent(concat!("hyperfin/", env!("CARGO_PKG_VERSION")))
        .build()
        .map_err(|e| e.to_string())?;
    let response = client
        .get(endpoint)
        .query(&[("query", query)])
        .header(reqwest::header::ACCEPT, "text/tab-separated-values")
        .send()
        .map_err(|e| e.to_string())?;
    if !response.status().is_success() {
        return Err(format!("endpoint returned status {}", response.status()));
    }
    response
        .bytes()
        .map(|b| b.to_vec())
        .map_err(|e| e.to_string())
}

/// Parse a SPARQL TSV result body: a `?var` header line followed by rows of
/// three tab-separated RDF terms.
fn parse_tsv(bytes: &[u8]) -> std::result::Result<Vec<Triple>, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not UTF-8: {e}"))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty response body")?;
    if !header.starts_with('?') {
        return Err(format!("missing variable header, got {header:?}"));
    }
    let mut triples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(format!(
                "row {} has {} column(s), expected 3",
                i + 2,
                cols.len()
            ));
        }
        triples.push(Triple {
            subject: strip_term(cols[0]),
            predicate: strip_term(cols[1]),
            object: strip_term(cols[2]),
        });
    }
    Ok(triples)
}

/// Reduce an RDF term in TSV encoding to its bare value: IRIs lose the
/// angle brackets, literals lose the quotes and any language or datatype
/// suffix.
fn strip_term(term: &str) -> String {
    let term = term.trim();
    if term.starts_with('<') && term.ends_with('>') {
        return term[1..term.len() - 1].to_string();
    }
    if let Some(rest) = term.strip_prefix('"') {
        if let Some(end) = rest.rfind('"') {
            return rest[..end].to_string();
        }
    }
    term.to_string()
}

/// Serialize triples in the snapshot TSV layout consumed by
/// [`crate::kgstore::KgSnapshot::import`].
pub fn to_snapshot_tsv(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.subject);
        out.push('\t');
        out.push_str(&t.predicate);
        out.push('\t');
        out.push_str(&t.object);
        out.push('\n');
    }
    out
}
