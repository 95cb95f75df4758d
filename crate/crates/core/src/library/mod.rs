//! Policy library: request-set annotation, dendrograms, cophenetic
//! similarity, persisted learned tables and their reuse.
//!
//! A library directory holds `index.tsv` listing one line per entry
//! (`file`, `digest`, `coefficient`, `checksum`) and one JSON file per
//! entry. `digest` identifies the entry's source request set and
//! `checksum` the entry file's bytes.

mod annotate;
mod cluster;
mod reuse;

pub use annotate::{annotate_set, Annotation};
pub use cluster::{
    cluster, cluster_distances, condensed_index, cophenetic, euclidean, ClusterTree, Linkage, Merge,
};
pub use reuse::{
    find_similar, greedy_reuse, map_actions, reuse_compose, similar_entries, similarity_matrix,
    Match, ReuseOutcome, ReuseParams,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compose::{Composition, CompositionProblem, QCube, QRow};
use crate::error::{Error, Result};
use crate::request::RequestSet;

/// Environment variable naming the default library directory.
pub const LIBRARY_ENV: &str = "IAASCOMP_LIBRARY";

const INDEX_FILE: &str = "index.tsv";

/// Content digest of a request set, ignoring generation metadata.
pub fn digest(set: &RequestSet) -> String {
    hex::encode(Sha256::digest(set.body_tsv().as_bytes()))
}

/// One step of a stored policy: the interval visited and the requests
/// present in its final configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub interval: usize,
    pub configuration: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub digest: String,
    pub source: RequestSet,
    pub annotation: Annotation,
    /// Absent for single-request sets.
    pub tree: Option<ClusterTree>,
    pub dendrogram: Option<String>,
    /// Cophenetic correlation; absent when undefined.
    pub coefficient: Option<f64>,
    pub orders: usize,
    pub cube: Vec<QRow>,
    pub plan: Vec<PlanStep>,
    pub accepted: Vec<String>,
    pub rank: u64,
}

impl LibraryEntry {
    /// Records a learned composition together with its request set's
    /// annotation and dendrogram.
    pub fn new(
        problem: &CompositionProblem<'_>,
        composition: &Composition,
        cube: &QCube,
        linkage: Linkage,
    ) -> Result<Self> {
        let set = problem.set();
        let annotation = annotate_set(set, problem.net())?;
        let tree = cluster(&annotation, linkage).ok();
        let coefficient = tree.as_ref().and_then(|t| cophenetic(t).ok());
        let dendrogram = tree.as_ref().map(|t| t.to_nested_text(problem.ids()));
        let plan = composition
            .trace
            .iter()
            .map(|step| PlanStep {
                interval: step.interval,
                configuration: problem
                    .actions(step.interval)
                    .members(step.action)
                    .map(|r| problem.ids()[r].clone())
                    .collect(),
            })
            .collect();
        Ok(Self {
            digest: digest(set),
            source: set.clone(),
            annotation,
            tree,
            dendrogram,
            coefficient,
            orders: cube.orders(),
            cube: cube.rows(),
            plan,
            accepted: composition.accepted_ids.clone(),
            rank: composition.rank,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Library {
    entries: Vec<LibraryEntry>,
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds an entry, replacing any entry with the same source digest.
    pub fn insert(&mut self, entry: LibraryEntry) {
        match self.entries.iter_mut().find(|e| e.digest == entry.digest) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    /// Writes every entry and the index; a single writer is assumed.
    pub fn store(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut index = String::from("# file\tdigest\tcoefficient\tchecksum\n");
        for (i, entry) in self.entries.iter().enumerate() {
            let file = format!("entry-{i:04}.json");
            let body = serde_json::to_string_pretty(entry).expect("library entries serialize");
            let path = dir.join(&file);
            std::fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
            let coefficient = entry.coefficient.map_or("-".to_string(), |c| c.to_string());
            let checksum = hex::encode(Sha256::digest(body.as_bytes()));
            let _ = writeln!(index, "{file}\t{}\t{coefficient}\t{checksum}", entry.digest);
        }
        let path = dir.join(INDEX_FILE);
        std::fs::write(&path, index).map_err(|e| Error::io(&path, e))
    }

    /// Reads a library directory; a missing directory or index is an empty library.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(INDEX_FILE);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let mut entries = Vec::new();
        for line in text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        {
            let index = entries.len();
            let cols: Vec<&str> = line.split('\t').collect();
            let corrupt = |path: PathBuf, reason: String| Error::CorruptEntry {
                index,
                path,
                reason,
            };
            if cols.len() != 4 {
                return Err(corrupt(
                    path.clone(),
                    format!("malformed index line `{line}`"),
                ));
            }
            let file = dir.join(cols[0]);
            let body =
                std::fs::read_to_string(&file).map_err(|e| corrupt(file.clone(), e.to_string()))?;
            if hex::encode(Sha256::digest(body.as_bytes())) != cols[3] {
                return Err(corrupt(file, "checksum mismatch".into()));
            }
            let entry: LibraryEntry =
                serde_json::from_str(&body).map_err(|e| corrupt(file.clone(), e.to_string()))?;
            if entry.digest != cols[1] || digest(&entry.source) != entry.digest {
                return Err(corrupt(file, "source digest mismatch".into()));
            }
            entries.push(entry);
        }
        Ok(Self { entries })
    }
}
