//! On-disk datasets: `manifest.json` plus `train.jsonl` and `test.jsonl`.
//!
//! Each record is self-contained: it carries the rendered prompt for the
//! model and everything needed to score an answer without the theme.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::csp::{count_solutions, AttributeSpace};
use crate::puzzle::{PuzzleInstance, PuzzleItem, Size, SolutionMatrix};
use crate::render::{render_prompt, RenderError};
use crate::theme::ThemeConfig;

pub const DATASET_SCHEMA_VERSION: u32 = 1;
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SPLITS: [&str; 2] = ["train", "test"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{0} already exists (pass overwrite to replace it)")]
    Exists(PathBuf),
    #[error("duplicate puzzle id {0}")]
    DuplicateId(String),
    #[error("dataset is empty")]
    Empty,
    #[error("train split of {train} exceeds {total} records")]
    SplitSize { train: usize, total: usize },
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("{0}: content hash does not match the manifest")]
    Corruption(PathBuf),
    #[error("{file}: manifest lists {expected} records, found {found}")]
    CountMismatch {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("record {id}: {reason}")]
    Validation { id: String, reason: String },
    #[error(transparent)]
    Render(#[from] RenderError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One puzzle as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub language: String,
    pub theme: String,
    pub size: Size,
    pub seed: u64,
    pub prompt: String,
    pub clue_texts: Vec<String>,
    pub red_herring_indices: Vec<usize>,
    pub items: Vec<PuzzleItem>,
    pub solution: SolutionMatrix,
    /// JSON keys of the expected answer, one per object.
    pub object_keys: Vec<String>,
    /// Display names of the solution, `answer[object][category]`.
    pub answer: Vec<Vec<String>>,
}

impl DatasetRecord {
    pub fn from_puzzle(puzzle: &PuzzleInstance, theme: &ThemeConfig) -> Result<Self, DatasetError> {
        let rendered = render_prompt(puzzle, theme)?;
        let mut answer = Vec::with_capacity(puzzle.size.n_objects());
        for row in &puzzle.solution.cells {
            let mut names = Vec::with_capacity(row.len());
            for attr in row {
                let (_, def) = theme
                    .attribute(attr)
                    .ok_or_else(|| RenderError::UnknownAttribute(attr.clone()))?;
                names.push(def.name.clone());
            }
            answer.push(names);
        }
        let object_keys = (1..=puzzle.size.n_objects())
            .map(|i| theme.prompt.object_key.replace("{i}", &i.to_string()))
            .collect();
        Ok(Self {
            id: puzzle.id.clone(),
            language: puzzle.language.clone(),
            theme: puzzle.theme.clone(),
            size: puzzle.size,
            seed: puzzle.seed,
            prompt: rendered.prompt_text,
            clue_texts: rendered.clue_texts,
            red_herring_indices: puzzle.red_herring_indices.clone(),
            items: puzzle.items.clone(),
            solution: puzzle.solution.clone(),
            object_keys,
            answer,
        })
    }

    pub fn to_instance(&self) -> PuzzleInstance {
        PuzzleInstance {
            id: self.id.clone(),
            language: self.language.clone(),
            theme: self.theme.clone(),
            size: self.size,
            solution: self.solution.clone(),
            items: self.items.clone(),
            red_herring_indices: self.red_herring_indices.clone(),
            seed: self.seed,
        }
    }

    /// Structural checks; does not run the solver.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |reason: String| DatasetError::Validation {
            id: self.id.clone(),
            reason,
        };
        self.to_instance()
            .validate()
            .map_err(|e| bad(e.to_string()))?;
        let (n, m) = (self.size.n_objects(), self.size.n_attributes());
        if self.answer.len() != n || self.answer.iter().any(|row| row.len() != m) {
            return Err(bad(format!("answer grid is not {}", self.size)));
        }
        if self.object_keys.len() != n {
            return Err(bad(format!("expected {n} object keys")));
        }
        if self.clue_texts.len() != self.items.len() {
            return Err(bad("clue_texts and items differ in length".into()));
        }
        Ok(())
    }

    /// Whether the real clues alone pin down the stored solution.
    pub fn has_unique_solution(&self) -> bool {
        let space = AttributeSpace::from_solution(&self.solution);
        match count_solutions(&space, &self.to_instance().real_clues(), 2) {
            Ok(outcome) => outcome.count == 1 && outcome.witnesses[0] == self.solution,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub name: String,
    pub file: String,
    pub count: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub language: String,
    pub theme: String,
    pub size: Size,
    pub n_red_herrings: usize,
    pub master_seed: u64,
    pub generator_version: String,
    pub splits: Vec<SplitEntry>,
    /// SHA-256 over the split names and file hashes.
    pub hash: String,
}

impl DatasetManifest {
    pub fn total(&self) -> usize {
        self.splits.iter().map(|s| s.count).sum()
    }

    pub fn count(&self, split: &str) -> usize {
        self.splits
            .iter()
            .find(|s| s.name == split)
            .map_or(0, |s| s.count)
    }
}

/// Metadata a caller supplies when writing; counts and hashes are computed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub language: String,
    pub theme: String,
    pub size: Size,
    pub n_red_herrings: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub train: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

impl Dataset {
    /// All records, train first.
    pub fn records(&self) -> impl Iterator<Item = &DatasetRecord> {
        self.train.iter().chain(&self.test)
    }
}

pub fn dataset_dir_name(language: &str, theme: &str, size: Size, n_red_herrings: usize) -> String {
    format!("{language}-{theme}-{size}-rh{n_red_herrings}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn combined_hash(splits: &[SplitEntry]) -> String {
    let mut hasher = Sha256::new();
    for s in splits {
        hasher.update(format!("{}:{}:{}\n", s.name, s.count, s.sha256));
    }
    hex::encode(hasher.finalize())
}

fn encode_records(records: &[DatasetRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("records always serialize");
        out.push(b'\n');
    }
    out
}

/// Writes `records` to `dir`: the first `train` go to the train split, the
/// rest to test. Refuses to touch an existing dataset unless `overwrite`.
pub fn write_dataset(
    records: &[DatasetRecord],
    meta: &DatasetMeta,
    train: usize,
    dir: &Path,
    overwrite: bool,
) -> Result<DatasetManifest, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    if train > records.len() {
        return Err(DatasetError::SplitSize {
            train,
            total: records.len(),
        });
    }
    let mut ids = HashSet::new();
    for record in records {
        if !ids.insert(record.id.as_str()) {
            return Err(DatasetError::DuplicateId(record.id.clone()));
        }
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() && !overwrite {
        return Err(DatasetError::Exists(dir.to_path_buf()));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let (train_records, test_records) = records.split_at(train);
    let mut splits = Vec::new();
    for (name, part) in SPLITS.into_iter().zip([train_records, test_records]) {
        let file = format!("{name}.jsonl");
        let bytes = encode_records(part);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        splits.push(SplitEntry {
            name: name.to_string(),
            file,
            count: part.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = DatasetManifest {
        schema_version: DATASET_SCHEMA_VERSION,
        language: meta.language.clone(),
        theme: meta.theme.clone(),
        size: meta.size,
        n_red_herrings: meta.n_red_herrings,
        master_seed: meta.master_seed,
        generator_version: GENERATOR_VERSION.to_string(),
        hash: combined_hash(&splits),
        splits,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest always serializes");
    text.push('\n');
    let mut f = fs::File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    f.write_all(text.as_bytes()).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| DatasetError::Json {
        path: path.clone(),
        line: source.line(),
        source,
    })?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != DATASET_SCHEMA_VERSION {
        return Err(DatasetError::SchemaVersion {
            found,
            expected: DATASET_SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|source| DatasetError::Json {
        path,
        line: 0,
        source,
    })
}

/// Reads and verifies a dataset directory: hashes, counts, unique ids and
/// record structure.
pub fn read_dataset(dir: &Path) -> Result<Dataset, DatasetError> {
    let manifest = read_manifest(dir)?;
    if combined_hash(&manifest.splits) != manifest.hash {
        return Err(DatasetError::Corruption(dir.join(MANIFEST_FILE)));
    }
    let mut ids = HashSet::new();
    let mut parts: Vec<Vec<DatasetRecord>> = Vec::new();
    for name in SPLITS {
        let Some(entry) = manifest.splits.iter().find(|s| s.name == name) else {
            parts.push(Vec::new());
            continue;
        };
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(DatasetError::Corruption(path));
        }
        let mut records = Vec::with_capacity(entry.count);
        for (i, line) in BufReader::new(bytes.as_slice()).lines().enumerate() {
            let line = line.map_err(io_err(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DatasetRecord =
                serde_json::from_str(&line).map_err(|source| DatasetError::Json {
                    path: path.clone(),
                    line: i + 1,
                    source,
                })?;
            record.validate()?;
            if !ids.insert(record.id.clone()) {
                return Err(DatasetError::DuplicateId(record.id));
            }
            records.push(record);
        }
        if records.len() != entry.count {
            return Err(DatasetError::CountMismatch {
                file: entry.file.clone(),
                expected: entry.count,
                found: records.len(),
            });
        }
        parts.push(records);
    }
    let test = parts.pop().unwrap_or_default();
    let train = parts.pop().unwrap_or_default();
    Ok(Dataset {
        manifest,
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_batch, GenerationConfig};
    use crate::theme::builtin;

    fn sample(count: usize) -> (Vec<DatasetRecord>, DatasetMeta) {
        let theme = builtin("en", "houses").unwrap();
        let size = Size::new(3, 2).unwrap();
        let cfg = GenerationConfig::new(size, 2, 5);
        let records = generate_batch(&theme, &cfg, count, 2)
            .unwrap()
            .iter()
            .map(|p| DatasetRecord::from_puzzle(p, &theme).unwrap())
            .collect();
        let meta = DatasetMeta {
            language: "en".into(),
            theme: "houses".into(),
            size,
            n_red_herrings: 2,
            master_seed: 5,
        };
        (records, meta)
    }

    #[test]
    fn round_trip() {
        let (records, meta) = sample(6);
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_dataset(&records, &meta, 2, dir.path(), false).unwrap();
        assert_eq!(manifest.count("train"), 2);
        assert_eq!(manifest.count("test"), 4);
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.manifest, manifest);
        let all: Vec<_> = back.records().cloned().collect();
        assert_eq!(all, records);
        assert!(all.iter().all(DatasetRecord::has_unique_solution));
    }

    #[test]
    fn refuses_to_clobber() {
        let (records, meta) = sample(2);
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&records, &meta, 1, dir.path(), false).unwrap();
        assert!(matches!(
            write_dataset(&records, &meta, 1, dir.path(), false),
            Err(DatasetError::Exists(_))
        ));
        write_dataset(&records, &meta, 1, dir.path(), true).unwrap();
    }

    #[test]
    fn write_errors() {
        let (mut records, meta) = sample(2);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_dataset(&records, &meta, 3, dir.path(), false),
            Err(DatasetError::SplitSize { .. })
        ));
        assert!(matches!(
            write_dataset(&[], &meta, 0, dir.path(), false),
            Err(DatasetError::Empty)
        ));
        records[1].id = records[0].id.clone();
        assert!(matches!(
            write_dataset(&records, &meta, 0, dir.path(), false),
            Err(DatasetError::DuplicateId(_))
        ));
    }

    #[test]
    fn tampering_is_detected() {
        let (records, meta) = sample(3);
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&records, &meta, 1, dir.path(), false).unwrap();
        let path = dir.path().join("test.jsonl");
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen("house", "House", 1)).unwrap();
        assert!(matches!(
            read_dataset(dir.path()),
            Err(DatasetError::Corruption(_))
        ));
    }

    #[test]
    fn schema_version_is_checked() {
        let (records, meta) = sample(1);
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&records, &meta, 0, dir.path(), false).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("\"schema_version\": 1", "\"schema_version\": 9")).unwrap();
        assert!(matches!(
            read_dataset(dir.path()),
            Err(DatasetError::SchemaVersion { found: 9, .. })
        ));
    }

    #[test]
    fn herring_index_out_of_range() {
        let (mut records, _) = sample(1);
        let n = records[0].items.len();
        records[0].red_herring_indices.push(n + 1);
        assert!(matches!(
            records[0].validate(),
            Err(DatasetError::Validation { .. })
        ));
    }

    #[test]
    fn directory_names() {
        let size = Size::new(4, 5).unwrap();
        assert_eq!(dataset_dir_name("en", "houses", size, 5), "en-houses-4x5-rh5");
    }
}
