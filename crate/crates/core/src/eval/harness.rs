//! Runs a model over a dataset and scores each response.

use std::collections::{HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::{Map, Value};
use thiserror::Error;

use super::query::{
    query_model, ErrorClass, QueryError, QueryRequest, RetryPolicy, Sleeper, Transport,
};
use super::score::{parse_response, score_all, MatchMode, Scores};
use super::{EvalRecord, ResponseStatus};
use crate::dataset::DatasetRecord;
use crate::generator::{derive_seed, rng_from_seed};

#[derive(Debug, Error)]
pub enum HarnessError {
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
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarnessConfig {
    pub concurrency: usize,
    pub policy: RetryPolicy,
    pub match_mode: MatchMode,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            concurrency: 4,
            policy: RetryPolicy::default(),
            match_mode: MatchMode::default(),
        }
    }
}

/// Scores a raw response against a record.
pub fn score_response(record: &DatasetRecord, raw: String, mode: MatchMode) -> EvalRecord {
    let mut out = EvalRecord::failed(record, ResponseStatus::ParseFailed, None, String::new(), 1);
    match parse_response(&raw, &record.object_keys, record.size.n_attributes()) {
        Ok(response) => {
            let Scores {
                a_puzzle,
                a_cell,
                a_best_cell,
            } = score_all(&response, &record.answer, mode);
            out.status = ResponseStatus::Parsed;
            out.a_puzzle = a_puzzle;
            out.a_cell = a_cell;
            out.a_best_cell = a_best_cell;
            out.response = Some(response);
            out.error = None;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out.raw_response = Some(raw);
    out
}

/// Queries the model for one record. Never fails: transport errors become a
/// zero-scored record.
pub fn evaluate_record(
    record: &DatasetRecord,
    transport: &dyn Transport,
    sleeper: &dyn Sleeper,
    cfg: &HarnessConfig,
) -> EvalRecord {
    let request = QueryRequest {
        id: &record.id,
        prompt: &record.prompt,
    };
    let outcome = query_model(transport, &request, cfg.policy, sleeper);
    match outcome.result {
        Ok(raw) => {
            let mut scored = score_response(record, raw, cfg.match_mode);
            scored.attempts = outcome.attempts;
            scored
        }
        Err(err) => EvalRecord::failed(
            record,
            ResponseStatus::QueryFailed,
            Some(err.class),
            err.message,
            outcome.attempts,
        ),
    }
}

/// Reads a results file, ignoring a truncated final line.
pub fn load_results(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(HarnessError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(record) => out.push(record),
            Err(_) if !complete && i + 1 == lines.len() => {
                log::warn!("{}: ignoring truncated last line", path.display());
            }
            Err(source) => {
                return Err(HarnessError::Json {
                    path: path.to_path_buf(),
                    line: i + 1,
                    source,
                })
            }
        }
    }
    Ok(out)
}

/// Cuts a line left unfinished by an interrupted run.
fn drop_partial_line(path: &Path) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = match fs::read(path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(io(e)),
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    fs::write(path, &bytes[..keep]).map_err(io)
}

/// Evaluates every record not already present in `results_path`, appending
/// each result as soon as it is scored. Returns results in dataset order.
pub fn run_evaluation(
    records: &[DatasetRecord],
    transport: &dyn Transport,
    sleeper: &dyn Sleeper,
    cfg: &HarnessConfig,
    results_path: Option<&Path>,
) -> Result<Vec<EvalRecord>, HarnessError> {
    let mut done: HashMap<String, EvalRecord> = HashMap::new();
    if let Some(path) = results_path {
        for r in load_results(path)? {
            done.insert(r.id.clone(), r);
        }
    }
    let pending: Vec<&DatasetRecord> = records.iter().filter(|r| !done.contains_key(&r.id)).collect();
    log::info!("{} to evaluate, {} already scored", pending.len(), done.len());

    let writer = match results_path {
        Some(path) => {
            drop_partial_line(path)?;
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|source| HarnessError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
            Some((path, Mutex::new(file)))
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let fresh: Vec<Result<EvalRecord, HarnessError>> = pool.install(|| {
        pending
            .par_iter()
            .map(|record| {
                let result = evaluate_record(record, transport, sleeper, cfg);
                if let Some((path, file)) = &writer {
                    let mut line = serde_json::to_string(&result).expect("records serialize");
                    line.push('\n');
                    let mut file = file.lock().expect("not poisoned");
                    file.write_all(line.as_bytes())
                        .and_then(|()| file.flush())
                        .map_err(|source| HarnessError::Io {
                            path: path.to_path_buf(),
                            source,
                        })?;
                }
                Ok(result)
            })
            .collect()
    });
    for result in fresh {
        let result = result?;
        done.insert(result.id.clone(), result);
    }
    Ok(records.iter().filter_map(|r| done.remove(&r.id)).collect())
}

fn answer_json(record: &DatasetRecord, rows: &[&Vec<String>]) -> String {
    let map: Map<String, Value> = record
        .object_keys
        .iter()
        .zip(rows)
        .map(|(k, row)| (k.clone(), Value::from((*row).clone())))
        .collect();
    serde_json::to_string_pretty(&Value::Object(map)).expect("maps serialize")
}

fn lookup<'a>(
    records: &'a HashMap<String, DatasetRecord>,
    request: &QueryRequest<'_>,
) -> Result<&'a DatasetRecord, QueryError> {
    records
        .get(request.id)
        .ok_or_else(|| QueryError::new(ErrorClass::Other, format!("unknown puzzle {}", request.id)))
}

/// Answers every puzzle with its stored solution.
pub struct OracleModel {
    records: HashMap<String, DatasetRecord>,
}

impl OracleModel {
    pub fn new(records: &[DatasetRecord]) -> Self {
        Self {
            records: records.iter().map(|r| (r.id.clone(), r.clone())).collect(),
        }
    }
}

impl Transport for OracleModel {
    fn complete(&self, request: &QueryRequest<'_>) -> Result<String, QueryError> {
        let record = lookup(&self.records, request)?;
        let rows: Vec<&Vec<String>> = record.answer.iter().collect();
        Ok(format!("Here is the solution:\n{}", answer_json(record, &rows)))
    }
}

/// Answers with the solution rows in a random order, seeded per puzzle.
pub struct ScramblerModel {
    records: HashMap<String, DatasetRecord>,
    seed: u64,
}

impl ScramblerModel {
    pub fn new(records: &[DatasetRecord], seed: u64) -> Self {
        Self {
            records: records.iter().map(|r| (r.id.clone(), r.clone())).collect(),
            seed,
        }
    }
}

impl Transport for ScramblerModel {
    fn complete(&self, request: &QueryRequest<'_>) -> Result<String, QueryError> {
        let record = lookup(&self.records, request)?;
        let mut rng = rng_from_seed(derive_seed(self.seed, record.seed, 0));
        let mut rows: Vec<&Vec<String>> = record.answer.iter().collect();
        rows.shuffle(&mut rng);
        Ok(answer_json(record, &rows))
    }
}

/// Wraps a transport and fails the first calls for each puzzle according
/// to a script, then delegates.
pub struct FaultInjector<T> {
    inner: T,
    script: Vec<ErrorClass>,
    calls: Mutex<HashMap<String, usize>>,
    only: Option<HashSet<String>>,
}

impl<T: Transport> FaultInjector<T> {
    pub fn new(inner: T, script: Vec<ErrorClass>) -> Self {
        Self {
            inner,
            script,
            calls: Mutex::new(HashMap::new()),
            only: None,
        }
    }

    /// Restrict faults to these puzzle ids.
    pub fn only(mut self, ids: impl IntoIterator<Item = String>) -> Self {
        self.only = Some(ids.into_iter().collect());
        self
    }

    pub fn calls(&self, id: &str) -> usize {
        self.calls.lock().expect("not poisoned").get(id).copied().unwrap_or(0)
    }
}

impl<T: Transport> Transport for FaultInjector<T> {
    fn complete(&self, request: &QueryRequest<'_>) -> Result<String, QueryError> {
        let n = {
            let mut calls = self.calls.lock().expect("not poisoned");
            let n = calls.entry(request.id.to_string()).or_insert(0);
            *n += 1;
            *n
        };
        let targeted = self.only.as_ref().is_none_or(|ids| ids.contains(request.id));
        match self.script.get(n - 1) {
            Some(&class) if targeted => Err(QueryError::new(class, "injected fault")),
            _ => self.inner.complete(request),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::query::RecordingSleeper;
    use crate::generator::{generate_batch, GenerationConfig};
    use crate::puzzle::Size;
    use crate::theme::builtin;
    use std::time::Duration;

    fn records(n: usize) -> Vec<DatasetRecord> {
        let theme = builtin("en", "houses").unwrap();
        let cfg = GenerationConfig::new(Size::new(3, 3).unwrap(), 1, 21);
        generate_batch(&theme, &cfg, n, 2)
            .unwrap()
            .iter()
            .map(|p| DatasetRecord::from_puzzle(p, &theme).unwrap())
            .collect()
    }

    #[test]
    fn oracle_scores_perfectly() {
        let data = records(5);
        let out = run_evaluation(
            &data,
            &OracleModel::new(&data),
            &RecordingSleeper::default(),
            &HarnessConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|r| r.a_puzzle == 1.0 && r.a_best_cell == 1.0));
    }

    #[test]
    fn scrambler_keeps_best_cell() {
        let data = records(8);
        let out = run_evaluation(
            &data,
            &ScramblerModel::new(&data, 3),
            &RecordingSleeper::default(),
            &HarnessConfig::default(),
            None,
        )
        .unwrap();
        assert!(out.iter().all(|r| r.a_best_cell == 1.0 && r.a_cell <= 1.0));
        assert!(out.iter().any(|r| r.a_cell < 1.0));
    }

    #[test]
    fn persistent_failure_scores_zero() {
        let data = records(2);
        let faulty = FaultInjector::new(OracleModel::new(&data), vec![ErrorClass::ServerError; 5])
            .only([data[0].id.clone()]);
        let sleeper = RecordingSleeper::default();
        let out = run_evaluation(&data, &faulty, &sleeper, &HarnessConfig::default(), None).unwrap();
        assert_eq!(out[0].status, ResponseStatus::QueryFailed);
        assert_eq!(out[0].error_class, Some(ErrorClass::ServerError));
        assert_eq!((out[0].a_puzzle, out[0].a_cell, out[0].attempts), (0.0, 0.0, 5));
        assert_eq!(out[1].a_puzzle, 1.0);
        assert_eq!(faulty.calls(&data[0].id), 5);
        assert_eq!(sleeper.recorded(), vec![Duration::from_secs(5); 4]);
    }

    #[test]
    fn resumes_from_results_file() {
        let data = records(4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.jsonl");
        let oracle = FaultInjector::new(OracleModel::new(&data), vec![]);
        run_evaluation(&data[..2], &oracle, &RecordingSleeper::default(), &HarnessConfig::default(), Some(&path))
            .unwrap();
        // simulate a crash mid-write
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"id\": \"trunc").unwrap();
        drop(f);
        let all = run_evaluation(&data, &oracle, &RecordingSleeper::default(), &HarnessConfig::default(), Some(&path))
            .unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(all.iter().map(|r| &r.id).collect::<Vec<_>>(), data.iter().map(|r| &r.id).collect::<Vec<_>>());
        assert!(data.iter().all(|r| oracle.calls(&r.id) == 1));
        assert_eq!(load_results(&path).unwrap().len(), 4);
    }

    #[test]
    fn unparseable_response() {
        let data = records(1);
        let scored = score_response(&data[0], "I give up".into(), MatchMode::Normalized);
        assert_eq!(scored.status, ResponseStatus::ParseFailed);
        assert_eq!((scored.a_puzzle, scored.a_cell, scored.a_best_cell), (0.0, 0.0, 0.0));
    }
}
