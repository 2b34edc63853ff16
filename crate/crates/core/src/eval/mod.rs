//! Scoring model answers and summarizing the scores.

pub mod harness;
pub mod query;
pub mod score;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetRecord;
use crate::puzzle::Size;
use query::ErrorClass;
use score::ResponseMatrix;
use stats::{cast, summarize, MetricSummary, Scalar, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Parsed,
    ParseFailed,
    QueryFailed,
}

/// One scored model response. Anything but a parsed answer scores zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub size: Size,
    pub status: ResponseStatus,
    pub raw_response: Option<String>,
    pub response: Option<ResponseMatrix>,
    pub a_puzzle: f64,
    pub a_cell: f64,
    pub a_best_cell: f64,
    pub error_class: Option<ErrorClass>,
    pub error: Option<String>,
    pub attempts: usize,
}

impl EvalRecord {
    pub fn failed(
        record: &DatasetRecord,
        status: ResponseStatus,
        error_class: Option<ErrorClass>,
        error: String,
        attempts: usize,
    ) -> Self {
        Self {
            id: record.id.clone(),
            size: record.size,
            status,
            raw_response: None,
            response: None,
            a_puzzle: 0.0,
            a_cell: 0.0,
            a_best_cell: 0.0,
            error_class,
            error: Some(error),
            attempts,
        }
    }
}

pub fn aggregate<T: Scalar>(records: &[EvalRecord]) -> Result<MetricSummary<T>, StatsError> {
    let scores: Vec<(T, T, T)> = records
        .iter()
        .map(|r| (cast::<T>(r.a_puzzle), cast(r.a_cell), cast(r.a_best_cell)))
        .collect();
    summarize(&scores)
}

/// Summaries per puzzle size, sizes in ascending order.
pub fn aggregate_by_size<T: Scalar>(
    records: &[EvalRecord],
) -> Result<Vec<(Size, MetricSummary<T>)>, StatsError> {
    let mut groups: std::collections::BTreeMap<(usize, usize), Vec<EvalRecord>> = Default::default();
    for r in records {
        groups
            .entry((r.size.n_objects(), r.size.n_attributes()))
            .or_default()
            .push(r.clone());
    }
    groups
        .into_values()
        .map(|group| Ok((group[0].size, aggregate(&group)?)))
        .collect()
}
