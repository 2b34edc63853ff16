//! Answer extraction and the three accuracy measures.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// `response[object][category]`, as written by the model.
pub type ResponseMatrix = Vec<Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no JSON object found")]
    NoJson,
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("{key:?}: expected a list of {expected} strings, found {found}")]
    WrongArity {
        key: String,
        expected: usize,
        found: String,
    },
}

/// How response cells are compared with the expected names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Trim, NFC and lowercase both sides.
    #[default]
    Normalized,
    Exact,
}

impl MatchMode {
    pub fn normalize(self, s: &str) -> String {
        match self {
            MatchMode::Normalized => s.trim().nfc().collect::<String>().to_lowercase(),
            MatchMode::Exact => s.to_string(),
        }
    }

    pub fn matches(self, response: &str, expected: &str) -> bool {
        self.normalize(response) == self.normalize(expected)
    }
}

/// The first balanced JSON object in `raw`, trying each `{` in turn.
pub fn extract_json_object(raw: &str) -> Option<Map<String, Value>> {
    raw.match_indices('{').find_map(|(start, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => Some(map),
            _ => None,
        }
    })
}

/// Reads the answer grid from a model response. Keys beyond `object_keys`
/// are ignored.
pub fn parse_response(
    raw: &str,
    object_keys: &[String],
    n_attributes: usize,
) -> Result<ResponseMatrix, ParseError> {
    let map = extract_json_object(raw).ok_or(ParseError::NoJson)?;
    object_keys
        .iter()
        .map(|key| {
            let value = map
                .get(key)
                .ok_or_else(|| ParseError::MissingKey(key.clone()))?;
            let wrong = || ParseError::WrongArity {
                key: key.clone(),
                expected: n_attributes,
                found: value.to_string(),
            };
            let list = value.as_array().ok_or_else(wrong)?;
            if list.len() != n_attributes {
                return Err(wrong());
            }
            list.iter()
                .map(|cell| cell.as_str().map(str::to_string).ok_or_else(wrong))
                .collect()
        })
        .collect()
}

fn same_shape(response: &[Vec<String>], expected: &[Vec<String>]) -> bool {
    response.len() == expected.len()
        && response.iter().zip(expected).all(|(r, e)| r.len() == e.len())
}

fn cell_count(expected: &[Vec<String>]) -> usize {
    expected.iter().map(Vec::len).sum()
}

/// `(a_puzzle, a_cell)`, or `None` when the shapes differ.
pub fn score_puzzle(
    response: &[Vec<String>],
    expected: &[Vec<String>],
    mode: MatchMode,
) -> Option<(f64, f64)> {
    if !same_shape(response, expected) || expected.is_empty() {
        return None;
    }
    let correct = response
        .iter()
        .flatten()
        .zip(expected.iter().flatten())
        .filter(|(r, e)| mode.matches(r, e))
        .count();
    let total = cell_count(expected);
    let a_cell = correct as f64 / total as f64;
    Some((if correct == total { 1.0 } else { 0.0 }, a_cell))
}

/// Highest cell-wise accuracy over all reorderings of the response rows.
pub fn best_permuted_cell_accuracy(
    response: &[Vec<String>],
    expected: &[Vec<String>],
    mode: MatchMode,
) -> Option<f64> {
    if !same_shape(response, expected) || expected.is_empty() {
        return None;
    }
    let n = expected.len();
    // hits[r][e]: matching cells when response row r stands in for object e.
    let hits: Vec<Vec<usize>> = response
        .iter()
        .map(|r| {
            expected
                .iter()
                .map(|e| r.iter().zip(e).filter(|(a, b)| mode.matches(a, b)).count())
                .collect()
        })
        .collect();
    let best = (0..n)
        .permutations(n)
        .map(|perm| perm.iter().enumerate().map(|(e, &r)| hits[r][e]).sum::<usize>())
        .max()
        .unwrap_or(0);
    Some(best as f64 / cell_count(expected) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub a_puzzle: f64,
    pub a_cell: f64,
    pub a_best_cell: f64,
}

impl Scores {
    pub const ZERO: Scores = Scores {
        a_puzzle: 0.0,
        a_cell: 0.0,
        a_best_cell: 0.0,
    };
}

/// All three measures; a shape mismatch scores zero.
pub fn score_all(response: &[Vec<String>], expected: &[Vec<String>], mode: MatchMode) -> Scores {
    match (
        score_puzzle(response, expected, mode),
        best_permuted_cell_accuracy(response, expected, mode),
    ) {
        (Some((a_puzzle, a_cell)), Some(a_best_cell)) => Scores {
            a_puzzle,
            a_cell,
            a_best_cell,
        },
        _ => Scores::ZERO,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> ResponseMatrix {
        vec![
            vec!["police officer".into(), "fantasy".into(), "handball".into()],
            vec!["nurse".into(), "romance".into(), "bouldering".into()],
        ]
    }

    fn keys(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("object_{i}")).collect()
    }

    #[test]
    fn parses_filled_format_block() {
        let raw = r#"{
    "object_1": [
        "police officer",
        "fantasy",
        "handball"
    ],
    "object_2": [
        "nurse",
        "romance",
        "bouldering"
    ]
}"#;
        assert_eq!(parse_response(raw, &keys(2), 3).unwrap(), table1());
    }

    #[test]
    fn parses_json_inside_prose() {
        let raw = "Let me think {not json}. Answer:\n```json\n{\"object_1\": [\"a\"], \"object_2\": [\"b\"], \"note\": 1}\n``` done {}";
        assert_eq!(
            parse_response(raw, &keys(2), 1).unwrap(),
            vec![vec!["a".to_string()], vec!["b".to_string()]]
        );
    }

    #[test]
    fn parse_failures() {
        assert_eq!(parse_response("no braces", &keys(1), 1), Err(ParseError::NoJson));
        assert_eq!(
            parse_response(r#"{"object_1": ["a"]}"#, &keys(2), 1),
            Err(ParseError::MissingKey("object_2".into()))
        );
        assert!(matches!(
            parse_response(r#"{"object_1": ["a", "b"]}"#, &keys(1), 1),
            Err(ParseError::WrongArity { .. })
        ));
        assert!(matches!(
            parse_response(r#"{"object_1": [3]}"#, &keys(1), 1),
            Err(ParseError::WrongArity { .. })
        ));
    }

    #[test]
    fn table1_scores() {
        let exact = table1();
        assert_eq!(score_puzzle(&exact, &exact, MatchMode::Normalized), Some((1.0, 1.0)));

        let mut one_wrong = table1();
        one_wrong[1][2] = "tennis".into();
        assert_eq!(
            score_puzzle(&one_wrong, &exact, MatchMode::Normalized),
            Some((0.0, 5.0 / 6.0))
        );

        let swapped: ResponseMatrix = exact.iter().rev().cloned().collect();
        assert_eq!(score_puzzle(&swapped, &exact, MatchMode::Normalized), Some((0.0, 0.0)));
        assert_eq!(
            best_permuted_cell_accuracy(&swapped, &exact, MatchMode::Normalized),
            Some(1.0)
        );
    }

    #[test]
    fn normalization() {
        let mut noisy = table1();
        noisy[0][0] = "  Police Officer ".into();
        assert_eq!(score_puzzle(&noisy, &table1(), MatchMode::Normalized), Some((1.0, 1.0)));
        assert_eq!(score_puzzle(&noisy, &table1(), MatchMode::Exact).unwrap().0, 0.0);
        // e + combining acute
        assert!(MatchMode::Normalized.matches("caf\u{65}\u{301}", "Café"));
    }

    #[test]
    fn shape_mismatch() {
        let short = vec![table1()[0].clone()];
        assert_eq!(score_puzzle(&short, &table1(), MatchMode::Normalized), None);
        assert_eq!(score_all(&short, &table1(), MatchMode::Normalized), Scores::ZERO);
    }
}
