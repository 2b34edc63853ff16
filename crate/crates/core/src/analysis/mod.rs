//! Clue-type frequencies and clue-type difficulty.

pub mod regression;
pub mod report;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::stats::{cast, Scalar};
use crate::puzzle::{ClueType, PuzzleInstance, PuzzleItem, RedHerringType, Size};

pub use regression::{eq1_normalize, fit_difficulty, DifficultyProfile};
pub use report::{emit_report, ReportInputs};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("puzzle {0} has no items")]
    EmptyPuzzle(String),
    #[error("no puzzles to average")]
    EmptyGroup,
    #[error("fit not identifiable: {0}")]
    NotIdentifiable(String),
    #[error("{0}")]
    Shape(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A clue or red-herring type; the columns of the frequency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemType {
    Clue(ClueType),
    Herring(RedHerringType),
}

impl ItemType {
    /// All 22 types, clue types first.
    pub fn all() -> Vec<ItemType> {
        ClueType::ALL
            .into_iter()
            .map(ItemType::Clue)
            .chain(RedHerringType::ALL.into_iter().map(ItemType::Herring))
            .collect()
    }

    pub fn of(item: &PuzzleItem) -> ItemType {
        match item {
            PuzzleItem::Clue(c) => ItemType::Clue(c.clue_type),
            PuzzleItem::Herring(h) => ItemType::Herring(h.herring_type),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ItemType::Clue(t) => t.name(),
            ItemType::Herring(t) => t.name(),
        }
    }

    pub fn is_herring(self) -> bool {
        matches!(self, ItemType::Herring(_))
    }

    pub fn index(self) -> usize {
        match self {
            ItemType::Clue(t) => ClueType::ALL.iter().position(|&c| c == t).expect("listed"),
            ItemType::Herring(t) => {
                ClueType::ALL.len()
                    + RedHerringType::ALL.iter().position(|&h| h == t).expect("listed")
            }
        }
    }
}

impl fmt::Display for ItemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ItemType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ItemType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        ItemType::all()
            .into_iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown item type {name:?}")))
    }
}

/// Share of each item type among one puzzle's items, indexed like
/// [`ItemType::all`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector<T>(pub Vec<T>);

impl<T: Scalar> FrequencyVector<T> {
    pub fn get(&self, t: ItemType) -> T {
        self.0[t.index()]
    }

    pub fn sum(&self) -> T {
        self.0.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn herring_share(&self) -> T {
        ItemType::all()
            .into_iter()
            .filter(|t| t.is_herring())
            .fold(T::zero(), |acc, t| acc + self.get(t))
    }

    pub fn as_map(&self) -> BTreeMap<ItemType, T> {
        ItemType::all().into_iter().map(|t| (t, self.get(t))).collect()
    }
}

/// Counts clues and herrings together and divides by the item count.
pub fn normalized_frequencies<T: Scalar>(
    puzzle: &PuzzleInstance,
) -> Result<FrequencyVector<T>, AnalysisError> {
    if puzzle.items.is_empty() {
        return Err(AnalysisError::EmptyPuzzle(puzzle.id.clone()));
    }
    let mut counts = vec![0usize; ItemType::all().len()];
    for item in &puzzle.items {
        counts[ItemType::of(item).index()] += 1;
    }
    let total = cast::<T>(puzzle.items.len() as f64);
    Ok(FrequencyVector(
        counts.into_iter().map(|c| cast::<T>(c as f64) / total).collect(),
    ))
}

pub fn mean_vector<T: Scalar>(vectors: &[FrequencyVector<T>]) -> Result<FrequencyVector<T>, AnalysisError> {
    let first = vectors.first().ok_or(AnalysisError::EmptyGroup)?;
    let n = cast::<T>(vectors.len() as f64);
    let mut sum = vec![T::zero(); first.0.len()];
    for v in vectors {
        for (s, &x) in sum.iter_mut().zip(&v.0) {
            *s = *s + x;
        }
    }
    Ok(FrequencyVector(sum.into_iter().map(|s| s / n).collect()))
}

/// Mean frequency vector per puzzle size, sizes ascending.
pub fn mean_frequencies<T: Scalar>(
    puzzles: &[PuzzleInstance],
) -> Result<Vec<(Size, FrequencyVector<T>)>, AnalysisError> {
    if puzzles.is_empty() {
        return Err(AnalysisError::EmptyGroup);
    }
    let mut groups: BTreeMap<(usize, usize), Vec<FrequencyVector<T>>> = BTreeMap::new();
    for p in puzzles {
        groups
            .entry((p.size.n_objects(), p.size.n_attributes()))
            .or_default()
            .push(normalized_frequencies(p)?);
    }
    groups
        .into_iter()
        .map(|((n, m), vs)| Ok((Size::new(n, m).expect("sizes come from puzzles"), mean_vector(&vs)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::fixtures::table1_solution;
    use crate::puzzle::{Clue, RedHerring};

    fn puzzle(items: Vec<PuzzleItem>) -> PuzzleInstance {
        let red_herring_indices = items
            .iter()
            .enumerate()
            .filter(|(_, i)| i.is_herring())
            .map(|(i, _)| i + 1)
            .collect();
        PuzzleInstance {
            id: "p".into(),
            language: "en".into(),
            theme: "houses".into(),
            size: Size::new(2, 3).unwrap(),
            solution: table1_solution(),
            items,
            red_herring_indices,
            seed: 0,
        }
    }

    fn herring(t: RedHerringType) -> PuzzleItem {
        PuzzleItem::Herring(RedHerring {
            herring_type: t,
            solution_attr: None,
            distractor_refs: vec![],
            position: None,
        })
    }

    #[test]
    fn single_clue() {
        let p = puzzle(vec![PuzzleItem::Clue(Clue::found_at("nurse", 2))]);
        let f = normalized_frequencies::<f64>(&p).unwrap();
        assert_eq!(f.get(ItemType::Clue(ClueType::FoundAt)), 1.0);
        assert_eq!(f.sum(), 1.0);
    }

    #[test]
    fn app_a_item_mix() {
        let p = puzzle(vec![
            herring(RedHerringType::HerringFoundAt),
            herring(RedHerringType::Fact),
            herring(RedHerringType::ObjectFact),
            PuzzleItem::Clue(Clue::pair(ClueType::LeftOf, "police_officer", "nurse")),
            herring(RedHerringType::Fact),
            PuzzleItem::Clue(Clue::not_at("handball", 2)),
            PuzzleItem::Clue(Clue::found_at("romance", 2)),
            herring(RedHerringType::HerringNotAt),
        ]);
        let f = normalized_frequencies::<f64>(&p).unwrap();
        assert_eq!(f.get(ItemType::Herring(RedHerringType::Fact)), 2.0 / 8.0);
        assert_eq!(f.get(ItemType::Clue(ClueType::NotAt)), 1.0 / 8.0);
        assert_eq!(f.herring_share(), 5.0 / 8.0);
        assert!((f.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            normalized_frequencies::<f64>(&puzzle(vec![])),
            Err(AnalysisError::EmptyPuzzle(_))
        ));
        assert!(matches!(mean_frequencies::<f64>(&[]), Err(AnalysisError::EmptyGroup)));
    }

    #[test]
    fn mean_of_identical_vectors() {
        let p = puzzle(vec![
            PuzzleItem::Clue(Clue::found_at("nurse", 2)),
            herring(RedHerringType::Friends),
        ]);
        let means = mean_frequencies::<f32>(&[p.clone(), p.clone()]).unwrap();
        assert_eq!(means.len(), 1);
        assert_eq!(means[0].1, normalized_frequencies(&p).unwrap());
    }

    #[test]
    fn type_names_round_trip() {
        for t in ItemType::all() {
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<ItemType>(&json).unwrap(), t);
        }
        assert_eq!(ItemType::all().len(), 22);
    }
}
