//! Domain types for puzzles, solutions, clues and red herrings.
//!
//! Object positions are 1-based everywhere: position 1 is the leftmost house.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PuzzleError {
    #[error("invalid size {n_objects}x{n_attributes}: need at least 2 objects and 1 attribute")]
    InvalidSize { n_objects: usize, n_attributes: usize },
    #[error("cannot parse size token {0:?}, expected <objects>x<attributes>")]
    SizeToken(String),
    #[error("attribute {0} does not occur in the solution")]
    UnknownAttribute(AttrId),
    #[error("malformed {clue_type} clue: {reason}")]
    MalformedClue { clue_type: ClueType, reason: String },
    #[error("malformed solution: {0}")]
    MalformedSolution(String),
    #[error("malformed puzzle {id}: {reason}")]
    MalformedPuzzle { id: String, reason: String },
}

/// Puzzle dimensions: number of objects (houses) and attributes per object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Size {
    n_objects: usize,
    n_attributes: usize,
}

impl Size {
    pub fn new(n_objects: usize, n_attributes: usize) -> Result<Self, PuzzleError> {
        if n_objects < 2 || n_attributes < 1 {
            return Err(PuzzleError::InvalidSize {
                n_objects,
                n_attributes,
            });
        }
        Ok(Self {
            n_objects,
            n_attributes,
        })
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn cell_count(&self) -> usize {
        self.n_objects * self.n_attributes
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_objects, self.n_attributes)
    }
}

impl FromStr for Size {
    type Err = PuzzleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = s.trim();
        let (objects, attributes) = token
            .split_once(['x', 'X', '×'])
            .ok_or_else(|| PuzzleError::SizeToken(s.to_string()))?;
        let parse = |part: &str| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| PuzzleError::SizeToken(s.to_string()))
        };
        Size::new(parse(objects)?, parse(attributes)?)
    }
}

impl TryFrom<String> for Size {
    type Error = PuzzleError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Size> for String {
    fn from(size: Size) -> String {
        size.to_string()
    }
}

/// Stable identifier of an attribute, unique across all categories of a theme.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttrId(pub String);

impl AttrId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AttrId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClueType {
    FoundAt,
    NotAt,
    SameObject,
    NotSameObject,
    NextTo,
    NotNextTo,
    JustLeftOf,
    JustRightOf,
    LeftOf,
    RightOf,
    Between,
    NotBetween,
    OneBetween,
    MultipleBetween,
}

impl ClueType {
    pub const ALL: [ClueType; 14] = [
        ClueType::FoundAt,
        ClueType::NotAt,
        ClueType::SameObject,
        ClueType::NotSameObject,
        ClueType::NextTo,
        ClueType::NotNextTo,
        ClueType::JustLeftOf,
        ClueType::JustRightOf,
        ClueType::LeftOf,
        ClueType::RightOf,
        ClueType::Between,
        ClueType::NotBetween,
        ClueType::OneBetween,
        ClueType::MultipleBetween,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClueType::FoundAt => "found_at",
            ClueType::NotAt => "not_at",
            ClueType::SameObject => "same_object",
            ClueType::NotSameObject => "not_same_object",
            ClueType::NextTo => "next_to",
            ClueType::NotNextTo => "not_next_to",
            ClueType::JustLeftOf => "just_left_of",
            ClueType::JustRightOf => "just_right_of",
            ClueType::LeftOf => "left_of",
            ClueType::RightOf => "right_of",
            ClueType::Between => "between",
            ClueType::NotBetween => "not_between",
            ClueType::OneBetween => "one_between",
            ClueType::MultipleBetween => "multiple_between",
        }
    }

    /// Number of attribute referents the clue carries.
    pub fn arity(self) -> usize {
        match self {
            ClueType::FoundAt | ClueType::NotAt => 1,
            ClueType::Between | ClueType::NotBetween => 3,
            _ => 2,
        }
    }

    /// Whether the clue type may be used at all for puzzles of `size`.
    ///
    /// Some types are excluded at small sizes where another type already
    /// says the same thing more naturally (e.g. `just_left_of` equals
    /// `left_of` with two houses).
    pub fn is_eligible(self, size: Size) -> bool {
        let n = size.n_objects();
        match self {
            ClueType::SameObject | ClueType::NotSameObject => size.n_attributes() > 1,
            ClueType::NextTo
            | ClueType::NotNextTo
            | ClueType::JustLeftOf
            | ClueType::JustRightOf
            | ClueType::Between
            | ClueType::NotBetween
            | ClueType::OneBetween => n > 2,
            ClueType::MultipleBetween => n > 3,
            ClueType::FoundAt | ClueType::NotAt | ClueType::LeftOf | ClueType::RightOf => true,
        }
    }

    /// Types whose meaning is unchanged when the two referents are swapped.
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            ClueType::SameObject
                | ClueType::NotSameObject
                | ClueType::NextTo
                | ClueType::NotNextTo
                | ClueType::OneBetween
                | ClueType::MultipleBetween
        )
    }

    /// Types whose referents must sit in pairwise distinct categories.
    pub fn requires_distinct_categories(self) -> bool {
        matches!(self, ClueType::SameObject | ClueType::NotSameObject)
    }
}

impl fmt::Display for ClueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClueType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClueType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown clue type {s:?}"))
    }
}

/// Truth value of a clue type's positional constraint.
///
/// `positions` are the 1-based object positions of the referents in clue
/// order; `position` is P for `found_at`/`not_at` and `n_between` the gap
/// for `multiple_between`. Callers guarantee the slice has the right arity.
pub fn relation_holds(
    clue_type: ClueType,
    positions: &[usize],
    position: Option<usize>,
    n_between: Option<usize>,
) -> bool {
    let x = positions[0] as i64;
    let y = || positions[1] as i64;
    let z = || positions[2] as i64;
    match clue_type {
        ClueType::FoundAt => Some(x as usize) == position,
        ClueType::NotAt => Some(x as usize) != position,
        ClueType::SameObject => x == y(),
        ClueType::NotSameObject => x != y(),
        ClueType::NextTo => (x - y()).abs() == 1,
        ClueType::NotNextTo => (x - y()).abs() > 1,
        ClueType::JustLeftOf => y() - x == 1,
        ClueType::JustRightOf => x - y() == 1,
        ClueType::LeftOf => x < y(),
        ClueType::RightOf => x > y(),
        ClueType::Between => {
            let (y, z) = (y(), z());
            (x < y && y < z) || (x > y && y > z)
        }
        ClueType::NotBetween => {
            let (y, z) = (y(), z());
            !((x < y && y < z) || (x > y && y > z)) && x != y && x != z && y != z
        }
        ClueType::OneBetween => (x - y()).abs() == 2,
        ClueType::MultipleBetween => match n_between {
            Some(n) => (x - y()).abs() == n as i64 + 1,
            None => false,
        },
    }
}

/// A real clue: a positional constraint over 1-3 attributes.
///
/// For `between`/`not_between` the referents are `[X, Y, Z]` where Y is
/// the one said to be (or not be) in the middle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clue {
    pub clue_type: ClueType,
    pub attrs: Vec<AttrId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_between: Option<usize>,
}

impl Clue {
    pub fn new(clue_type: ClueType, attrs: Vec<AttrId>) -> Self {
        Self {
            clue_type,
            attrs,
            position: None,
            n_between: None,
        }
    }

    pub fn found_at(attr: impl Into<AttrId>, position: usize) -> Self {
        Self {
            position: Some(position),
            ..Self::new(ClueType::FoundAt, vec![attr.into()])
        }
    }

    pub fn not_at(attr: impl Into<AttrId>, position: usize) -> Self {
        Self {
            position: Some(position),
            ..Self::new(ClueType::NotAt, vec![attr.into()])
        }
    }

    pub fn pair(clue_type: ClueType, x: impl Into<AttrId>, y: impl Into<AttrId>) -> Self {
        Self::new(clue_type, vec![x.into(), y.into()])
    }

    pub fn triple(
        clue_type: ClueType,
        x: impl Into<AttrId>,
        y: impl Into<AttrId>,
        z: impl Into<AttrId>,
    ) -> Self {
        Self::new(clue_type, vec![x.into(), y.into(), z.into()])
    }

    pub fn multiple_between(x: impl Into<AttrId>, y: impl Into<AttrId>, n_between: usize) -> Self {
        Self {
            n_between: Some(n_between),
            ..Self::pair(ClueType::MultipleBetween, x, y)
        }
    }

    /// Checks arity, referent distinctness, size eligibility and the
    /// numeric fields. Category checks need a solution, see [`clue_holds`].
    pub fn validate(&self, size: Size) -> Result<(), PuzzleError> {
        let malformed = |reason: String| PuzzleError::MalformedClue {
            clue_type: self.clue_type,
            reason,
        };
        if !self.clue_type.is_eligible(size) {
            return Err(malformed(format!("not usable for size {size}")));
        }
        if self.attrs.len() != self.clue_type.arity() {
            return Err(malformed(format!(
                "expected {} attributes, got {}",
                self.clue_type.arity(),
                self.attrs.len()
            )));
        }
        let distinct: BTreeSet<_> = self.attrs.iter().collect();
        if distinct.len() != self.attrs.len() {
            return Err(malformed("an attribute is referenced twice".into()));
        }
        let needs_position = matches!(self.clue_type, ClueType::FoundAt | ClueType::NotAt);
        match (needs_position, self.position) {
            (true, None) => return Err(malformed("missing position".into())),
            (true, Some(p)) if p < 1 || p > size.n_objects() => {
                return Err(malformed(format!("position {p} out of range")))
            }
            (false, Some(_)) => return Err(malformed("unexpected position".into())),
            _ => {}
        }
        let needs_gap = self.clue_type == ClueType::MultipleBetween;
        match (needs_gap, self.n_between) {
            (true, None) => return Err(malformed("missing n_between".into())),
            (true, Some(n)) if n < 2 || n + 2 > size.n_objects() => {
                return Err(malformed(format!("n_between {n} out of range")))
            }
            (false, Some(_)) => return Err(malformed("unexpected n_between".into())),
            _ => {}
        }
        Ok(())
    }

    pub fn holds_at(&self, positions: &[usize]) -> bool {
        relation_holds(self.clue_type, positions, self.position, self.n_between)
    }

    /// Key under which logically identical clues compare equal: symmetric
    /// pairs and the outer pair of `between`/`not_between` are sorted.
    pub fn canonical_key(&self) -> Clue {
        let mut key = self.clone();
        if self.clue_type.is_symmetric() {
            key.attrs.sort();
        } else if matches!(self.clue_type, ClueType::Between | ClueType::NotBetween)
            && key.attrs[0] > key.attrs[2]
        {
            key.attrs.swap(0, 2);
        }
        key
    }
}

/// The hidden ground truth. `cells[i][j]` is the attribute of object `i + 1`
/// in category `categories[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionMatrix {
    pub categories: Vec<String>,
    pub cells: Vec<Vec<AttrId>>,
}

impl SolutionMatrix {
    pub fn new(categories: Vec<String>, cells: Vec<Vec<AttrId>>) -> Result<Self, PuzzleError> {
        let solution = Self { categories, cells };
        solution.validate()?;
        Ok(solution)
    }

    pub fn validate(&self) -> Result<(), PuzzleError> {
        let bad = |m: String| Err(PuzzleError::MalformedSolution(m));
        Size::new(self.cells.len(), self.categories.len())?;
        if let Some(row) = self.cells.iter().find(|r| r.len() != self.categories.len()) {
            return bad(format!(
                "row has {} cells, expected {}",
                row.len(),
                self.categories.len()
            ));
        }
        let mut seen = BTreeSet::new();
        for attr in self.cells.iter().flatten() {
            if !seen.insert(attr) {
                return bad(format!("attribute {attr} appears twice"));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> Size {
        Size::new(self.cells.len(), self.categories.len())
            .expect("solution matrices are validated on construction")
    }

    pub fn attribute(&self, object: usize, category: usize) -> &AttrId {
        &self.cells[object - 1][category]
    }

    /// 1-based position and category index of `attr`.
    pub fn locate(&self, attr: &AttrId) -> Option<(usize, usize)> {
        self.cells.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .position(|a| a == attr)
                .map(|j| (i + 1, j))
        })
    }

    pub fn position_of(&self, attr: &AttrId) -> Option<usize> {
        self.locate(attr).map(|(p, _)| p)
    }

    /// Attributes of category `j` in object order.
    pub fn column(&self, category: usize) -> Vec<&AttrId> {
        self.cells.iter().map(|row| &row[category]).collect()
    }

    pub fn contains(&self, attr: &AttrId) -> bool {
        self.locate(attr).is_some()
    }
}

/// Truth value of `clue` against `solution`.
pub fn clue_holds(clue: &Clue, solution: &SolutionMatrix) -> Result<bool, PuzzleError> {
    clue.validate(solution.size())?;
    let mut positions = Vec::with_capacity(clue.attrs.len());
    let mut categories = Vec::with_capacity(clue.attrs.len());
    for attr in &clue.attrs {
        let (p, j) = solution
            .locate(attr)
            .ok_or_else(|| PuzzleError::UnknownAttribute(attr.clone()))?;
        positions.push(p);
        categories.push(j);
    }
    if clue.clue_type.requires_distinct_categories() && categories[0] == categories[1] {
        return Err(PuzzleError::MalformedClue {
            clue_type: clue.clue_type,
            reason: "referents share a category".into(),
        });
    }
    Ok(clue.holds_at(&positions))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedHerringType {
    SameHerring,
    NextToHerring,
    DoubleHerring,
    Fact,
    ObjectFact,
    Friends,
    HerringFoundAt,
    HerringNotAt,
}

impl RedHerringType {
    pub const ALL: [RedHerringType; 8] = [
        RedHerringType::SameHerring,
        RedHerringType::NextToHerring,
        RedHerringType::DoubleHerring,
        RedHerringType::Fact,
        RedHerringType::ObjectFact,
        RedHerringType::Friends,
        RedHerringType::HerringFoundAt,
        RedHerringType::HerringNotAt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RedHerringType::SameHerring => "same_herring",
            RedHerringType::NextToHerring => "next_to_herring",
            RedHerringType::DoubleHerring => "double_herring",
            RedHerringType::Fact => "fact",
            RedHerringType::ObjectFact => "object_fact",
            RedHerringType::Friends => "friends",
            RedHerringType::HerringFoundAt => "herring_found_at",
            RedHerringType::HerringNotAt => "herring_not_at",
        }
    }

    /// Whether the herring names one attribute from the solution.
    pub fn uses_solution_attribute(self) -> bool {
        matches!(
            self,
            RedHerringType::SameHerring
                | RedHerringType::NextToHerring
                | RedHerringType::ObjectFact
                | RedHerringType::Friends
        )
    }

    /// Filler pools the herring draws from, in placeholder order.
    pub fn filler_pools(self) -> &'static [HerringPool] {
        match self {
            RedHerringType::SameHerring => &[HerringPool::Interest],
            RedHerringType::NextToHerring => &[HerringPool::Distractor],
            RedHerringType::DoubleHerring => &[HerringPool::Distractor, HerringPool::Interest],
            RedHerringType::Fact => &[HerringPool::Fact],
            RedHerringType::ObjectFact => &[HerringPool::Fact],
            RedHerringType::Friends => &[HerringPool::Distractor],
            RedHerringType::HerringFoundAt | RedHerringType::HerringNotAt => {
                &[HerringPool::Distractor]
            }
        }
    }

    pub fn uses_position(self) -> bool {
        matches!(
            self,
            RedHerringType::HerringFoundAt | RedHerringType::HerringNotAt
        )
    }
}

impl fmt::Display for RedHerringType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RedHerringType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RedHerringType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown red herring type {s:?}"))
    }
}

/// Theme pools that supply red-herring filler text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HerringPool {
    /// Standalone facts; also usable as "X knows that ..." clauses.
    Fact,
    /// Residents that are not part of the puzzle ("the person with glasses").
    Distractor,
    /// Predicates unrelated to any category ("often sails").
    Interest,
}

impl HerringPool {
    /// Placeholder role used in herring templates.
    pub fn role(self) -> &'static str {
        match self {
            HerringPool::Fact => "f",
            HerringPool::Distractor => "d",
            HerringPool::Interest => "i",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FillerRef {
    pub pool: HerringPool,
    pub id: String,
}

/// A clue-shaped sentence that carries no information about the solution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RedHerring {
    pub herring_type: RedHerringType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_attr: Option<AttrId>,
    pub distractor_refs: Vec<FillerRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

/// Solution attributes mentioned by a herring (never more than one).
pub fn herring_mentioned_attrs(herring: &RedHerring) -> BTreeSet<AttrId> {
    herring.solution_attr.iter().cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PuzzleItem {
    Clue(Clue),
    Herring(RedHerring),
}

impl PuzzleItem {
    pub fn as_clue(&self) -> Option<&Clue> {
        match self {
            PuzzleItem::Clue(c) => Some(c),
            PuzzleItem::Herring(_) => None,
        }
    }

    pub fn is_herring(&self) -> bool {
        matches!(self, PuzzleItem::Herring(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleInstance {
    pub id: String,
    pub language: String,
    pub theme: String,
    pub size: Size,
    pub solution: SolutionMatrix,
    pub items: Vec<PuzzleItem>,
    /// 1-based indices of the red herrings within `items`.
    pub red_herring_indices: Vec<usize>,
    pub seed: u64,
}

impl PuzzleInstance {
    pub fn real_clues(&self) -> Vec<Clue> {
        self.items.iter().filter_map(|i| i.as_clue().cloned()).collect()
    }

    pub fn herrings(&self) -> Vec<&RedHerring> {
        self.items
            .iter()
            .filter_map(|i| match i {
                PuzzleItem::Herring(h) => Some(h),
                PuzzleItem::Clue(_) => None,
            })
            .collect()
    }

    /// Structural checks that need no solver: shape, herring indices and
    /// the truth of every real clue against the stored solution.
    pub fn validate(&self) -> Result<(), PuzzleError> {
        let bad = |reason: String| PuzzleError::MalformedPuzzle {
            id: self.id.clone(),
            reason,
        };
        self.solution.validate()?;
        if self.solution.size() != self.size {
            return Err(bad(format!(
                "solution is {} but puzzle size is {}",
                self.solution.size(),
                self.size
            )));
        }
        let expected: Vec<usize> = self
            .items
            .iter()
            .enumerate()
            .filter(|(_, item)| item.is_herring())
            .map(|(i, _)| i + 1)
            .collect();
        if let Some(&i) = self
            .red_herring_indices
            .iter()
            .find(|&&i| i == 0 || i > self.items.len())
        {
            return Err(bad(format!(
                "red herring index {i} outside 1..={}",
                self.items.len()
            )));
        }
        if expected != self.red_herring_indices {
            return Err(bad(format!(
                "red herring indices {:?} do not match herring items {:?}",
                self.red_herring_indices, expected
            )));
        }
        for clue in self.real_clues() {
            if !clue_holds(&clue, &self.solution)? {
                return Err(bad(format!("clue {clue:?} is false for the solution")));
            }
        }
        for herring in self.herrings() {
            if let Some(attr) = &herring.solution_attr {
                if !self.solution.contains(attr) {
                    return Err(bad(format!("herring names unknown attribute {attr}")));
                }
            }
        }
        Ok(())
    }
}
