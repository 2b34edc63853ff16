//! Puzzle generation.
//!
//! A puzzle is built in five steps: sample a hidden solution, propose true
//! clues until exactly one solution remains (keeping only those that rule
//! something out), prune the clue set to minimality, add red herrings, and
//! shuffle. Every random choice flows from a seed derived from
//! `(master_seed, puzzle_index, attempt)`, so a configuration reproduces its
//! dataset exactly regardless of thread count.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::csp::{count_solutions, is_informative, AttributeSpace, CspError};
use crate::puzzle::{
    AttrId, Clue, ClueType, FillerRef, HerringPool, PuzzleInstance, PuzzleItem, RedHerring,
    RedHerringType, Size, SolutionMatrix,
};
use crate::render::{render_herring, RenderError};
use crate::theme::{validate_for_size, Finding, PoolEntry, ThemeConfig};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("theme cannot produce puzzles of this size: {0:?}")]
    InsufficientTheme(Vec<Finding>),
    #[error("no clue type has positive weight and is usable for size {0}")]
    NoEligibleClueType(Size),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("no unique solution after {0} clue proposals")]
    Exhausted(usize),
    #[error("clue set admits {0} solutions, expected exactly one")]
    NotUnique(usize),
    #[error("cannot draw red herrings: {0}")]
    InsufficientPool(String),
    #[error("cannot keep {keep} red herrings, the puzzle has {available}")]
    KeepTooLarge { keep: usize, available: usize },
    #[error("puzzle {index}: gave up after {attempts} attempts")]
    AttemptsExhausted { index: usize, attempts: usize },
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub size: Size,
    pub n_red_herrings: usize,
    pub clue_weights: BTreeMap<ClueType, f64>,
    pub herring_weights: BTreeMap<RedHerringType, f64>,
    pub master_seed: u64,
    /// Clue proposals per attempt before the solution is resampled.
    pub max_proposals: usize,
    /// Attempts (fresh solutions) per puzzle index.
    pub max_attempts: usize,
    /// Whether positional clues may relate two attributes of one category
    /// ("There is one house between the coffee drinker and the milk drinker").
    pub allow_same_category_pairs: bool,
}

impl GenerationConfig {
    /// Equal weights for every clue and red-herring type.
    pub fn new(size: Size, n_red_herrings: usize, master_seed: u64) -> Self {
        Self {
            size,
            n_red_herrings,
            clue_weights: ClueType::ALL.into_iter().map(|t| (t, 1.0)).collect(),
            herring_weights: RedHerringType::ALL.into_iter().map(|t| (t, 1.0)).collect(),
            master_seed,
            max_proposals: 1000,
            max_attempts: 20,
            allow_same_category_pairs: true,
        }
    }

    pub fn clue_weight(&self, clue_type: ClueType) -> f64 {
        self.clue_weights.get(&clue_type).copied().unwrap_or(0.0)
    }

    pub fn herring_weight(&self, herring_type: RedHerringType) -> f64 {
        self.herring_weights.get(&herring_type).copied().unwrap_or(0.0)
    }

    /// Clue types that may be drawn for this configuration.
    pub fn eligible_clue_types(&self) -> Vec<ClueType> {
        ClueType::ALL
            .into_iter()
            .filter(|&t| self.clue_weight(t) > 0.0 && t.is_eligible(self.size))
            .filter(|&t| {
                self.allow_same_category_pairs
                    || t.requires_distinct_categories()
                    || t.arity() == 1
                    || self.size.n_attributes() >= t.arity()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let weights = self
            .clue_weights
            .values()
            .chain(self.herring_weights.values());
        if let Some(w) = weights.into_iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(GenerationError::InvalidConfig(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        if self.max_proposals == 0 || self.max_attempts == 0 {
            return Err(GenerationError::InvalidConfig(
                "max_proposals and max_attempts must be positive".into(),
            ));
        }
        if self.eligible_clue_types().is_empty() {
            return Err(GenerationError::NoEligibleClueType(self.size));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one generation attempt, a pure function of its inputs.
pub fn derive_seed(master_seed: u64, index: u64, attempt: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ index) ^ attempt.rotate_left(32))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws the hidden solution: categories without replacement (listed in
/// naturalness order), then attributes without replacement in random
/// object order.
pub fn sample_solution<R: Rng + ?Sized>(
    theme: &ThemeConfig,
    size: Size,
    rng: &mut R,
) -> Result<SolutionMatrix, GenerationError> {
    let findings = validate_for_size(theme, size);
    if !findings.is_empty() {
        return Err(GenerationError::InsufficientTheme(findings));
    }
    let candidates: Vec<_> = theme
        .categories
        .iter()
        .filter(|c| c.attributes.len() >= size.n_objects())
        .collect();
    let mut chosen: Vec<_> = candidates
        .choose_multiple(rng, size.n_attributes())
        .copied()
        .collect();
    chosen.sort_by_key(|c| c.naturalness_rank);

    let mut cells = vec![Vec::with_capacity(size.n_attributes()); size.n_objects()];
    for category in &chosen {
        let mut attrs: Vec<&AttrId> = category
            .attributes
            .choose_multiple(rng, size.n_objects())
            .map(|a| &a.id)
            .collect();
        attrs.shuffle(rng);
        for (row, attr) in cells.iter_mut().zip(attrs) {
            row.push(attr.clone());
        }
    }
    let categories = chosen.iter().map(|c| c.id.clone()).collect();
    SolutionMatrix::new(categories, cells)
        .map_err(|e| GenerationError::InvalidConfig(e.to_string()))
}

/// Distinct category indices when `distinct`, independent draws otherwise.
fn pick_categories<R: Rng + ?Sized>(rng: &mut R, m: usize, count: usize, distinct: bool) -> Vec<usize> {
    if distinct {
        rand::seq::index::sample(rng, m, count).into_vec()
    } else {
        (0..count).map(|_| rng.gen_range(0..m)).collect()
    }
}

fn two_distinct<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let v = rand::seq::index::sample(rng, n, 2).into_vec();
    (v[0], v[1])
}

/// Draws one clue that is true for `solution`.
///
/// The type is drawn by weight among eligible types; objects and categories
/// are then drawn uniformly among the choices the type's constraint allows.
pub fn propose_clue<R: Rng + ?Sized>(
    solution: &SolutionMatrix,
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<Clue, GenerationError> {
    let size = solution.size();
    let types = cfg.eligible_clue_types();
    if types.is_empty() {
        return Err(GenerationError::NoEligibleClueType(size));
    }
    let weights: Vec<f64> = types.iter().map(|&t| cfg.clue_weight(t)).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| GenerationError::InvalidConfig(e.to_string()))?;
    let clue_type = types[dist.sample(rng)];

    let n = size.n_objects();
    let m = size.n_attributes();
    let distinct = !cfg.allow_same_category_pairs;
    let at = |object: usize, category: usize| solution.cells[object][category].clone();

    let pair = |rng: &mut R, x: usize, y: usize| {
        let c = pick_categories(rng, m, 2, distinct);
        (at(x, c[0]), at(y, c[1]))
    };
    let maybe_swap = |rng: &mut R, a: usize, b: usize| if rng.gen_bool(0.5) { (b, a) } else { (a, b) };

    let clue = match clue_type {
        ClueType::FoundAt => {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..m));
            Clue::found_at(at(i, j), i + 1)
        }
        ClueType::NotAt => {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..m));
            let mut p = rng.gen_range(0..n - 1);
            if p >= i {
                p += 1;
            }
            Clue::not_at(at(i, j), p + 1)
        }
        ClueType::SameObject => {
            let i = rng.gen_range(0..n);
            let c = pick_categories(rng, m, 2, true);
            Clue::pair(clue_type, at(i, c[0]), at(i, c[1]))
        }
        ClueType::NotSameObject => {
            let (i1, i2) = two_distinct(rng, n);
            let c = pick_categories(rng, m, 2, true);
            Clue::pair(clue_type, at(i1, c[0]), at(i2, c[1]))
        }
        ClueType::NextTo | ClueType::OneBetween | ClueType::MultipleBetween => {
            let gap = match clue_type {
                ClueType::NextTo => 1,
                ClueType::OneBetween => 2,
                _ => rng.gen_range(2..=n - 2) + 1,
            };
            let i = rng.gen_range(0..n - gap);
            let (a, b) = maybe_swap(rng, i, i + gap);
            let (x, y) = pair(rng, a, b);
            match clue_type {
                ClueType::MultipleBetween => Clue::multiple_between(x, y, gap - 1),
                _ => Clue::pair(clue_type, x, y),
            }
        }
        ClueType::NotNextTo => {
            let (a, b) = loop {
                let (a, b) = two_distinct(rng, n);
                if a.abs_diff(b) > 1 {
                    break (a, b);
                }
            };
            let (x, y) = pair(rng, a, b);
            Clue::pair(clue_type, x, y)
        }
        ClueType::JustLeftOf | ClueType::JustRightOf => {
            let i = rng.gen_range(0..n - 1);
            let (a, b) = if clue_type == ClueType::JustLeftOf {
                (i, i + 1)
            } else {
                (i + 1, i)
            };
            let (x, y) = pair(rng, a, b);
            Clue::pair(clue_type, x, y)
        }
        ClueType::LeftOf | ClueType::RightOf => {
            let (a, b) = two_distinct(rng, n);
            let (lo, hi) = (a.min(b), a.max(b));
            let (a, b) = if clue_type == ClueType::LeftOf {
                (lo, hi)
            } else {
                (hi, lo)
            };
            let (x, y) = pair(rng, a, b);
            Clue::pair(clue_type, x, y)
        }
        ClueType::Between | ClueType::NotBetween => {
            let mut p = rand::seq::index::sample(rng, n, 3).into_vec();
            p.sort_unstable();
            let (outer_a, middle, outer_b) = if clue_type == ClueType::Between {
                (p[0], p[1], p[2])
            } else if rng.gen_bool(0.5) {
                (p[1], p[0], p[2])
            } else {
                (p[0], p[2], p[1])
            };
            let (a, b) = maybe_swap(rng, outer_a, outer_b);
            let c = pick_categories(rng, m, 3, distinct);
            Clue::triple(clue_type, at(a, c[0]), at(middle, c[1]), at(b, c[2]))
        }
    };
    debug_assert!(crate::puzzle::clue_holds(&clue, solution).unwrap_or(false));
    Ok(clue)
}

/// Proposes clues until `solution` is the only one left. A proposal is kept
/// only if it removes at least one remaining solution; logical duplicates of
/// earlier proposals are skipped without solver work.
pub fn grow_clue_set<R: Rng + ?Sized>(
    solution: &SolutionMatrix,
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<Vec<Clue>, GenerationError> {
    let space = AttributeSpace::from_solution(solution);
    if count_solutions(&space, &[], 2)?.count == 1 {
        return Ok(Vec::new());
    }
    let mut kept = Vec::new();
    let mut seen = HashSet::new();
    for _ in 0..cfg.max_proposals {
        let clue = propose_clue(solution, cfg, rng)?;
        if !seen.insert(clue.canonical_key()) {
            continue;
        }
        if is_informative(&space, &kept, &clue)? {
            kept.push(clue);
            if count_solutions(&space, &kept, 2)?.count == 1 {
                return Ok(kept);
            }
        }
    }
    Err(GenerationError::Exhausted(cfg.max_proposals))
}

/// Single pass in the given order: drop each clue unless dropping it lets a
/// second solution in.
pub fn prune_clues(space: &AttributeSpace, clues: &[Clue]) -> Result<Vec<Clue>, GenerationError> {
    let count = count_solutions(space, clues, 2)?.count;
    if count != 1 {
        return Err(GenerationError::NotUnique(count));
    }
    let mut active = vec![true; clues.len()];
    for i in 0..clues.len() {
        active[i] = false;
        let remaining: Vec<Clue> = clues
            .iter()
            .zip(&active)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c.clone())
            .collect();
        if count_solutions(space, &remaining, 2)?.count >= 2 {
            active[i] = true;
        }
    }
    Ok(clues
        .iter()
        .zip(&active)
        .filter(|(_, &on)| on)
        .map(|(c, _)| c.clone())
        .collect())
}

/// Whether `needle` occurs in `haystack` as a whole word, ignoring case.
pub fn contains_word(haystack: &str, needle: &str) -> bool {
    let haystack = haystack.to_lowercase();
    let needle = needle.to_lowercase();
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(&needle).any(|(start, _)| {
        let before = haystack[..start].chars().next_back();
        let after = haystack[start + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Whether a filler's text could be read as one of the puzzle's attributes.
pub fn filler_collides(entry: &PoolEntry, theme: &ThemeConfig, solution: &SolutionMatrix) -> bool {
    solution.cells.iter().flatten().any(|attr| {
        let Some((_, def)) = theme.attribute(attr) else {
            return false;
        };
        entry.forms.values().any(|text| {
            contains_word(text, &def.name)
                || def.forms.values().any(|form| form.eq_ignore_ascii_case(text))
        })
    })
}

/// Draws `n` red herrings with pairwise distinct text. Each names at most one
/// solution attribute, and no filler may read as an attribute of the puzzle.
pub fn generate_red_herrings<R: Rng + ?Sized>(
    solution: &SolutionMatrix,
    theme: &ThemeConfig,
    n: usize,
    cfg: &GenerationConfig,
    rng: &mut R,
) -> Result<Vec<RedHerring>, GenerationError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let pools: BTreeMap<HerringPool, Vec<&PoolEntry>> =
        [HerringPool::Fact, HerringPool::Distractor, HerringPool::Interest]
            .into_iter()
            .map(|pool| {
                let usable = theme
                    .herring_pools
                    .pool(pool)
                    .iter()
                    .filter(|e| !filler_collides(e, theme, solution))
                    .collect();
                (pool, usable)
            })
            .collect();
    let types: Vec<RedHerringType> = RedHerringType::ALL
        .into_iter()
        .filter(|&t| cfg.herring_weight(t) > 0.0)
        .filter(|t| t.filler_pools().iter().all(|p| !pools[p].is_empty()))
        .collect();
    if types.is_empty() {
        return Err(GenerationError::InsufficientPool(
            "no red herring type has positive weight and usable filler pools".into(),
        ));
    }
    let weights: Vec<f64> = types.iter().map(|&t| cfg.herring_weight(t)).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| GenerationError::InvalidConfig(e.to_string()))?;
    let attrs: Vec<&AttrId> = solution.cells.iter().flatten().collect();
    let size = solution.size();

    let mut herrings = Vec::with_capacity(n);
    let mut texts = BTreeSet::new();
    let budget = 100 * n + 100;
    for _ in 0..budget {
        if herrings.len() == n {
            break;
        }
        let herring_type = types[dist.sample(rng)];
        let solution_attr = herring_type
            .uses_solution_attribute()
            .then(|| (*attrs.choose(rng).expect("solutions are never empty")).clone());
        let distractor_refs = herring_type
            .filler_pools()
            .iter()
            .map(|&pool| FillerRef {
                pool,
                id: pools[&pool]
                    .choose(rng)
                    .expect("checked non-empty")
                    .id
                    .clone(),
            })
            .collect();
        let position = herring_type
            .uses_position()
            .then(|| rng.gen_range(1..=size.n_objects()));
        let herring = RedHerring {
            herring_type,
            solution_attr,
            distractor_refs,
            position,
        };
        if texts.insert(render_herring(&herring, theme)?) {
            herrings.push(herring);
        }
    }
    if herrings.len() < n {
        return Err(GenerationError::InsufficientPool(format!(
            "only {} distinct red herrings could be drawn, {n} requested",
            herrings.len()
        )));
    }
    Ok(herrings)
}

/// Shuffles clues and herrings together and records the herring indices.
#[allow(clippy::too_many_arguments)]
pub fn assemble_puzzle<R: Rng + ?Sized>(
    id: String,
    theme: &ThemeConfig,
    solution: SolutionMatrix,
    clues: Vec<Clue>,
    herrings: Vec<RedHerring>,
    seed: u64,
    rng: &mut R,
) -> PuzzleInstance {
    let mut items: Vec<PuzzleItem> = clues
        .into_iter()
        .map(PuzzleItem::Clue)
        .chain(herrings.into_iter().map(PuzzleItem::Herring))
        .collect();
    items.shuffle(rng);
    let red_herring_indices = herring_indices(&items);
    PuzzleInstance {
        id,
        language: theme.language.clone(),
        theme: theme.theme.clone(),
        size: solution.size(),
        solution,
        items,
        red_herring_indices,
        seed,
    }
}

fn herring_indices(items: &[PuzzleItem]) -> Vec<usize> {
    items
        .iter()
        .enumerate()
        .filter(|(_, item)| item.is_herring())
        .map(|(i, _)| i + 1)
        .collect()
}

/// Copy of `puzzle` keeping a uniform random subset of `keep` herrings.
/// Surviving items keep their relative order; real clues are untouched.
pub fn derive_reduced_variants<R: Rng + ?Sized>(
    puzzle: &PuzzleInstance,
    keep: usize,
    rng: &mut R,
) -> Result<PuzzleInstance, GenerationError> {
    let available = puzzle.red_herring_indices.len();
    if keep > available {
        return Err(GenerationError::KeepTooLarge { keep, available });
    }
    let kept: BTreeSet<usize> = rand::seq::index::sample(rng, available, keep)
        .into_iter()
        .map(|k| puzzle.red_herring_indices[k])
        .collect();
    let items: Vec<PuzzleItem> = puzzle
        .items
        .iter()
        .enumerate()
        .filter(|(i, item)| !item.is_herring() || kept.contains(&(i + 1)))
        .map(|(_, item)| item.clone())
        .collect();
    Ok(PuzzleInstance {
        red_herring_indices: herring_indices(&items),
        items,
        ..puzzle.clone()
    })
}

/// Seed used to pick which herrings a reduced variant keeps.
pub fn reduction_seed(puzzle_seed: u64, keep: usize) -> u64 {
    derive_seed(puzzle_seed, keep as u64, 0x7265_6475_6365)
}

pub fn puzzle_id(theme: &ThemeConfig, size: Size, index: usize) -> String {
    format!("{}-{}-{}-{:05}", theme.language, theme.theme, size, index)
}

/// Generates puzzle number `index`, resampling the solution with the next
/// derived seed whenever the clue loop runs out of proposals.
pub fn generate_puzzle(
    theme: &ThemeConfig,
    cfg: &GenerationConfig,
    index: usize,
) -> Result<PuzzleInstance, GenerationError> {
    cfg.validate()?;
    for attempt in 0..cfg.max_attempts {
        let seed = derive_seed(cfg.master_seed, index as u64, attempt as u64);
        let mut rng = rng_from_seed(seed);
        let solution = sample_solution(theme, cfg.size, &mut rng)?;
        let clues = match grow_clue_set(&solution, cfg, &mut rng) {
            Ok(clues) => clues,
            Err(GenerationError::Exhausted(n)) => {
                log::debug!("puzzle {index} attempt {attempt}: exhausted after {n} proposals");
                continue;
            }
            Err(e) => return Err(e),
        };
        let space = AttributeSpace::from_solution(&solution);
        let clues = prune_clues(&space, &clues)?;
        let herrings = generate_red_herrings(&solution, theme, cfg.n_red_herrings, cfg, &mut rng)?;
        return Ok(assemble_puzzle(
            puzzle_id(theme, cfg.size, index),
            theme,
            solution,
            clues,
            herrings,
            seed,
            &mut rng,
        ));
    }
    Err(GenerationError::AttemptsExhausted {
        index,
        attempts: cfg.max_attempts,
    })
}

/// Puzzles `0..count`, generated on up to `jobs` threads (0 = all cores).
pub fn generate_batch(
    theme: &ThemeConfig,
    cfg: &GenerationConfig,
    count: usize,
    jobs: usize,
) -> Result<Vec<PuzzleInstance>, GenerationError> {
    cfg.validate()?;
    let findings = validate_for_size(theme, cfg.size);
    if !findings.is_empty() {
        return Err(GenerationError::InsufficientTheme(findings));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| GenerationError::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|index| generate_puzzle(theme, cfg, index))
            .collect()
    })
}
