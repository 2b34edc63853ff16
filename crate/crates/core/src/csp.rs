//! Clue sets as constraint-satisfaction problems.
//!
//! One variable per (category, attribute) holds that attribute's object
//! position; each category is an all-different group. Search is plain
//! backtracking in a fixed order (category-major, attribute-minor, values
//! ascending) with forward checking, so every query is reproducible.

use std::collections::HashMap;

use thiserror::Error;

use crate::puzzle::{AttrId, Clue, ClueType, PuzzleError, Size, SolutionMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CspError {
    #[error("clue references attribute {0} that is not part of the problem")]
    UndeclaredAttribute(AttrId),
    #[error("{clue_type} clue relates two attributes of category {category}")]
    SameCategory { clue_type: ClueType, category: String },
    #[error(transparent)]
    Clue(#[from] PuzzleError),
    #[error("solution count cap must be at least 1")]
    ZeroCap,
    #[error("at most 32 objects are supported, got {0}")]
    TooManyObjects(usize),
}

/// The attributes a puzzle is about, grouped by category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpace {
    categories: Vec<(String, Vec<AttrId>)>,
    index: HashMap<AttrId, (usize, usize)>,
}

impl AttributeSpace {
    pub fn new(categories: Vec<(String, Vec<AttrId>)>) -> Result<Self, PuzzleError> {
        let n_objects = categories.first().map_or(0, |(_, attrs)| attrs.len());
        Size::new(n_objects, categories.len())?;
        let mut index = HashMap::new();
        for (j, (name, attrs)) in categories.iter().enumerate() {
            if attrs.len() != n_objects {
                return Err(PuzzleError::MalformedSolution(format!(
                    "category {name} has {} attributes, expected {n_objects}",
                    attrs.len()
                )));
            }
            for (k, attr) in attrs.iter().enumerate() {
                if index.insert(attr.clone(), (j, k)).is_some() {
                    return Err(PuzzleError::MalformedSolution(format!(
                        "attribute {attr} declared twice"
                    )));
                }
            }
        }
        Ok(Self { categories, index })
    }

    /// The attribute lists shown to the solver: the solution's columns,
    /// each sorted by id so the search order does not leak the answer.
    pub fn from_solution(solution: &SolutionMatrix) -> Self {
        let categories = solution
            .categories
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let mut attrs: Vec<AttrId> = solution.column(j).into_iter().cloned().collect();
                attrs.sort();
                (name.clone(), attrs)
            })
            .collect();
        Self::new(categories).expect("solution matrices are validated on construction")
    }

    /// Placeholder attributes `c{j}a{k}` for solver tests without a theme.
    pub fn synthetic(size: Size) -> Self {
        let categories = (0..size.n_attributes())
            .map(|j| {
                let attrs = (0..size.n_objects())
                    .map(|k| AttrId(format!("c{j}a{k}")))
                    .collect();
                (format!("c{j}"), attrs)
            })
            .collect();
        Self::new(categories).expect("synthetic spaces are well-formed")
    }

    pub fn size(&self) -> Size {
        Size::new(self.categories[0].1.len(), self.categories.len())
            .expect("validated on construction")
    }

    pub fn categories(&self) -> &[(String, Vec<AttrId>)] {
        &self.categories
    }

    /// Category and in-category index of an attribute.
    pub fn locate(&self, attr: &AttrId) -> Option<(usize, usize)> {
        self.index.get(attr).copied()
    }

    fn var_of(&self, attr: &AttrId) -> Option<usize> {
        self.locate(attr)
            .map(|(j, k)| j * self.size().n_objects() + k)
    }
}

/// A clue's constraint, or its logical complement.
///
/// The complement of `not_between` is the complement of its full formula
/// (including the distinctness conjuncts), not the `between` clue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClueConstraint {
    pub clue: Clue,
    pub negated: bool,
}

impl ClueConstraint {
    pub fn holds_at(&self, positions: &[usize]) -> bool {
        self.clue.holds_at(positions) != self.negated
    }
}

impl From<Clue> for ClueConstraint {
    fn from(clue: Clue) -> Self {
        Self {
            clue,
            negated: false,
        }
    }
}

pub fn negate(clue: &Clue) -> ClueConstraint {
    ClueConstraint {
        clue: clue.clone(),
        negated: true,
    }
}

#[derive(Debug, Clone)]
struct Compiled {
    constraint: ClueConstraint,
    vars: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CspProblem {
    space: AttributeSpace,
    constraints: Vec<Compiled>,
    /// Constraint indices touching each variable.
    watches: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    /// Number of solutions found, saturating at the cap.
    pub count: usize,
    /// Up to two distinct solutions, in search order.
    pub witnesses: Vec<SolutionMatrix>,
}

impl CspProblem {
    pub fn new(
        space: &AttributeSpace,
        constraints: impl IntoIterator<Item = ClueConstraint>,
    ) -> Result<Self, CspError> {
        let size = space.size();
        if size.n_objects() > 32 {
            return Err(CspError::TooManyObjects(size.n_objects()));
        }
        let mut compiled = Vec::new();
        let mut watches = vec![Vec::new(); size.cell_count()];
        for constraint in constraints {
            let clue = &constraint.clue;
            clue.validate(size)?;
            let mut vars = Vec::with_capacity(clue.attrs.len());
            for attr in &clue.attrs {
                vars.push(
                    space
                        .var_of(attr)
                        .ok_or_else(|| CspError::UndeclaredAttribute(attr.clone()))?,
                );
            }
            if clue.clue_type.requires_distinct_categories()
                && vars[0] / size.n_objects() == vars[1] / size.n_objects()
            {
                return Err(CspError::SameCategory {
                    clue_type: clue.clue_type,
                    category: space.categories[vars[0] / size.n_objects()].0.clone(),
                });
            }
            for &v in &vars {
                if !watches[v].contains(&compiled.len()) {
                    watches[v].push(compiled.len());
                }
            }
            compiled.push(Compiled { constraint, vars });
        }
        Ok(Self {
            space: space.clone(),
            constraints: compiled,
            watches,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.space.size().cell_count()
    }

    pub fn solve(&self, cap: usize) -> Result<SolveOutcome, CspError> {
        if cap == 0 {
            return Err(CspError::ZeroCap);
        }
        let n = self.space.size().n_objects();
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut search = Search {
            problem: self,
            n_objects: n,
            positions: vec![0; self.variable_count()],
            cap,
            count: 0,
            witnesses: Vec::new(),
        };
        let mut domains = vec![full; self.variable_count()];
        // Unary constraints only ever prune, so apply them up front.
        for c in self.constraints.iter().filter(|c| c.vars.len() == 1) {
            let v = c.vars[0];
            domains[v] = filter_domain(domains[v], |p| c.constraint.holds_at(&[p]));
            if domains[v] == 0 {
                return Ok(SolveOutcome {
                    count: 0,
                    witnesses: Vec::new(),
                });
            }
        }
        search.descend(0, &domains);
        Ok(SolveOutcome {
            count: search.count,
            witnesses: search.witnesses,
        })
    }
}

fn filter_domain(domain: u32, mut keep: impl FnMut(usize) -> bool) -> u32 {
    let mut out = 0;
    let mut rest = domain;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        rest &= rest - 1;
        if keep(bit as usize + 1) {
            out |= 1 << bit;
        }
    }
    out
}

struct Search<'a> {
    problem: &'a CspProblem,
    n_objects: usize,
    /// 1-based position per variable, 0 while unassigned.
    positions: Vec<usize>,
    cap: usize,
    count: usize,
    witnesses: Vec<SolutionMatrix>,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.count >= self.cap
    }

    fn descend(&mut self, var: usize, domains: &[u32]) {
        if var == self.positions.len() {
            self.record();
            return;
        }
        let mut rest = domains[var];
        while rest != 0 && !self.done() {
            let bit = rest.trailing_zeros();
            rest &= rest - 1;
            self.positions[var] = bit as usize + 1;
            let mut next = domains.to_vec();
            next[var] = 1 << bit;
            if self.propagate(var, bit, &mut next) {
                self.descend(var + 1, &next);
            }
            self.positions[var] = 0;
        }
    }

    /// Forward checking after `var` takes position `bit + 1`.
    fn propagate(&mut self, var: usize, bit: u32, domains: &mut [u32]) -> bool {
        let n = self.n_objects;
        let group = var / n * n;
        for (peer, domain) in domains.iter_mut().enumerate().skip(group).take(n) {
            if peer != var && self.positions[peer] == 0 {
                *domain &= !(1 << bit);
                if *domain == 0 {
                    return false;
                }
            }
        }
        let problem = self.problem;
        for &ci in &problem.watches[var] {
            let c = &problem.constraints[ci];
            let mut open = c.vars.iter().filter(|&&v| self.positions[v] == 0);
            match (open.next(), open.next()) {
                (None, _) => {
                    let pos: Vec<usize> = c.vars.iter().map(|&v| self.positions[v]).collect();
                    if !c.constraint.holds_at(&pos) {
                        return false;
                    }
                }
                (Some(&free), None) => {
                    let mut pos: Vec<usize> = c.vars.iter().map(|&v| self.positions[v]).collect();
                    let slot = c.vars.iter().position(|&v| v == free).unwrap();
                    domains[free] = filter_domain(domains[free], |p| {
                        pos[slot] = p;
                        c.constraint.holds_at(&pos)
                    });
                    if domains[free] == 0 {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    fn record(&mut self) {
        self.count += 1;
        if self.witnesses.len() < 2 {
            let n = self.n_objects;
            let space = &self.problem.space;
            let mut cells = vec![Vec::with_capacity(space.categories.len()); n];
            for (j, (_, attrs)) in space.categories.iter().enumerate() {
                let mut column = vec![None; n];
                for (k, attr) in attrs.iter().enumerate() {
                    column[self.positions[j * n + k] - 1] = Some(attr.clone());
                }
                for (row, attr) in cells.iter_mut().zip(column) {
                    row.push(attr.expect("all-different yields a permutation"));
                }
            }
            let categories = space.categories.iter().map(|(c, _)| c.clone()).collect();
            self.witnesses.push(
                SolutionMatrix::new(categories, cells).expect("search yields valid matrices"),
            );
        }
    }
}

/// Number of solutions of `clues` over `space`, saturating at `cap`.
pub fn count_solutions(
    space: &AttributeSpace,
    clues: &[Clue],
    cap: usize,
) -> Result<SolveOutcome, CspError> {
    CspProblem::new(space, clues.iter().cloned().map(ClueConstraint::from))?.solve(cap)
}

/// Whether adding `candidate` to `existing` would remove at least one
/// solution. Decided by a single satisfiability query on
/// `existing ∧ ¬candidate`, which stays fast even when `existing` admits
/// (n!)^m solutions.
pub fn is_informative(
    space: &AttributeSpace,
    existing: &[Clue],
    candidate: &Clue,
) -> Result<bool, CspError> {
    let constraints = existing
        .iter()
        .cloned()
        .map(ClueConstraint::from)
        .chain(std::iter::once(negate(candidate)));
    Ok(CspProblem::new(space, constraints)?.solve(1)?.count > 0)
}
