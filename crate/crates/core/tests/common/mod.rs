//! Fixtures and brute-force oracles shared by the integration tests.
//! Nothing here calls into the solver or the scorer under test.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use zebra_core::puzzle::{FillerRef, HerringPool};
use zebra_core::{
    AttrId, Clue, ClueType, PuzzleInstance, PuzzleItem, RedHerring, RedHerringType, Size,
    SolutionMatrix,
};

pub const GOLDEN_APP_A: &str = include_str!("../golden/app_a_en.txt");

pub fn table1_solution() -> SolutionMatrix {
    SolutionMatrix::new(
        vec!["jobs".into(), "book_genres".into(), "hobbies".into()],
        vec![
            vec!["police_officer".into(), "fantasy".into(), "handball".into()],
            vec!["nurse".into(), "romance".into(), "bouldering".into()],
        ],
    )
    .unwrap()
}

fn herring(
    herring_type: RedHerringType,
    solution_attr: Option<&str>,
    pool: HerringPool,
    filler: &str,
    position: Option<usize>,
) -> PuzzleItem {
    PuzzleItem::Herring(RedHerring {
        herring_type,
        solution_attr: solution_attr.map(AttrId::from),
        distractor_refs: vec![FillerRef {
            pool,
            id: filler.into(),
        }],
        position,
    })
}

/// The 2x3 example puzzle: three real clues and five herrings.
pub fn app_a_puzzle() -> PuzzleInstance {
    use HerringPool::Distractor;
    use RedHerringType::*;
    let items = vec![
        herring(HerringFoundAt, None, Distractor, "guinea_pig", Some(2)),
        herring(ObjectFact, Some("handball"), HerringPool::Fact, "snails", None),
        herring(ObjectFact, Some("handball"), HerringPool::Fact, "herrings", None),
        PuzzleItem::Clue(Clue::pair(ClueType::LeftOf, "police_officer", "nurse")),
        herring(Fact, None, HerringPool::Fact, "cars", None),
        PuzzleItem::Clue(Clue::not_at("handball", 2)),
        PuzzleItem::Clue(Clue::found_at("romance", 2)),
        herring(HerringNotAt, None, Distractor, "glasses", Some(1)),
    ];
    PuzzleInstance {
        id: "en-houses-2x3-app-a".into(),
        language: "en".into(),
        theme: "houses".into(),
        size: Size::new(2, 3).unwrap(),
        solution: table1_solution(),
        items,
        red_herring_indices: vec![1, 2, 3, 5, 8],
        seed: 0,
    }
}

/// Positional constraint of each clue type, written out from the
/// clue-type table. Positions are 1-based.
pub fn table_relation(t: ClueType, pos: &[i64], p: Option<usize>, gap: Option<usize>) -> bool {
    let x = pos[0];
    match t {
        ClueType::FoundAt => x == p.unwrap() as i64,
        ClueType::NotAt => x != p.unwrap() as i64,
        ClueType::SameObject => x == pos[1],
        ClueType::NotSameObject => x != pos[1],
        ClueType::NextTo => x == pos[1] - 1 || x == pos[1] + 1,
        ClueType::NotNextTo => x != pos[1] - 1 && x != pos[1] + 1 && x != pos[1],
        ClueType::JustLeftOf => x + 1 == pos[1],
        ClueType::JustRightOf => x == pos[1] + 1,
        ClueType::LeftOf => x < pos[1],
        ClueType::RightOf => x > pos[1],
        ClueType::Between => (x < pos[1] && pos[1] < pos[2]) || (x > pos[1] && pos[1] > pos[2]),
        ClueType::NotBetween => {
            let (y, z) = (pos[1], pos[2]);
            let between = (x < y && y < z) || (x > y && y > z);
            !between && x != y && x != z && y != z
        }
        ClueType::OneBetween => (x - pos[1]).abs() == 2,
        ClueType::MultipleBetween => (x - pos[1]).abs() == gap.unwrap() as i64 + 1,
    }
}

/// Attribute `k` of category `j` in a synthetic space.
pub fn synthetic_attr(j: usize, k: usize) -> AttrId {
    AttrId(format!("c{j}a{k}"))
}

fn parse_synthetic(attr: &AttrId) -> (usize, usize) {
    let s = attr.as_str();
    let a = s.find('a').unwrap();
    (s[1..a].parse().unwrap(), s[a + 1..].parse().unwrap())
}

fn permutations(n: usize) -> Vec<Vec<i64>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for i in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(i, n as i64);
            out.push(p);
        }
    }
    out
}

fn gather(pos: &[Vec<i64>], refs: &[(usize, usize)]) -> [i64; 3] {
    let mut p = [0; 3];
    for (slot, &(j, k)) in p.iter_mut().zip(refs) {
        *slot = pos[j][k];
    }
    p
}

/// Every assignment of positions, one permutation per category, that
/// satisfies `clues`. `keep` sees `positions[j][k]` and decides whether to
/// count the assignment.
pub fn enumerate(
    size: Size,
    clues: &[Clue],
    mut keep: impl FnMut(&[Vec<i64>]) -> bool,
) -> usize {
    let (n, m) = (size.n_objects(), size.n_attributes());
    let perms = permutations(n);
    let parsed: Vec<Vec<(usize, usize)>> = clues
        .iter()
        .map(|c| c.attrs.iter().map(parse_synthetic).collect())
        .collect();
    let mut odometer = vec![0usize; m];
    let mut count = 0;
    let mut pos = vec![vec![0i64; n]; m];
    loop {
        for j in 0..m {
            pos[j].copy_from_slice(&perms[odometer[j]]);
        }
        let ok = clues.iter().zip(&parsed).all(|(c, refs)| {
            let p = gather(&pos, refs);
            table_relation(c.clue_type, &p[..refs.len()], c.position, c.n_between)
        });
        if ok && keep(&pos) {
            count += 1;
        }
        let mut j = 0;
        loop {
            if j == m {
                return count;
            }
            odometer[j] += 1;
            if odometer[j] < perms.len() {
                break;
            }
            odometer[j] = 0;
            j += 1;
        }
    }
}

pub fn brute_count(size: Size, clues: &[Clue]) -> usize {
    enumerate(size, clues, |_| true)
}

/// Whether some assignment satisfies `existing` but violates `candidate`.
pub fn brute_informative(size: Size, existing: &[Clue], candidate: &Clue) -> bool {
    let refs: Vec<(usize, usize)> = candidate.attrs.iter().map(parse_synthetic).collect();
    enumerate(size, existing, |pos| {
        let p = gather(pos, &refs);
        !table_relation(candidate.clue_type, &p[..refs.len()], candidate.position, candidate.n_between)
    }) > 0
}

pub fn space_size(size: Size) -> u64 {
    let f = (1..=size.n_objects() as u64).fold(1u64, |a, b| a.saturating_mul(b));
    f.saturating_pow(size.n_attributes() as u32)
}

/// A random well-formed clue over a synthetic space.
pub fn random_clue<R: Rng>(size: Size, rng: &mut R) -> Clue {
    let (n, m) = (size.n_objects(), size.n_attributes());
    let eligible: Vec<ClueType> = ClueType::ALL
        .into_iter()
        .filter(|t| t.is_eligible(size))
        .collect();
    let t = *eligible.choose(rng).unwrap();
    let mut attrs: Vec<(usize, usize)> = Vec::new();
    while attrs.len() < t.arity() {
        let a = (rng.gen_range(0..m), rng.gen_range(0..n));
        if attrs.contains(&a) {
            continue;
        }
        if matches!(t, ClueType::SameObject | ClueType::NotSameObject)
            && attrs.first().is_some_and(|f| f.0 == a.0)
        {
            continue;
        }
        attrs.push(a);
    }
    let mut clue = Clue::new(t, attrs.iter().map(|&(j, k)| synthetic_attr(j, k)).collect());
    if matches!(t, ClueType::FoundAt | ClueType::NotAt) {
        clue.position = Some(rng.gen_range(1..=n));
    }
    if t == ClueType::MultipleBetween {
        clue.n_between = Some(rng.gen_range(2..=n - 2));
    }
    clue
}

/// Highest number of matching cells over all row orders, by recursion
/// over which response row fills each expected row.
pub fn exhaustive_best_cells(response: &[Vec<String>], expected: &[Vec<String>]) -> usize {
    fn go(r: &[Vec<String>], e: &[Vec<String>], row: usize, used: &mut Vec<bool>) -> usize {
        if row == e.len() {
            return 0;
        }
        let mut best = 0;
        for i in 0..r.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let hits = r[i].iter().zip(&e[row]).filter(|(a, b)| a == b).count();
            best = best.max(hits + go(r, e, row + 1, used));
            used[i] = false;
        }
        best
    }
    go(response, expected, 0, &mut vec![false; response.len()])
}

/// Whole-word, case-insensitive containment.
pub fn mentions(text: &str, phrase: &str) -> bool {
    let text = text.to_lowercase();
    let phrase = phrase.to_lowercase();
    let is_word = |c: char| c.is_alphanumeric();
    text.match_indices(&phrase).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + phrase.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}
