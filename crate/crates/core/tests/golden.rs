mod common;

use zebra_core::csp::AttributeSpace;
use zebra_core::generator::prune_clues;
use zebra_core::{builtin, count_solutions, render_prompt};

#[test]
fn app_a_renders_byte_for_byte() {
    let theme = builtin("en", "houses").unwrap();
    let puzzle = common::app_a_puzzle();
    puzzle.validate().unwrap();
    let rendered = render_prompt(&puzzle, &theme).unwrap();
    let text = format!("{}\n", rendered.prompt_text);
    if text != common::GOLDEN_APP_A {
        for (i, (a, b)) in text.lines().zip(common::GOLDEN_APP_A.lines()).enumerate() {
            assert_eq!(a, b, "first difference on line {}", i + 1);
        }
        panic!("line counts differ");
    }
}

#[test]
fn app_a_clues_are_unique_and_minimal() {
    let puzzle = common::app_a_puzzle();
    let space = AttributeSpace::from_solution(&puzzle.solution);
    let clues = puzzle.real_clues();
    let outcome = count_solutions(&space, &clues, 2).unwrap();
    assert_eq!(outcome.count, 1);
    assert_eq!(outcome.witnesses[0], puzzle.solution);
    assert_eq!(prune_clues(&space, &clues).unwrap(), clues);
}
