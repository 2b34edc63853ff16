//! Zebra puzzle generation and evaluation.
//!
//! Puzzles are generated with a guaranteed unique solution, rendered through
//! language/theme bundles, stored as JSONL datasets, and scored against
//! model answers.
//!
//! ```
//! use zebra_core::{builtin, generate_puzzle, GenerationConfig, Size};
//!
//! let theme = builtin("en", "houses").unwrap();
//! let cfg = GenerationConfig::new(Size::new(3, 3).unwrap(), 2, 7);
//! let puzzle = generate_puzzle(&theme, &cfg, 0).unwrap();
//! assert_eq!(puzzle.red_herring_indices.len(), 2);
//! ```

pub mod analysis;
pub mod csp;
pub mod dataset;
pub mod eval;
pub mod generator;
pub mod puzzle;
pub mod render;
pub mod theme;

pub use analysis::{fit_difficulty, mean_frequencies, normalized_frequencies, ItemType};
pub use csp::{count_solutions, is_informative, AttributeSpace, SolveOutcome};
pub use dataset::{read_dataset, write_dataset, DatasetManifest, DatasetRecord};
pub use eval::stats::{MetricSummary, Scalar};
pub use eval::{aggregate, EvalRecord};
pub use generator::{generate_batch, generate_puzzle, GenerationConfig};
pub use puzzle::{
    clue_holds, AttrId, Clue, ClueType, PuzzleInstance, PuzzleItem, RedHerring, RedHerringType,
    Size, SolutionMatrix,
};
pub use render::{render_prompt, RenderedPuzzle};
pub use theme::{builtin, load_theme, ThemeConfig};

pub type MetricSummaryF64 = eval::stats::MetricSummary<f64>;
pub type MetricSummaryF32 = eval::stats::MetricSummary<f32>;
pub type FrequencyVectorF64 = analysis::FrequencyVector<f64>;
pub type FrequencyVectorF32 = analysis::FrequencyVector<f32>;
pub type DifficultyProfileF64 = analysis::DifficultyProfile<f64>;
pub type DifficultyProfileF32 = analysis::DifficultyProfile<f32>;
pub type RunComparisonF64 = eval::stats::RunComparison<f64>;
