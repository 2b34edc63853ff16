//! Means, standard deviations and standard errors of accuracy scores.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::puzzle::Size;

/// Floating-point type the statistics and regression are computed in.
pub trait Scalar: Float + FromPrimitive + Debug + Send + Sync + 'static {}

impl<T: Float + FromPrimitive + Debug + Send + Sync + 'static> Scalar for T {}

pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 converts to any float type")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("runs cover different sizes: {0}")]
    SizeMismatch(String),
}

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + x);
    Some(sum / T::from_usize(xs.len())?)
}

/// `sqrt(m (1 - m))` for a mean `m` of 0/1 scores.
pub fn bernoulli_std<T: Scalar>(m: T) -> T {
    (m * (T::one() - m)).max(T::zero()).sqrt()
}

/// Standard deviation with divisor `N - 1`; `None` below two values and
/// exactly zero when all values are equal.
pub fn sample_std<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Some(T::zero());
    }
    let m = mean(xs)?;
    let ss = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m) * (x - m));
    Some((ss / T::from_usize(xs.len() - 1)?).sqrt())
}

/// Standard deviation of a mean of `n` values.
pub fn standard_error<T: Scalar>(std: T, n: usize) -> T {
    std / T::from_usize(n).expect("counts fit in a float").sqrt()
}

/// Standard deviation of a difference of two independent means.
pub fn combined_std<T: Scalar>(a: T, b: T) -> T {
    (a * a + b * b).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub n_puzzles: usize,
    pub mean_a_puzzle: T,
    pub mean_a_cell: T,
    pub mean_a_best_cell: T,
    /// Bernoulli standard deviation of the puzzle-level scores.
    pub std_a_puzzle: T,
    pub std_a_cell: T,
    pub std_a_best_cell: T,
    pub se_a_puzzle: T,
    pub se_a_cell: T,
    pub se_a_best_cell: T,
}

/// Summary of per-puzzle scores given as `(a_puzzle, a_cell, a_best_cell)`.
pub fn summarize<T: Scalar>(scores: &[(T, T, T)]) -> Result<MetricSummary<T>, StatsError> {
    let n = scores.len();
    if n < 2 {
        return Err(StatsError::TooFewRecords(n));
    }
    let puzzle: Vec<T> = scores.iter().map(|s| s.0).collect();
    let cell: Vec<T> = scores.iter().map(|s| s.1).collect();
    let best: Vec<T> = scores.iter().map(|s| s.2).collect();
    let mean_a_puzzle = mean(&puzzle).expect("n >= 2");
    let std_a_puzzle = bernoulli_std(mean_a_puzzle);
    let std_a_cell = sample_std(&cell).expect("n >= 2");
    let std_a_best_cell = sample_std(&best).expect("n >= 2");
    Ok(MetricSummary {
        n_puzzles: n,
        mean_a_puzzle,
        mean_a_cell: mean(&cell).expect("n >= 2"),
        mean_a_best_cell: mean(&best).expect("n >= 2"),
        std_a_puzzle,
        std_a_cell,
        std_a_best_cell,
        se_a_puzzle: standard_error(std_a_puzzle, n),
        se_a_cell: standard_error(std_a_cell, n),
        se_a_best_cell: standard_error(std_a_best_cell, n),
    })
}

/// Which accuracy a comparison is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    APuzzle,
    ACell,
    ABestCell,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::APuzzle, Metric::ACell, Metric::ABestCell];

    pub fn name(self) -> &'static str {
        match self {
            Metric::APuzzle => "a_puzzle",
            Metric::ACell => "a_cell",
            Metric::ABestCell => "a_best_cell",
        }
    }

    /// `(mean, standard error)` of this metric.
    pub fn of<T: Copy>(self, s: &MetricSummary<T>) -> (T, T) {
        match self {
            Metric::APuzzle => (s.mean_a_puzzle, s.se_a_puzzle),
            Metric::ACell => (s.mean_a_cell, s.se_a_cell),
            Metric::ABestCell => (s.mean_a_best_cell, s.se_a_best_cell),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDelta<T> {
    pub size: Size,
    /// `b - a`.
    pub delta: T,
    pub error: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison<T> {
    pub metric: Metric,
    pub per_size: Vec<SizeDelta<T>>,
    pub mean_delta: T,
    /// Sample standard deviation of the per-size deltas; needs two sizes.
    pub mean_delta_error: Option<T>,
}

/// Per-size differences `b - a` of one metric, and their mean over sizes.
pub fn compare_runs<T: Scalar>(
    a: &[(Size, MetricSummary<T>)],
    b: &[(Size, MetricSummary<T>)],
    metric: Metric,
) -> Result<RunComparison<T>, StatsError> {
    let sizes = |run: &[(Size, MetricSummary<T>)]| {
        let mut v: Vec<Size> = run.iter().map(|(s, _)| *s).collect();
        v.sort_by_key(|s| (s.n_objects(), s.n_attributes()));
        v
    };
    if a.is_empty() || sizes(a) != sizes(b) {
        return Err(StatsError::SizeMismatch(format!(
            "{:?} vs {:?}",
            sizes(a).iter().map(Size::to_string).collect::<Vec<_>>(),
            sizes(b).iter().map(Size::to_string).collect::<Vec<_>>()
        )));
    }
    let per_size: Vec<SizeDelta<T>> = a
        .iter()
        .map(|(size, sa)| {
            let sb = &b.iter().find(|(s, _)| s == size).expect("sizes match").1;
            let (ma, ea) = metric.of(sa);
            let (mb, eb) = metric.of(sb);
            SizeDelta {
                size: *size,
                delta: mb - ma,
                error: combined_std(ea, eb),
            }
        })
        .collect();
    let deltas: Vec<T> = per_size.iter().map(|d| d.delta).collect();
    Ok(RunComparison {
        metric,
        mean_delta: mean(&deltas).expect("non-empty"),
        mean_delta_error: sample_std(&deltas),
        per_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_example() {
        let m = mean(&[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(m, 0.75);
        assert!((bernoulli_std(m) - 0.1875f64.sqrt()).abs() < 1e-15);
        assert!((bernoulli_std(m) - 0.4330).abs() < 1e-4);
    }

    #[test]
    fn table3_error_bar() {
        assert_eq!(standard_error(0.5f64, 100), 0.05);
        assert_eq!(standard_error(0.5f32, 100), 0.05f32);
    }

    #[test]
    fn equal_values_have_zero_spread() {
        assert_eq!(sample_std(&[0.4f64; 7]), Some(0.0));
        assert_eq!(sample_std(&[0.4f64]), None);
        let s = summarize(&[(1.0f64, 1.0, 1.0); 5]).unwrap();
        assert_eq!((s.mean_a_puzzle, s.std_a_puzzle, s.se_a_cell), (1.0, 0.0, 0.0));
    }

    #[test]
    fn too_few() {
        assert_eq!(
            summarize::<f64>(&[(1.0, 1.0, 1.0)]),
            Err(StatsError::TooFewRecords(1))
        );
    }

    #[test]
    fn combined_errors() {
        assert!((combined_std(0.03f64, 0.04) - 0.05).abs() < 1e-15);
    }

    fn summary(mean_a_cell: f64, se: f64) -> MetricSummary<f64> {
        MetricSummary {
            n_puzzles: 100,
            mean_a_puzzle: 0.0,
            mean_a_cell,
            mean_a_best_cell: 0.0,
            std_a_puzzle: 0.0,
            std_a_cell: 0.0,
            std_a_best_cell: 0.0,
            se_a_puzzle: 0.0,
            se_a_cell: se,
            se_a_best_cell: 0.0,
        }
    }

    #[test]
    fn two_size_comparison() {
        let s1 = Size::new(2, 3).unwrap();
        let s2 = Size::new(4, 5).unwrap();
        let a = [(s1, summary(0.2, 0.03)), (s2, summary(0.1, 0.0))];
        let b = [(s2, summary(0.7, 0.0)), (s1, summary(0.6, 0.04))];
        let cmp = compare_runs(&a, &b, Metric::ACell).unwrap();
        assert!((cmp.per_size[0].delta - 0.4).abs() < 1e-12);
        assert!((cmp.per_size[0].error - 0.05).abs() < 1e-12);
        assert!((cmp.mean_delta - 0.5).abs() < 1e-12);
        assert!((cmp.mean_delta_error.unwrap() - 0.02f64.sqrt()).abs() < 1e-12);

        let same = compare_runs(&a, &a, Metric::ACell).unwrap();
        assert!(same.per_size.iter().all(|d| d.delta == 0.0));
        assert!(compare_runs(&a, &b[..1], Metric::ACell).is_err());
    }
}
