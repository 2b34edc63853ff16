//! Least-squares fit of cell accuracy on item-type frequencies.
//!
//! Because each puzzle's frequencies sum to one, an intercept column equals
//! the sum of the frequency columns and plain OLS has no unique answer. In
//! that case the fit imposes `sum(coef) = 0`, which is the same solution a
//! least-squares solver returns after centering the data.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, FrequencyVector, ItemType};
use crate::eval::stats::{cast, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyProfile<T> {
    /// Types kept in the fit (those occurring at least once).
    pub types: Vec<ItemType>,
    pub coefficients: Vec<T>,
    pub intercept: T,
    /// `-coef / sum(|coef|)`, aligned with `types`.
    pub difficulties: Vec<T>,
    pub residual_norm: T,
    /// Ratio of the largest to the smallest pivot of R.
    pub condition: T,
    pub n_puzzles: usize,
    /// Whether the coefficients were constrained to sum to zero.
    pub sum_to_zero: bool,
}

/// `-coef_t / sum_u |coef_u|`; `None` when every coefficient is zero.
pub fn eq1_normalize<T: Scalar>(coefficients: &[T]) -> Option<Vec<T>> {
    let total = coefficients.iter().fold(T::zero(), |acc, c| acc + c.abs());
    if total == T::zero() || !total.is_finite() {
        return None;
    }
    Some(coefficients.iter().map(|&c| -c / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub solution: Vec<T>,
    pub rank: usize,
    pub residual_norm: T,
    pub condition: T,
}

/// Minimizes `|A x - b|` by Householder QR with column pivoting. `a` is
/// row-major, `m x n`. Columns beyond the numerical rank get coefficient 0.
pub fn least_squares<T: Scalar>(a: &[Vec<T>], b: &[T]) -> LeastSquares<T> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    // column-major working copy
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.iter().map(|row| row[j]).collect()).collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let norm = |v: &[T]| v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();

    let mut pivots = Vec::with_capacity(steps);
    for k in 0..steps {
        let best = (k..n)
            .max_by(|&i, &j| {
                norm(&cols[i][k..])
                    .partial_cmp(&norm(&cols[j][k..]))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("k < n");
        cols.swap(k, best);
        perm.swap(k, best);

        let x_norm = norm(&cols[k][k..]);
        if x_norm == T::zero() {
            break;
        }
        let alpha = if cols[k][k] > T::zero() { -x_norm } else { x_norm };
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vv = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
        let two = T::one() + T::one();
        let reflect = |target: &mut [T]| {
            let dot = v.iter().zip(target.iter()).fold(T::zero(), |acc, (&p, &q)| acc + p * q);
            let f = two * dot / vv;
            for (t, &vi) in target.iter_mut().zip(&v) {
                *t = *t - f * vi;
            }
        };
        for col in cols.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut rhs[k..]);
        cols[k][k] = alpha;
        for x in cols[k].iter_mut().skip(k + 1) {
            *x = T::zero();
        }
        pivots.push(alpha.abs());
    }

    let tol = pivots.first().copied().unwrap_or(T::zero())
        * T::epsilon()
        * cast::<T>((10 * m.max(n)) as f64);
    let rank = pivots.iter().take_while(|&&p| p > tol).count();

    let mut z = vec![T::zero(); n];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s = s - cols[j][i] * z[j];
        }
        z[i] = s / cols[i][i];
    }
    let mut solution = vec![T::zero(); n];
    for (k, &j) in perm.iter().enumerate() {
        solution[j] = z[k];
    }
    let condition = if rank == 0 {
        T::infinity()
    } else {
        pivots[0] / pivots[rank - 1]
    };
    LeastSquares {
        solution,
        rank,
        residual_norm: norm(&rhs[rank.min(m)..]),
        condition,
    }
}

fn is_constant<T: Scalar>(xs: &[T], tol: T) -> bool {
    xs.iter().all(|&x| (x - xs[0]).abs() <= tol)
}

/// Fits `a_cell ~ intercept + sum_t coef_t f_t` and converts the
/// coefficients to difficulties. Types that never occur are dropped.
pub fn fit_difficulty<T: Scalar>(
    frequencies: &[FrequencyVector<T>],
    a_cell: &[T],
) -> Result<DifficultyProfile<T>, AnalysisError> {
    let n = frequencies.len();
    if n != a_cell.len() {
        return Err(AnalysisError::Shape(format!(
            "{n} frequency rows but {} accuracies",
            a_cell.len()
        )));
    }
    if n < 2 {
        return Err(AnalysisError::NotIdentifiable(format!("{n} puzzles")));
    }
    let tiny = cast::<T>(1e-9);
    if is_constant(a_cell, T::zero()) {
        return Err(AnalysisError::NotIdentifiable("a_cell is constant".into()));
    }
    let all = ItemType::all();
    let active: Vec<usize> = (0..all.len())
        .filter(|&j| frequencies.iter().any(|f| f.0[j] != T::zero()))
        .collect();
    if active.is_empty() {
        return Err(AnalysisError::NotIdentifiable("no item type occurs".into()));
    }
    let x: Vec<Vec<T>> = frequencies
        .iter()
        .map(|f| active.iter().map(|&j| f.0[j]).collect())
        .collect();
    let row_sums: Vec<T> = x.iter().map(|r| r.iter().fold(T::zero(), |a, &b| a + b)).collect();
    let sum_to_zero = is_constant(&row_sums, tiny);
    let k = active.len();

    // With constant row sums, write coef_last = -sum(others) and regress on
    // differences to the last column.
    let design: Vec<Vec<T>> = x
        .iter()
        .map(|row| {
            let mut d = vec![T::one()];
            if sum_to_zero {
                d.extend(row[..k - 1].iter().map(|&v| v - row[k - 1]));
            } else {
                d.extend(row.iter().copied());
            }
            d
        })
        .collect();
    let fit = least_squares(&design, a_cell);
    let cols = design[0].len();
    if fit.rank < cols {
        return Err(AnalysisError::NotIdentifiable(format!(
            "design has rank {} of {cols}; item-type frequencies are collinear",
            fit.rank
        )));
    }
    let intercept = fit.solution[0];
    let mut coefficients = fit.solution[1..].to_vec();
    if sum_to_zero {
        let rest = coefficients.iter().fold(T::zero(), |a, &b| a + b);
        coefficients.push(-rest);
    }
    let difficulties = eq1_normalize(&coefficients)
        .ok_or_else(|| AnalysisError::NotIdentifiable("all coefficients are zero".into()))?;
    Ok(DifficultyProfile {
        types: active.iter().map(|&j| all[j]).collect(),
        coefficients,
        intercept,
        difficulties,
        residual_norm: fit.residual_norm,
        condition: fit.condition,
        n_puzzles: n,
        sum_to_zero,
    })
}
