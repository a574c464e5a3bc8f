//! Goal assignment: optimal solvers, coverage and cost metrics, message
//! budget truncation and the decentralized assignment scenario.

mod scenario;
mod solver;

pub use scenario::{
    run_assignment_scenario, AssignmentMode, AssignmentOutcome, AssignmentPolicy, ResultRow,
    DEFAULT_FEATURE_DIM, POLICY_HEADS, POLICY_LAYERS,
};
pub use solver::{brute_force_solve, hungarian_solve, BRUTE_FORCE_MAX};

use std::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::mesh::MeshError;
use crate::tensor::weights::WeightsError;
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Error)]
pub enum AssignmentError {
    #[error("cost matrix is empty")]
    Empty,
    #[error("cost matrix row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("cost matrix is {rows}x{cols}; one-to-one matching needs a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("cost c[{row}][{col}] = {value} must be finite and nonnegative")]
    BadCost { row: usize, col: usize, value: f32 },
    #[error("brute force is limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("covered goals {reached} exceed robots x tests = {capacity}")]
    TooManyGoals { reached: usize, capacity: usize },
    #[error("optimal cost {0} must be positive")]
    NonPositiveOptimum(f64),
    #[error("no tests to average")]
    NoTests,
    #[error("team of {team} robots does not match a {rows}-row cost matrix")]
    TeamSize { team: usize, rows: usize },
    #[error(transparent)]
    Shape(#[from] TensorError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl PartialEq for AssignmentError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

/// `n_robots x n_goals` nonnegative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f32>>) -> Result<Self, AssignmentError> {
        let cols = rows.first().map(Vec::len).ok_or(AssignmentError::Empty)?;
        if cols == 0 {
            return Err(AssignmentError::Empty);
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(AssignmentError::Ragged {
                    row: i,
                    len: r.len(),
                    expected: cols,
                });
            }
            for (j, &value) in r.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(AssignmentError::BadCost { row: i, col: j, value });
                }
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Entries drawn uniformly from `range`.
    pub fn random<R: Rng + ?Sized>(
        n_robots: usize,
        n_goals: usize,
        range: Range<f32>,
        rng: &mut R,
    ) -> Self {
        assert!(range.start >= 0.0 && range.start < range.end);
        Self {
            rows: n_robots,
            cols: n_goals,
            data: (0..n_robots * n_goals)
                .map(|_| rng.random_range(range.clone()))
                .collect(),
        }
    }

    pub fn n_robots(&self) -> usize {
        self.rows
    }

    pub fn n_goals(&self) -> usize {
        self.cols
    }

    pub fn get(&self, robot: usize, goal: usize) -> f32 {
        self.data[robot * self.cols + goal]
    }

    pub fn row(&self, robot: usize) -> &[f32] {
        &self.data[robot * self.cols..(robot + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.cols)
    }

    /// Same matrix with `delta` added to every entry of one row.
    pub fn shift_row(&self, robot: usize, delta: f32) -> Result<Self, AssignmentError> {
        let rows = self
            .rows()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .map(|&c| if i == robot { c + delta } else { c })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub(crate) fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &c| m.max(c.abs() as f64))
    }

    pub(crate) fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|r| r.iter().map(|&c| c as f64).collect())
            .collect()
    }

    pub(crate) fn require_square(&self) -> Result<(), AssignmentError> {
        if self.rows != self.cols {
            return Err(AssignmentError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Goal index per robot, pairwise distinct.
    pub goals: Vec<usize>,
    /// `Σ c[i][goals[i]]` accumulated in robot order in `f64`.
    pub total_cost: f64,
}

/// Percentage of goals covered over all tests.
pub fn sr_metric(
    n_goals_reached: usize,
    n_robots: usize,
    n_tests: usize,
) -> Result<f64, AssignmentError> {
    let capacity = n_robots * n_tests;
    if capacity == 0 {
        return Err(AssignmentError::NoTests);
    }
    if n_goals_reached > capacity {
        return Err(AssignmentError::TooManyGoals {
            reached: n_goals_reached,
            capacity,
        });
    }
    Ok(n_goals_reached as f64 / capacity as f64 * 100.0)
}

/// Mean percentage cost excess over the optimum, from `(C_out, C_opt)`
/// pairs of fully covered tests.
pub fn tcp_metric(pairs: &[(f64, f64)]) -> Result<f64, AssignmentError> {
    if pairs.is_empty() {
        return Err(AssignmentError::NoTests);
    }
    let mut sum = 0.0;
    for &(out, opt) in pairs {
        if opt <= 0.0 || opt.is_nan() {
            return Err(AssignmentError::NonPositiveOptimum(opt));
        }
        sum += (out - opt) / opt * 100.0;
    }
    Ok(sum / pairs.len() as f64)
}

fn check_budget(budget_bytes: usize) -> Result<usize, TensorError> {
    if budget_bytes < 4 {
        return Err(TensorError::Spec(format!(
            "message budget {budget_bytes} B is below one f32 component"
        )));
    }
    Ok(budget_bytes / 4)
}

/// First `budget / 4` components of a 1-D feature.
pub fn truncate_feature(feature: &Tensor, budget_bytes: usize) -> Result<Tensor, TensorError> {
    let keep = check_budget(budget_bytes)?;
    let d = feature.vector_len("message feature rank")?;
    Ok(Tensor::vector(feature.data()[..keep.min(d)].to_vec()))
}

/// Zero-pads a 1-D feature up to `dim` components.
pub fn pad_feature(feature: &Tensor, dim: usize) -> Result<Tensor, TensorError> {
    let d = feature.vector_len("message feature rank")?;
    if d >= dim {
        return Ok(feature.clone());
    }
    let mut data = feature.data().to_vec();
    data.resize(dim, 0.0);
    Ok(Tensor::vector(data))
}

/// Little-endian payload for the kept components, and what a receiver
/// reconstructs from it.
pub fn quantize_message(
    feature: &Tensor,
    budget_bytes: usize,
) -> Result<(Vec<u8>, Tensor), TensorError> {
    let kept = truncate_feature(feature, budget_bytes)?;
    let bytes = kept.data().iter().flat_map(|x| x.to_le_bytes()).collect();
    let recovered = pad_feature(&kept, feature.len())?;
    Ok((bytes, recovered))
}
