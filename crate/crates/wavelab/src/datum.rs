//! Piecewise constant initial data with values on the value grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A right continuous step function: `left` on `(-inf, x_1)` and `v_k` on
/// `[x_k, x_{k+1})`. Values are grid indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDatum {
    left: i64,
    steps: Vec<(f64, i64)>,
}

impl StepDatum {
    /// Builds a datum from its far left value and its steps `(x_k, v_k)`.
    pub fn new(left: i64, steps: Vec<(f64, i64)>) -> Result<Self> {
        if steps.iter().any(|(x, _)| !x.is_finite()) {
            return Err(Error::InvalidDatum("step positions must be finite".into()));
        }
        if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidDatum("step positions must be strictly increasing".into()));
        }
        Ok(Self { left, steps })
    }

    /// Value on the far left.
    pub fn left(&self) -> i64 {
        self.left
    }

    /// Steps `(x_k, v_k)`.
    pub fn steps(&self) -> &[(f64, i64)] {
        &self.steps
    }

    /// Value at `x`, taking the right limit at a step.
    pub fn value_at(&self, x: f64) -> i64 {
        let k = self.steps.partition_point(|&(xs, _)| xs <= x);
        if k == 0 {
            self.left
        } else {
            self.steps[k - 1].1
        }
    }

    /// Nonzero jumps as `(x, u_left, u_right)`.
    pub fn jumps(&self) -> Vec<(f64, i64, i64)> {
        let mut prev = self.left;
        let mut out = Vec::new();
        for &(x, v) in &self.steps {
            if v != prev {
                out.push((x, prev, v));
            }
            prev = v;
        }
        out
    }

    /// Total variation counted in grid cells.
    pub fn variation_cells(&self) -> i64 {
        self.jumps().iter().map(|(_, a, b)| (b - a).abs()).sum()
    }

    /// Smallest and largest value taken.
    pub fn range(&self) -> (i64, i64) {
        self.steps.iter().fold((self.left, self.left), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)))
    }

    /// Value on the far right.
    pub fn right(&self) -> i64 {
        self.steps.last().map_or(self.left, |s| s.1)
    }
}
