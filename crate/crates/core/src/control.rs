//! Endpoint-pinned control trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{OctError, Result};

/// `lambda` at `n + 1` equally spaced nodes with `lambda_0 = 0` and
/// `lambda_n = 1`. Interior values are unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    #[default]
    Linear,
    SquareRoot,
}

impl Control {
    /// `lambda(s) = s` on `n` intervals.
    pub fn linear(n: usize) -> Self {
        Self::from_fn(n, |s| s)
    }

    /// `lambda(s) = sqrt(s)` on `n` intervals.
    pub fn square_root(n: usize) -> Self {
        Self::from_fn(n, f64::sqrt)
    }

    pub fn guess(kind: InitialGuess, n: usize) -> Self {
        match kind {
            InitialGuess::Linear => Self::linear(n),
            InitialGuess::SquareRoot => Self::square_root(n),
        }
    }

    /// Samples `f` on `[0, 1]`; the endpoints are pinned regardless of `f`.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Self {
        let n = n.max(1);
        let mut values: Vec<f64> = (0..=n).map(|m| f(m as f64 / n as f64)).collect();
        values[0] = 0.0;
        values[n] = 1.0;
        Self { values }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(OctError::Dimension("control needs at least two nodes".into()));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 1.0 {
            return Err(OctError::ContractViolation(format!(
                "control endpoints must be 0 and 1, got {} and {}",
                values[0],
                values.last().unwrap()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OctError::ContractViolation("control values must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Resamples onto `n` intervals by linear interpolation.
    pub fn resampled(&self, n: usize) -> Self {
        if n == self.intervals() {
            return self.clone();
        }
        let src = self.intervals() as f64;
        Self::from_fn(n, |s| {
            let pos = s * src;
            let j = (pos.floor() as usize).min(self.intervals() - 1);
            let t = pos - j as f64;
            (1.0 - t) * self.values[j] + t * self.values[j + 1]
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Replaces the interior values; endpoints stay pinned.
    pub fn set_interior(&mut self, interior: &[f64]) -> Result<()> {
        let n = self.values.len();
        if interior.len() != n - 2 {
            return Err(OctError::Dimension(format!(
                "{} interior values for {} nodes",
                interior.len(),
                n
            )));
        }
        self.values[1..n - 1].copy_from_slice(interior);
        Ok(())
    }

    pub fn with_interior(&self, interior: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.set_interior(interior)?;
        Ok(out)
    }

    /// `(gamma/2) sum (Delta lambda)^2 / h`, the smoothness penalty for node spacing `h`.
    pub fn penalty(&self, gamma: f64, h: f64) -> f64 {
        0.5 * gamma * self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h
    }

    /// Second difference `(l_{m+1} - 2 l_m + l_{m-1}) / h^2` at interior nodes.
    pub fn second_difference(&self, h: f64) -> Vec<f64> {
        self.values
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (h * h))
            .collect()
    }

    pub fn is_within_unit_interval(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}
