use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_i = t_min + i h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_min: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    /// Covers `[t_min, t_max]`; the right end is rounded to a whole step.
    pub fn new(t_min: f64, t_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", format!("step must be positive, got {h}")));
        }
        if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::invalid("grid", format!("empty range [{t_min}, {t_max}]")));
        }
        let n = ((t_max - t_min) / h).round() as usize + 1;
        if n < 3 {
            return Err(Error::invalid("grid", "needs at least three nodes"));
        }
        Ok(Grid { t_min, h, n })
    }

    pub fn t_max(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Fractional index of `t`.
    pub fn position(&self, t: f64) -> f64 {
        (t - self.t_min) / self.h
    }

    /// Linear interpolation of grid values at `t`, using the off-grid
    /// extension `0` on the left and the last value on the right.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let x = self.position(t);
        if x < 0.0 {
            return 0.0;
        }
        let i = x.floor() as usize;
        if i + 1 >= self.n {
            return values[self.n - 1];
        }
        let th = x - i as f64;
        values[i] * (1.0 - th) + values[i + 1] * th
    }

    /// Number of whole steps covering a length `d`.
    pub fn steps(&self, d: f64) -> usize {
        (d / self.h).ceil().max(0.0) as usize
    }
}
