use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{LabError, Result};

/// Uniform periodic grid `x_j = j h`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::InvalidGrid(format!("length = {length} must be positive")));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Angular frequency of DFT index `k` (signed, Nyquist taken positive).
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * signed_index(k, self.n) as f64 / self.length
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Signed periodic distance between two positions.
    pub fn periodic_offset(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).rem_euclid(self.length);
        if d > 0.5 * self.length {
            d - self.length
        } else {
            d
        }
    }
}

pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(4, 1.0).is_err());
        assert!(Grid1D::new(12, 1.0).is_err());
        assert!(Grid1D::new(16, 0.0).is_err());
        assert!(Grid1D::new(16, 2.0).is_ok());
    }

    #[test]
    fn frequencies_are_signed() {
        let g = Grid1D::new(8, 2.0 * PI).unwrap();
        let f: Vec<i64> = g.frequencies().iter().map(|w| w.round() as i64).collect();
        assert_eq!(f, vec![0, 1, 2, 3, 4, -3, -2, -1]);
    }

    #[test]
    fn periodic_offset_wraps() {
        let g = Grid1D::new(8, 10.0).unwrap();
        assert!((g.periodic_offset(9.5, 0.5) + 1.0).abs() < 1e-12);
        assert!((g.periodic_offset(0.5, 9.5) - 1.0).abs() < 1e-12);
    }
}
