use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Tolerance for the sum-to-one and nonnegativity checks.
pub const TAU_SUM: f64 = 1e-12;

/// A point of the standard n-simplex: n+1 nonnegative weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycentricPoint {
    coords: Vec<f64>,
}

impl BarycentricPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, Error> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("empty coordinate vector".into()));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > TAU_SUM * coords.len() as f64 {
            return Err(Error::InvalidPoint(format!(
                "coordinates sum to {sum}, not 1"
            )));
        }
        if let Some(c) = coords.iter().find(|&&c| c < -TAU_SUM) {
            return Err(Error::InvalidPoint(format!("negative coordinate {c}")));
        }
        Ok(Self { coords })
    }

    /// Accepts slightly off points by clamping negatives and renormalizing.
    /// Rejects anything outside the `slack` band.
    pub fn new_clamped(coords: Vec<f64>, slack: f64) -> Result<Self, Error> {
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > slack || coords.iter().any(|&c| c < -slack) {
            return Err(Error::InvalidPoint(format!(
                "point {coords:?} outside simplex beyond slack {slack}"
            )));
        }
        let mut c: Vec<f64> = coords.iter().map(|&x| x.max(0.0)).collect();
        let s: f64 = c.iter().sum();
        for x in &mut c {
            *x /= s;
        }
        Ok(Self { coords: c })
    }

    /// The corner e_k of the n-simplex.
    pub fn corner(n: usize, k: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[k] = 1.0;
        Self { coords }
    }

    pub fn barycenter(n: usize) -> Self {
        Self {
            coords: vec![1.0 / (n + 1) as f64; n + 1],
        }
    }

    /// Dimension n of the simplex this point lives in.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Convex combination (1-t)·self + t·other.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        }
    }
}
