//! Midpoint-rule discretization of a compact interval carrier.
//!
//! Every integral over the carrier becomes a weighted sum over interior
//! nodes. Nodes never touch the boundary, so density values are always
//! evaluated strictly inside the interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature nodes and weights on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    measure: f64,
    bounds: (f64, f64),
}

impl Grid {
    /// Midpoint grid with `n` equal cells; node `i` sits at `a + (i + 0.5)(b - a)/n`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidBounds { a, b });
        }
        if n == 0 {
            return Err(Error::InvalidCount);
        }
        let width = b - a;
        let h = width / n as f64;
        let nodes = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
        Ok(Self {
            nodes,
            weights: vec![h; n],
            measure: width,
            bounds: (a, b),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total measure of the carrier, `b - a`.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// `Σ w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.sum(f))
    }

    /// `Σ w_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(self.dot(f, g))
    }

    /// Evaluate `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    // Unchecked kernels; callers guarantee lengths.
    pub(crate) fn sum(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub(crate) fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }
}

/// Convenience wrapper mirroring [`Grid::uniform`].
pub fn build_uniform_grid(a: f64, b: f64, n: usize) -> Result<Grid> {
    Grid::uniform(a, b, n)
}

/// Convenience wrapper mirroring [`Grid::integrate`].
pub fn integrate(grid: &Grid, f: &[f64]) -> Result<f64> {
    grid.integrate(f)
}
