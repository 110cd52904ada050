use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::MAX_BASE_DIM;

/// Axis-aligned coordinate box standing in for an open subset of `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub label: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Samples per axis for sweeps and quadrature.
    pub grid: usize,
    /// `+1` when the coordinates are positively oriented, `-1` otherwise.
    pub orientation: f64,
}

impl Chart {
    pub fn new(label: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>, grid: usize) -> Result<Self> {
        let chart = Self {
            label: label.into(),
            lower,
            upper,
            grid,
            orientation: 1.0,
        };
        chart.validate()?;
        Ok(chart)
    }

    /// Zero-dimensional chart modeling a point.
    pub fn point(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            lower: vec![],
            upper: vec![],
            grid: 2,
            orientation: 1.0,
        }
    }

    /// Symmetric box `[-r, r]^n`.
    pub fn cube(label: impl Into<String>, n: usize, r: f64, grid: usize) -> Result<Self> {
        Self::new(label, vec![-r; n], vec![r; n], grid)
    }

    pub fn with_orientation(mut self, orientation: f64) -> Result<Self> {
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::Validation(format!("orientation must be ±1, got {orientation}")));
        }
        self.orientation = orientation;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Dimension("chart bounds differ in length".into()));
        }
        if self.dim() > MAX_BASE_DIM {
            return Err(Error::Dimension(format!(
                "chart dimension {} exceeds {MAX_BASE_DIM}",
                self.dim()
            )));
        }
        for (i, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && u > l) {
                return Err(Error::Validation(format!(
                    "chart '{}' axis {i} has empty extent",
                    self.label
                )));
            }
        }
        if self.grid < 2 {
            return Err(Error::Validation(format!(
                "chart '{}' grid resolution must be ≥ 2",
                self.label
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    /// Distance from `p` to the chart boundary in the max norm; infinite on a
    /// point chart and negative outside.
    pub fn margin(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| (x - l).min(u - x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn require_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point of dimension {} on {}-dimensional chart '{}'",
                p.len(),
                self.dim(),
                self.label
            )));
        }
        if !self.contains(p) {
            return Err(Error::Domain(format!("{p:?} lies outside chart '{}'", self.label)));
        }
        Ok(())
    }

    pub fn require_margin(&self, p: &[f64], h: f64) -> Result<()> {
        self.require_point(p)?;
        if self.margin(p) < h {
            return Err(Error::Domain(format!(
                "{p:?} is within {h} of the boundary of chart '{}'",
                self.label
            )));
        }
        Ok(())
    }

    pub fn axis_nodes(&self, axis: usize, count: usize) -> Vec<f64> {
        let (l, u) = (self.lower[axis], self.upper[axis]);
        let step = (u - l) / (count - 1) as f64;
        (0..count)
            .map(|k| if k + 1 == count { u } else { l + k as f64 * step })
            .collect()
    }

    /// Tensor grid with `count` nodes per axis including the endpoints, last
    /// axis varying fastest.
    pub fn grid_points(&self, count: usize) -> Vec<Vec<f64>> {
        let nodes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_nodes(a, count)).collect();
        let mut out = vec![vec![]];
        for axis in nodes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |x| {
                        let mut p = prefix.clone();
                        p.push(*x);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// The grid without its boundary nodes.
    pub fn interior_grid_points(&self, count: usize) -> Vec<Vec<f64>> {
        self.grid_points(count)
            .into_iter()
            .filter(|p| {
                p.iter()
                    .zip(self.lower.iter().zip(&self.upper))
                    .all(|(x, (l, u))| x > l && x < u)
            })
            .collect()
    }
}
