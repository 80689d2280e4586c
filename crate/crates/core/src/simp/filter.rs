use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::Grid;

/// Which quantity the cone filter smooths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// Physical densities are the filtered design variables.
    #[default]
    Density,
    /// Compliance sensitivities are filtered, densities are used as is.
    Sensitivity,
}

/// Cone filter `w_ij = max(0, rmin - dist(i, j))` over element centres.
///
/// Stored as the symmetric weight matrix `H` in CSR form plus its row sums.
#[derive(Debug, Clone)]
pub struct Filter {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    row_sums: Vec<f64>,
}

impl Filter {
    pub fn build(grid: Grid, rmin: f64) -> Result<Self> {
        if !(rmin >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "filter radius must be >= 1, got {rmin}"
            )));
        }
        let reach = rmin.ceil() as usize - 1;
        let n = grid.n_elements();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut row_sums = Vec::with_capacity(n);
        offsets.push(0);
        for e in 0..n {
            let (ex, ey) = grid.element_coords(e);
            let mut sum = 0.0;
            for jx in ex.saturating_sub(reach)..=(ex + reach).min(grid.nelx - 1) {
                for jy in ey.saturating_sub(reach)..=(ey + reach).min(grid.nely - 1) {
                    let dx = jx as f64 - ex as f64;
                    let dy = jy as f64 - ey as f64;
                    let w = rmin - (dx * dx + dy * dy).sqrt();
                    if w > 0.0 {
                        cols.push(grid.element(jx, jy));
                        weights.push(w);
                        sum += w;
                    }
                }
            }
            row_sums.push(sum);
            offsets.push(cols.len());
        }
        Ok(Self {
            offsets,
            cols,
            weights,
            row_sums,
        })
    }

    pub fn len(&self) -> usize {
        self.row_sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_sums.is_empty()
    }

    /// Row `e` of the normalized filter, `(element, weight)` with weights summing to 1.
    pub fn normalized_row(&self, e: usize) -> Vec<(usize, f64)> {
        let r = self.offsets[e]..self.offsets[e + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&c, &w)| (c, w / self.row_sums[e]))
            .collect()
    }

    fn h_times(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|e| {
                let r = self.offsets[e]..self.offsets[e + 1];
                self.cols[r.clone()]
                    .iter()
                    .zip(&self.weights[r])
                    .map(|(&c, &w)| w * v[c])
                    .sum()
            })
            .collect()
    }

    /// `H x / Hs`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.h_times(x);
        y.iter_mut().zip(&self.row_sums).for_each(|(v, s)| *v /= s);
        y
    }

    /// Chain rule through [`Filter::apply`]: `H (g / Hs)`.
    pub fn apply_adjoint(&self, g: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = g.iter().zip(&self.row_sums).map(|(v, s)| v / s).collect();
        self.h_times(&scaled)
    }

    /// Classic sensitivity filter `H (x dc) / Hs / max(1e-3, x)`.
    pub fn filter_sensitivity(&self, x: &[f64], dc: &[f64]) -> Vec<f64> {
        let xdc: Vec<f64> = x.iter().zip(dc).map(|(a, b)| a * b).collect();
        let mut y = self.h_times(&xdc);
        for ((v, s), xi) in y.iter_mut().zip(&self.row_sums).zip(x) {
            *v /= s * xi.max(1e-3);
        }
        y
    }
}
