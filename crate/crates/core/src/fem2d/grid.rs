use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid of unit square bilinear elements.
///
/// Numbering is column-major, following the 88-line SIMP code:
///
/// * node `(ix, iy)` with `ix in 0..=nelx` counted left to right and
///   `iy in 0..=nely` counted from the **top** row down has id
///   `ix * (nely + 1) + iy`;
/// * element `(ex, ey)` has id `ex * nely + ey`;
/// * node `n` owns DOFs `2n` (x) and `2n + 1` (y, positive upward).
///
/// Element corner order is lower-left, lower-right, upper-right, upper-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub nelx: usize,
    pub nely: usize,
}

impl Grid {
    pub fn new(nelx: usize, nely: usize) -> Result<Self> {
        if nelx == 0 || nely == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least one element per direction, got {nelx}x{nely}"
            )));
        }
        Ok(Self { nelx, nely })
    }

    pub fn n_elements(&self) -> usize {
        self.nelx * self.nely
    }

    pub fn n_nodes(&self) -> usize {
        (self.nelx + 1) * (self.nely + 1)
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes()
    }

    pub fn node(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix <= self.nelx && iy <= self.nely);
        ix * (self.nely + 1) + iy
    }

    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        (node / (self.nely + 1), node % (self.nely + 1))
    }

    pub fn element(&self, ex: usize, ey: usize) -> usize {
        debug_assert!(ex < self.nelx && ey < self.nely);
        ex * self.nely + ey
    }

    pub fn element_coords(&self, e: usize) -> (usize, usize) {
        (e / self.nely, e % self.nely)
    }

    /// Element centroid in element units, y measured downward from the top edge.
    pub fn element_center(&self, e: usize) -> (f64, f64) {
        let (ex, ey) = self.element_coords(e);
        (ex as f64 + 0.5, ey as f64 + 0.5)
    }

    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (ex, ey) = self.element_coords(e);
        [
            self.node(ex, ey + 1),
            self.node(ex + 1, ey + 1),
            self.node(ex + 1, ey),
            self.node(ex, ey),
        ]
    }

    pub fn element_dofs(&self, e: usize) -> [usize; 8] {
        let n = self.element_nodes(e);
        [
            2 * n[0],
            2 * n[0] + 1,
            2 * n[1],
            2 * n[1] + 1,
            2 * n[2],
            2 * n[2] + 1,
            2 * n[3],
            2 * n[3] + 1,
        ]
    }

    /// Largest `|i - j|` between two DOFs sharing an element.
    pub fn half_bandwidth(&self) -> usize {
        2 * self.nely + 5
    }
}
