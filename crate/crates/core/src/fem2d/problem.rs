use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::Grid;
use crate::error::{Error, Result};

/// A discretized load case on a regular grid.
///
/// `loads` and `fixed_dofs` index the DOF numbering of [`Grid`]. The physical
/// dimensions `length`, `height` and `thickness` describe the full part; when
/// the grid models only a symmetric portion of it, `symmetry_factor` is the
/// number of such portions (2 for a half model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemJson", into = "ProblemJson")]
pub struct ProblemSpec {
    pub name: String,
    pub grid: Grid,
    pub loads: Vec<(usize, f64)>,
    pub fixed_dofs: Vec<usize>,
    pub length: f64,
    pub height: f64,
    pub thickness: f64,
    pub symmetry_factor: f64,
}

/// On-disk layout: `{name, nelx, nely, loads, fixed_dofs, L, h, t, symmetry_factor}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProblemJson {
    name: String,
    nelx: usize,
    nely: usize,
    loads: Vec<(usize, f64)>,
    fixed_dofs: Vec<usize>,
    #[serde(rename = "L")]
    length: f64,
    h: f64,
    t: f64,
    symmetry_factor: f64,
}

impl TryFrom<ProblemJson> for ProblemSpec {
    type Error = Error;

    fn try_from(j: ProblemJson) -> Result<Self> {
        ProblemSpec::new(
            j.name,
            Grid::new(j.nelx, j.nely)?,
            j.loads,
            j.fixed_dofs,
            (j.length, j.h, j.t),
            j.symmetry_factor,
        )
    }
}

impl From<ProblemSpec> for ProblemJson {
    fn from(p: ProblemSpec) -> Self {
        ProblemJson {
            name: p.name,
            nelx: p.grid.nelx,
            nely: p.grid.nely,
            loads: p.loads,
            fixed_dofs: p.fixed_dofs,
            length: p.length,
            h: p.height,
            t: p.thickness,
            symmetry_factor: p.symmetry_factor,
        }
    }
}

/// Built-in problem layouts.
pub const PRESETS: [&str; 4] = ["mbb", "mbb-deep", "bridge", "complex"];

impl ProblemSpec {
    /// Builds and validates a problem. `fixed_dofs` are sorted and deduplicated.
    pub fn new(
        name: impl Into<String>,
        grid: Grid,
        loads: Vec<(usize, f64)>,
        mut fixed_dofs: Vec<usize>,
        (length, height, thickness): (f64, f64, f64),
        symmetry_factor: f64,
    ) -> Result<Self> {
        fixed_dofs.sort_unstable();
        fixed_dofs.dedup();
        let p = Self {
            name: name.into(),
            grid,
            loads,
            fixed_dofs,
            length,
            height,
            thickness,
            symmetry_factor,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let ndof = self.grid.n_dofs();
        if self.loads.is_empty() {
            return Err(Error::Validation("problem has no loads".into()));
        }
        for &(dof, mag) in &self.loads {
            if dof >= ndof {
                return Err(Error::Validation(format!(
                    "load DOF {dof} out of range (problem has {ndof} DOFs)"
                )));
            }
            if !mag.is_finite() {
                return Err(Error::Validation(format!("load at DOF {dof} is not finite")));
            }
        }
        if let Some(&d) = self.fixed_dofs.iter().find(|&&d| d >= ndof) {
            return Err(Error::Validation(format!(
                "fixed DOF {d} out of range (problem has {ndof} DOFs)"
            )));
        }
        if self.loads.iter().any(|(d, _)| self.fixed_dofs.binary_search(d).is_ok()) {
            return Err(Error::Validation("a load is applied to a fixed DOF".into()));
        }
        for (what, v) in [
            ("L", self.length),
            ("h", self.height),
            ("t", self.thickness),
            ("symmetry_factor", self.symmetry_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{what} must be positive, got {v}")));
            }
        }
        if self.load_magnitude() == 0.0 {
            return Err(Error::Validation("all loads are zero".into()));
        }
        // supports must remove rigid-body motion: the full-density system has to factor
        let k = super::assemble_with_moduli(
            self.grid,
            &super::element_stiffness(super::POISSON)?,
            &vec![1.0; self.grid.n_elements()],
        );
        k.submatrix(&self.free_dofs()).cholesky().map_err(|_| {
            Error::Validation(format!(
                "supports of `{}` do not prevent rigid-body motion",
                self.name
            ))
        })?;
        Ok(())
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        let mut fixed = self.fixed_dofs.iter().peekable();
        (0..self.grid.n_dofs())
            .filter(|d| {
                if fixed.peek() == Some(&d) {
                    fixed.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    pub fn load_vector(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.grid.n_dofs()];
        for &(d, m) in &self.loads {
            f[d] += m;
        }
        f
    }

    /// Sum of the absolute load magnitudes on the modeled domain.
    pub fn load_magnitude(&self) -> f64 {
        self.loads.iter().map(|(_, m)| m.abs()).sum()
    }

    /// Converts a compliance computed with this problem's loads on the modeled
    /// domain (unit modulus, unit thickness) into the compliance of the full
    /// part under a unit total load.
    ///
    /// The full part carries `symmetry_factor` copies of the modeled load, so its
    /// compliance is `symmetry_factor * c`, and compliance scales with the
    /// square of the total load `symmetry_factor * load_magnitude()`.
    pub fn normalize_compliance(&self, c: f64) -> f64 {
        let p = self.load_magnitude();
        c / (self.symmetry_factor * p * p)
    }

    /// Stable content hash, used as a cache key.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("problem serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    /// A built-in layout at its default desk-scale resolution.
    pub fn preset(name: &str) -> Result<Self> {
        let (nelx, nely) = match name {
            "mbb" => (60, 20),
            "mbb-deep" => (30, 30),
            "bridge" => (60, 30),
            "complex" => (60, 30),
            _ => {
                return Err(Error::Unknown {
                    what: "preset",
                    name: name.into(),
                })
            }
        };
        Self::preset_with_grid(name, Grid::new(nelx, nely)?)
    }

    /// A built-in layout on a caller-chosen grid.
    ///
    /// * `mbb`: half of a simply supported beam with a central top load. The
    ///   left edge is the symmetry line (x fixed), a roller holds the
    ///   bottom-right corner and a unit downward load acts at the top-left
    ///   corner. `symmetry_factor = 2`.
    /// * `mbb-deep`: the same layout meant for a square half grid, i.e. a full
    ///   beam twice as long as it is high.
    /// * `bridge`: half of a deck loaded uniformly along its bottom edge and
    ///   pinned at its bottom-right corner, symmetric about the left edge.
    /// * `complex`: a full (non-symmetric) domain pinned at the bottom-left
    ///   corner and on a roller at two thirds of the span, with one downward
    ///   load at the top-right corner and one at the middle of the first span.
    ///
    /// These approximate the layouts of the usual benchmark figures; mesh
    /// details are our own.
    pub fn preset_with_grid(name: &str, grid: Grid) -> Result<Self> {
        let Grid { nelx, nely } = grid;
        let aspect = nelx as f64 / nely as f64;
        let x = |n: usize| 2 * n;
        let y = |n: usize| 2 * n + 1;
        match name {
            "mbb" | "mbb-deep" => {
                let mut fixed: Vec<usize> = (0..=nely).map(|iy| x(grid.node(0, iy))).collect();
                fixed.push(y(grid.node(nelx, nely)));
                Self::new(
                    name,
                    grid,
                    vec![(y(grid.node(0, 0)), -1.0)],
                    fixed,
                    (2.0 * aspect, 1.0, 1.0),
                    2.0,
                )
            }
            "bridge" => {
                let mut fixed: Vec<usize> = (0..=nely).map(|iy| x(grid.node(0, iy))).collect();
                let pin = grid.node(nelx, nely);
                fixed.extend([x(pin), y(pin)]);
                // trapezoidal lumping of a unit distributed load along the bottom edge
                let w = 1.0 / nelx as f64;
                let loads = (0..nelx)
                    .map(|ix| {
                        let m = if ix == 0 { 0.5 * w } else { w };
                        (y(grid.node(ix, nely)), -m)
                    })
                    .collect();
                Self::new(name, grid, loads, fixed, (2.0 * aspect, 1.0, 1.0), 2.0)
            }
            "complex" => {
                if nelx < 3 {
                    return Err(Error::InvalidArgument(
                        "complex preset needs nelx >= 3".into(),
                    ));
                }
                let pin = grid.node(0, nely);
                let roller = grid.node(2 * nelx / 3, nely);
                let fixed = vec![x(pin), y(pin), y(roller)];
                let loads = vec![
                    (y(grid.node(nelx, 0)), -0.5),
                    (y(grid.node(nelx / 3, nely)), -0.5),
                ];
                Self::new(name, grid, loads, fixed, (aspect, 1.0, 1.0), 1.0)
            }
            _ => Err(Error::Unknown {
                what: "preset",
                name: name.into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let p = ProblemSpec::preset(name).unwrap();
            assert_eq!(p.name, name);
            assert!(p.load_magnitude() > 0.0);
        }
        assert!(matches!(
            ProblemSpec::preset("cantilever"),
            Err(Error::Unknown { .. })
        ));
    }

    #[test]
    fn mbb_matches_reference_layout() {
        let p = ProblemSpec::preset("mbb").unwrap();
        assert_eq!(p.loads, vec![(1, -1.0)]);
        assert_eq!(p.fixed_dofs.len(), 22);
        assert_eq!(*p.fixed_dofs.last().unwrap(), p.grid.n_dofs() - 1);
        assert_eq!(p.symmetry_factor, 2.0);
    }

    #[test]
    fn json_layout_round_trips() {
        let p = ProblemSpec::preset("bridge").unwrap();
        let s = p.to_json_pretty();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["name", "nelx", "nely", "loads", "fixed_dofs", "L", "h", "t", "symmetry_factor"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(ProblemSpec::from_json_str(&s).unwrap(), p);
    }

    #[test]
    fn rejects_bad_problems() {
        let g = Grid::new(2, 2).unwrap();
        let fixed = vec![0, 1, 2, 3, 4, 5];
        let dims = (1.0, 1.0, 1.0);
        assert!(ProblemSpec::new("a", g, vec![], fixed.clone(), dims, 1.0).is_err());
        assert!(ProblemSpec::new("a", g, vec![(18, 1.0)], fixed.clone(), dims, 1.0).is_err());
        assert!(ProblemSpec::new("a", g, vec![(17, 1.0)], fixed.clone(), dims, 0.0).is_err());
        assert!(ProblemSpec::new("a", g, vec![(17, 1.0)], fixed.clone(), (1.0, -1.0, 1.0), 1.0).is_err());
        assert!(ProblemSpec::new("a", g, vec![(17, 1.0)], fixed.clone(), dims, 1.0).is_ok());
        // only one node pinned: free to rotate
        let err = ProblemSpec::new("a", g, vec![(17, 1.0)], vec![0, 1], dims, 1.0).unwrap_err();
        assert!(err.to_string().contains("rigid-body"));
    }

    #[test]
    fn normalization_accounts_for_symmetry() {
        let p = ProblemSpec::preset("mbb").unwrap();
        assert_eq!(p.normalize_compliance(10.0), 5.0);
    }
}
