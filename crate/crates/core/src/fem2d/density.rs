use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Element densities in `[0, 1]`, indexed like [`Grid`] elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_elements() {
            return Err(Error::InvalidArgument(format!(
                "density field has {} values, grid {}x{} needs {}",
                values.len(),
                grid.nelx,
                grid.nely,
                grid.n_elements()
            )));
        }
        if let Some((e, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
        {
            return Err(Error::InvalidArgument(format!(
                "density {v} of element {e} outside [0, 1]"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn uniform(grid: Grid, value: f64) -> Self {
        Self::new(grid, vec![value; grid.n_elements()]).expect("uniform density in [0, 1]")
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn volume_fraction(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub(crate) fn check_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::InvalidArgument(format!(
                "density field grid {}x{} does not match problem grid {}x{}",
                self.grid.nelx, self.grid.nely, grid.nelx, grid.nely
            )));
        }
        Ok(())
    }

    /// CSV with one line per element row, top row first.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for ey in 0..self.grid.nely {
            let row: Vec<String> = (0..self.grid.nelx)
                .map(|ex| format!("{}", self.values[self.grid.element(ex, ey)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = s
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.split(',')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|e| Error::Parse {
                            line: i + 1,
                            message: format!("`{v}`: {e}"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let nely = rows.len();
        let nelx = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != nelx) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {nelx} columns"),
            });
        }
        let grid = Grid::new(nelx, nely)?;
        let mut values = vec![0.0; grid.n_elements()];
        for (ey, row) in rows.iter().enumerate() {
            for (ex, &v) in row.iter().enumerate() {
                values[grid.element(ex, ey)] = v;
            }
        }
        Self::new(grid, values)
    }
}
