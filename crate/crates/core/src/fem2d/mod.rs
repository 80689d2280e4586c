//! Plane-stress finite elements on a regular grid of bilinear quads.
//!
//! Everything is normalized to unit Young's modulus and unit thickness; the
//! stiffness of a 2D plane-stress model with point loads does not depend on
//! the in-plane scale, so results only depend on the aspect ratio and on the
//! load and support layout.

mod band;
mod density;
mod element;
mod grid;
mod problem;
mod solver;

pub use band::{BandCholesky, BandMatrix};
pub use density::DensityField;
pub use element::{element_stiffness, ElementMatrix};
pub(crate) use element::element_energy;
pub use grid::Grid;
pub use problem::{ProblemSpec, PRESETS};
pub use solver::{solve, solve_with, SolverKind};

use crate::error::{Error, Result};

/// Poisson ratio used throughout.
pub const POISSON: f64 = 0.3;

/// Stiffness floor of void elements in modified SIMP.
pub const E_MIN: f64 = 1e-9;

/// Modified-SIMP element modulus `e_min + ρ^p (1 - e_min)`.
#[inline]
pub fn simp_modulus(rho: f64, penal: f64, e_min: f64) -> f64 {
    e_min + rho.powf(penal) * (1.0 - e_min)
}

/// Scatters `moduli[e] * ke` into a banded global matrix over all DOFs.
pub fn assemble_with_moduli(grid: Grid, ke: &ElementMatrix, moduli: &[f64]) -> BandMatrix {
    assert_eq!(moduli.len(), grid.n_elements());
    let mut k = BandMatrix::zeros(grid.n_dofs(), grid.half_bandwidth());
    for (e, &m) in moduli.iter().enumerate() {
        let dofs = grid.element_dofs(e);
        for a in 0..8 {
            // one entry per unordered pair; `add` mirrors it
            for b in 0..=a {
                k.add(dofs[a], dofs[b], m * ke[a][b]);
            }
        }
    }
    k
}

/// Global stiffness of `problem` for the given densities with modified SIMP.
pub fn assemble(
    problem: &ProblemSpec,
    densities: &DensityField,
    penal: f64,
    e_min: f64,
) -> Result<BandMatrix> {
    if !(penal >= 1.0) {
        return Err(Error::InvalidArgument(format!("penalization must be >= 1, got {penal}")));
    }
    if !(e_min > 0.0 && e_min < 1.0) {
        return Err(Error::InvalidArgument(format!("e_min must lie in (0, 1), got {e_min}")));
    }
    densities.check_grid(problem.grid)?;
    let ke = element_stiffness(POISSON)?;
    let moduli: Vec<f64> = densities
        .values()
        .iter()
        .map(|&r| simp_modulus(r, penal, e_min))
        .collect();
    Ok(assemble_with_moduli(problem.grid, &ke, &moduli))
}

/// Compliance `Σ F_i U_i`.
pub fn compliance(u: &[f64], f: &[f64]) -> f64 {
    assert_eq!(u.len(), f.len());
    u.iter().zip(f).map(|(a, b)| a * b).sum()
}

/// Compliance of `problem` under a density field, in one call.
pub fn evaluate_compliance(
    problem: &ProblemSpec,
    densities: &DensityField,
    penal: f64,
) -> Result<f64> {
    let k = assemble(problem, densities, penal, E_MIN)?;
    let u = solve(problem, &k)?;
    Ok(compliance(&u, &problem.load_vector()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mbb_small() -> ProblemSpec {
        ProblemSpec::preset_with_grid("mbb", Grid::new(6, 3).unwrap()).unwrap()
    }

    #[test]
    fn full_density_identical_for_any_penalization() {
        let p = mbb_small();
        let ones = DensityField::uniform(p.grid, 1.0);
        let k1 = assemble(&p, &ones, 1.0, E_MIN).unwrap();
        let k3 = assemble(&p, &ones, 3.0, E_MIN).unwrap();
        assert_eq!(k1, k3);
    }

    #[test]
    fn half_density_scales_every_block() {
        let p = mbb_small();
        let full = assemble(&p, &DensityField::uniform(p.grid, 1.0), 3.0, E_MIN).unwrap();
        let half = assemble(&p, &DensityField::uniform(p.grid, 0.5), 3.0, E_MIN).unwrap();
        let s = E_MIN + 0.125 * (1.0 - E_MIN);
        for i in 0..p.grid.n_dofs() {
            for j in 0..=i {
                let (a, b) = (half.get(i, j), s * full.get(i, j));
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0), "({i},{j}) {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_penalization() {
        let p = mbb_small();
        let d = DensityField::uniform(p.grid, 0.5);
        assert!(assemble(&p, &d, 0.5, E_MIN).is_err());
        assert!(assemble(&p, &d, 3.0, 0.0).is_err());
    }

    #[test]
    fn compliance_is_work_of_single_load() {
        let p = mbb_small();
        let k = assemble(&p, &DensityField::uniform(p.grid, 1.0), 3.0, E_MIN).unwrap();
        let u = solve(&p, &k).unwrap();
        let f = p.load_vector();
        let (d, m) = p.loads[0];
        assert_eq!(compliance(&u, &f), m * u[d]);
        assert!(compliance(&u, &f) > 0.0);
    }

    #[test]
    fn compliance_scales_with_load_squared() {
        let p = mbb_small();
        let mut q = p.clone();
        q.loads[0].1 *= 3.0;
        let d = DensityField::uniform(p.grid, 0.7);
        let c = evaluate_compliance(&p, &d, 3.0).unwrap();
        let cq = evaluate_compliance(&q, &d, 3.0).unwrap();
        assert!((cq / c - 9.0).abs() < 1e-10);
    }
}
