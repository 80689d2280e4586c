use serde::{Deserialize, Serialize};

use super::band::BandMatrix;
use super::problem::ProblemSpec;
use crate::error::{Error, Result};

/// Required accuracy on the free DOFs. The direct solver measures the
/// normwise backward error `|r| / (|K|_inf |u| + |f|)`, PCG the relative
/// residual `|r| / |f|`.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Linear solver for the constrained system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Banded Cholesky with up to two steps of iterative refinement.
    #[default]
    Direct,
    /// Conjugate gradients with a diagonal preconditioner, capped at
    /// `10 * DOF` iterations.
    Pcg,
}

/// Solves `K U = F` on the free DOFs of `problem`; fixed DOFs get `U = 0`.
pub fn solve(problem: &ProblemSpec, k: &BandMatrix) -> Result<Vec<f64>> {
    solve_with(problem, k, SolverKind::Direct)
}

pub fn solve_with(problem: &ProblemSpec, k: &BandMatrix, kind: SolverKind) -> Result<Vec<f64>> {
    let ndof = problem.grid.n_dofs();
    if k.dim() != ndof {
        return Err(Error::InvalidArgument(format!(
            "stiffness has dimension {}, problem has {ndof} DOFs",
            k.dim()
        )));
    }
    let free = problem.free_dofs();
    let f_full = problem.load_vector();
    let f: Vec<f64> = free.iter().map(|&d| f_full[d]).collect();
    let mut u = vec![0.0; ndof];
    let f_norm = norm(&f);
    if f_norm == 0.0 {
        return Ok(u);
    }
    let kf = k.submatrix(&free);
    let uf = match kind {
        SolverKind::Direct => direct(&kf, &f, f_norm)?,
        SolverKind::Pcg => pcg(&kf, &f, f_norm, RESIDUAL_TOL, 10 * kf.dim())?,
    };
    for (&d, v) in free.iter().zip(uf) {
        u[d] = v;
    }
    Ok(u)
}

fn direct(k: &BandMatrix, f: &[f64], f_norm: f64) -> Result<Vec<f64>> {
    let chol = k.clone().cholesky()?;
    let k_norm = k.norm_inf();
    let backward = |u: &[f64], r: &[f64]| norm(r) / (k_norm * norm(u) + f_norm);
    let mut u = chol.solve(f);
    let mut r = residual(k, &u, f);
    let mut rel = backward(&u, &r);
    let mut steps = 0;
    while rel > RESIDUAL_TOL && steps < 2 {
        let du = chol.solve(&r);
        u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        r = residual(k, &u, f);
        rel = backward(&u, &r);
        steps += 1;
    }
    if !(rel <= RESIDUAL_TOL) {
        return Err(Error::SolverFailure {
            iterations: steps + 1,
            residual: rel,
        });
    }
    Ok(u)
}

fn pcg(k: &BandMatrix, f: &[f64], f_norm: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = f.len();
    let inv_diag: Vec<f64> = k
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = f.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iter {
        let q = k.matvec(&p);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = norm(&r) / f_norm;
        if rel <= tol {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: max_iter,
        residual: rel,
    })
}

fn residual(k: &BandMatrix, u: &[f64], f: &[f64]) -> Vec<f64> {
    let ku = k.matvec(u);
    f.iter().zip(ku).map(|(a, b)| a - b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem2d::{assemble, DensityField, Grid, E_MIN};

    fn problem() -> ProblemSpec {
        ProblemSpec::preset_with_grid("mbb", Grid::new(8, 4).unwrap()).unwrap()
    }

    #[test]
    fn residual_and_fixed_dofs() {
        let p = problem();
        let k = assemble(&p, &DensityField::uniform(p.grid, 0.6), 3.0, E_MIN).unwrap();
        let u = solve(&p, &k).unwrap();
        for &d in &p.fixed_dofs {
            assert_eq!(u[d], 0.0);
        }
        let free = p.free_dofs();
        let ku = k.matvec(&u);
        let f = p.load_vector();
        let r: f64 = free.iter().map(|&d| (f[d] - ku[d]).powi(2)).sum::<f64>().sqrt();
        assert!(r <= RESIDUAL_TOL * norm(&f));
    }

    #[test]
    fn zero_load_gives_zero_displacement() {
        let mut p = problem();
        p.loads[0].1 = 0.0;
        let k = assemble(&p, &DensityField::uniform(p.grid, 1.0), 3.0, E_MIN).unwrap();
        assert!(solve(&p, &k).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pcg_agrees_with_direct() {
        let p = problem();
        let k = assemble(&p, &DensityField::uniform(p.grid, 1.0), 3.0, E_MIN).unwrap();
        let a = solve_with(&p, &k, SolverKind::Direct).unwrap();
        let b = solve_with(&p, &k, SolverKind::Pcg).unwrap();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn pcg_reports_iteration_cap() {
        let p = problem();
        let k = assemble(&p, &DensityField::uniform(p.grid, 1.0), 3.0, E_MIN).unwrap();
        let free = p.free_dofs();
        let kf = k.submatrix(&free);
        let f_full = p.load_vector();
        let f: Vec<f64> = free.iter().map(|&d| f_full[d]).collect();
        match pcg(&kf, &f, norm(&f), 1e-14, 3) {
            Err(Error::SolverFailure { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
