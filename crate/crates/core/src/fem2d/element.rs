use crate::error::{Error, Result};

/// 8x8 element stiffness matrix, row-major.
pub type ElementMatrix = [[f64; 8]; 8];

/// Plane-stress stiffness of a unit square bilinear quad with unit Young's
/// modulus and unit thickness, in closed form.
///
/// DOF order is `[x_ll, y_ll, x_lr, y_lr, x_ur, y_ur, x_ul, y_ul]`.
pub fn element_stiffness(nu: f64) -> Result<ElementMatrix> {
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "Poisson ratio must lie in (-1, 0.5), got {nu}"
        )));
    }
    let k = [
        0.5 - nu / 6.0,
        0.125 + nu / 8.0,
        -0.25 - nu / 12.0,
        -0.125 + 3.0 * nu / 8.0,
        -0.25 + nu / 12.0,
        -0.125 - nu / 8.0,
        nu / 6.0,
        0.125 - 3.0 * nu / 8.0,
    ];
    const PATTERN: [[usize; 8]; 8] = [
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ];
    let scale = 1.0 / (1.0 - nu * nu);
    let mut ke = [[0.0; 8]; 8];
    for (row, pattern_row) in ke.iter_mut().zip(PATTERN.iter()) {
        for (v, &p) in row.iter_mut().zip(pattern_row.iter()) {
            *v = scale * k[p];
        }
    }
    Ok(ke)
}

/// `uᵀ Ke u` for one element.
pub(crate) fn element_energy(ke: &ElementMatrix, u: &[f64; 8]) -> f64 {
    let mut e = 0.0;
    for i in 0..8 {
        let mut row = 0.0;
        for j in 0..8 {
            row += ke[i][j] * u[j];
        }
        e += u[i] * row;
    }
    e
}
