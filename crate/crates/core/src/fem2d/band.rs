//! Symmetric banded storage and Cholesky factorization.

use crate::error::{Error, Result};

/// Symmetric matrix with half-bandwidth `bw`, lower triangle stored row by row.
///
/// Row `i` occupies `data[i * (bw + 1)..(i + 1) * (bw + 1)]` with columns
/// `i - bw..=i` in ascending order, so entry `(i, j)` with `j <= i` and
/// `i - j <= bw` lives at `i * (bw + 1) + bw - (i - j)`. Slots left of column
/// 0 in the first rows stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to `(i, j)` (and implicitly `(j, i)`).
    ///
    /// Panics if the entry is outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0_f64; self.n];
        let (bw, w) = (self.bw, self.bw + 1);
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for (j, a) in (j0..i).zip(&self.data[i * w + bw - (i - j0)..i * w + bw]) {
                sums[i] += a.abs();
                sums[j] += a.abs();
            }
            sums[i] += self.data[i * w + bw].abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let (bw, w) = (self.bw, self.bw + 1);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            let row = &self.data[i * w + bw - (i - j0)..i * w + bw];
            let mut s = self.data[i * w + bw] * x[i];
            for (a, (yj, xj)) in row.iter().zip(y[j0..i].iter_mut().zip(&x[j0..i])) {
                s += a * xj;
                *yj += a * x[i];
            }
            y[i] += s;
        }
        y
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn submatrix(&self, keep: &[usize]) -> BandMatrix {
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        // the bandwidth can only shrink when rows are dropped
        let mut bw = 0;
        for (a, &i) in keep.iter().enumerate() {
            for b in (0..a).rev() {
                if i - keep[b] > self.bw {
                    break;
                }
                bw = bw.max(a - b);
            }
        }
        let mut out = BandMatrix::zeros(keep.len(), bw);
        for (a, &i) in keep.iter().enumerate() {
            for b in (0..=a).rev() {
                let j = keep[b];
                if i - j > self.bw {
                    break;
                }
                let (to, from) = (out.idx(a, b), self.idx(i, j));
                out.data[to] = self.data[from];
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// In-place banded Cholesky, `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let max_diag = self.diagonal().into_iter().fold(0.0_f64, f64::max);
        let pivot_floor = max_diag * 1e-15;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // row i times row j over columns j0..j; both slices ascend in column
                let ri = i * w + bw - (i - j0);
                let rj = j * w + bw - (j - j0);
                let len = j - j0;
                let (head, tail) = self.data.split_at(i * w);
                let row_i = &tail[ri - i * w..ri - i * w + len];
                let row_j = if j == i { row_i } else { &head[rj..rj + len] };
                let dot: f64 = row_i.iter().zip(row_j).map(|(a, b)| a * b).sum();
                let pos = i * w + bw - (i - j);
                let s = self.data[pos] - dot;
                if i == j {
                    if !(s > pivot_floor) {
                        return Err(Error::SolverFailure {
                            iterations: i,
                            residual: f64::INFINITY,
                        });
                    }
                    self.data[pos] = s.sqrt();
                } else {
                    self.data[pos] = s / self.data[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

/// Lower-triangular banded factor.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.factor.n, self.factor.bw, self.factor.bw + 1);
        let l = &self.factor.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let row = &l[i * w + bw - (i - j0)..i * w + bw];
            let dot: f64 = row.iter().zip(&y[j0..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / l[i * w + bw];
        }
        for i in (0..n).rev() {
            y[i] /= l[i * w + bw];
            let yi = y[i];
            let j0 = i.saturating_sub(bw);
            let row = &l[i * w + bw - (i - j0)..i * w + bw];
            for (yk, a) in y[j0..i].iter_mut().zip(row) {
                *yk -= a * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = tridiag(6);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let b = a.matvec(&x);
        let sol = a.clone().cholesky().unwrap().solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = tridiag(3);
        a.add(0, 0, -1.0);
        a.add(2, 2, -1.0);
        // [1 -1 0; -1 2 -1; 0 -1 1] has the constant vector in its kernel
        assert!(matches!(
            a.cholesky(),
            Err(Error::SolverFailure { .. })
        ));
    }

    #[test]
    fn submatrix_keeps_entries() {
        let a = tridiag(5);
        let s = a.submatrix(&[0, 1, 3, 4]);
        assert_eq!(s.get(0, 1), -1.0);
        assert_eq!(s.get(1, 2), 0.0);
        assert_eq!(s.get(2, 3), -1.0);
        assert_eq!(s.get(3, 3), 2.0);
    }

    #[test]
    fn matvec_is_symmetric() {
        let mut a = BandMatrix::zeros(4, 2);
        a.add(2, 0, 3.0);
        a.add(1, 1, 1.0);
        let y = a.matvec(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y, vec![0.0, 0.0, 3.0, 0.0]);
        let y = a.matvec(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(y, vec![3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn infinity_norm_counts_both_triangles() {
        let mut a = BandMatrix::zeros(3, 1);
        a.add(0, 0, 2.0);
        a.add(1, 0, -1.0);
        a.add(1, 1, 2.0);
        a.add(2, 1, -1.0);
        a.add(2, 2, 2.0);
        assert_eq!(a.norm_inf(), 4.0);
    }
}
