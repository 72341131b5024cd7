use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::space::HilbertSpace;

pub type C64 = Complex64;

/// Dense complex operator over a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl OperatorMatrix {
    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: Array2::zeros((d, d)),
        }
    }

    pub fn from_matrix(space: &HilbertSpace, matrix: Array2<C64>) -> Self {
        assert_eq!(matrix.dim(), (space.total_dim(), space.total_dim()));
        Self {
            space: space.clone(),
            matrix,
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[[row, col]]
    }

    pub(crate) fn add(&mut self, row: usize, col: usize, value: C64) {
        self.matrix[[row, col]] += value;
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    /// Largest |A_ij − conj(A_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        max_anti_hermitian(&self.matrix)
    }

    /// Compressed rows of the nonzero entries, used by the propagators.
    pub fn to_sparse(&self) -> SparseRows {
        SparseRows::from_dense(&self.matrix)
    }
}

/// Compressed sparse row view of an operator.
#[derive(Debug, Clone)]
pub struct SparseRows {
    pub(crate) row_start: Vec<usize>,
    pub(crate) cols: Vec<usize>,
    pub(crate) vals: Vec<C64>,
}

impl SparseRows {
    pub fn from_dense(m: &Array2<C64>) -> Self {
        let mut row_start = Vec::with_capacity(m.nrows() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for row in m.rows() {
            for (j, v) in row.iter().enumerate() {
                if *v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(*v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            row_start,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Max absolute row sum, an upper bound on the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    /// out = scale · A x
    pub fn apply(&self, x: &[C64], scale: C64, out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let acc: C64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *o = scale * acc;
        }
    }

    /// out = scale · A X for a dense square X (row-major).
    pub fn left_multiply(&self, x: &Array2<C64>, scale: C64, out: &mut Array2<C64>) {
        out.fill(C64::new(0.0, 0.0));
        for i in 0..self.dim() {
            let mut out_row = out.row_mut(i);
            for (k, v) in self.row(i) {
                let s = scale * v;
                out_row.zip_mut_with(&x.row(k), |o, xk| *o += s * xk);
            }
        }
    }
}

/// Dense density matrix over a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    rho: Array2<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(space: &HilbertSpace, rho: Array2<C64>) -> Self {
        assert_eq!(rho.dim(), (space.total_dim(), space.total_dim()));
        Self {
            space: space.clone(),
            rho,
        }
    }

    pub fn pure(space: &HilbertSpace, psi: &Array1<C64>) -> Self {
        let d = space.total_dim();
        assert_eq!(psi.len(), d);
        let rho = Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj());
        Self::from_matrix(space, rho)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.rho
    }

    #[cfg(test)]
    pub(crate) fn matrix_mut(&mut self) -> &mut Array2<C64> {
        &mut self.rho
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diag().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_anti_hermitian(&self.rho)
    }

    /// Populations on the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diag().iter().map(|z| z.re).collect()
    }

    /// Excited-qubit populations ρ^{ee}_{n,n} indexed by photon configuration.
    pub fn excited_populations(&self) -> Vec<f64> {
        self.space
            .excited_range()
            .map(|i| self.rho[[i, i]].re)
            .collect()
    }

    /// Rank-one test: if ρ = ψψ† return ψ (global phase fixed by the largest entry).
    pub fn as_pure_state(&self, tol: f64) -> Option<Array1<C64>> {
        let d = self.space.total_dim();
        let (k, _) = self
            .rho
            .diag()
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |acc, (i, z)| if z.re > acc.1 { (i, z.re) } else { acc },
            );
        let pivot = self.rho[[k, k]].re;
        if pivot <= 0.0 {
            return None;
        }
        let scale = 1.0 / pivot.sqrt();
        let psi = Array1::from_shape_fn(d, |i| self.rho[[i, k]] * scale);
        for i in 0..d {
            for j in 0..d {
                if (psi[i] * psi[j].conj() - self.rho[[i, j]]).norm() > tol {
                    return None;
                }
            }
        }
        Some(psi)
    }
}

fn max_anti_hermitian(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_matches_dense() {
        let s = HilbertSpace::new(vec![3]).unwrap();
        let mut a = OperatorMatrix::zeros(&s);
        a.add(0, 1, C64::new(1.0, 2.0));
        a.add(3, 3, C64::new(0.0, -1.0));
        a.add(5, 2, C64::new(-0.5, 0.0));
        let sp = a.to_sparse();
        assert_eq!(sp.nnz(), 3);
        let x: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut y = vec![C64::new(0.0, 0.0); 6];
        sp.apply(&x, C64::new(1.0, 0.0), &mut y);
        let xa = Array1::from(x.clone());
        let dense = a.matrix().dot(&xa);
        for i in 0..6 {
            assert!((dense[i] - y[i]).norm() < 1e-14);
        }
        let xm = Array2::from_shape_fn((6, 6), |(i, j)| {
            C64::new(i as f64 - j as f64, 0.5 * j as f64)
        });
        let mut out = Array2::zeros((6, 6));
        sp.left_multiply(&xm, C64::new(0.0, -1.0), &mut out);
        let expect = a.matrix().dot(&xm).mapv(|z| z * C64::new(0.0, -1.0));
        assert!((&out - &expect).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn pure_state_detection() {
        let s = HilbertSpace::new(vec![2]).unwrap();
        let psi = Array1::from(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let rho = DensityMatrix::pure(&s, &psi);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        let back = rho.as_pure_state(1e-12).unwrap();
        let back_rho = DensityMatrix::pure(&s, &back);
        assert!((back_rho.matrix() - rho.matrix())
            .iter()
            .all(|z| z.norm() < 1e-14));
        let mut mixed = rho.clone();
        mixed.matrix_mut()[[2, 2]] = C64::new(0.1, 0.0);
        assert!(mixed.as_pure_state(1e-12).is_none());
    }
}
