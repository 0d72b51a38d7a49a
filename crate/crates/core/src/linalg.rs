//! Thin wrappers over nalgebra's dense Hermitian routines.

use nalgebra::{DMatrix, DVector};

use crate::tfcore::{Signal, C64};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenpairs sorted by non-increasing eigenvalue; each eigenvector has its
/// largest-magnitude entry rotated onto the positive real axis.
pub fn hermitian_eigen(matrix: CMatrix) -> (Vec<f64>, CMatrix) {
    let n = matrix.nrows();
    let eig = nalgebra::SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..n).collect();
    // ties keep solver order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_phase(col.as_mut_slice());
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(matrix: CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = matrix.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn min_eigenvalue(matrix: CMatrix) -> f64 {
    matrix
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(matrix: CMatrix) -> f64 {
    matrix
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Rotates `v` so its largest-magnitude entry is real and positive. The first
/// index wins among entries of equal magnitude.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let rot = v[best].conj() / best_abs;
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// `max |A - A^H|` entrywise.
pub fn hermitian_defect(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry magnitude.
pub fn max_abs(matrix: &CMatrix) -> f64 {
    matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn column_signal(matrix: &CMatrix, k: usize) -> Signal {
    Signal::from_vec_unchecked(matrix.column(k).iter().copied().collect())
}

pub fn signal_vector(f: &Signal) -> CVector {
    CVector::from_column_slice(f.values())
}

pub fn vector_signal(v: &CVector) -> Signal {
    Signal::from_vec_unchecked(v.iter().copied().collect())
}
