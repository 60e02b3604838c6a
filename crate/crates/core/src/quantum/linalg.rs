//! Matrix functions on small dense Hermitian matrices.

use nalgebra::DVector;

use super::{CMatrix, C64, EIG_CUTOFF};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(M + M†)/2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Largest entrywise modulus of `M − M†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Cholesky test. The complex factorization never stops, but a
/// nonpositive pivot shows up as a diagonal entry that is not clearly real
/// positive.
pub fn is_positive_definite(m: &CMatrix) -> bool {
    match m.clone().cholesky() {
        Some(ch) => ch
            .l_dirty()
            .diagonal()
            .iter()
            .all(|d| d.re > 0.0 && d.im.abs() < d.re),
        None => false,
    }
}

/// `V f(Λ) V†` for a Hermitian `M = V Λ V†`.
pub fn apply_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let scaled = DVector::from_iterator(values.len(), values.iter().map(|&l| c(f(l))));
    let mut left = vectors.clone();
    for (k, mut col) in left.column_iter_mut().enumerate() {
        col *= scaled[k];
    }
    left * vectors.adjoint()
}

/// Square root of the positive part.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    apply_fn(m, |l| l.max(0.0).sqrt())
}

/// `M^p` on the support (eigenvalues above the cutoff), zero elsewhere.
pub fn pinv_power(m: &CMatrix, p: f64) -> CMatrix {
    apply_fn(m, |l| if l > EIG_CUTOFF { l.powf(p) } else { 0.0 })
}

/// Projector onto eigenvectors with eigenvalue at most the cutoff.
pub fn kernel_projector(m: &CMatrix) -> CMatrix {
    apply_fn(m, |l| if l > EIG_CUTOFF { 0.0 } else { 1.0 })
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// `Re Tr(A B)` without forming the product.
pub fn re_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

/// `H^{⊗n}` in the computational basis.
pub fn hadamard(n: usize) -> CMatrix {
    let d = 1usize << n;
    let s = (d as f64).sqrt().recip();
    CMatrix::from_fn(d, d, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            c(s)
        } else {
            c(-s)
        }
    })
}

/// `A ⊗ B`
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Number of eigenvalues above the cutoff.
pub fn rank(m: &CMatrix) -> usize {
    eigvalsh(m).iter().filter(|&&l| l > EIG_CUTOFF).count()
}
