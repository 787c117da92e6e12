//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Eigenvalues closer than this are treated as one degenerate subspace.
pub const DEGENERACY_GAP: f64 = 1e-9;

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `max |a_ij - conj(a_ji)|`.
pub fn hermiticity_violation(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn max_offdiag_abs(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                worst = worst.max(a[(i, j)].norm());
            }
        }
    }
    worst
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    debug_assert_eq!(b.ncols(), n);
    acc
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Hermitian eigendecomposition with a deterministic gauge.
///
/// Eigenvalues are returned in descending order. Within a degenerate
/// subspace the basis is built by orthogonalising the projections of the
/// standard basis vectors, in index order; every column then has its first
/// non-negligible component real and positive.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    // Symmetrise so round-off asymmetry cannot leak into the solver.
    let sym = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut u = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        u.set_column(col, &eig.eigenvectors.column(i));
    }

    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() < DEGENERACY_GAP * scale {
            end += 1;
        }
        if end - start > 1 {
            canonical_subspace_basis(&mut u, start, end);
        }
        start = end;
    }
    for col in 0..n {
        fix_phase(&mut u, col);
    }
    (values, u)
}

fn canonical_subspace_basis(u: &mut CMat, start: usize, end: usize) {
    let n = u.nrows();
    let block = u.columns(start, end - start).into_owned();
    let proj = &block * block.adjoint();
    let mut chosen: Vec<CVec> = Vec::with_capacity(end - start);
    for k in 0..n {
        if chosen.len() == end - start {
            break;
        }
        let mut v: CVec = proj.column(k).into_owned();
        for c in &chosen {
            let overlap = c.dotc(&v);
            v -= c * overlap;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            chosen.push(v / Complex64::new(norm, 0.0));
        }
    }
    for (offset, v) in chosen.into_iter().enumerate() {
        u.set_column(start + offset, &v);
    }
}

fn fix_phase(u: &mut CMat, col: usize) {
    let n = u.nrows();
    let threshold = 1e-10;
    for i in 0..n {
        let z = u[(i, col)];
        if z.norm() > threshold {
            let phase = z.conj() / z.norm();
            for r in 0..n {
                u[(r, col)] *= phase;
            }
            u[(i, col)] = Complex64::new(u[(i, col)].norm(), 0.0);
            return;
        }
    }
}

/// `max |U†U - I|`.
pub fn unitarity_violation(u: &CMat) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - identity(n)))
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn unitary_propagator(h: &CMat, t: f64) -> CMat {
    let (values, u) = hermitian_eigen(h);
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
    ));
    &u * phases * u.adjoint()
}
