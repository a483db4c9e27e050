//! Dense complex linear algebra over small Hilbert spaces.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Composite spaces are ordered
//! with the first tensor factor as the most significant index, so the basis
//! vector `|i⟩ ⊗ |j⟩` on `d_A ⊗ d_B` sits at position `i * d_B + j`.

mod random;
mod schmidt;
mod state;

pub use random::{haar_isometry, haar_pure, haar_unitary, random_pure, random_state, random_state_with, seeded_rng};
pub use schmidt::{schmidt, SchmidtForm};
pub use state::{fidelity, maximally_entangled, DensityMatrix, PureState};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar.
pub type C64 = Complex64;
/// Dense complex matrix; the carrier for every operator in the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Default tolerance for structural checks.
pub const TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of factors, left to right.
pub fn tensor_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(CMatrix::from_element(1, 1, ONE), |acc, f| acc.kronecker(f))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Largest absolute entry of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm of `U U† - I`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    (u * u.adjoint() - identity(u.nrows())).norm()
}

/// `|ψ⟩⟨ψ|` for a column vector.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted descending.
///
/// Column `k` of the returned matrix is the eigenvector for the `k`-th value.
/// The input is symmetrised first, so tiny anti-Hermitian noise is ignored.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the solver's order among ties
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CVector::from_iterator(values.len(), values.iter().map(|&x| f(x)));
    &vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues at
/// roundoff level (relative to the largest) are treated as zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let floor = 64.0 * f64::EPSILON * values.first().copied().unwrap_or(0.0).abs() * m.nrows() as f64;
    let diag = CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(if x > floor { x.sqrt() } else { 0.0 }, 0.0)),
    );
    &vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()
}

/// `exp(i H)` for Hermitian `H`, computed through its spectrum so the result is
/// unitary to machine precision.
pub fn exp_i_hermitian(h: &CMatrix) -> CMatrix {
    hermitian_function(h, |x| C64::from_polar(1.0, x))
}

/// Linear offsets of every multi-index over `factors` (first factor most significant).
fn offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let strides = strides(dims);
    let mut out = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(out.len() * dims[f]);
        for &base in &out {
            for d in 0..dims[f] {
                next.push(base + d * strides[f]);
            }
        }
        out = next;
    }
    out
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn check_factors(dims: &[usize], factors: &[usize]) -> Result<()> {
    let mut seen = vec![false; dims.len()];
    for &f in factors {
        if f >= dims.len() {
            return Err(Error::OutOfRange(format!(
                "factor index {f} for {} factors",
                dims.len()
            )));
        }
        if seen[f] {
            return Err(Error::OutOfRange(format!("factor {f} listed twice")));
        }
        seen[f] = true;
    }
    Ok(())
}

/// Reduced matrix on the factors listed in `keep` (kept in ascending order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::dims(total, m.nrows()));
    }
    check_factors(dims, keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    let ko = offsets(dims, &kept);
    let to = offsets(dims, &traced);
    let mut out = CMatrix::zeros(ko.len(), ko.len());
    for (i, &ri) in ko.iter().enumerate() {
        for (j, &rj) in ko.iter().enumerate() {
            out[(i, j)] = to.iter().map(|&t| m[(ri + t, rj + t)]).sum();
        }
    }
    Ok(out)
}

/// Lift `op`, acting on the factors `targets` (in the given order), to the full
/// space described by `dims`, with the identity on every other factor.
pub fn embed(op: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    check_factors(dims, targets)?;
    let sub: usize = targets.iter().map(|&f| dims[f]).product();
    if !op.is_square() || op.nrows() != sub {
        return Err(Error::dims(sub, op.nrows()));
    }
    let others: Vec<usize> = (0..dims.len()).filter(|f| !targets.contains(f)).collect();
    let tofs = offsets(dims, targets);
    let oofs = offsets(dims, &others);
    let total: usize = dims.iter().product();
    let mut out = CMatrix::zeros(total, total);
    for &o in &oofs {
        for (a, &ta) in tofs.iter().enumerate() {
            for (b, &tb) in tofs.iter().enumerate() {
                out[(ta + o, tb + o)] = op[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Swap operator on `d1 ⊗ d2`, mapping `|i⟩|j⟩` to `|j⟩|i⟩` (result lives on `d2 ⊗ d1`).
pub fn swap(d1: usize, d2: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d1 * d2, d1 * d2);
    for i in 0..d1 {
        for j in 0..d2 {
            s[(j * d1 + i, i * d2 + j)] = ONE;
        }
    }
    s
}

/// Computational basis vector `|k⟩` in dimension `n`.
pub fn basis(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = ONE;
    v
}

/// The matrix unit `|i⟩⟨j|` in dimension `n`.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn identity_tensor_identity() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn scalar_tensor_is_neutral() {
        let b = CMatrix::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        let one = CMatrix::from_element(1, 1, ONE);
        assert_eq!(tensor(&one, &b), b);
    }

    #[test]
    fn x_tensor_x_flips_both() {
        let xx = tensor(&pauli_x(), &pauli_x());
        let out = &xx * basis(4, 0);
        assert_eq!(out, basis(4, 3));
    }

    #[test]
    fn partial_trace_of_bell_state_is_mixed() {
        let psi = maximally_entangled(2).unwrap();
        let rho = projector(psi.amplitudes());
        for keep in [0usize, 1] {
            let r = partial_trace(&rho, &[2, 2], &[keep]).unwrap();
            assert!(frobenius_distance(&r, &identity(2).scale(0.5)) < 1e-14);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 3], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(partial_trace(&m, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn partial_trace_keeps_middle_factor() {
        let a = random_state(2, 1).matrix().clone();
        let b = random_state(3, 2).matrix().clone();
        let d = random_state(2, 3).matrix().clone();
        let m = tensor_all([&a, &b, &d]);
        let r = partial_trace(&m, &[2, 3, 2], &[1]).unwrap();
        assert!(frobenius_distance(&r, &b) < 1e-14);
        let r = partial_trace(&m, &[2, 3, 2], &[2, 0]).unwrap();
        assert!(frobenius_distance(&r, &tensor(&a, &d)) < 1e-14);
    }

    #[test]
    fn embed_matches_kronecker_for_contiguous_factors() {
        let u = haar_unitary(&mut seeded_rng(4), 4);
        let full = embed(&u, &[2, 2, 3], &[0, 1]).unwrap();
        assert!(frobenius_distance(&full, &tensor(&u, &identity(3))) < 1e-14);
        let full = embed(&u, &[3, 2, 2], &[1, 2]).unwrap();
        assert!(frobenius_distance(&full, &tensor(&identity(3), &u)) < 1e-14);
    }

    #[test]
    fn embed_on_reversed_factors_conjugates_by_swap() {
        let u = haar_unitary(&mut seeded_rng(5), 6);
        let reversed = embed(&u, &[3, 2], &[1, 0]).unwrap();
        let s = swap(3, 2);
        let expected = s.adjoint() * &u * &s;
        assert!(frobenius_distance(&reversed, &expected) < 1e-13);
    }

    #[test]
    fn swap_exchanges_factors() {
        let s = swap(2, 3);
        let v = tensor(&CMatrix::from_column_slice(2, 1, &[ONE, ZERO]), &CMatrix::from_column_slice(3, 1, &[ZERO, ZERO, ONE]));
        let w = tensor(&CMatrix::from_column_slice(3, 1, &[ZERO, ZERO, ONE]), &CMatrix::from_column_slice(2, 1, &[ONE, ZERO]));
        assert_eq!(&s * v, w);
    }

    #[test]
    fn exp_i_hermitian_is_unitary_and_periodic() {
        let mut rng = seeded_rng(9);
        let g = haar_unitary(&mut rng, 3);
        let h = (&g + g.adjoint()).scale(0.7);
        let u = exp_i_hermitian(&h);
        assert!(unitarity_deviation(&u) < 1e-13);
        let zero = exp_i_hermitian(&CMatrix::zeros(3, 3));
        assert!(frobenius_distance(&zero, &identity(3)) < 1e-15);
    }

    #[test]
    fn hermitian_eigen_sorted_descending() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.1, 0.0), c(0.7, 0.0), c(0.2, 0.0)]));
        let (vals, vecs) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 0.7).abs() < 1e-15 && (vals[2] - 0.1).abs() < 1e-15);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }
}
