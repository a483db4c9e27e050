use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{partial_trace, CMatrix, CVector, DensityMatrix, PureState, C64};

/// The crate's seeded generator. ChaCha8 keeps streams identical across platforms.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-distributed pure state: normalised complex Gaussian amplitudes.
pub fn haar_pure<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PureState {
    loop {
        let v = CVector::from_fn(n, |_, _| gaussian(rng));
        if let Ok(p) = PureState::normalized(v) {
            return p;
        }
    }
}

/// Haar-distributed isometry with `rows >= cols`: Gram-Schmidt on a Ginibre
/// matrix, which leaves the triangular factor with a positive diagonal.
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let mut q = CMatrix::from_fn(rows, cols, |_, _| gaussian(rng));
    for j in 0..cols {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dotc(&q.column(j));
                let qk = q.column(k).clone_owned();
                let mut cj = q.column_mut(j);
                cj -= qk * proj;
            }
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    haar_isometry(rng, n, n)
}

pub fn random_pure(n: usize, seed: u64) -> PureState {
    haar_pure(&mut seeded_rng(seed), n)
}

/// Mixed state obtained by tracing out half of a Haar pure state on `n ⊗ n`.
pub fn random_state_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    let psi = haar_pure(rng, n * n);
    let reduced = partial_trace(&psi.projector(), &[n, n], &[0])
        .expect("dims are consistent by construction");
    DensityMatrix::from_raw((&reduced + reduced.adjoint()).scale(0.5))
}

pub fn random_state(n: usize, seed: u64) -> DensityMatrix {
    random_state_with(&mut seeded_rng(seed), n)
}

#[cfg(test)]
mod tests {
    use super::super::{frobenius_distance, identity, unitarity_deviation};
    use super::*;

    #[test]
    fn same_seed_same_output() {
        assert_eq!(random_pure(3, 42), random_pure(3, 42));
        assert_eq!(random_state(2, 7), random_state(2, 7));
        assert_ne!(random_pure(3, 42), random_pure(3, 43));
    }

    #[test]
    fn random_states_are_valid() {
        for seed in 0..20 {
            random_state(2, seed).validate(1e-12, 1e-10).unwrap();
            random_state(3, seed).validate(1e-12, 1e-10).unwrap();
        }
        assert_eq!(random_state(1, 0).dim(), 1);
    }

    #[test]
    fn haar_average_is_maximally_mixed() {
        let mut acc = CMatrix::zeros(2, 2);
        let samples = 10_000;
        for seed in 0..samples {
            acc += random_pure(2, seed).projector();
        }
        acc.unscale_mut(samples as f64);
        let target = identity(2).scale(0.5);
        assert!(super::super::max_abs(&(acc - target)) < 0.05);
    }

    #[test]
    fn isometries_are_isometric() {
        let mut rng = seeded_rng(3);
        let v = haar_isometry(&mut rng, 12, 3);
        assert!(frobenius_distance(&(v.adjoint() * &v), &identity(3)) < 1e-13);
        assert!(unitarity_deviation(&haar_unitary(&mut rng, 5)) < 1e-13);
    }
}
