use super::{
    c, hermitian_deviation, min_eigenvalue, projector, psd_sqrt, CMatrix, CVector, C64,
};
use crate::error::{Error, Result};

/// A normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Wraps `amplitudes`, rejecting vectors whose squared norm is off by more than 1e-12.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invariant("pure state has no amplitudes", 0.0));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invariant("pure state entries finite", f64::NAN));
        }
        let dev = (amplitudes.norm_squared() - 1.0).abs();
        if dev > 1e-12 {
            return Err(Error::invariant("pure state squared norm equals 1", dev));
        }
        Ok(PureState { amplitudes })
    }

    /// Scales `v` to unit norm.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invariant("pure state has non-zero norm", n));
        }
        PureState::new(v.unscale(n))
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        PureState::new(CVector::from_column_slice(amps))
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> CMatrix {
        projector(&self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_raw(self.projector())
    }

    /// Representative with the largest-magnitude amplitude made real and non-negative.
    pub fn phase_aligned(&self) -> CVector {
        let (k, _) = self
            .amplitudes
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bk, bm), (k, z)| {
                if z.norm() > bm + 1e-14 {
                    (k, z.norm())
                } else {
                    (bk, bm)
                }
            });
        let z = self.amplitudes[k];
        if z.norm() == 0.0 {
            return self.amplitudes.clone();
        }
        let phase = z.conj() / z.norm();
        self.amplitudes.map(|a| a * phase)
    }

    /// Equality up to a global phase, compared on phase-aligned representatives.
    pub fn approx_eq_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        self.dim() == other.dim()
            && (self.phase_aligned() - other.phase_aligned())
                .iter()
                .all(|z| z.norm() <= tol)
    }
}

/// A positive, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl TryFrom<CMatrix> for DensityMatrix {
    type Error = Error;
    fn try_from(m: CMatrix) -> Result<Self> {
        DensityMatrix::new(m)
    }
}

impl From<DensityMatrix> for CMatrix {
    fn from(d: DensityMatrix) -> CMatrix {
        d.matrix
    }
}

impl DensityMatrix {
    /// Validates with the default tolerances: Hermitian and unit trace within
    /// 1e-12, smallest eigenvalue at least -1e-10.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, 1e-12, 1e-10)
    }

    pub fn with_tolerance(matrix: CMatrix, structural: f64, positivity: f64) -> Result<Self> {
        validate_density(&matrix, structural, positivity)?;
        Ok(DensityMatrix { matrix })
    }

    /// Wraps a matrix produced by a trace-preserving computation without re-checking it.
    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        DensityMatrix { matrix }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            matrix: CMatrix::identity(n, n).unscale(n as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Re-checks the invariants at the given tolerances.
    pub fn validate(&self, structural: f64, positivity: f64) -> Result<()> {
        validate_density(&self.matrix, structural, positivity)
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::dims(self.dim(), other.dim()));
        }
        let diff = &self.matrix - &other.matrix;
        let (vals, _) = super::hermitian_eigen(&diff);
        Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Convex mixture `α ρ + (1 − α) σ`.
    pub fn mix(&self, other: &DensityMatrix, alpha: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::dims(self.dim(), other.dim()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("mixing weight {alpha}")));
        }
        Ok(DensityMatrix::from_raw(
            self.matrix.scale(alpha) + other.matrix.scale(1.0 - alpha),
        ))
    }
}

fn validate_density(m: &CMatrix, structural: f64, positivity: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dims(m.nrows(), m.ncols()));
    }
    if m.nrows() == 0 {
        return Err(Error::invariant("density matrix is non-empty", 0.0));
    }
    if !super::all_finite(m) {
        return Err(Error::invariant("density matrix entries finite", f64::NAN));
    }
    let herm = hermitian_deviation(m);
    if herm > structural {
        return Err(Error::invariant("density matrix Hermitian", herm));
    }
    let tr = (m.trace() - c(1.0, 0.0)).norm();
    if tr > structural {
        return Err(Error::invariant("density matrix trace equals 1", tr));
    }
    let min = min_eigenvalue(m);
    if min < -positivity {
        return Err(Error::invariant("density matrix positive semidefinite", -min));
    }
    Ok(())
}

/// Uhlmann fidelity in the squared convention, `(Tr √(√ρ σ √ρ))²`, clamped to [0, 1].
///
/// Evaluated as the squared trace norm of `√ρ √σ`, which avoids taking square
/// roots of roundoff-sized eigenvalues when either state is rank deficient.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dims(rho.dim(), sigma.dim()));
    }
    let product = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
    let root: f64 = product.singular_values().iter().sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// `(1/√N) Σ_i |i⟩ ⊗ |i⟩` on `N ⊗ N`.
pub fn maximally_entangled(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::OutOfRange(format!(
            "maximally entangled state needs N >= 2, got {n}"
        )));
    }
    let amp = c(1.0 / (n as f64).sqrt(), 0.0);
    let mut v = CVector::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = amp;
    }
    Ok(PureState { amplitudes: v })
}

#[cfg(test)]
mod tests {
    use super::super::{random_state, schmidt};
    use super::*;

    fn ket(n: usize, k: usize) -> DensityMatrix {
        PureState::new(super::super::basis(n, k)).unwrap().density()
    }

    #[test]
    fn fidelity_of_state_with_itself() {
        let r = random_state(3, 11);
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states() {
        assert!(fidelity(&ket(2, 0), &ket(2, 1)).unwrap() < 1e-15);
    }

    #[test]
    fn fidelity_pure_vs_maximally_mixed() {
        let f = fidelity(&ket(2, 0), &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((f - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        assert!(fidelity(&ket(2, 0), &ket(3, 0)).is_err());
    }

    #[test]
    fn maximally_entangled_amplitudes() {
        let s2 = 1.0 / 2f64.sqrt();
        let psi = maximally_entangled(2).unwrap();
        let expected = [s2, 0.0, 0.0, s2];
        for (a, e) in psi.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
        let psi3 = maximally_entangled(3).unwrap();
        let s3 = 1.0 / 3f64.sqrt();
        for k in 0..9 {
            let e = if k % 4 == 0 { s3 } else { 0.0 };
            assert!((psi3.amplitudes()[k].re - e).abs() < 1e-15);
        }
        for n in 2..5 {
            let form = schmidt(&maximally_entangled(n).unwrap(), n, n).unwrap();
            for mu in form.coefficients() {
                assert!((mu - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
            }
        }
        assert!(maximally_entangled(1).is_err());
    }

    #[test]
    fn density_validation_names_invariant() {
        let bad = CMatrix::identity(2, 2);
        match DensityMatrix::new(bad) {
            Err(Error::Invariant { invariant, magnitude }) => {
                assert!(invariant.contains("trace"));
                assert!((magnitude - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut neg = CMatrix::zeros(2, 2);
        neg[(0, 0)] = c(1.2, 0.0);
        neg[(1, 1)] = c(-0.2, 0.0);
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(Error::Invariant { invariant, .. }) if invariant.contains("positive")
        ));
    }

    #[test]
    fn phase_equivalence() {
        let a = PureState::from_slice(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = PureState::new(a.amplitudes().map(|z| z * C64::from_polar(1.0, 1.234))).unwrap();
        assert!(a.approx_eq_up_to_phase(&b, 1e-12));
        let d = PureState::from_slice(&[c(0.6, 0.0), c(0.0, -0.8)]).unwrap();
        assert!(!a.approx_eq_up_to_phase(&d, 1e-6));
    }

    #[test]
    fn pure_state_rejects_unnormalised() {
        assert!(PureState::from_slice(&[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(PureState::normalized(CVector::zeros(2)).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        assert!((ket(2, 0).trace_distance(&ket(2, 1)).unwrap() - 1.0).abs() < 1e-14);
    }
}
