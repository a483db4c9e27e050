//! Quantum channels in Kraus and Choi form.
//!
//! The Choi matrix of a channel `ε` on an `N`-level system is
//! `R = (ε ⊗ I)[|ψ₀⟩⟨ψ₀|]` with `|ψ₀⟩ = N^{-1/2} Σ_i |i⟩|i⟩`. The output factor
//! comes first, so `R` lives on `B ⊗ A`, and it is normalised to **unit trace**
//! (many texts use trace `N`; multiply by `N` to convert).

use rand::Rng;

use crate::error::{Error, Result};
use crate::qmath::{
    self, c, embed, hermitian_eigen, identity, min_eigenvalue, partial_trace, CMatrix, CVector,
    DensityMatrix, C64, TOL,
};

/// A completely positive, trace-preserving map `ρ ↦ Σ_k K_k ρ K_k†` on an `N`-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    /// Validates shapes, finiteness and `Σ K†K = I` within 1e-10.
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(kraus, TOL)
    }

    pub fn with_tolerance(kraus: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::invariant("Kraus list is non-empty", 0.0))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::invariant("Kraus operators are non-empty", 0.0));
        }
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::dims(dim, if k.nrows() != dim { k.nrows() } else { k.ncols() }));
            }
            if !qmath::all_finite(k) {
                return Err(Error::invariant("Kraus entries finite", f64::NAN));
            }
        }
        let ch = KrausChannel { dim, kraus };
        let r = ch.trace_preservation_residual();
        if r > tol {
            return Err(Error::invariant("sum of K†K equals identity", r));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim,
            kraus: vec![identity(dim)],
        }
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        KrausChannel::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Frobenius norm of `Σ K†K − I`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k);
        (sum - identity(self.dim)).norm()
    }

    /// `Σ K m K†` on an arbitrary (not necessarily normalised) operator.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::dims(self.dim, m.nrows()));
        }
        Ok(self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * m * k.adjoint()))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.apply_matrix(rho.matrix()).map(DensityMatrix::from_raw)
    }

    /// `(I ⊗ ε ⊗ I)` with the channel on factor `which` of a composite operator.
    pub fn apply_on_factor_matrix(&self, m: &CMatrix, dims: &[usize], which: usize) -> Result<CMatrix> {
        let d = *dims
            .get(which)
            .ok_or_else(|| Error::OutOfRange(format!("factor {which} of {}", dims.len())))?;
        if d != self.dim {
            return Err(Error::dims(self.dim, d));
        }
        let total: usize = dims.iter().product();
        if m.nrows() != total || m.ncols() != total {
            return Err(Error::dims(total, m.nrows()));
        }
        let mut out = CMatrix::zeros(total, total);
        for k in &self.kraus {
            let big = embed(k, dims, &[which])?;
            out += &big * m * big.adjoint();
        }
        Ok(out)
    }

    pub fn apply_on_factor(&self, rho: &DensityMatrix, dims: &[usize], which: usize) -> Result<DensityMatrix> {
        self.apply_on_factor_matrix(rho.matrix(), dims, which)
            .map(DensityMatrix::from_raw)
    }

    /// Unit-trace Choi matrix on `B ⊗ A`.
    pub fn choi(&self) -> ChoiMatrix {
        let n = self.dim;
        let scale = 1.0 / n as f64;
        let mut r = CMatrix::zeros(n * n, n * n);
        for k in &self.kraus {
            // (K ⊗ I)|ψ₀⟩ has component K[b, a] / √N at index b·N + a
            let v = CVector::from_fn(n * n, |idx, _| k[(idx / n, idx % n)]);
            r += (&v * v.adjoint()).scale(scale);
        }
        ChoiMatrix::from_raw(r, n, n)
    }

    /// Number of Choi eigenvalues above `tol × λ_max`: the minimal Kraus count.
    pub fn rank(&self, tol: f64) -> usize {
        self.choi().rank(tol)
    }

    /// Canonical Kraus set of the same map (see [`kraus_from_choi`]).
    pub fn canonicalize(&self, tol: f64) -> Result<KrausChannel> {
        kraus_from_choi(&self.choi(), tol)
    }
}

/// Unit-trace Choi state of a channel, ordered output ⊗ input, with its spectrum cached.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim_out: usize,
    dim_in: usize,
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl ChoiMatrix {
    /// Validates positivity (≥ −tol), unit trace and `Tr_B R = I/dim_in`, all within `tol`.
    pub fn new(matrix: CMatrix, dim_out: usize, dim_in: usize, tol: f64) -> Result<Self> {
        let d = dim_out * dim_in;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::dims(d, matrix.nrows()));
        }
        if !qmath::all_finite(&matrix) {
            return Err(Error::invariant("Choi entries finite", f64::NAN));
        }
        let herm = qmath::hermitian_deviation(&matrix);
        if herm > tol {
            return Err(Error::invariant("Choi matrix Hermitian", herm));
        }
        let min = min_eigenvalue(&matrix);
        if min < -tol {
            return Err(Error::invariant("Choi matrix positive semidefinite", -min));
        }
        let tr = (matrix.trace() - c(1.0, 0.0)).norm();
        if tr > tol {
            return Err(Error::invariant("Choi matrix trace equals 1", tr));
        }
        let marginal = partial_trace(&matrix, &[dim_out, dim_in], &[1])?;
        let tp = (marginal - identity(dim_in).unscale(dim_in as f64)).norm();
        if tp > tol {
            return Err(Error::invariant("input marginal of Choi matrix equals I/N", tp));
        }
        Ok(ChoiMatrix::from_raw(matrix, dim_out, dim_in))
    }

    pub(crate) fn from_raw(matrix: CMatrix, dim_out: usize, dim_in: usize) -> Self {
        let (eigenvalues, eigenvectors) = hermitian_eigen(&matrix);
        ChoiMatrix {
            dim_out,
            dim_in,
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn rank(&self, tol: f64) -> usize {
        let max = self.eigenvalues.first().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return 0;
        }
        self.eigenvalues.iter().filter(|&&v| v > tol * max).count()
    }

    /// The channel's Choi state viewed as a density matrix on `B ⊗ A`.
    pub fn as_density(&self) -> DensityMatrix {
        DensityMatrix::from_raw(self.matrix.clone())
    }
}

/// Kraus operators `K_k[b, a] = √(N λ_k) v_k[b·N + a]` from the eigenpairs of
/// the Choi matrix with `λ_k > tol × λ_max`, ordered by descending eigenvalue.
/// Each operator's largest entry is rotated to be real and non-negative.
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> Result<KrausChannel> {
    let (dout, din) = (choi.dim_out, choi.dim_in);
    if dout != din {
        return Err(Error::dims(din, dout));
    }
    let max = choi.eigenvalues.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Err(Error::invariant("Choi matrix has a positive eigenvalue", max));
    }
    let mut kraus = Vec::new();
    for (k, &lambda) in choi.eigenvalues.iter().enumerate() {
        if lambda <= tol * max {
            break;
        }
        let weight = (din as f64 * lambda).sqrt();
        let v = choi.eigenvectors.column(k);
        let mut op = CMatrix::from_fn(dout, din, |b, a| v[b * din + a] * weight);
        fix_phase(&mut op);
        kraus.push(op);
    }
    // dropped eigenvalues leave an O(tol) defect, so validate loosely
    KrausChannel::with_tolerance(kraus, (tol * din as f64).max(1e-9))
}

fn fix_phase(op: &mut CMatrix) {
    let mut best = C64::new(0.0, 0.0);
    for z in op.iter() {
        if z.norm() > best.norm() + 1e-12 {
            best = *z;
        }
    }
    if best.norm() > 0.0 {
        let phase = best.conj() / best.norm();
        op.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Generalised Pauli (Weyl) operator `X^a Z^b` on an `N`-level system.
pub fn weyl(n: usize, a: usize, b: usize) -> CMatrix {
    let mut w = CMatrix::zeros(n, n);
    for k in 0..n {
        let phase = 2.0 * std::f64::consts::PI * ((b * k) % n) as f64 / n as f64;
        w[((k + a) % n, k)] = C64::from_polar(1.0, phase);
    }
    w
}

/// `ρ ↦ p I/N + (1 − p) ρ`, realised with the Weyl operators.
pub fn depolarizing(p: f64, n: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("depolarizing probability {p} not in [0, 1]")));
    }
    if n < 1 {
        return Err(Error::OutOfRange("dimension must be positive".into()));
    }
    let nn = (n * n) as f64;
    let mut kraus = vec![identity(n).scale((1.0 - p + p / nn).sqrt())];
    if p > 0.0 {
        let w = p.sqrt() / n as f64;
        for a in 0..n {
            for b in 0..n {
                if a != 0 || b != 0 {
                    kraus.push(weyl(n, a, b).scale(w));
                }
            }
        }
    }
    KrausChannel::new(kraus)
}

/// Random channel of Kraus rank `rank`: a Haar isometry `N → N·rank` split into blocks.
pub fn random_channel(n: usize, rank: usize, seed: u64) -> Result<KrausChannel> {
    random_channel_with(&mut qmath::seeded_rng(seed), n, rank)
}

pub fn random_channel_with<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> Result<KrausChannel> {
    if n < 1 || rank < 1 || rank > n * n {
        return Err(Error::OutOfRange(format!(
            "channel rank {rank} not in 1..={} for N = {n}",
            n * n
        )));
    }
    let v = qmath::haar_isometry(rng, n * rank, n);
    let kraus = (0..rank)
        .map(|k| v.rows(k * n, n).clone_owned())
        .collect();
    KrausChannel::new(kraus)
}

/// Whether depolarizing noise of strength `p` is simulable by local operations
/// and classical communication: exactly when `p ≥ 2/3`.
pub fn depolarizing_locc_simulable(p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("depolarizing probability {p} not in [0, 1]")));
    }
    Ok(p >= 2.0 / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{fidelity, frobenius_distance, maximally_entangled, random_pure, random_state, tensor};

    fn diag2(a: f64, b: f64) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(vec![c(a, 0.0), c(b, 0.0)]))
    }

    fn zero_state() -> DensityMatrix {
        DensityMatrix::new(diag2(1.0, 0.0)).unwrap()
    }

    #[test]
    fn identity_channel_leaves_states_alone() {
        let r = random_state(3, 5);
        let out = KrausChannel::identity(3).apply(&r).unwrap();
        assert!(frobenius_distance(out.matrix(), r.matrix()) < 1e-15);
    }

    #[test]
    fn depolarizing_action() {
        let cases = [(1.0, 0.5, 0.5), (0.5, 0.75, 0.25), (2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0)];
        for (p, a, b) in cases {
            let out = depolarizing(p, 2).unwrap().apply(&zero_state()).unwrap();
            assert!(frobenius_distance(out.matrix(), &diag2(a, b)) < 1e-14, "p = {p}");
        }
        let r = random_state(3, 1);
        let out = depolarizing(0.0, 3).unwrap().apply(&r).unwrap();
        assert!(frobenius_distance(out.matrix(), r.matrix()) < 1e-14);
        let out = depolarizing(1.0, 3).unwrap().apply(&r).unwrap();
        assert!(frobenius_distance(out.matrix(), &identity(3).unscale(3.0)) < 1e-14);
    }

    #[test]
    fn depolarizing_rejects_bad_probability() {
        assert!(depolarizing(-0.1, 2).is_err());
        assert!(depolarizing(1.1, 2).is_err());
        assert!(depolarizing_locc_simulable(1.5).is_err());
    }

    #[test]
    fn dimension_mismatch_on_apply() {
        let r = random_state(3, 1);
        assert!(matches!(
            depolarizing(0.5, 2).unwrap().apply(&r),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_on_half_of_bell_pair_gives_choi() {
        let psi = maximally_entangled(2).unwrap().density();
        for p in [0.0, 0.3, 1.0] {
            let ch = depolarizing(p, 2).unwrap();
            let out = ch.apply_on_factor(&psi, &[2, 2], 0).unwrap();
            assert!(frobenius_distance(out.matrix(), ch.choi().matrix()) < 1e-14);
            // closed form p·I/4 + (1 − p)·Ψ₀
            let expected = identity(4).scale(p / 4.0) + psi.matrix().scale(1.0 - p);
            assert!(frobenius_distance(out.matrix(), &expected) < 1e-14);
        }
        let same = KrausChannel::identity(2).apply_on_factor(&psi, &[2, 2], 1).unwrap();
        assert!(frobenius_distance(same.matrix(), psi.matrix()) < 1e-15);
    }

    #[test]
    fn apply_on_factor_of_product_state() {
        let a = random_state(2, 3);
        let b = random_state(3, 4);
        let ch = random_channel(3, 4, 9).unwrap();
        let prod = DensityMatrix::new(tensor(a.matrix(), b.matrix())).unwrap();
        let out = ch.apply_on_factor(&prod, &[2, 3], 1).unwrap();
        let expected = tensor(a.matrix(), ch.apply(&b).unwrap().matrix());
        assert!(frobenius_distance(out.matrix(), &expected) < 1e-13);
        assert!(ch.apply_on_factor(&prod, &[2, 3], 0).is_err());
    }

    #[test]
    fn choi_spectra() {
        let id = KrausChannel::identity(2).choi();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (v, e) in id.eigenvalues().iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
        let p = 0.5;
        let dep = depolarizing(p, 2).unwrap().choi();
        let expected = [1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0];
        for (v, e) in dep.eigenvalues().iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
        let u = qmath::haar_unitary(&mut qmath::seeded_rng(1), 3);
        assert_eq!(KrausChannel::unitary(u).unwrap().rank(1e-10), 1);
    }

    #[test]
    fn ranks() {
        assert_eq!(KrausChannel::identity(2).rank(1e-10), 1);
        assert_eq!(depolarizing(0.5, 2).unwrap().rank(1e-10), 4);
        assert_eq!(depolarizing(0.0, 2).unwrap().rank(1e-10), 1);
        assert_eq!(depolarizing(0.5, 3).unwrap().rank(1e-10), 9);
    }

    #[test]
    fn random_channel_contracts() {
        assert!(random_channel(2, 0, 1).is_err());
        assert!(random_channel(2, 5, 1).is_err());
        assert_eq!(random_channel(2, 3, 8).unwrap(), random_channel(2, 3, 8).unwrap());
        let one = random_channel(3, 1, 2).unwrap();
        assert_eq!(one.kraus().len(), 1);
        assert!(qmath::unitarity_deviation(&one.kraus()[0]) < 1e-12);
        assert_eq!(random_channel(3, 9, 2).unwrap().rank(1e-10), 9);
    }

    #[test]
    fn kraus_from_identity_choi() {
        let k = kraus_from_choi(&KrausChannel::identity(3).choi(), 1e-10).unwrap();
        assert_eq!(k.kraus().len(), 1);
        assert!(frobenius_distance(&k.kraus()[0], &identity(3)) < 1e-12);
    }

    #[test]
    fn depolarizing_round_trip_action() {
        let ch = depolarizing(1.0, 2).unwrap();
        let back = ch.canonicalize(1e-10).unwrap();
        assert_eq!(back.kraus().len(), 4);
        for seed in 0..20 {
            let r = random_state(2, seed);
            let a = ch.apply(&r).unwrap();
            let b = back.apply(&r).unwrap();
            assert!(frobenius_distance(a.matrix(), b.matrix()) < 1e-10);
        }
    }

    #[test]
    fn choi_validation_names_invariant() {
        let bad = identity(4).unscale(2.0);
        match ChoiMatrix::new(bad, 2, 2, 1e-10) {
            Err(Error::Invariant { invariant, .. }) => assert!(invariant.contains("trace")),
            other => panic!("unexpected {other:?}"),
        }
        // unit trace, PSD, but not trace preserving: |00⟩⟨00|
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        match ChoiMatrix::new(m, 2, 2, 1e-10) {
            Err(Error::Invariant { invariant, magnitude }) => {
                assert!(invariant.contains("marginal"));
                assert!(magnitude > 0.1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(ChoiMatrix::new(depolarizing(0.2, 2).unwrap().choi().matrix().clone(), 2, 2, 1e-10).is_ok());
    }

    #[test]
    fn kraus_validation() {
        assert!(KrausChannel::new(vec![]).is_err());
        assert!(matches!(
            KrausChannel::new(vec![identity(2).scale(0.5)]),
            Err(Error::Invariant { .. })
        ));
        assert!(KrausChannel::new(vec![identity(2), CMatrix::zeros(3, 3)]).is_err());
    }

    #[test]
    fn locc_threshold() {
        assert!(depolarizing_locc_simulable(2.0 / 3.0).unwrap());
        assert!(depolarizing_locc_simulable(1.0).unwrap());
        assert!(!depolarizing_locc_simulable(0.5).unwrap());
        assert!(!depolarizing_locc_simulable(2.0 / 3.0 - 1e-12).unwrap());
    }

    #[test]
    fn depolarizing_average_output_fidelity() {
        let p = 0.5;
        let ch = depolarizing(p, 2).unwrap();
        let samples = 10_000u64;
        let mean: f64 = (0..samples)
            .map(|s| {
                let psi = random_pure(2, s).density();
                fidelity(&psi, &ch.apply(&psi).unwrap()).unwrap()
            })
            .sum::<f64>()
            / samples as f64;
        assert!((mean - (1.0 - p / 2.0)).abs() < 0.01);
    }
}
