use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::protocol::{AncillaResource, ResourceProtocol, SenderBranch};
use crate::qmath::{exp_i_hermitian, identity, CMatrix, C64, ONE, ZERO};
use crate::teleport::{BellBasis, CorrectionUnitary};

/// Which part of `A ⊗ a` the sender measures after its unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Measurement {
    /// No measurement: a single branch, no classical message.
    None,
    /// The ancilla `a` in its computational basis: `M = P`.
    Ancilla,
    /// All of `A ⊗ a` in the computational basis: `M = N·P`.
    Full,
}

impl Measurement {
    pub fn messages(self, n: usize, p: usize) -> usize {
        match self {
            Measurement::None => 1,
            Measurement::Ancilla => p,
            Measurement::Full => n * p,
        }
    }

    fn projectors(self, n: usize, p: usize) -> Vec<CMatrix> {
        let d = n * p;
        match self {
            Measurement::None => vec![identity(d)],
            Measurement::Ancilla => (0..p)
                .map(|eta| CMatrix::from_fn(d, d, |r, c| if r == c && r % p == eta { ONE } else { ZERO }))
                .collect(),
            Measurement::Full => (0..d).map(|eta| crate::qmath::ket_bra(d, eta, eta)).collect(),
        }
    }
}

/// Number of reals in a `d × d` Hermitian generator.
pub fn generator_len(d: usize) -> usize {
    d * d
}

/// Hermitian matrix from `d²` reals: the diagonal, then `(re, im)` of each
/// upper-triangular entry in row-major order.
pub fn hermitian_from_params(params: &[f64], d: usize) -> CMatrix {
    debug_assert_eq!(params.len(), d * d);
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = C64::new(params[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = C64::new(params[k], params[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Inverse of [`hermitian_from_params`] on the Hermitian part of `h`.
pub fn params_from_hermitian(h: &CMatrix) -> Vec<f64> {
    let d = h.nrows();
    let mut out = Vec::with_capacity(d * d);
    out.extend((0..d).map(|i| h[(i, i)].re));
    for i in 0..d {
        for j in i + 1..d {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// A Hermitian `H` with `exp(iH) = u` and spectrum in `(−π, π]`.
pub fn unitary_generator(u: &CMatrix) -> CMatrix {
    let (q, t) = u.clone().schur().unpack();
    let d = u.nrows();
    let phases = CMatrix::from_fn(d, d, |r, c| if r == c { C64::new(t[(r, r)].arg(), 0.0) } else { ZERO });
    let h = &q * phases * q.adjoint();
    (&h + h.adjoint()) * C64::new(0.5, 0.0)
}

/// `μ_i² = softmax(2x)_i` with the last logit pinned at 0.
pub fn mu_from_params(params: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = params.iter().copied().chain(std::iter::once(0.0)).map(|x| 2.0 * x).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| (w / total).sqrt()).collect()
}

/// Real parameters of a family of deterministic protocols: a unitary on
/// `A ⊗ a` followed by a complete computational-basis measurement, receiver
/// unitaries on `B ⊗ b`, and the shared state's Schmidt coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtocolParameterization {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub measurement: Measurement,
    pub sender_generator: Vec<f64>,
    pub receiver_generators: Vec<Vec<f64>>,
    pub mu_params: Vec<f64>,
    pub mu_fixed: Option<Vec<f64>>,
}

impl ProtocolParameterization {
    /// All generators and logits zero: identity unitaries, uniform `μ`.
    pub fn zeros(n: usize, p: usize, measurement: Measurement) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::OutOfRange("dimensions must be positive".into()));
        }
        let d = n * p;
        Ok(ProtocolParameterization {
            n,
            p,
            measurement,
            sender_generator: vec![0.0; generator_len(d)],
            receiver_generators: vec![vec![0.0; generator_len(d)]; measurement.messages(n, p)],
            mu_params: vec![0.0; p - 1],
            mu_fixed: None,
        })
    }

    /// Parameters that decode to teleportation: the sender rotates the Bell
    /// basis onto the computational basis and measures everything.
    pub fn teleportation(n: usize) -> Result<Self> {
        let bell = BellBasis::new(n)?;
        let d = n * n;
        let mut u = CMatrix::zeros(d, d);
        for eta in 0..d {
            let v = bell.vector(eta);
            for c in 0..d {
                u[(eta, c)] = v[c].conj();
            }
        }
        let receivers = (0..d)
            .map(|eta| CorrectionUnitary::new(n, eta).map(|c| params_from_hermitian(&unitary_generator(c.matrix()))))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProtocolParameterization {
            n,
            p: n,
            measurement: Measurement::Full,
            sender_generator: params_from_hermitian(&unitary_generator(&u)),
            receiver_generators: receivers,
            mu_params: vec![0.0; n - 1],
            mu_fixed: None,
        })
    }

    /// Replaces the generators and free logits with uniform draws in `[−π, π]`.
    pub fn randomized<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut out = self.clone();
        let free = out.free_len();
        let v: Vec<f64> = (0..free).map(|_| rng.random_range(-PI..=PI)).collect();
        out.set_free(&v);
        out
    }

    pub fn with_mu_fixed(mut self, mu: Option<Vec<f64>>) -> Result<Self> {
        if let Some(m) = &mu {
            if m.len() != self.p {
                return Err(Error::dims(self.p, m.len()));
            }
            AncillaResource::new(m.clone())?;
        }
        self.mu_fixed = mu;
        Ok(self)
    }

    pub fn messages(&self) -> usize {
        self.measurement.messages(self.n, self.p)
    }

    /// Count of parameters varied by the optimizer (μ logits drop out when `μ` is fixed).
    pub fn free_len(&self) -> usize {
        let g = generator_len(self.n * self.p);
        g * (1 + self.messages()) + if self.mu_fixed.is_some() { 0 } else { self.p - 1 }
    }

    /// Free parameters flattened: sender, receivers in branch order, then μ logits.
    pub fn free(&self) -> Vec<f64> {
        let mut v = self.sender_generator.clone();
        for r in &self.receiver_generators {
            v.extend_from_slice(r);
        }
        if self.mu_fixed.is_none() {
            v.extend_from_slice(&self.mu_params);
        }
        v
    }

    pub fn set_free(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.free_len());
        let g = generator_len(self.n * self.p);
        self.sender_generator.copy_from_slice(&v[..g]);
        let m = self.messages();
        for (k, r) in self.receiver_generators.iter_mut().enumerate() {
            r.copy_from_slice(&v[g * (k + 1)..g * (k + 2)]);
        }
        if self.mu_fixed.is_none() {
            self.mu_params.copy_from_slice(&v[g * (1 + m)..]);
        }
    }

    fn check_shape(&self) -> Result<()> {
        let g = generator_len(self.n * self.p);
        if self.n == 0 || self.p == 0 {
            return Err(Error::OutOfRange("dimensions must be positive".into()));
        }
        if self.sender_generator.len() != g {
            return Err(Error::dims(g, self.sender_generator.len()));
        }
        if self.receiver_generators.len() != self.messages() {
            return Err(Error::dims(self.messages(), self.receiver_generators.len()));
        }
        if let Some(bad) = self.receiver_generators.iter().find(|r| r.len() != g) {
            return Err(Error::dims(g, bad.len()));
        }
        if self.mu_params.len() != self.p - 1 {
            return Err(Error::dims(self.p - 1, self.mu_params.len()));
        }
        Ok(())
    }

    pub fn resource(&self) -> Result<AncillaResource> {
        match &self.mu_fixed {
            Some(mu) => AncillaResource::new(mu.clone()),
            None => AncillaResource::normalized(mu_from_params(&self.mu_params)),
        }
    }

    /// The protocol these parameters describe. Deterministic by construction.
    pub fn decode(&self) -> Result<ResourceProtocol> {
        self.check_shape()?;
        let d = self.n * self.p;
        let u = exp_i_hermitian(&hermitian_from_params(&self.sender_generator, d));
        let sender = self
            .measurement
            .projectors(self.n, self.p)
            .into_iter()
            .map(|proj| SenderBranch::from_raw(proj, u.clone()))
            .collect();
        let receiver = self
            .receiver_generators
            .iter()
            .map(|g| exp_i_hermitian(&hermitian_from_params(g, d)))
            .collect();
        ResourceProtocol::assemble(self.n, self.resource()?, sender, receiver)
    }

    /// Entanglement fidelity of the decoded protocol on `ch`.
    pub fn objective(&self, ch: &KrausChannel) -> Result<f64> {
        if ch.dim() != self.n {
            return Err(Error::dims(self.n, ch.dim()));
        }
        Ok(self.decode()?.fidelity_unchecked(ch.choi().matrix()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, random_channel};
    use crate::qmath::{frobenius_distance, haar_unitary, hermitian_eigen, seeded_rng};

    #[test]
    fn hermitian_params_round_trip() {
        let mut rng = seeded_rng(1);
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = hermitian_from_params(&v, 4);
        assert!(crate::qmath::hermitian_deviation(&h) == 0.0);
        assert_eq!(params_from_hermitian(&h), v);
    }

    #[test]
    fn generator_inverts_exponential() {
        let mut rng = seeded_rng(2);
        for d in [2, 4, 6] {
            let u = haar_unitary(&mut rng, d);
            let back = exp_i_hermitian(&unitary_generator(&u));
            assert!(frobenius_distance(&back, &u) < 1e-10);
        }
        // degenerate spectrum
        let u = crate::qmath::swap(2, 2);
        assert!(frobenius_distance(&exp_i_hermitian(&unitary_generator(&u)), &u) < 1e-10);
    }

    #[test]
    fn softmax_map() {
        let mu = mu_from_params(&[0.0]);
        assert!((mu[0] - mu[1]).abs() < 1e-15);
        let mu = mu_from_params(&[3.0, -1.0]);
        assert!((mu.iter().map(|m| m * m).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(mu[0] > mu[2] && mu[2] > mu[1]);
        assert_eq!(mu_from_params(&[]), vec![1.0]);
        // extreme logits stay finite
        assert!(mu_from_params(&[800.0]).iter().all(|m| m.is_finite()));
    }

    #[test]
    fn zero_parameters_give_bare_channel() {
        let bare = ProtocolParameterization::zeros(2, 1, Measurement::Ancilla).unwrap();
        let proto = bare.decode().unwrap();
        assert_eq!(proto.messages(), 1);
        let ch = random_channel(2, 4, 3).unwrap();
        assert!(frobenius_distance(proto.control_map(&ch.choi()).unwrap().matrix(), ch.choi().matrix()) < 1e-14);
        for p in [0.2, 0.5, 1.0] {
            let f = bare.objective(&depolarizing(p, 2).unwrap()).unwrap();
            assert!((f - (1.0 - 0.75 * p)).abs() < 1e-12);
        }
    }

    #[test]
    fn teleportation_parameters_decode_to_teleportation() {
        for n in [2, 3] {
            let params = ProtocolParameterization::teleportation(n).unwrap();
            let proto = params.decode().unwrap();
            assert!(proto.is_deterministic(1e-10));
            let ch = random_channel(n, n * n, 11).unwrap();
            assert!(proto.residual(&ch).unwrap() < 1e-9);
            assert!((params.objective(&ch).unwrap() - 1.0).abs() < 1e-9);
        }
        // sender operators are |η⟩⟨ψ_η|, entries in {0, ±1/√2, ±i/√2}
        let proto = ProtocolParameterization::teleportation(2).unwrap().decode().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for branch in proto.sender() {
            for z in branch.operator().iter() {
                let ok = [0.0, s].iter().any(|&m| (z.norm() - m).abs() < 1e-10);
                assert!(ok, "{z}");
            }
        }
    }

    #[test]
    fn random_parameters_are_deterministic() {
        let mut rng = seeded_rng(3);
        let shapes = [(2, 1, Measurement::Full), (2, 2, Measurement::Ancilla), (2, 2, Measurement::None), (2, 2, Measurement::Full), (3, 2, Measurement::Full)];
        for i in 0..100 {
            let (n, p, m) = shapes[i % shapes.len()];
            let params = ProtocolParameterization::zeros(n, p, m).unwrap().randomized(&mut rng);
            let proto = params.decode().unwrap();
            assert_eq!(proto.messages(), m.messages(n, p));
            assert!(proto.determinism_residuals().max() < 1e-10, "draw {i}");
        }
    }

    #[test]
    fn objective_matches_checked_fidelity() {
        let mut rng = seeded_rng(4);
        let ch = random_channel(2, 3, 5).unwrap();
        for _ in 0..10 {
            let params = ProtocolParameterization::zeros(2, 2, Measurement::Ancilla).unwrap().randomized(&mut rng);
            let fast = params.objective(&ch).unwrap();
            let slow = params.decode().unwrap().entanglement_fidelity(&ch).unwrap();
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_is_periodic_in_generator_eigenvalues() {
        let mut rng = seeded_rng(5);
        let ch = depolarizing(0.3, 2).unwrap();
        let params = ProtocolParameterization::zeros(2, 2, Measurement::Full).unwrap().randomized(&mut rng);
        let base = params.objective(&ch).unwrap();
        let shift = |g: &[f64], which: usize| {
            let h = hermitian_from_params(g, 4);
            let (_, vecs) = hermitian_eigen(&h);
            let v = vecs.column(which).into_owned();
            params_from_hermitian(&(h + (&v * v.adjoint()) * C64::new(2.0 * PI, 0.0)))
        };
        let mut shifted = params.clone();
        shifted.sender_generator = shift(&params.sender_generator, 1);
        assert!((shifted.objective(&ch).unwrap() - base).abs() < 1e-9);
        let mut shifted = params.clone();
        shifted.receiver_generators[2] = shift(&params.receiver_generators[2], 3);
        assert!((shifted.objective(&ch).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn free_vector_round_trip() {
        let params = ProtocolParameterization::zeros(2, 2, Measurement::Ancilla).unwrap().randomized(&mut seeded_rng(6));
        assert_eq!(params.free_len(), 16 * 3 + 1);
        let mut copy = ProtocolParameterization::zeros(2, 2, Measurement::Ancilla).unwrap();
        copy.set_free(&params.free());
        assert_eq!(copy, params);
        let fixed = params.with_mu_fixed(Some(vec![1.0, 0.0])).unwrap();
        assert_eq!(fixed.free_len(), 48);
        assert_eq!(fixed.resource().unwrap().mu(), &[1.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        let mut params = ProtocolParameterization::zeros(2, 2, Measurement::Full).unwrap();
        params.receiver_generators.pop();
        assert!(params.decode().is_err());
        let params = ProtocolParameterization::zeros(2, 2, Measurement::Full).unwrap();
        assert!(params.objective(&depolarizing(0.5, 3).unwrap()).is_err());
        assert!(params.with_mu_fixed(Some(vec![1.0])).is_err());
    }
}
