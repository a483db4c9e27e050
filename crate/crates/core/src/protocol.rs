//! One-way resource protocols and their action on Choi states.
//!
//! A protocol shares the pure state `Σ_i μ_i |i⟩_a |i⟩_b` between sender and
//! receiver (both ancillas have dimension `P`). For each outcome `η` the sender
//! applies `L_η = Π_η U_η` on `A ⊗ a`, the input system `A` is sent through the
//! channel, and the receiver applies the unitary `R_η` on `B ⊗ b`. Summing over
//! `η` and discarding the ancillas gives the effective channel.
//!
//! At the Choi level the same protocol is the completely positive map
//!
//! ```text
//! R ↦ Σ_η Σ_{k,l} Λ^η_{k,l} R Λ^η_{k,l}†,   Λ^η_{k,l} = Σ_i μ_i B^η_{k,i} ⊗ (A^η_{l,i})ᵀ
//! ```
//!
//! where `A^η_{i,j} = ⟨i|_a L_η |j⟩_a` and `B^η_{i,j} = ⟨i|_b R_η |j⟩_b` are
//! `N × N` blocks, and all of `i, k, l` run over `0..P`.

use rand::Rng;
use rand::seq::SliceRandom;

use crate::channels::{ChoiMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::qmath::{
    self, embed, haar_unitary, identity, ket_bra, partial_trace, tensor, CMatrix, CVector,
    DensityMatrix, PureState, C64, TOL,
};
use crate::teleport::{BellBasis, CorrectionUnitary};

/// Schmidt coefficients of the shared pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaResource {
    mu: Vec<f64>,
}

impl AncillaResource {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invariant("ancilla has at least one Schmidt coefficient", 0.0));
        }
        if let Some(&neg) = mu.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::invariant("Schmidt coefficients non-negative", neg));
        }
        let norm: f64 = mu.iter().map(|m| m * m).sum();
        let dev = (norm - 1.0).abs();
        if dev > TOL {
            return Err(Error::invariant("squared Schmidt coefficients sum to 1", dev));
        }
        Ok(AncillaResource { mu })
    }

    /// Rescales `mu` to unit squared sum (negative entries are still rejected).
    pub fn normalized(mu: Vec<f64>) -> Result<Self> {
        let norm: f64 = mu.iter().map(|m| m * m).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::invariant("Schmidt vector is non-zero", norm));
        }
        AncillaResource::new(mu.into_iter().map(|m| m / norm).collect())
    }

    /// Uniform coefficients `1/√P`.
    pub fn maximal(p: usize) -> Self {
        AncillaResource {
            mu: vec![1.0 / (p as f64).sqrt(); p],
        }
    }

    /// `|0⟩|0⟩` padded to local dimension `p`.
    pub fn product(p: usize) -> Self {
        let mut mu = vec![0.0; p.max(1)];
        mu[0] = 1.0;
        AncillaResource { mu }
    }

    /// Two-term resource `(cos θ, sin θ)`.
    pub fn angle(theta: f64) -> Result<Self> {
        AncillaResource::new(vec![theta.cos(), theta.sin()])
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Local ancilla dimension `P`.
    pub fn local_dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sum(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// `Σ_i μ_i |i⟩ ⊗ |i⟩` on `P ⊗ P`.
    pub fn state(&self) -> PureState {
        let p = self.local_dim();
        let mut v = CVector::zeros(p * p);
        for (i, &m) in self.mu.iter().enumerate() {
            v[i * p + i] = C64::new(m, 0.0);
        }
        PureState::new(v).expect("normalised by construction")
    }
}

/// One sender branch `L = Π U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderBranch {
    projector: CMatrix,
    unitary: CMatrix,
}

impl SenderBranch {
    /// Validates that `projector` is an orthogonal projection and `unitary` is unitary.
    pub fn new(projector: CMatrix, unitary: CMatrix) -> Result<Self> {
        let d = projector.nrows();
        if !projector.is_square() || unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::dims(d, unitary.nrows()));
        }
        let herm = qmath::hermitian_deviation(&projector);
        if herm > TOL {
            return Err(Error::invariant("sender projector Hermitian", herm));
        }
        let idem = (&projector * &projector - &projector).norm();
        if idem > TOL {
            return Err(Error::invariant("sender projector idempotent", idem));
        }
        let unit = qmath::unitarity_deviation(&unitary);
        if unit > TOL {
            return Err(Error::invariant("sender unitary is unitary", unit));
        }
        Ok(SenderBranch { projector, unitary })
    }

    /// Skips validation; callers guarantee the structure.
    pub(crate) fn from_raw(projector: CMatrix, unitary: CMatrix) -> Self {
        SenderBranch { projector, unitary }
    }

    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `L = Π U`.
    pub fn operator(&self) -> CMatrix {
        &self.projector * &self.unitary
    }
}

/// Residuals of the determinism conditions, each a Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminismResiduals {
    /// `‖Σ_η L_η† L_η − I‖`.
    pub sender_completeness: f64,
    /// `‖Σ_η L_η L_η† − I‖`.
    pub sender_co_completeness: f64,
    /// `max_η ‖R_η R_η† − I‖`.
    pub receiver_unitarity: f64,
}

impl DeterminismResiduals {
    pub fn max(&self) -> f64 {
        self.sender_completeness
            .max(self.sender_co_completeness)
            .max(self.receiver_unitarity)
    }
}

/// A single-use protocol with shared entanglement and one-way classical messages.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceProtocol {
    n: usize,
    resource: AncillaResource,
    sender: Vec<SenderBranch>,
    receiver: Vec<CMatrix>,
}

impl ResourceProtocol {
    /// Builds a protocol and checks that it is deterministic within 1e-10.
    pub fn new(n: usize, resource: AncillaResource, sender: Vec<SenderBranch>, receiver: Vec<CMatrix>) -> Result<Self> {
        let p = Self::assemble(n, resource, sender, receiver)?;
        p.ensure_deterministic(TOL)?;
        Ok(p)
    }

    /// Builds a protocol checking shapes only; determinism can be inspected with
    /// [`ResourceProtocol::determinism_residuals`].
    pub fn assemble(n: usize, resource: AncillaResource, sender: Vec<SenderBranch>, receiver: Vec<CMatrix>) -> Result<Self> {
        let d = n * resource.local_dim();
        if n == 0 {
            return Err(Error::OutOfRange("system dimension must be positive".into()));
        }
        if sender.is_empty() {
            return Err(Error::invariant("protocol has at least one branch", 0.0));
        }
        if sender.len() != receiver.len() {
            return Err(Error::dims(sender.len(), receiver.len()));
        }
        for s in &sender {
            if s.projector.nrows() != d {
                return Err(Error::dims(d, s.projector.nrows()));
            }
        }
        for r in &receiver {
            if r.nrows() != d || r.ncols() != d {
                return Err(Error::dims(d, r.nrows()));
            }
        }
        Ok(ResourceProtocol {
            n,
            resource,
            sender,
            receiver,
        })
    }

    /// Sends the input straight through the channel: `P = 1`, `M = 1`, identities.
    pub fn bare(n: usize) -> Self {
        ResourceProtocol {
            n,
            resource: AncillaResource::product(1),
            sender: vec![SenderBranch {
                projector: identity(n),
                unitary: identity(n),
            }],
            receiver: vec![identity(n)],
        }
    }

    /// Standard teleportation: maximal entanglement with `P = N`, a Bell
    /// measurement on `A ⊗ a` (`M = N²`) and the swap-composed corrections.
    pub fn teleportation(n: usize) -> Result<Self> {
        let basis = BellBasis::new(n)?;
        let sender = basis
            .projectors()
            .into_iter()
            .map(|proj| SenderBranch {
                projector: proj,
                unitary: identity(n * n),
            })
            .collect();
        let receiver = (0..n * n)
            .map(|eta| CorrectionUnitary::new(n, eta).map(|u| u.matrix().clone()))
            .collect::<Result<Vec<_>>>()?;
        ResourceProtocol::new(n, AncillaResource::maximal(n), sender, receiver)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ancilla dimension `P`.
    pub fn local_dim(&self) -> usize {
        self.resource.local_dim()
    }

    /// Number of classical messages `M`.
    pub fn messages(&self) -> usize {
        self.sender.len()
    }

    pub fn resource(&self) -> &AncillaResource {
        &self.resource
    }

    pub fn sender(&self) -> &[SenderBranch] {
        &self.sender
    }

    pub fn receiver(&self) -> &[CMatrix] {
        &self.receiver
    }

    /// Replaces the receiver operations; used to build deliberately broken protocols.
    pub fn with_receiver(mut self, receiver: Vec<CMatrix>) -> Result<Self> {
        if receiver.len() != self.sender.len() {
            return Err(Error::dims(self.sender.len(), receiver.len()));
        }
        self.receiver = receiver;
        Self::assemble(self.n, self.resource, self.sender, self.receiver)
    }

    pub fn with_resource(mut self, resource: AncillaResource) -> Result<Self> {
        if resource.local_dim() != self.local_dim() {
            return Err(Error::dims(self.local_dim(), resource.local_dim()));
        }
        self.resource = resource;
        Ok(self)
    }

    pub fn determinism_residuals(&self) -> DeterminismResiduals {
        let d = self.n * self.local_dim();
        let mut lhs = CMatrix::zeros(d, d);
        let mut rhs = CMatrix::zeros(d, d);
        for s in &self.sender {
            let l = s.operator();
            lhs += l.adjoint() * &l;
            rhs += &l * l.adjoint();
        }
        DeterminismResiduals {
            sender_completeness: (lhs - identity(d)).norm(),
            sender_co_completeness: (rhs - identity(d)).norm(),
            receiver_unitarity: self
                .receiver
                .iter()
                .map(qmath::unitarity_deviation)
                .fold(0.0, f64::max),
        }
    }

    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.determinism_residuals().max() <= tol
    }

    fn ensure_deterministic(&self, tol: f64) -> Result<()> {
        let r = self.determinism_residuals().max();
        if r > tol {
            return Err(Error::NonDeterministic { residual: r });
        }
        Ok(())
    }

    fn check_channel(&self, ch: &KrausChannel) -> Result<()> {
        if ch.dim() != self.n {
            return Err(Error::dims(self.n, ch.dim()));
        }
        Ok(())
    }

    /// Runs the protocol on an arbitrary operator on `A` (linear extension).
    pub fn apply_matrix(&self, ch: &KrausChannel, input: &CMatrix) -> Result<CMatrix> {
        self.check_channel(ch)?;
        if input.nrows() != self.n || input.ncols() != self.n {
            return Err(Error::dims(self.n, input.nrows()));
        }
        let p = self.local_dim();
        let dims = [self.n, p, p];
        let global = tensor(input, &self.resource.state().projector());
        let mut out = CMatrix::zeros(self.n, self.n);
        for (s, r) in self.sender.iter().zip(&self.receiver) {
            let l = tensor(&s.operator(), &identity(p));
            let branch = &l * &global * l.adjoint();
            let sent = ch.apply_on_factor_matrix(&branch, &dims, 0)?;
            let big_r = embed(r, &dims, &[0, 2])?;
            let received = &big_r * sent * big_r.adjoint();
            out += partial_trace(&received, &dims, &[0])?;
        }
        Ok(out)
    }

    /// Effective output state `ε̃[ρ]`.
    pub fn apply(&self, ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.ensure_deterministic(TOL)?;
        self.apply_matrix(ch, rho.matrix()).map(DensityMatrix::from_raw)
    }

    /// Choi matrix of `ρ ↦ apply(ch, ρ)` obtained by running the protocol on
    /// every matrix unit `|i⟩⟨j|`.
    pub fn effective_choi(&self, ch: &KrausChannel) -> Result<ChoiMatrix> {
        self.ensure_deterministic(TOL)?;
        let n = self.n;
        let mut r = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let unit = ket_bra(n, i, j);
                let out = self.apply_matrix(ch, &unit)?;
                r += tensor(&out, &unit);
            }
        }
        Ok(ChoiMatrix::from_raw(r.unscale(n as f64), n, n))
    }

    pub fn block_operators(&self) -> BlockOperators {
        let p = self.local_dim();
        let n = self.n;
        let blocks = |op: &CMatrix| -> Vec<Vec<CMatrix>> {
            (0..p)
                .map(|i| {
                    (0..p)
                        .map(|j| CMatrix::from_fn(n, n, |x, y| op[(x * p + i, y * p + j)]))
                        .collect()
                })
                .collect()
        };
        BlockOperators {
            n,
            p,
            a: self.sender.iter().map(|s| blocks(&s.operator())).collect(),
            b: self.receiver.iter().map(blocks).collect(),
        }
    }

    pub fn lambda_operators(&self) -> LambdaOperators {
        self.block_operators().lambda(self.resource.mu())
    }

    /// `R ↦ Σ Λ R Λ†` applied to the channel's Choi matrix.
    pub fn control_map(&self, choi: &ChoiMatrix) -> Result<ChoiMatrix> {
        if choi.dim_in() != self.n || choi.dim_out() != self.n {
            return Err(Error::dims(self.n, choi.dim_in()));
        }
        self.ensure_deterministic(TOL)?;
        Ok(ChoiMatrix::from_raw(
            self.lambda_operators().apply(choi.matrix()),
            self.n,
            self.n,
        ))
    }

    /// `‖λ[R] − Ψ₀‖_F`; zero exactly when the protocol corrects the channel.
    pub fn residual(&self, ch: &KrausChannel) -> Result<f64> {
        self.check_channel(ch)?;
        let controlled = self.control_map(&ch.choi())?;
        let target = qmath::maximally_entangled(self.n)?.projector();
        Ok((controlled.matrix() - target).norm())
    }

    /// `⟨ψ₀| λ[R] |ψ₀⟩`, the entanglement fidelity of the corrected channel.
    pub fn entanglement_fidelity(&self, ch: &KrausChannel) -> Result<f64> {
        self.check_channel(ch)?;
        let controlled = self.control_map(&ch.choi())?;
        Ok(overlap_with_max_entangled(controlled.matrix(), self.n))
    }
}

impl ResourceProtocol {
    /// `⟨ψ₀| λ[R] |ψ₀⟩` without determinism or shape checks.
    pub(crate) fn fidelity_unchecked(&self, choi: &CMatrix) -> f64 {
        let n = self.n;
        let lambdas = self.lambda_operators();
        let mut total = 0.0;
        for op in lambdas.iter() {
            // v = Λ† ψ₀ up to the 1/√N factor
            let v = CVector::from_fn(n * n, |c, _| (0..n).map(|i| op[(i * n + i, c)].conj()).sum::<C64>());
            total += (v.adjoint() * choi * &v)[(0, 0)].re;
        }
        total / n as f64
    }
}

/// `⟨ψ₀| R |ψ₀⟩` read directly off the diagonal-index entries `R[(ii),(jj)]`.
pub(crate) fn overlap_with_max_entangled(r: &CMatrix, n: usize) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += r[(i * n + i, j * n + j)];
        }
    }
    acc.re / n as f64
}

/// `N × N` blocks of the sender and receiver operators in the ancilla bases.
#[derive(Debug, Clone)]
pub struct BlockOperators {
    n: usize,
    p: usize,
    a: Vec<Vec<Vec<CMatrix>>>,
    b: Vec<Vec<Vec<CMatrix>>>,
}

impl BlockOperators {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.p
    }

    pub fn messages(&self) -> usize {
        self.a.len()
    }

    /// `A^η_{i,j}`.
    pub fn a(&self, eta: usize, i: usize, j: usize) -> &CMatrix {
        &self.a[eta][i][j]
    }

    /// `B^η_{i,j}`.
    pub fn b(&self, eta: usize, i: usize, j: usize) -> &CMatrix {
        &self.b[eta][i][j]
    }

    /// `Λ^η_{k,l} = Σ_i μ_i B^η_{k,i} ⊗ (A^η_{l,i})ᵀ`, with `μ` zero-padded to `P`.
    pub fn lambda(&self, mu: &[f64]) -> LambdaOperators {
        let dim = self.n * self.n;
        let mut ops = Vec::with_capacity(self.messages() * self.p * self.p);
        for eta in 0..self.messages() {
            for k in 0..self.p {
                for l in 0..self.p {
                    let mut op = CMatrix::zeros(dim, dim);
                    for i in 0..self.p {
                        let weight = mu.get(i).copied().unwrap_or(0.0);
                        if weight != 0.0 {
                            op += tensor(self.b(eta, k, i), &self.a(eta, l, i).transpose()).scale(weight);
                        }
                    }
                    ops.push(op);
                }
            }
        }
        LambdaOperators {
            messages: self.messages(),
            p: self.p,
            ops,
        }
    }
}

/// The family `Λ^η_{k,l}` acting on `B ⊗ A`.
#[derive(Debug, Clone)]
pub struct LambdaOperators {
    messages: usize,
    p: usize,
    ops: Vec<CMatrix>,
}

impl LambdaOperators {
    pub fn get(&self, eta: usize, k: usize, l: usize) -> &CMatrix {
        &self.ops[(eta * self.p + k) * self.p + l]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        self.ops.iter()
    }

    /// `Σ Λ r Λ†`, summed in `(η, k, l)` order.
    pub fn apply(&self, r: &CMatrix) -> CMatrix {
        let d = r.nrows();
        self.ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, op| acc + op * r * op.adjoint())
    }

    /// `‖Σ Λ† Λ − I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.ops.first().map_or(0, |o| o.nrows());
        let sum = self
            .ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, op| acc + op.adjoint() * op);
        (sum - identity(d)).norm()
    }
}

/// Random deterministic protocol: a Haar unitary on `A ⊗ a` followed by a
/// projective measurement whose `m` outcomes partition the computational basis,
/// Haar receiver unitaries, and Schmidt coefficients of a Haar state on `P ⊗ P`.
pub fn random_protocol<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize, m: usize) -> Result<ResourceProtocol> {
    let d = n * p;
    if m == 0 || m > d {
        return Err(Error::OutOfRange(format!(
            "{m} branches cannot partition a {d}-dimensional space"
        )));
    }
    let resource = if p == 1 {
        AncillaResource::product(1)
    } else {
        let psi = qmath::haar_pure(rng, p * p);
        let form = qmath::schmidt(&psi, p, p)?;
        AncillaResource::normalized(form.coefficients().to_vec())?
    };
    let unitary = haar_unitary(rng, d);
    let mut labels: Vec<usize> = (0..d).map(|k| if k < m { k } else { rng.random_range(0..m) }).collect();
    labels.shuffle(rng);
    let sender = (0..m)
        .map(|eta| {
            let mut proj = CMatrix::zeros(d, d);
            for (k, _) in labels.iter().enumerate().filter(|(_, &l)| l == eta) {
                proj[(k, k)] = C64::new(1.0, 0.0);
            }
            SenderBranch {
                projector: proj,
                unitary: unitary.clone(),
            }
        })
        .collect();
    let receiver = (0..m).map(|_| haar_unitary(rng, d)).collect();
    ResourceProtocol::new(n, resource, sender, receiver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, random_channel};
    use crate::qmath::{frobenius_distance, random_state, seeded_rng};

    #[test]
    fn resource_validation() {
        assert!(AncillaResource::new(vec![0.6, 0.8]).is_ok());
        assert!(AncillaResource::new(vec![0.6, 0.6]).is_err());
        assert!(AncillaResource::new(vec![1.0, -0.0]).is_ok());
        assert!(AncillaResource::new(vec![-0.6, 0.8]).is_err());
        assert!(AncillaResource::new(vec![]).is_err());
        let r = AncillaResource::angle(std::f64::consts::FRAC_PI_4).unwrap();
        assert!((r.sum() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn teleportation_embedding_corrects_channels() {
        let qt = ResourceProtocol::teleportation(2).unwrap();
        assert_eq!(qt.messages(), 4);
        let ch = depolarizing(0.5, 2).unwrap();
        let rho = random_state(2, 1);
        let out = qt.apply(&ch, &rho).unwrap();
        assert!(frobenius_distance(out.matrix(), rho.matrix()) < 1e-9);
        assert!(qt.residual(&ch).unwrap() < 1e-9);
        assert!((qt.entanglement_fidelity(&ch).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bare_protocol_is_the_channel() {
        let bare = ResourceProtocol::bare(2);
        let ch = random_channel(2, 3, 4).unwrap();
        let rho = random_state(2, 2);
        let out = bare.apply(&ch, &rho).unwrap();
        assert!(frobenius_distance(out.matrix(), ch.apply(&rho).unwrap().matrix()) < 1e-14);
        let lambdas = bare.lambda_operators();
        assert_eq!(lambdas.len(), 1);
        assert!(frobenius_distance(lambdas.get(0, 0, 0), &identity(4)) < 1e-15);
        let choi = ch.choi();
        assert!(frobenius_distance(bare.control_map(&choi).unwrap().matrix(), choi.matrix()) < 1e-15);
        assert!(bare.residual(&KrausChannel::identity(2)).unwrap() < 1e-15);
    }

    #[test]
    fn bare_depolarizing_residual_and_fidelity() {
        let bare = ResourceProtocol::bare(2);
        for p in [0.1, 0.5, 0.9] {
            let ch = depolarizing(p, 2).unwrap();
            assert!((bare.residual(&ch).unwrap() - p * 3f64.sqrt() / 2.0).abs() < 1e-12);
            assert!((bare.entanglement_fidelity(&ch).unwrap() - (1.0 - 3.0 * p / 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_sender_blocks() {
        let bare = ResourceProtocol::bare(3);
        let blocks = bare.block_operators();
        assert!(frobenius_distance(blocks.a(0, 0, 0), &identity(3)) < 1e-15);
        // P = 2 with identity sender: A_{ij} = δ_ij I
        let res = AncillaResource::maximal(2);
        let sender = vec![SenderBranch::new(identity(4), identity(4)).unwrap()];
        let proto = ResourceProtocol::new(2, res, sender, vec![identity(4)]).unwrap();
        let blocks = proto.block_operators();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { identity(2) } else { CMatrix::zeros(2, 2) };
                assert!(frobenius_distance(blocks.a(0, i, j), &expected) < 1e-15);
            }
        }
    }

    #[test]
    fn bell_blocks_have_expected_entries() {
        let qt = ResourceProtocol::teleportation(2).unwrap();
        let blocks = qt.block_operators();
        let allowed = [0.0, 0.5];
        for eta in 0..4 {
            for i in 0..2 {
                for j in 0..2 {
                    for z in blocks.a(eta, i, j).iter() {
                        // entries of |ψ_η⟩⟨ψ_η| are 0 or ±1/2, ±i/2
                        assert!(allowed.iter().any(|v| (z.norm() - v).abs() < 1e-14));
                        assert!(z.re.abs() < 1e-14 || z.im.abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn teleportation_lambda_completeness() {
        let lambdas = ResourceProtocol::teleportation(2).unwrap().lambda_operators();
        // M·P² = 4·2·2
        assert_eq!(lambdas.len(), 16);
        assert!(lambdas.completeness_residual() < 1e-9);
    }

    #[test]
    fn lambda_matches_block_formula() {
        let mut rng = seeded_rng(3);
        let proto = random_protocol(&mut rng, 2, 2, 3).unwrap();
        let blocks = proto.block_operators();
        let lambdas = proto.lambda_operators();
        let mu = proto.resource().mu();
        for eta in 0..3 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut expected = CMatrix::zeros(4, 4);
                    for (i, m) in mu.iter().enumerate() {
                        expected += tensor(blocks.b(eta, k, i), &blocks.a(eta, l, i).transpose()).scale(*m);
                    }
                    assert!(frobenius_distance(lambdas.get(eta, k, l), &expected) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn control_map_matches_tomography() {
        let mut rng = seeded_rng(11);
        for (p, m) in [(1, 1), (1, 2), (2, 4), (4, 2)] {
            let proto = random_protocol(&mut rng, 2, p, m).unwrap();
            let ch = random_channel(2, 4, rng.random()).unwrap();
            let direct = proto.effective_choi(&ch).unwrap();
            let mapped = proto.control_map(&ch.choi()).unwrap();
            assert!(frobenius_distance(direct.matrix(), mapped.matrix()) < 1e-9, "P={p} M={m}");
        }
    }

    #[test]
    fn deterministic_protocols_preserve_trace() {
        let mut rng = seeded_rng(5);
        for _ in 0..10 {
            let proto = random_protocol(&mut rng, 2, 2, 4).unwrap();
            let ch = random_channel(2, 4, rng.random()).unwrap();
            let out = proto.apply(&ch, &random_state(2, rng.random())).unwrap();
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
            out.validate(1e-10, 1e-10).unwrap();
        }
    }

    #[test]
    fn non_deterministic_protocols_are_rejected() {
        let qt = ResourceProtocol::teleportation(2).unwrap();
        let mut receiver = qt.receiver().to_vec();
        receiver[0] = receiver[0].scale(0.5);
        let broken = qt.with_receiver(receiver).unwrap();
        assert!(!broken.is_deterministic(1e-10));
        let ch = depolarizing(0.5, 2).unwrap();
        assert!(matches!(
            broken.apply(&ch, &random_state(2, 0)),
            Err(Error::NonDeterministic { .. })
        ));
        assert!(broken.control_map(&ch.choi()).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let qt = ResourceProtocol::teleportation(2).unwrap();
        assert!(qt.residual(&depolarizing(0.5, 3).unwrap()).is_err());
        assert!(qt.apply(&depolarizing(0.5, 2).unwrap(), &random_state(3, 0)).is_err());
        assert!(random_protocol(&mut seeded_rng(0), 2, 1, 4).is_err());
    }

    #[test]
    fn perturbed_teleportation_is_not_faithful() {
        let qt = ResourceProtocol::teleportation(2).unwrap();
        let ch = random_channel(2, 4, 1).unwrap();
        let tilt = qmath::exp_i_hermitian(&CMatrix::from_fn(4, 4, |i, j| {
            if i == j { C64::new(0.05 * i as f64, 0.0) } else { C64::new(0.0, 0.0) }
        }));
        let receiver = qt.receiver().iter().map(|r| &tilt * r).collect();
        let perturbed = qt.clone().with_receiver(receiver).unwrap();
        assert!(perturbed.is_deterministic(1e-10));
        assert!(perturbed.residual(&ch).unwrap() > 1e-3);
        assert!(1.0 - perturbed.entanglement_fidelity(&ch).unwrap() > 1e-4);
        let rho = random_state(2, 9);
        let out = perturbed.apply(&ch, &rho).unwrap();
        assert!(frobenius_distance(out.matrix(), rho.matrix()) > 1e-4);
    }
}
