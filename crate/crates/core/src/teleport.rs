//! N-level teleportation.
//!
//! The global state lives on `A ⊗ a ⊗ b`: the input `A`, the sender's half `a`
//! and the receiver's half `b` of the shared pair. For every Bell outcome `η`
//! the sender's projection acts on `A ⊗ a`, the physical channel acts on `A`
//! alone (its output is called `B`), and the receiver's correction acts on
//! `B ⊗ b`. Branches are kept unnormalised and summed in `η` order.

use std::f64::consts::PI;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::qmath::{
    self, embed, partial_trace, swap, tensor, unitarity_deviation, CMatrix, CVector,
    DensityMatrix, PureState, C64,
};

/// Splits a Bell index into `(n, m) = (η div N, η mod N)`.
pub fn split_index(n: usize, eta: usize) -> (usize, usize) {
    (eta / n, eta % n)
}

fn root_of_unity(n: usize, k: usize, power: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * ((k * power) % n) as f64 / n as f64)
}

/// The generalised Bell basis on `N ⊗ N`:
/// `|ψ_η⟩ = N^{-1/2} Σ_k e^{2πi k n / N} |k⟩ ⊗ |(k + m) mod N⟩` with `η = nN + m`.
#[derive(Debug, Clone)]
pub struct BellBasis {
    n: usize,
    vectors: Vec<CVector>,
}

impl BellBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!("Bell basis needs N >= 2, got {n}")));
        }
        let amp = 1.0 / (n as f64).sqrt();
        let vectors = (0..n * n)
            .map(|eta| {
                let (phase, shift) = split_index(n, eta);
                let mut v = CVector::zeros(n * n);
                for k in 0..n {
                    v[k * n + (k + shift) % n] = root_of_unity(n, k, phase) * amp;
                }
                v
            })
            .collect();
        Ok(BellBasis { n, vectors })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, eta: usize) -> &CVector {
        &self.vectors[eta]
    }

    pub fn state(&self, eta: usize) -> PureState {
        PureState::new(self.vectors[eta].clone()).expect("Bell vectors are normalised")
    }

    /// `Ψ_η = |ψ_η⟩⟨ψ_η|`.
    pub fn projector(&self, eta: usize) -> CMatrix {
        qmath::projector(&self.vectors[eta])
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.len()).map(|eta| self.projector(eta)).collect()
    }
}

/// Receiver correction `U_η` on `B ⊗ b`.
#[derive(Debug, Clone)]
pub struct CorrectionUnitary {
    n: usize,
    eta: usize,
    matrix: CMatrix,
}

impl CorrectionUnitary {
    /// `U_η = SWAP · (I_B ⊗ Σ_k e^{2πi k n/N} |k⟩⟨(k + m) mod N|)`.
    pub fn new(n: usize, eta: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!("correction needs N >= 2, got {n}")));
        }
        if eta >= n * n {
            return Err(Error::OutOfRange(format!("outcome {eta} not below N² = {}", n * n)));
        }
        let (phase, shift) = split_index(n, eta);
        let mut local = CMatrix::zeros(n, n);
        for k in 0..n {
            local[(k, (k + shift) % n)] = root_of_unity(n, k, phase);
        }
        let matrix = swap(n, n) * tensor(&qmath::identity(n), &local);
        Ok(CorrectionUnitary { n, eta, matrix })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }
}

/// Output of a teleportation run together with the Bell outcome probabilities.
#[derive(Debug, Clone)]
pub struct TeleportRun {
    pub output: DensityMatrix,
    pub branch_probabilities: Vec<f64>,
}

/// Teleports `rho` using a maximally entangled pair; the channel acts on the
/// discarded post-measurement system.
pub fn teleport(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    teleport_run(rho, ch, &qmath::maximally_entangled(rho.dim().max(2))?).map(|r| r.output)
}

/// Same as [`teleport`] with `resource` (a pure state on `a ⊗ b`) in place of the
/// maximally entangled pair.
pub fn teleport_with_resource(rho: &DensityMatrix, ch: &KrausChannel, resource: &PureState) -> Result<DensityMatrix> {
    teleport_run(rho, ch, resource).map(|r| r.output)
}

pub fn teleport_run(rho: &DensityMatrix, ch: &KrausChannel, resource: &PureState) -> Result<TeleportRun> {
    let n = rho.dim();
    if ch.dim() != n {
        return Err(Error::dims(n, ch.dim()));
    }
    if resource.dim() != n * n {
        return Err(Error::dims(n * n, resource.dim()));
    }
    let basis = BellBasis::new(n)?;
    let dims = [n, n, n];
    let global = tensor(rho.matrix(), &resource.projector());
    let mut output = CMatrix::zeros(n, n);
    let mut probabilities = Vec::with_capacity(basis.len());
    for eta in 0..basis.len() {
        let proj = embed(&basis.projector(eta), &dims, &[0, 1])?;
        let branch = &proj * &global * &proj;
        probabilities.push(branch.trace().re);
        let sent = ch.apply_on_factor_matrix(&branch, &dims, 0)?;
        let corr = embed(CorrectionUnitary::new(n, eta)?.matrix(), &dims, &[0, 2])?;
        let corrected = &corr * sent * corr.adjoint();
        output += partial_trace(&corrected, &dims, &[0])?;
    }
    Ok(TeleportRun {
        output: DensityMatrix::from_raw(output),
        branch_probabilities: probabilities,
    })
}
