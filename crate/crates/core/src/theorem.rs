//! Numerical renditions of the argument that faithful, deterministic correction
//! of a full-rank channel needs classical communication and maximal entanglement.
//!
//! Everything here evaluates finite sums on concrete protocols. Nothing here
//! certifies that no protocol exists; the [`crate::optimize`] module probes that.

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::protocol::{AncillaResource, BlockOperators, ResourceProtocol};
use crate::qmath::{identity, CMatrix, C64};

/// Largest Frobenius residual among the four block relations of a deterministic protocol:
///
/// ```text
/// Σ_η Σ_k A^η_{i,k} (A^η_{j,k})† = δ_ij I      Σ_η Σ_k (A^η_{k,i})† A^η_{k,j} = δ_ij I
///     Σ_k B^η_{i,k} (B^η_{j,k})† = δ_ij I          Σ_k (B^η_{k,i})† B^η_{k,j} = δ_ij I   (each η)
/// ```
pub fn block_relation_residual(blocks: &BlockOperators) -> f64 {
    let n = blocks.dim();
    let p = blocks.local_dim();
    let m = blocks.messages();
    let target = |i: usize, j: usize| if i == j { identity(n) } else { CMatrix::zeros(n, n) };
    let mut worst: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            let mut row = CMatrix::zeros(n, n);
            let mut col = CMatrix::zeros(n, n);
            for eta in 0..m {
                for k in 0..p {
                    row += blocks.a(eta, i, k) * blocks.a(eta, j, k).adjoint();
                    col += blocks.a(eta, k, i).adjoint() * blocks.a(eta, k, j);
                }
            }
            worst = worst.max((row - target(i, j)).norm());
            worst = worst.max((col - target(i, j)).norm());
            for eta in 0..m {
                let mut row = CMatrix::zeros(n, n);
                let mut col = CMatrix::zeros(n, n);
                for k in 0..p {
                    row += blocks.b(eta, i, k) * blocks.b(eta, j, k).adjoint();
                    col += blocks.b(eta, k, i).adjoint() * blocks.b(eta, k, j);
                }
                worst = worst.max((row - target(i, j)).norm());
                worst = worst.max((col - target(i, j)).norm());
            }
        }
    }
    worst
}

/// `X^η_{k,l,n,m} = Σ_i μ_i ⟨n| A^η_{l,i} B^η_{k,i} |m⟩`, which is `√N` times the
/// overlap `⟨ψ₀| Λ^η_{k,l} |m⟩|n⟩`. Indexed `[η][k][l][n][m]`.
fn factorized_amplitudes(blocks: &BlockOperators, mu: &[f64]) -> Vec<Vec<Vec<CMatrix>>> {
    let (n, p) = (blocks.dim(), blocks.local_dim());
    (0..blocks.messages())
        .map(|eta| {
            (0..p)
                .map(|k| {
                    (0..p)
                        .map(|l| {
                            // matrix over (n, m)
                            let mut x = CMatrix::zeros(n, n);
                            for (i, &w) in mu.iter().enumerate().take(p) {
                                if w != 0.0 {
                                    x += (blocks.a(eta, l, i) * blocks.b(eta, k, i)).scale(w);
                                }
                            }
                            x
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Least-squares `β_η` for `X^η_{k,l,n,m} ≈ √N β_η δ_km δ_ln`.
pub fn branch_scalars(protocol: &ResourceProtocol) -> Vec<C64> {
    let blocks = protocol.block_operators();
    let x = factorized_amplitudes(&blocks, protocol.resource().mu());
    let n = protocol.dim();
    let common = n.min(protocol.local_dim());
    let norm = (n as f64).sqrt() * (common * common) as f64;
    x.iter()
        .map(|per_eta| {
            let mut acc = crate::qmath::ZERO;
            for k in 0..common {
                for l in 0..common {
                    acc += per_eta[k][l][(l, k)];
                }
            }
            acc / norm
        })
        .collect()
}

/// Largest value of `|X^η_{k,l,n,m}|² − S^η_{k,l,n,m}` where
/// `S = Σ_{i,j,p,q} μ_i μ_p |⟨n|A^η_{l,i}|j⟩|² |⟨m|B^η†_{k,p}|q⟩|²` is the
/// Cauchy–Schwarz bound on `|X|²`. Never exceeds roundoff for any protocol;
/// when the target is reached `|X|² = N |β_η|² δ_km δ_ln`.
pub fn cauchy_schwarz_violation(protocol: &ResourceProtocol) -> f64 {
    let blocks = protocol.block_operators();
    let mu = protocol.resource().mu();
    let x = factorized_amplitudes(&blocks, mu);
    let (n, p) = (protocol.dim(), protocol.local_dim());
    let mut worst = f64::NEG_INFINITY;
    for eta in 0..blocks.messages() {
        for k in 0..p {
            for l in 0..p {
                for row in 0..n {
                    // Σ_{i,j} μ_i |⟨n|A_{l,i}|j⟩|²
                    let a_side: f64 = (0..p)
                        .map(|i| mu[i] * blocks.a(eta, l, i).row(row).iter().map(|z| z.norm_sqr()).sum::<f64>())
                        .sum();
                    for col in 0..n {
                        // Σ_{p,q} μ_p |⟨q|B_{k,p}|m⟩|²
                        let b_side: f64 = (0..p)
                            .map(|i| mu[i] * blocks.b(eta, k, i).column(col).iter().map(|z| z.norm_sqr()).sum::<f64>())
                            .sum();
                        let lhs = x[eta][k][l][(row, col)].norm_sqr();
                        worst = worst.max(lhs - a_side * b_side);
                    }
                }
            }
        }
    }
    worst
}

/// `Σ μ_i` against the threshold `√N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntanglementBound {
    pub sum: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Checks `Σ_i μ_i ≥ √N` (with 1e-12 slack). With `P = N` equality forces
/// `μ_i = 1/√N`; with `P < N` it cannot hold.
pub fn entanglement_bound(resource: &AncillaResource, n: usize) -> EntanglementBound {
    let sum = resource.sum();
    let bound = (n as f64).sqrt();
    EntanglementBound {
        sum,
        bound,
        satisfied: sum >= bound - 1e-12,
    }
}

/// Whether the pure state with Schmidt coefficients `source` can be turned into
/// `target` by local operations and classical communication: the squared
/// source coefficients must be majorized by the squared target coefficients.
/// Shorter vectors are zero-padded.
pub fn nielsen_convertible(source: &AncillaResource, target: &AncillaResource) -> bool {
    let len = source.local_dim().max(target.local_dim());
    let sorted = |r: &AncillaResource| {
        let mut w: Vec<f64> = r.mu().iter().map(|m| m * m).collect();
        w.resize(len, 0.0);
        w.sort_by(|a, b| b.total_cmp(a));
        w
    };
    let (s, t) = (sorted(source), sorted(target));
    let (mut ps, mut pt) = (0.0, 0.0);
    for (a, b) in s.iter().zip(&t) {
        ps += a;
        pt += b;
        if ps > pt + 1e-12 {
            return false;
        }
    }
    true
}

/// Named outcomes of a [`ProofReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdicts {
    /// Block relations hold within 1e-10.
    pub deterministic: bool,
    /// The implied `Σ μ_i²` matches `N·P` within 1e-9; false means no
    /// communication-free protocol can be faithful.
    pub faithful_correction_possible: bool,
    pub entanglement_bound_satisfied: bool,
}

/// Quantities produced while running the no-communication argument on a protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProofReport {
    pub n: usize,
    pub local_dim: usize,
    pub messages: usize,
    pub relation_max_residual: f64,
    /// `Σ_{n,k,l} |X_{k,l,n,m}|²` averaged over the input index `m`. The block
    /// relations collapse it to `Σ μ_i² = 1`.
    #[serde(rename = "contradictionLHS")]
    pub contradiction_lhs: f64,
    /// The value `N·P` that faithful correction would force on the same sum.
    #[serde(rename = "contradictionRHS")]
    pub contradiction_rhs: f64,
    /// Largest spread of the left-hand sum across `m` (zero for deterministic protocols).
    pub lhs_spread: f64,
    /// `max |X_{k,l,n,m} − √N δ_km δ_ln|`: how far the protocol is from the target.
    pub factorized_target_residual: f64,
    pub entanglement_sum: f64,
    pub bound: f64,
    /// `β_η` as `[re, im]` pairs.
    pub branch_scalars: Vec<[f64; 2]>,
    pub verdicts: Verdicts,
}

/// Runs the no-communication argument on a single-branch protocol.
pub fn no_communication_report(protocol: &ResourceProtocol) -> Result<ProofReport> {
    if protocol.messages() != 1 {
        return Err(Error::OutOfRange(format!(
            "the no-communication argument needs a single branch, got {}",
            protocol.messages()
        )));
    }
    let blocks = protocol.block_operators();
    let relation = block_relation_residual(&blocks);
    let mu = protocol.resource().mu();
    let x = factorized_amplitudes(&blocks, mu);
    let (n, p) = (protocol.dim(), protocol.local_dim());
    let root_n = (n as f64).sqrt();
    let mut per_input = Vec::with_capacity(n);
    let mut target_residual: f64 = 0.0;
    for col in 0..n {
        let mut total = 0.0;
        for k in 0..p {
            for l in 0..p {
                for row in 0..n {
                    let v = x[0][k][l][(row, col)];
                    total += v.norm_sqr();
                    let want = if k == col && l == row { root_n } else { 0.0 };
                    target_residual = target_residual.max((v - C64::new(want, 0.0)).norm());
                }
            }
        }
        per_input.push(total);
    }
    let lhs = per_input.iter().sum::<f64>() / n as f64;
    let spread = per_input.iter().fold(0.0f64, |acc, v| acc.max((v - lhs).abs()));
    let rhs = (n * p) as f64;
    let bound = entanglement_bound(protocol.resource(), n);
    Ok(ProofReport {
        n,
        local_dim: p,
        messages: 1,
        relation_max_residual: relation,
        contradiction_lhs: lhs,
        contradiction_rhs: rhs,
        lhs_spread: spread,
        factorized_target_residual: target_residual,
        entanglement_sum: bound.sum,
        bound: bound.bound,
        branch_scalars: branch_scalars(protocol).iter().map(|b| [b.re, b.im]).collect(),
        verdicts: Verdicts {
            deterministic: relation < 1e-10,
            faithful_correction_possible: (lhs - rhs).abs() <= 1e-9,
            entanglement_bound_satisfied: bound.satisfied,
        },
    })
}

/// Outcome of checking the necessity claim on a concrete protocol and channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NecessityCheck {
    pub residual: f64,
    pub full_rank: bool,
    pub faithful: bool,
    pub bound: EntanglementBound,
    /// Set when a faithful protocol on a full-rank channel has `Σ μ_i < √N`.
    pub violation: bool,
}

/// Faithful correction (residual below `tol`) of a full-rank channel must come
/// with `Σ μ_i ≥ √N`; anything else is flagged.
pub fn necessity_check(protocol: &ResourceProtocol, ch: &KrausChannel, tol: f64) -> Result<NecessityCheck> {
    let residual = protocol.residual(ch)?;
    let n = protocol.dim();
    let full_rank = ch.rank(1e-10) == n * n;
    let bound = entanglement_bound(protocol.resource(), n);
    let faithful = residual < tol;
    Ok(NecessityCheck {
        residual,
        full_rank,
        faithful,
        bound,
        violation: faithful && full_rank && bound.sum < bound.bound - 1e-9,
    })
}
