use super::{CMatrix, CVector, PureState};
use crate::error::{Error, Result};

/// Schmidt decomposition `|ψ⟩ = Σ_i μ_i |a_i⟩ ⊗ |b_i⟩` of a bipartite pure state.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    coefficients: Vec<f64>,
    basis_a: Vec<CVector>,
    basis_b: Vec<CVector>,
}

impl SchmidtForm {
    /// Coefficients μ_i, descending.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis_a(&self) -> &[CVector] {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &[CVector] {
        &self.basis_b
    }

    /// Number of Schmidt terms, `min(dim_a, dim_b)`.
    pub fn local_dim(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of coefficients above `tol`.
    pub fn schmidt_rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&m| m > tol).count()
    }

    /// `Σ_i μ_i |a_i⟩ ⊗ |b_i⟩`.
    pub fn reconstruct(&self) -> CVector {
        let da = self.basis_a.first().map_or(0, |v| v.len());
        let db = self.basis_b.first().map_or(0, |v| v.len());
        let mut out = CVector::zeros(da * db);
        for ((mu, a), b) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            out += a.kronecker(b).scale(*mu);
        }
        out
    }
}

/// Schmidt decomposition from the singular values of the `dim_a × dim_b`
/// coefficient matrix. Ties keep the solver's first-occurrence order.
pub fn schmidt(psi: &PureState, dim_a: usize, dim_b: usize) -> Result<SchmidtForm> {
    if dim_a * dim_b != psi.dim() {
        return Err(Error::dims(psi.dim(), dim_a * dim_b));
    }
    let amps = psi.amplitudes();
    let coeff = CMatrix::from_fn(dim_a, dim_b, |i, j| amps[i * dim_b + j]);
    let svd = coeff.svd_unordered(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let coefficients = order.iter().map(|&i| svd.singular_values[i].max(0.0)).collect();
    let basis_a = order.iter().map(|&i| u.column(i).clone_owned()).collect();
    let basis_b = order
        .iter()
        .map(|&i| v_t.row(i).transpose())
        .collect();
    Ok(SchmidtForm {
        coefficients,
        basis_a,
        basis_b,
    })
}
