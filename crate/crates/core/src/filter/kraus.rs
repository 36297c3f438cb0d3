//! Deterministic completion of a filter into a trace-preserving channel.
//!
//! On failure the parties discard their state and prepare a fixed product
//! state, so the channel outputs `p·ρ_f + (1−p)|ψφ⟩⟨ψφ|`.

use super::Filter;
use crate::error::{Error, Result};
use crate::qmat::{basis, psd_sqrt, tensor, tensor_vec, CMatrix, DensityMatrix, PureState};

const ZERO_OPERATOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct KrausSet {
    dim_a: usize,
    dim_b: usize,
    operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Largest entry of `Σ K†K − I`.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dim_a * self.dim_b;
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        (sum - CMatrix::identity(n, n))
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim_a() != self.dim_a || rho.dim_b() != self.dim_b {
            return Err(Error::DimensionMismatch {
                expected: self.dim_a * self.dim_b,
                got: rho.dim(),
            });
        }
        let n = rho.dim();
        let out = self
            .operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k * rho.matrix() * k.adjoint());
        DensityMatrix::new(self.dim_a, self.dim_b, out)
    }
}

/// Kraus operators `M₁ = A⊗B` and `M_ijk = |ψφ⟩⟨ij|G_k` with
/// `G₁ = A⊗√(I−B†B)`, `G₂ = √(I−A†A)⊗B`, `G₃ = √(I−A†A)⊗√(I−B†B)`.
/// Operators that vanish identically are dropped.
pub fn kraus_completion(f: &Filter, fallback_a: &PureState, fallback_b: &PureState) -> Result<KrausSet> {
    let (a, b) = (f.a(), f.b());
    let (da, db) = (a.nrows(), b.nrows());
    for (ket, d) in [(fallback_a, da), (fallback_b, db)] {
        if ket.amplitudes().len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ket.amplitudes().len(),
            });
        }
    }
    let defect = |m: &CMatrix| -> Result<CMatrix> {
        let n = m.nrows();
        psd_sqrt(&(CMatrix::identity(n, n) - m.adjoint() * m))
            .map_err(|_| Error::NormViolation(crate::qmat::op_norm(m)))
    };
    let sa = defect(a)?;
    let sb = defect(b)?;
    let g = [tensor(a, &sb), tensor(&sa, b), tensor(&sa, &sb)];

    let fallback = tensor_vec(fallback_a.amplitudes(), fallback_b.amplitudes());
    let mut operators = vec![f.operator()];
    for gk in &g {
        if gk.norm() <= ZERO_OPERATOR {
            continue;
        }
        for i in 0..da {
            for j in 0..db {
                let ij = tensor_vec(&basis(da, i), &basis(db, j));
                let m = &fallback * (ij.adjoint() * gk);
                if m.norm() > ZERO_OPERATOR {
                    operators.push(m);
                }
            }
        }
    }
    Ok(KrausSet {
        dim_a: da,
        dim_b: db,
        operators,
    })
}
